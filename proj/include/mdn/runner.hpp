#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mdn/config.hpp"
#include "mdn/gradcheck.hpp"

namespace mdn {

inline constexpr const char* kVersion = "mdn 1.0.0";

// Generates the configured dataset, writes the bundle to spec.output, and
// writes a human-readable summary (group counts, realized correlation) both
// to spec.output + ".txt" and to `out`.
void cmd_gen_data(const ExperimentSpec& spec, std::ostream& out);

// Runs spec.reps seeded repetitions; repetition r trains with seed + r and
// writes runs under spec.output/repNN/: spec.txt (resolved, single-rep),
// log.jsonl (one iteration per line), metrics.tsv (per epoch and split),
// margins.csv (initial zeros + one row per iteration), predictions_test.csv
// (best-validation epoch) and report.json (best-epoch test metrics + margins).
void cmd_train(const ExperimentSpec& spec, std::ostream& out);

// Prints one line per verification suite; returns true iff every suite passed.
bool cmd_gradcheck(const GradCheckOptions& options, std::ostream& out);

// Merges the rep reports found under each run directory into
// out_dir/table.tsv (mode x rho -> mean +/- std over reps) and
// out_dir/plotdata.tsv (x = rho, one series per mode).
void cmd_compare(const std::vector<std::string>& run_dirs, const std::string& out_dir,
                 std::ostream& out);

struct CompareRow {
    std::string mode;
    double rho = 0.0;
    std::size_t reps = 0;
    double unbiased_mean = 0.0, unbiased_std = 0.0;
    double worst_mean = 0.0, worst_std = 0.0;
    std::optional<double> conflict_mean, conflict_std;
    std::optional<double> eod_mean, eod_std;
};

// Reads back a table.tsv written by cmd_compare; the tests' round-trip oracle.
std::vector<CompareRow> parse_compare_table(const std::string& path);

}  // namespace mdn
