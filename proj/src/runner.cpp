#include "mdn/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "mdn/errors.hpp"
#include "mdn/meta.hpp"
#include "mdn/metrics.hpp"

namespace mdn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

std::string opt_fmt(const std::optional<double>& v) {
    return v ? fmt("%.6f", *v) : std::string("na");
}

json matrix_json(const DenseMatrix& m) {
    json rows = json::array();
    for (std::size_t y = 0; y < m.rows; ++y) {
        json row = json::array();
        for (std::size_t b = 0; b < m.cols; ++b) row.push_back(m(y, b));
        rows.push_back(std::move(row));
    }
    return rows;
}

json support_json(const std::vector<long>& support, std::size_t C, std::size_t B) {
    json rows = json::array();
    for (std::size_t y = 0; y < C; ++y) {
        json row = json::array();
        for (std::size_t b = 0; b < B; ++b) row.push_back(support[y * B + b]);
        rows.push_back(std::move(row));
    }
    return rows;
}

void ensure_parent_dir(const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << text;
    f.flush();
    if (!f) throw IoError("write failure on '" + path + "'");
}

}  // namespace

void cmd_gen_data(const ExperimentSpec& spec, std::ostream& out) {
    DatasetConfig cfg = spec.dataset;
    cfg.seed = spec.seed;
    validate(cfg);
    const DataBundle bundle = generate(cfg);
    ensure_parent_dir(spec.output);
    save_bundle(bundle, spec.output);

    std::ostringstream s;
    s << "dataset " << to_string(cfg.kind) << ": " << bundle.num_classes << " classes x "
      << bundle.num_bias << " bias values, rho " << fmt("%g", cfg.rho) << ", seed "
      << spec.seed << "\n";
    s << "splits: train " << bundle.train.size() << ", val " << bundle.val.size()
      << ", test " << bundle.test.size() << ", dim " << bundle.train.x.cols << "\n";
    s << "realized train correlation P(b = aligned(y)) = "
      << fmt("%.6f", realized_correlation(bundle)) << "\n";
    s << "train group counts (rows = class, cols = bias; * marks bias-aligned):\n";
    for (std::size_t y = 0; y < bundle.num_classes; ++y) {
        s << "  class " << y << ":";
        for (std::size_t b = 0; b < bundle.num_bias; ++b) {
            s << ' ' << bundle.groups.count(y, b)
              << (bundle.groups.is_aligned(y, b) ? "*" : "");
        }
        s << "\n";
    }
    const std::string summary = s.str();
    write_text(spec.output + ".txt", summary);
    out << summary << "bundle written to " << spec.output << "\n";
}

namespace {

std::string margins_header(std::size_t C, std::size_t B) {
    std::string h = "iter";
    for (std::size_t y = 0; y < C; ++y) {
        for (std::size_t b = 0; b < B; ++b) {
            h += ",m_c" + std::to_string(y) + "_b" + std::to_string(b);
        }
    }
    return h + "\n";
}

std::string margins_row(std::size_t iter, const DenseMatrix& m) {
    std::string row = std::to_string(iter);
    for (double v : m.data) row += "," + fmt("%.9g", v);
    return row + "\n";
}

std::string metrics_row(const MetricsReport& r) {
    std::ostringstream s;
    s << r.epoch << '\t' << r.split << '\t' << fmt("%.6f", r.unbiased_acc) << '\t'
      << fmt("%.6f", r.worst_group_acc) << '\t' << opt_fmt(r.bias_conflict_acc) << '\t'
      << opt_fmt(r.eod) << '\n';
    return s.str();
}

void run_one_rep(const ExperimentSpec& spec, std::size_t rep, std::ostream& out) {
    const std::uint64_t rep_seed = spec.seed + rep;
    DatasetConfig ds = spec.dataset;
    ds.seed = rep_seed;
    TrainConfig tc = spec.train;
    tc.seed = rep_seed;
    const DataBundle bundle =
        spec.bundle_path.empty() ? generate(ds) : load_bundle(spec.bundle_path);

    char rep_name[16];
    std::snprintf(rep_name, sizeof(rep_name), "rep%02zu", rep);
    const fs::path dir = fs::path(spec.output) / rep_name;
    fs::create_directories(dir);

    ExperimentSpec resolved = spec;
    resolved.seed = rep_seed;
    resolved.reps = 1;
    resolved.output = dir.string();
    write_text((dir / "spec.txt").string(), serialize_spec(resolved));

    std::ofstream log_jsonl(dir / "log.jsonl", std::ios::trunc);
    std::ofstream margins_csv(dir / "margins.csv", std::ios::trunc);
    std::ofstream metrics_tsv(dir / "metrics.tsv", std::ios::trunc);
    if (!log_jsonl || !margins_csv || !metrics_tsv) {
        throw IoError("cannot open run artifacts under '" + dir.string() + "'");
    }
    margins_csv << margins_header(bundle.num_classes, bundle.num_bias);
    margins_csv << margins_row(0, DenseMatrix(bundle.num_classes, bundle.num_bias, 0.0));
    metrics_tsv << "epoch\tsplit\tunbiased_acc\tworst_group_acc\tbias_conflict_acc\teod\n";
    margins_csv.flush();
    metrics_tsv.flush();

    const IterationObserver on_iter = [&](const IterationRecord& rec) {
        json line;
        line["iter"] = rec.iter;
        line["msl"] = rec.msl;
        if (rec.mel) {
            line["mel"] = *rec.mel;
        } else {
            line["mel"] = nullptr;
        }
        line["margins"] = matrix_json(rec.margins);
        log_jsonl << line.dump() << '\n';
        log_jsonl.flush();
        margins_csv << margins_row(rec.iter, rec.margins);
        margins_csv.flush();
    };
    const EpochObserver on_epoch = [&](const EpochRecord& rec) {
        metrics_tsv << metrics_row(rec.val) << metrics_row(rec.test);
        metrics_tsv.flush();
        out << "  " << rep_name << " epoch " << rec.epoch << ": val unbiased "
            << fmt("%.4f", rec.val.unbiased_acc) << ", test unbiased "
            << fmt("%.4f", rec.test.unbiased_acc) << ", test worst "
            << fmt("%.4f", rec.test.worst_group_acc) << "\n";
    };

    const TrainResult result = train(tc, bundle, on_epoch, on_iter);
    if (log_jsonl.fail() || margins_csv.fail() || metrics_tsv.fail()) {
        throw IoError("write failure on run artifacts under '" + dir.string() + "'");
    }

    save_prediction_log(result.best_test_log, (dir / "predictions_test.csv").string());

    json report;
    report["version"] = kVersion;
    report["seed"] = rep_seed;
    report["best_epoch"] = result.best_epoch;
    report["epochs"] = tc.epochs;
    json dataset;
    dataset["kind"] = to_string(ds.kind);
    dataset["classes"] = ds.num_classes;
    dataset["bias"] = ds.num_bias;
    dataset["rho"] = ds.rho;
    dataset["n_train"] = ds.n_train;
    dataset["n_test"] = ds.n_test;
    dataset["noise"] = ds.noise;
    if (!ds.idx_images.empty()) dataset["idx_images"] = ds.idx_images;
    if (!ds.idx_labels.empty()) dataset["idx_labels"] = ds.idx_labels;
    if (!spec.bundle_path.empty()) dataset["bundle"] = spec.bundle_path;
    report["dataset"] = std::move(dataset);
    json train_cfg;
    train_cfg["alpha"] = tc.alpha;
    train_cfg["beta"] = tc.beta;
    train_cfg["batch_size"] = tc.batch_size;
    train_cfg["meta_per_group"] = tc.meta_per_group;
    train_cfg["epochs"] = tc.epochs;
    train_cfg["mode"] = to_string(tc.mode);
    train_cfg["optimizer"] = to_string(tc.optimizer);
    train_cfg["hidden"] = tc.hidden;
    train_cfg["activation"] = to_string(tc.activation);
    report["train"] = std::move(train_cfg);
    json test;
    test["unbiased_acc"] = result.best_test.unbiased_acc;
    test["worst_group_acc"] = result.best_test.worst_group_acc;
    if (result.best_test.bias_conflict_acc) {
        test["bias_conflict_acc"] = *result.best_test.bias_conflict_acc;
    } else {
        test["bias_conflict_acc"] = nullptr;
    }
    if (result.best_test.eod) {
        test["eod"] = *result.best_test.eod;
    } else {
        test["eod"] = nullptr;
    }
    test["per_group_acc"] = matrix_json(result.best_test.per_group_acc);
    test["support"] =
        support_json(result.best_test.support, bundle.num_classes, bundle.num_bias);
    report["test"] = std::move(test);
    report["margins"] = matrix_json(result.best_margins);
    write_text((dir / "report.json").string(), report.dump(2) + "\n");

    out << rep_name << ": best epoch " << result.best_epoch << ", test unbiased "
        << fmt("%.4f", result.best_test.unbiased_acc) << ", worst "
        << fmt("%.4f", result.best_test.worst_group_acc) << "\n";
}

}  // namespace

void cmd_train(const ExperimentSpec& spec, std::ostream& out) {
    validate(spec);
    fs::create_directories(spec.output);
    for (std::size_t rep = 0; rep < spec.reps; ++rep) run_one_rep(spec, rep, out);
}

bool cmd_gradcheck(const GradCheckOptions& options, std::ostream& out) {
    const std::vector<SuiteResult> results = run_gradient_checks(options);
    bool all_pass = true;
    out << "suite              instances  max_rel_err  threshold  status\n";
    for (const SuiteResult& r : results) {
        char line[128];
        std::snprintf(line, sizeof(line), "%-18s %9zu  %.3e    %.0e      %s\n",
                      r.name.c_str(), r.instances, r.max_rel_err, r.threshold,
                      r.pass ? "PASS" : "FAIL");
        out << line;
        all_pass = all_pass && r.pass;
    }
    out << (all_pass ? "gradcheck: all suites passed\n"
                     : "gradcheck: at least one suite FAILED\n");
    return all_pass;
}

namespace {

struct RepMetrics {
    std::string mode;
    double rho = 0.0;
    double unbiased = 0.0, worst = 0.0;
    std::optional<double> conflict, eod;
};

RepMetrics read_report(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("compare: cannot open '" + path.string() + "'");
    json report;
    try {
        f >> report;
    } catch (const json::exception& e) {
        throw FormatError("compare: '" + path.string() + "' is not valid JSON: " + e.what());
    }
    try {
        RepMetrics m;
        m.mode = report.at("train").at("mode").get<std::string>();
        m.rho = report.at("dataset").at("rho").get<double>();
        const json& test = report.at("test");
        m.unbiased = test.at("unbiased_acc").get<double>();
        m.worst = test.at("worst_group_acc").get<double>();
        if (!test.at("bias_conflict_acc").is_null()) {
            m.conflict = test.at("bias_conflict_acc").get<double>();
        }
        if (!test.at("eod").is_null()) m.eod = test.at("eod").get<double>();
        return m;
    } catch (const json::exception& e) {
        throw FormatError("compare: '" + path.string() + "' misses expected fields: " +
                          e.what());
    }
}

std::vector<fs::path> rep_reports(const std::string& run_dir) {
    const fs::path root(run_dir);
    if (!fs::exists(root)) throw IoError("compare: run directory '" + run_dir + "' not found");
    std::vector<fs::path> reports;
    if (fs::is_directory(root)) {
        for (const auto& entry : fs::directory_iterator(root)) {
            if (entry.is_directory() &&
                entry.path().filename().string().rfind("rep", 0) == 0) {
                const fs::path report = entry.path() / "report.json";
                if (fs::exists(report)) reports.push_back(report);
            }
        }
        if (reports.empty() && fs::exists(root / "report.json")) {
            reports.push_back(root / "report.json");
        }
    }
    if (reports.empty()) {
        throw IoError("compare: no rep*/report.json under '" + run_dir + "'");
    }
    std::sort(reports.begin(), reports.end());
    return reports;
}

struct Stats {
    double mean = 0.0, std_dev = 0.0;
    std::size_t n = 0;
};

Stats stats_of(const std::vector<double>& xs) {
    Stats s;
    s.n = xs.size();
    if (xs.empty()) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double sq = 0.0;
        for (double x : xs) sq += (x - s.mean) * (x - s.mean);
        s.std_dev = std::sqrt(sq / static_cast<double>(xs.size() - 1));
    }
    return s;
}

constexpr const char* kTableHeader =
    "mode\trho\treps\tunbiased_mean\tunbiased_std\tworst_mean\tworst_std\t"
    "conflict_mean\tconflict_std\teod_mean\teod_std\n";

}  // namespace

void cmd_compare(const std::vector<std::string>& run_dirs, const std::string& out_dir,
                 std::ostream& out) {
    if (run_dirs.size() < 2) {
        throw ConfigError("compare: need at least 2 run directories");
    }
    std::map<std::pair<std::string, double>, std::vector<RepMetrics>> by_cell;
    for (const std::string& dir : run_dirs) {
        for (const fs::path& report : rep_reports(dir)) {
            RepMetrics m = read_report(report);
            by_cell[{m.mode, m.rho}].push_back(std::move(m));
        }
    }

    fs::create_directories(out_dir);
    std::ostringstream table;
    table << kTableHeader;
    std::ostringstream plot;
    plot << "rho\tmode\tunbiased_mean\tunbiased_std\n";
    for (const auto& [key, reps] : by_cell) {
        std::vector<double> unbiased, worst, conflict, eods;
        for (const RepMetrics& m : reps) {
            unbiased.push_back(m.unbiased);
            worst.push_back(m.worst);
            if (m.conflict) conflict.push_back(*m.conflict);
            if (m.eod) eods.push_back(*m.eod);
        }
        const Stats su = stats_of(unbiased);
        const Stats sw = stats_of(worst);
        const Stats sc = stats_of(conflict);
        const Stats se = stats_of(eods);
        table << key.first << '\t' << fmt("%g", key.second) << '\t' << reps.size() << '\t'
              << fmt("%.6f", su.mean) << '\t' << fmt("%.6f", su.std_dev) << '\t'
              << fmt("%.6f", sw.mean) << '\t' << fmt("%.6f", sw.std_dev) << '\t'
              << (sc.n ? fmt("%.6f", sc.mean) : std::string("na")) << '\t'
              << (sc.n ? fmt("%.6f", sc.std_dev) : std::string("na")) << '\t'
              << (se.n ? fmt("%.6f", se.mean) : std::string("na")) << '\t'
              << (se.n ? fmt("%.6f", se.std_dev) : std::string("na")) << '\n';
        plot << fmt("%g", key.second) << '\t' << key.first << '\t' << fmt("%.6f", su.mean)
             << '\t' << fmt("%.6f", su.std_dev) << '\n';
    }
    const fs::path table_path = fs::path(out_dir) / "table.tsv";
    const fs::path plot_path = fs::path(out_dir) / "plotdata.tsv";
    write_text(table_path.string(), table.str());
    write_text(plot_path.string(), plot.str());
    out << table.str();
    out << "comparison written to " << table_path.string() << " and " << plot_path.string()
        << "\n";
}

std::vector<CompareRow> parse_compare_table(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(f, line)) throw FormatError(path + ": empty file");
    const std::string expected(kTableHeader);
    if (line + "\n" != expected) {
        throw FormatError(path + ": unexpected header '" + line + "'");
    }
    auto opt_field = [&path](const std::string& field) -> std::optional<double> {
        if (field == "na") return std::nullopt;
        try {
            std::size_t used = 0;
            const double v = std::stod(field, &used);
            if (used != field.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw FormatError(path + ": cannot parse field '" + field + "'");
        }
    };
    std::vector<CompareRow> rows;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream in(line);
        while (std::getline(in, field, '\t')) fields.push_back(field);
        if (fields.size() != 11) {
            throw FormatError(path + ": line " + std::to_string(lineno) + " has " +
                              std::to_string(fields.size()) + " fields, expected 11");
        }
        CompareRow row;
        row.mode = fields[0];
        row.rho = *opt_field(fields[1]);
        row.reps = static_cast<std::size_t>(*opt_field(fields[2]));
        row.unbiased_mean = *opt_field(fields[3]);
        row.unbiased_std = *opt_field(fields[4]);
        row.worst_mean = *opt_field(fields[5]);
        row.worst_std = *opt_field(fields[6]);
        row.conflict_mean = opt_field(fields[7]);
        row.conflict_std = opt_field(fields[8]);
        row.eod_mean = opt_field(fields[9]);
        row.eod_std = opt_field(fields[10]);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace mdn
