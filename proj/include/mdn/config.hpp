#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mdn/data.hpp"
#include "mdn/meta.hpp"

namespace mdn {

// One experiment: a dataset recipe (or a pre-built bundle file), a training
// recipe, an output directory, and how many seeded repetitions to run.
// Repetition r runs with seed + r feeding every named random substream, so an
// ablation rerun with the same seed sees identical data and initialization.
struct ExperimentSpec {
    DatasetConfig dataset;
    TrainConfig train;
    std::string bundle_path;  // when set, cmd_train loads this instead of generating
    std::string output = "runs/out";
    std::uint64_t seed = 1;
    std::size_t reps = 1;
};

// Config text grammar: one `key = value` per line, `#` starts a comment,
// blank lines ignored. Keys are dotted (dataset.*, train.*, run.*); unknown
// keys are config errors. The same `key=value` strings work as command-line
// overrides, applied after every file in order.
void apply_key_value(ExperimentSpec& spec, const std::string& key, const std::string& value);
void apply_config_text(ExperimentSpec& spec, const std::string& text, const std::string& origin);
void apply_config_file(ExperimentSpec& spec, const std::string& path);

ExperimentSpec parse_spec(const std::vector<std::string>& config_files,
                          const std::vector<std::string>& overrides);

// Canonical round-trippable rendering: every key, fixed order, doubles at
// full precision. parse -> serialize -> parse is the identity.
std::string serialize_spec(const ExperimentSpec& spec);

// Checks spec-level invariants (reps >= 1) plus the dataset config.
void validate(const ExperimentSpec& spec);

}  // namespace mdn
