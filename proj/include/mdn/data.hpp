#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mdn/batch.hpp"
#include "mdn/groups.hpp"
#include "mdn/rng.hpp"

namespace mdn {

enum class DatasetKind { blobs, colored_glyphs, idx_color };

DatasetKind dataset_kind_from_string(const std::string& name);
std::string to_string(DatasetKind kind);

struct DatasetConfig {
    DatasetKind kind = DatasetKind::blobs;
    std::size_t num_classes = 2;  // target classes C
    std::size_t num_bias = 2;     // bias values B
    double rho = 0.99;            // P(bias aligns with target), in (1/B, 1]
    std::size_t n_train = 2000;
    std::size_t n_test = 400;  // evaluation splits are group-balanced; val matches test
    double noise = 0.5;
    std::uint64_t seed = 1;
    std::string idx_images;  // idx_color inputs
    std::string idx_labels;
};

// Throws ConfigError on any invariant violation (rho range, C/B >= 2,
// split sizes >= C*B, missing idx paths).
void validate(const DatasetConfig& cfg);

struct DataBundle {
    std::size_t num_classes = 0;
    std::size_t num_bias = 0;
    LabeledBatch train, val, test;
    GroupTable groups;  // tallied from the train split
    // Row indices of train partitioned by (y, b) cell, cell = y*B + b.
    std::vector<std::vector<std::size_t>> train_cells;
};

// Rebuilds groups/train_cells from the splits and checks label ranges.
void finalize_bundle(DataBundle& bundle);

// The bias value the majority of class y receives under the rho rule.
inline std::size_t aligned_bias(std::size_t y, std::size_t num_bias) {
    return y % num_bias;
}

DataBundle gen_biased_blobs(const DatasetConfig& cfg);
DataBundle gen_colored_glyphs(const DatasetConfig& cfg);
DataBundle load_idx_with_color(const DatasetConfig& cfg);

// Dispatch on cfg.kind.
DataBundle generate(const DatasetConfig& cfg);

// Fraction of train samples whose bias equals aligned_bias(y) — the realized
// correlation, reported by the dataset summary.
double realized_correlation(const DataBundle& bundle);

// Uniform-with-replacement draw of n rows from train (biased, as-is).
LabeledBatch sample_train_batch(const DataBundle& bundle, std::size_t n, Rng& rng);

// Exactly per_group rows per (y, b) cell, each drawn with replacement from the
// cell's train members. Throws CoverageError if any cell is empty.
LabeledBatch sample_meta_batch(const DataBundle& bundle, std::size_t per_group, Rng& rng);

// Group-balanced batch of roughly n rows: per_group = max(1, n / (C*B)).
LabeledBatch sample_balanced_batch(const DataBundle& bundle, std::size_t n, Rng& rng);

// Native bundle persistence, magic "MDNB1", little-endian, bit-exact round-trip.
void save_bundle(const DataBundle& bundle, const std::string& path);
DataBundle load_bundle(const std::string& path);

// IDX ingestion (big-endian, standard magics 0x00000803 / 0x00000801).
struct IdxImages {
    std::size_t count = 0, height = 0, width = 0;
    std::vector<std::uint8_t> pixels;  // count*height*width, row-major
};
IdxImages read_idx_images(const std::string& path);
std::vector<int> read_idx_labels(const std::string& path);

}  // namespace mdn
