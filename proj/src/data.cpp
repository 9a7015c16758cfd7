#include "mdn/data.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "mdn/errors.hpp"

namespace mdn {

DatasetKind dataset_kind_from_string(const std::string& name) {
    if (name == "blobs") return DatasetKind::blobs;
    if (name == "colored_glyphs") return DatasetKind::colored_glyphs;
    if (name == "idx_color") return DatasetKind::idx_color;
    throw ConfigError("unknown dataset kind '" + name +
                      "' (expected blobs, colored_glyphs, idx_color)");
}

std::string to_string(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::blobs: return "blobs";
        case DatasetKind::colored_glyphs: return "colored_glyphs";
        case DatasetKind::idx_color: return "idx_color";
    }
    throw ConfigError("invalid dataset kind value");
}

void validate(const DatasetConfig& cfg) {
    if (cfg.num_classes < 2) throw ConfigError("dataset: need at least 2 classes");
    if (cfg.num_bias < 2) throw ConfigError("dataset: need at least 2 bias values");
    const double lo = 1.0 / static_cast<double>(cfg.num_bias);
    if (!(cfg.rho > lo && cfg.rho <= 1.0)) {
        throw ConfigError("dataset: rho=" + std::to_string(cfg.rho) +
                          " outside (1/B, 1] = (" + std::to_string(lo) + ", 1]");
    }
    const std::size_t cells = cfg.num_classes * cfg.num_bias;
    if (cfg.n_train < cells) {
        throw ConfigError("dataset: n_train=" + std::to_string(cfg.n_train) +
                          " smaller than the " + std::to_string(cells) + " (class, bias) cells");
    }
    if (cfg.n_test < cells) {
        throw ConfigError("dataset: n_test=" + std::to_string(cfg.n_test) +
                          " smaller than the " + std::to_string(cells) + " (class, bias) cells");
    }
    if (!(cfg.noise >= 0.0) || !std::isfinite(cfg.noise)) {
        throw ConfigError("dataset: noise must be finite and >= 0");
    }
    if (cfg.kind == DatasetKind::idx_color && (cfg.idx_images.empty() || cfg.idx_labels.empty())) {
        throw ConfigError("dataset: idx_color requires idx_images and idx_labels paths");
    }
}

void finalize_bundle(DataBundle& bundle) {
    const std::size_t C = bundle.num_classes;
    const std::size_t B = bundle.num_bias;
    bundle.groups = build_group_table(bundle.train, C, B);
    validate(bundle.val, C, B);
    validate(bundle.test, C, B);
    bundle.train_cells.assign(C * B, {});
    for (std::size_t i = 0; i < bundle.train.size(); ++i) {
        const std::size_t cell =
            static_cast<std::size_t>(bundle.train.y[i]) * B +
            static_cast<std::size_t>(bundle.train.b[i]);
        bundle.train_cells[cell].push_back(i);
    }
}

double realized_correlation(const DataBundle& bundle) {
    if (bundle.train.size() == 0) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < bundle.train.size(); ++i) {
        if (static_cast<std::size_t>(bundle.train.b[i]) ==
            aligned_bias(static_cast<std::size_t>(bundle.train.y[i]), bundle.num_bias)) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(bundle.train.size());
}

namespace {

// b = aligned(y) with probability rho, else uniform over the other B-1 values.
std::size_t draw_bias(std::size_t y, double rho, std::size_t B, Rng& rng) {
    const std::size_t al = aligned_bias(y, B);
    if (rng.uniform() < rho) return al;
    std::size_t other = rng.index(B - 1);
    return other >= al ? other + 1 : other;
}

using SampleWriter = void (*)(const DatasetConfig&, std::size_t y, std::size_t b,
                              Rng&, double* out);

LabeledBatch make_biased_split(const DatasetConfig& cfg, std::size_t n, std::size_t dim,
                               SampleWriter write, Rng& rng) {
    LabeledBatch batch;
    batch.x = DenseMatrix(n, dim);
    batch.y.resize(n);
    batch.b.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t y = rng.index(cfg.num_classes);
        const std::size_t b = draw_bias(y, cfg.rho, cfg.num_bias, rng);
        batch.y[i] = static_cast<int>(y);
        batch.b[i] = static_cast<int>(b);
        write(cfg, y, b, rng, batch.x.row_ptr(i));
    }
    return batch;
}

// Evaluation splits cover every (y, b) cell equally: per_cell = n / (C*B).
LabeledBatch make_balanced_split(const DatasetConfig& cfg, std::size_t n, std::size_t dim,
                                 SampleWriter write, Rng& rng) {
    const std::size_t cells = cfg.num_classes * cfg.num_bias;
    const std::size_t per_cell = n / cells;
    const std::size_t total = per_cell * cells;
    LabeledBatch batch;
    batch.x = DenseMatrix(total, dim);
    batch.y.resize(total);
    batch.b.resize(total);
    std::size_t row = 0;
    for (std::size_t y = 0; y < cfg.num_classes; ++y) {
        for (std::size_t b = 0; b < cfg.num_bias; ++b) {
            for (std::size_t r = 0; r < per_cell; ++r, ++row) {
                batch.y[row] = static_cast<int>(y);
                batch.b[row] = static_cast<int>(b);
                write(cfg, y, b, rng, batch.x.row_ptr(row));
            }
        }
    }
    return batch;
}

DataBundle assemble(const DatasetConfig& cfg, std::size_t dim, SampleWriter write) {
    Rng rng = substream(cfg.seed, "data");
    DataBundle bundle;
    bundle.num_classes = cfg.num_classes;
    bundle.num_bias = cfg.num_bias;
    bundle.train = make_biased_split(cfg, cfg.n_train, dim, write, rng);
    bundle.val = make_balanced_split(cfg, cfg.n_test, dim, write, rng);
    bundle.test = make_balanced_split(cfg, cfg.n_test, dim, write, rng);
    finalize_bundle(bundle);
    return bundle;
}

// --- biased blobs -----------------------------------------------------------
// Input is concat(target cluster point, bias cue point) in R^4. Target centers
// sit on a radius-2 circle, bias centers on a radius-4 circle, so the bias cue
// is the larger-margin (easier) signal — a learnable shortcut.

void write_blob(const DatasetConfig& cfg, std::size_t y, std::size_t b, Rng& rng,
                double* out) {
    constexpr double kTargetRadius = 2.0;
    constexpr double kBiasRadius = 4.0;
    const double ay = 2.0 * std::numbers::pi * static_cast<double>(y) /
                      static_cast<double>(cfg.num_classes);
    const double ab = 2.0 * std::numbers::pi * static_cast<double>(b) /
                      static_cast<double>(cfg.num_bias);
    out[0] = kTargetRadius * std::cos(ay) + cfg.noise * rng.normal();
    out[1] = kTargetRadius * std::sin(ay) + cfg.noise * rng.normal();
    out[2] = kBiasRadius * std::cos(ab) + cfg.noise * rng.normal();
    out[3] = kBiasRadius * std::sin(ab) + cfg.noise * rng.normal();
}

// --- colored glyphs ----------------------------------------------------------
// Fixed 8x8 binary stencils (digit shapes) drawn in white on one of B
// background colors; flattened interleaved RGB with gaussian pixel noise.

constexpr std::size_t kGlyphSide = 8;
constexpr std::array<std::array<std::uint8_t, 8>, 10> kGlyphs = {{
    {0x3C, 0x66, 0x66, 0x66, 0x66, 0x66, 0x66, 0x3C},  // 0
    {0x18, 0x38, 0x78, 0x18, 0x18, 0x18, 0x18, 0x7E},  // 1
    {0x3C, 0x66, 0x06, 0x0C, 0x18, 0x30, 0x60, 0x7E},  // 2
    {0x3C, 0x66, 0x06, 0x1C, 0x06, 0x06, 0x66, 0x3C},  // 3
    {0x0C, 0x1C, 0x3C, 0x6C, 0xCC, 0xFE, 0x0C, 0x0C},  // 4
    {0x7E, 0x60, 0x60, 0x7C, 0x06, 0x06, 0x66, 0x3C},  // 5
    {0x3C, 0x66, 0x60, 0x7C, 0x66, 0x66, 0x66, 0x3C},  // 6
    {0x7E, 0x06, 0x0C, 0x18, 0x30, 0x30, 0x30, 0x30},  // 7
    {0x3C, 0x66, 0x66, 0x3C, 0x66, 0x66, 0x66, 0x3C},  // 8
    {0x3C, 0x66, 0x66, 0x3E, 0x06, 0x06, 0x66, 0x3C},  // 9
}};

constexpr std::array<std::array<double, 3>, 10> kPalette = {{
    {1.0, 0.1, 0.1},
    {0.1, 0.8, 0.1},
    {0.15, 0.3, 1.0},
    {0.9, 0.85, 0.1},
    {0.85, 0.15, 0.9},
    {0.1, 0.8, 0.85},
    {1.0, 0.55, 0.1},
    {0.55, 0.25, 0.9},
    {0.2, 0.5, 0.3},
    {0.6, 0.35, 0.15},
}};

bool glyph_pixel(std::size_t cls, std::size_t r, std::size_t c) {
    return (kGlyphs[cls][r] >> (kGlyphSide - 1 - c)) & 1u;
}

void write_glyph(const DatasetConfig& cfg, std::size_t y, std::size_t b, Rng& rng,
                 double* out) {
    // Noise perturbs the glyph intensity field (one draw per pixel); the
    // background color itself stays exact, so the bias cue remains a clean
    // shortcut while the shape degrades with the noise scale.
    const auto& color = kPalette[b];
    std::size_t at = 0;
    for (std::size_t r = 0; r < kGlyphSide; ++r) {
        for (std::size_t c = 0; c < kGlyphSide; ++c) {
            const double g = (glyph_pixel(y, r, c) ? 1.0 : 0.0) + cfg.noise * rng.normal();
            for (std::size_t ch = 0; ch < 3; ++ch, ++at) {
                out[at] = g + (1.0 - g) * color[ch];
            }
        }
    }
}

}  // namespace

DataBundle gen_biased_blobs(const DatasetConfig& cfg) {
    validate(cfg);
    if (cfg.kind != DatasetKind::blobs) throw ConfigError("gen_biased_blobs: kind mismatch");
    return assemble(cfg, 4, &write_blob);
}

DataBundle gen_colored_glyphs(const DatasetConfig& cfg) {
    validate(cfg);
    if (cfg.kind != DatasetKind::colored_glyphs) {
        throw ConfigError("gen_colored_glyphs: kind mismatch");
    }
    if (cfg.num_classes > kGlyphs.size()) {
        throw ConfigError("colored_glyphs: at most " + std::to_string(kGlyphs.size()) +
                          " glyph classes available");
    }
    if (cfg.num_bias > kPalette.size()) {
        throw ConfigError("colored_glyphs: at most " + std::to_string(kPalette.size()) +
                          " background colors available");
    }
    return assemble(cfg, kGlyphSide * kGlyphSide * 3, &write_glyph);
}

DataBundle load_idx_with_color(const DatasetConfig& cfg) {
    validate(cfg);
    if (cfg.kind != DatasetKind::idx_color) {
        throw ConfigError("load_idx_with_color: kind mismatch");
    }
    if (cfg.num_bias > kPalette.size()) {
        throw ConfigError("idx_color: at most " + std::to_string(kPalette.size()) +
                          " tint colors available");
    }
    const IdxImages images = read_idx_images(cfg.idx_images);
    const std::vector<int> labels = read_idx_labels(cfg.idx_labels);
    if (labels.size() != images.count) {
        throw FormatError("idx_color: " + std::to_string(images.count) + " images but " +
                          std::to_string(labels.size()) + " labels");
    }
    // Pool image indices by class; every split draws from these pools.
    std::vector<std::vector<std::size_t>> by_class(cfg.num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= cfg.num_classes) {
            throw FormatError("idx_color: label " + std::to_string(labels[i]) + " at item " +
                              std::to_string(i) + " outside [0, " +
                              std::to_string(cfg.num_classes) + ")");
        }
        by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    for (std::size_t c = 0; c < cfg.num_classes; ++c) {
        if (by_class[c].empty()) {
            throw CoverageError("idx_color: class " + std::to_string(c) +
                                " absent from the label file");
        }
    }

    const std::size_t pix = images.height * images.width;
    const std::size_t dim = pix * 3;
    Rng rng = substream(cfg.seed, "data");

    // Grey value g in [0,1] tinted toward the bias color: ch = g + (1-g)*color.
    auto write_row = [&](std::size_t img, std::size_t b, Rng& noise_rng, double* out) {
        const std::uint8_t* src = images.pixels.data() + img * pix;
        const auto& color = kPalette[b];
        std::size_t at = 0;
        for (std::size_t p = 0; p < pix; ++p) {
            const double g = static_cast<double>(src[p]) / 255.0;
            for (std::size_t ch = 0; ch < 3; ++ch, ++at) {
                out[at] = g + (1.0 - g) * color[ch] + cfg.noise * noise_rng.normal();
            }
        }
    };
    auto draw_image_of_class = [&](std::size_t y) {
        const auto& pool = by_class[y];
        return pool[rng.index(pool.size())];
    };

    DataBundle bundle;
    bundle.num_classes = cfg.num_classes;
    bundle.num_bias = cfg.num_bias;

    bundle.train.x = DenseMatrix(cfg.n_train, dim);
    bundle.train.y.resize(cfg.n_train);
    bundle.train.b.resize(cfg.n_train);
    for (std::size_t i = 0; i < cfg.n_train; ++i) {
        const std::size_t y = rng.index(cfg.num_classes);
        const std::size_t b = draw_bias(y, cfg.rho, cfg.num_bias, rng);
        bundle.train.y[i] = static_cast<int>(y);
        bundle.train.b[i] = static_cast<int>(b);
        write_row(draw_image_of_class(y), b, rng, bundle.train.x.row_ptr(i));
    }

    const std::size_t cells = cfg.num_classes * cfg.num_bias;
    const std::size_t per_cell = cfg.n_test / cells;
    for (LabeledBatch* split : {&bundle.val, &bundle.test}) {
        const std::size_t total = per_cell * cells;
        split->x = DenseMatrix(total, dim);
        split->y.resize(total);
        split->b.resize(total);
        std::size_t row = 0;
        for (std::size_t y = 0; y < cfg.num_classes; ++y) {
            for (std::size_t b = 0; b < cfg.num_bias; ++b) {
                for (std::size_t r = 0; r < per_cell; ++r, ++row) {
                    split->y[row] = static_cast<int>(y);
                    split->b[row] = static_cast<int>(b);
                    write_row(draw_image_of_class(y), b, rng, split->x.row_ptr(row));
                }
            }
        }
    }
    finalize_bundle(bundle);
    return bundle;
}

DataBundle generate(const DatasetConfig& cfg) {
    switch (cfg.kind) {
        case DatasetKind::blobs: return gen_biased_blobs(cfg);
        case DatasetKind::colored_glyphs: return gen_colored_glyphs(cfg);
        case DatasetKind::idx_color: return load_idx_with_color(cfg);
    }
    throw ConfigError("generate: invalid dataset kind");
}

LabeledBatch sample_train_batch(const DataBundle& bundle, std::size_t n, Rng& rng) {
    if (bundle.train.size() == 0) throw DomainError("sample_train_batch: empty train split");
    if (n == 0) throw DomainError("sample_train_batch: batch size 0");
    const std::size_t d = bundle.train.x.cols;
    LabeledBatch batch;
    batch.x = DenseMatrix(n, d);
    batch.y.resize(n);
    batch.b.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = rng.index(bundle.train.size());
        std::copy(bundle.train.x.row_ptr(j), bundle.train.x.row_ptr(j) + d, batch.x.row_ptr(i));
        batch.y[i] = bundle.train.y[j];
        batch.b[i] = bundle.train.b[j];
    }
    return batch;
}

LabeledBatch sample_meta_batch(const DataBundle& bundle, std::size_t per_group, Rng& rng) {
    if (per_group == 0) throw DomainError("sample_meta_batch: per_group must be >= 1");
    const std::size_t C = bundle.num_classes;
    const std::size_t B = bundle.num_bias;
    if (bundle.train_cells.size() != C * B) {
        throw DomainError("sample_meta_batch: bundle not finalized");
    }
    for (std::size_t cell = 0; cell < C * B; ++cell) {
        if (bundle.train_cells[cell].empty()) {
            throw CoverageError("sample_meta_batch: train split has no samples for class " +
                                std::to_string(cell / B) + ", bias " + std::to_string(cell % B) +
                                " — a balanced meta batch cannot be drawn");
        }
    }
    const std::size_t d = bundle.train.x.cols;
    const std::size_t total = per_group * C * B;
    LabeledBatch batch;
    batch.x = DenseMatrix(total, d);
    batch.y.resize(total);
    batch.b.resize(total);
    std::size_t row = 0;
    for (std::size_t y = 0; y < C; ++y) {
        for (std::size_t b = 0; b < B; ++b) {
            const auto& pool = bundle.train_cells[y * B + b];
            for (std::size_t r = 0; r < per_group; ++r, ++row) {
                const std::size_t j = pool[rng.index(pool.size())];
                std::copy(bundle.train.x.row_ptr(j), bundle.train.x.row_ptr(j) + d,
                          batch.x.row_ptr(row));
                batch.y[row] = bundle.train.y[j];
                batch.b[row] = bundle.train.b[j];
            }
        }
    }
    return batch;
}

LabeledBatch sample_balanced_batch(const DataBundle& bundle, std::size_t n, Rng& rng) {
    const std::size_t cells = bundle.num_classes * bundle.num_bias;
    if (cells == 0) throw DomainError("sample_balanced_batch: bundle not finalized");
    const std::size_t per_group = std::max<std::size_t>(1, n / cells);
    return sample_meta_batch(bundle, per_group, rng);
}

}  // namespace mdn
