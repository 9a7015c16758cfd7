#include "mdn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mdn/errors.hpp"

namespace mdn {

namespace {

void check_labels(const DenseMatrix& logits, const std::vector<int>& y) {
    if (y.size() != logits.rows) {
        throw ShapeError("loss: " + std::to_string(y.size()) + " labels for " +
                         std::to_string(logits.rows) + " logit rows");
    }
    if (logits.rows == 0) throw ShapeError("loss: empty batch");
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] < 0 || static_cast<std::size_t>(y[i]) >= logits.cols) {
            throw DomainError("loss: label " + std::to_string(y[i]) + " at row " +
                              std::to_string(i) + " outside [0, " +
                              std::to_string(logits.cols) + ")");
        }
    }
}

// Shared core: softmax + per-sample CE of `shifted`, one row at a time.
// Max-subtracted log-sum-exp keeps exp() in range; the per-sample loss is
// (lse - z_y) so no log(prob) round-trip happens.
SoftmaxResult softmax_ce_core(const DenseMatrix& shifted, const std::vector<int>& y) {
    const std::size_t n = shifted.rows;
    const std::size_t C = shifted.cols;
    SoftmaxResult out;
    out.probs = DenseMatrix(n, C);
    out.per_sample.assign(n, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* z = shifted.row_ptr(i);
        double zmax = z[0];
        for (std::size_t k = 1; k < C; ++k) zmax = std::max(zmax, z[k]);
        double sum = 0.0;
        double* p = out.probs.row_ptr(i);
        for (std::size_t k = 0; k < C; ++k) {
            p[k] = std::exp(z[k] - zmax);
            sum += p[k];
        }
        const double inv = 1.0 / sum;
        for (std::size_t k = 0; k < C; ++k) p[k] *= inv;
        const double lse = zmax + std::log(sum);
        const double loss = lse - z[static_cast<std::size_t>(y[i])];
        if (!std::isfinite(loss)) {
            throw NumericError("loss: non-finite cross-entropy at row " + std::to_string(i));
        }
        out.per_sample[i] = loss;
        total += loss;
    }
    out.mean = total / static_cast<double>(n);
    return out;
}

}  // namespace

SoftmaxResult ce_loss(const DenseMatrix& logits, const std::vector<int>& y) {
    check_labels(logits, y);
    return softmax_ce_core(logits, y);
}

SoftmaxResult msl_loss(const DenseMatrix& logits, const std::vector<int>& y,
                       const std::vector<int>& b, const MarginTable& margins) {
    check_labels(logits, y);
    if (b.size() != logits.rows) {
        throw ShapeError("msl_loss: " + std::to_string(b.size()) + " bias labels for " +
                         std::to_string(logits.rows) + " logit rows");
    }
    if (margins.num_classes() != logits.cols) {
        throw ShapeError("msl_loss: margin table has " +
                         std::to_string(margins.num_classes()) + " classes, logits have " +
                         std::to_string(logits.cols));
    }
    const std::size_t B = margins.num_bias();
    DenseMatrix shifted(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        if (b[i] < 0 || static_cast<std::size_t>(b[i]) >= B) {
            throw DomainError("msl_loss: bias label " + std::to_string(b[i]) + " at row " +
                              std::to_string(i) + " outside [0, " + std::to_string(B) + ")");
        }
        const double* src = logits.row_ptr(i);
        double* dst = shifted.row_ptr(i);
        const std::size_t bi = static_cast<std::size_t>(b[i]);
        for (std::size_t k = 0; k < logits.cols; ++k) {
            dst[k] = src[k] - margins.values(k, bi);
        }
    }
    return softmax_ce_core(shifted, y);
}

DenseMatrix msl_grad_logits(const SoftmaxResult& result, const std::vector<int>& y) {
    const std::size_t n = result.probs.rows;
    if (y.size() != n) {
        throw ShapeError("msl_grad_logits: " + std::to_string(y.size()) + " labels for " +
                         std::to_string(n) + " probability rows");
    }
    DenseMatrix grad = result.probs;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        double* g = grad.row_ptr(i);
        g[static_cast<std::size_t>(y[i])] -= 1.0;
        for (std::size_t k = 0; k < grad.cols; ++k) g[k] *= inv_n;
    }
    return grad;
}

DenseMatrix msl_grad_margins(const SoftmaxResult& result, const std::vector<int>& y,
                             const std::vector<int>& b, std::size_t num_bias) {
    const std::size_t n = result.probs.rows;
    const std::size_t C = result.probs.cols;
    if (y.size() != n || b.size() != n) {
        throw ShapeError("msl_grad_margins: label vectors do not match probability rows");
    }
    DenseMatrix grad(C, num_bias, 0.0);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* p = result.probs.row_ptr(i);
        const std::size_t bi = static_cast<std::size_t>(b[i]);
        for (std::size_t k = 0; k < C; ++k) {
            const double onehot = (static_cast<std::size_t>(y[i]) == k) ? 1.0 : 0.0;
            grad(k, bi) += inv_n * (onehot - p[k]);
        }
    }
    return grad;
}

namespace {

struct MelSides {
    // Per class: per-sample CE plus aligned/conflicting membership bookkeeping.
    std::vector<double> sum_aligned, sum_conflict;
    std::vector<long> n_aligned, n_conflict;
};

MelSides mel_sides(const SoftmaxResult& ce, const std::vector<int>& y,
                   const std::vector<int>& b, const GroupTable& groups) {
    const std::size_t C = groups.num_classes;
    MelSides s;
    s.sum_aligned.assign(C, 0.0);
    s.sum_conflict.assign(C, 0.0);
    s.n_aligned.assign(C, 0);
    s.n_conflict.assign(C, 0);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const std::size_t yi = static_cast<std::size_t>(y[i]);
        const std::size_t bi = static_cast<std::size_t>(b[i]);
        if (bi >= groups.num_bias) {
            throw DomainError("equalized loss: bias label " + std::to_string(b[i]) +
                              " at row " + std::to_string(i) + " outside [0, " +
                              std::to_string(groups.num_bias) + ")");
        }
        if (groups.is_aligned(yi, bi)) {
            s.sum_aligned[yi] += ce.per_sample[i];
            s.n_aligned[yi] += 1;
        } else {
            s.sum_conflict[yi] += ce.per_sample[i];
            s.n_conflict[yi] += 1;
        }
    }
    return s;
}

}  // namespace

MelResult mel_loss(const DenseMatrix& logits, const std::vector<int>& y,
                   const std::vector<int>& b, const GroupTable& groups,
                   MelCoverage coverage) {
    check_labels(logits, y);
    if (logits.cols != groups.num_classes) {
        throw ShapeError("equalized loss: logits have " + std::to_string(logits.cols) +
                         " classes, group table has " + std::to_string(groups.num_classes));
    }
    const SoftmaxResult ce = softmax_ce_core(logits, y);
    const MelSides s = mel_sides(ce, y, b, groups);
    MelResult out;
    out.gaps.assign(groups.num_classes, 0.0);
    out.active.assign(groups.num_classes, 0);
    for (std::size_t c = 0; c < groups.num_classes; ++c) {
        const bool present = s.n_aligned[c] > 0 || s.n_conflict[c] > 0;
        if (!present) continue;
        if (s.n_aligned[c] == 0 || s.n_conflict[c] == 0) {
            if (coverage == MelCoverage::require_both_sides) {
                throw CoverageError("equalized loss: class " + std::to_string(c) +
                                    " has no " +
                                    (s.n_aligned[c] == 0 ? "bias-aligned" : "bias-conflicting") +
                                    " samples in the batch");
            }
            continue;
        }
        const double gap = s.sum_conflict[c] / static_cast<double>(s.n_conflict[c]) -
                           s.sum_aligned[c] / static_cast<double>(s.n_aligned[c]);
        out.gaps[c] = gap;
        out.active[c] = 1;
        out.value += std::abs(gap);
    }
    return out;
}

DenseMatrix mel_grad_logits(const DenseMatrix& logits, const std::vector<int>& y,
                            const std::vector<int>& b, const GroupTable& groups,
                            MelCoverage coverage) {
    check_labels(logits, y);
    const SoftmaxResult ce = softmax_ce_core(logits, y);
    const MelResult mel = mel_loss(logits, y, b, groups, coverage);
    const MelSides s = mel_sides(ce, y, b, groups);
    DenseMatrix grad(logits.rows, logits.cols, 0.0);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const std::size_t yi = static_cast<std::size_t>(y[i]);
        if (!mel.active[yi]) continue;
        const double gap = mel.gaps[yi];
        if (gap == 0.0) continue;  // subgradient choice at the kink
        const double sign = gap > 0.0 ? 1.0 : -1.0;
        const bool aligned = groups.is_aligned(yi, static_cast<std::size_t>(b[i]));
        const double side = aligned ? -1.0 / static_cast<double>(s.n_aligned[yi])
                                    : 1.0 / static_cast<double>(s.n_conflict[yi]);
        const double coeff = sign * side;
        const double* p = ce.probs.row_ptr(i);
        double* g = grad.row_ptr(i);
        for (std::size_t k = 0; k < logits.cols; ++k) {
            const double onehot = (k == yi) ? 1.0 : 0.0;
            g[k] += coeff * (p[k] - onehot);
        }
    }
    return grad;
}

namespace {

struct CellIndex {
    std::vector<double> sums;
    std::vector<long> counts;
    std::size_t B = 0;
    long populated = 0;

    std::size_t at(std::size_t yv, std::size_t bv) const { return yv * B + bv; }
};

CellIndex cell_sums(const SoftmaxResult& ce, const std::vector<int>& y,
                    const std::vector<int>& b, std::size_t C, std::size_t B) {
    CellIndex idx;
    idx.B = B;
    idx.sums.assign(C * B, 0.0);
    idx.counts.assign(C * B, 0);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const std::size_t yi = static_cast<std::size_t>(y[i]);
        const std::size_t bi = static_cast<std::size_t>(b[i]);
        if (yi >= C || bi >= B) {
            throw DomainError("group-mean loss: labels (" + std::to_string(y[i]) + ", " +
                              std::to_string(b[i]) + ") at row " + std::to_string(i) +
                              " outside the (class, bias) grid");
        }
        idx.sums[idx.at(yi, bi)] += ce.per_sample[i];
        idx.counts[idx.at(yi, bi)] += 1;
    }
    for (long c : idx.counts) {
        if (c > 0) idx.populated += 1;
    }
    if (idx.populated == 0) throw DomainError("group-mean loss: empty batch");
    return idx;
}

}  // namespace

UnbiasedLossResult unbiased_group_loss(const DenseMatrix& logits, const std::vector<int>& y,
                                       const std::vector<int>& b, std::size_t num_classes,
                                       std::size_t num_bias) {
    check_labels(logits, y);
    const SoftmaxResult ce = softmax_ce_core(logits, y);
    const CellIndex idx = cell_sums(ce, y, b, num_classes, num_bias);
    UnbiasedLossResult out;
    for (std::size_t cell = 0; cell < idx.sums.size(); ++cell) {
        if (idx.counts[cell] > 0) {
            out.value += idx.sums[cell] / static_cast<double>(idx.counts[cell]);
        }
    }
    out.value /= static_cast<double>(idx.populated);
    return out;
}

DenseMatrix unbiased_group_loss_grad_logits(const DenseMatrix& logits,
                                            const std::vector<int>& y,
                                            const std::vector<int>& b,
                                            std::size_t num_classes, std::size_t num_bias) {
    check_labels(logits, y);
    const SoftmaxResult ce = softmax_ce_core(logits, y);
    const CellIndex idx = cell_sums(ce, y, b, num_classes, num_bias);
    DenseMatrix grad(logits.rows, logits.cols, 0.0);
    const double inv_cells = 1.0 / static_cast<double>(idx.populated);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const std::size_t yi = static_cast<std::size_t>(y[i]);
        const std::size_t bi = static_cast<std::size_t>(b[i]);
        const double coeff =
            inv_cells / static_cast<double>(idx.counts[idx.at(yi, bi)]);
        const double* p = ce.probs.row_ptr(i);
        double* g = grad.row_ptr(i);
        for (std::size_t k = 0; k < logits.cols; ++k) {
            const double onehot = (k == yi) ? 1.0 : 0.0;
            g[k] = coeff * (p[k] - onehot);
        }
    }
    return grad;
}

}  // namespace mdn
