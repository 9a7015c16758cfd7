#pragma once

#include <cstddef>
#include <vector>

#include "mdn/batch.hpp"
#include "mdn/groups.hpp"
#include "mdn/matrix.hpp"

namespace mdn {

// Learnable per-(target, bias) margins. A fresh table is all-zero, under which
// the marginal softmax loss reduces exactly to cross-entropy.
struct MarginTable {
    DenseMatrix values;  // C x B, entry (y, b)

    MarginTable() = default;
    MarginTable(std::size_t num_classes, std::size_t num_bias)
        : values(num_classes, num_bias, 0.0) {}

    std::size_t num_classes() const { return values.rows; }
    std::size_t num_bias() const { return values.cols; }
    double margin(std::size_t y, std::size_t b) const { return values(y, b); }
};

struct SoftmaxResult {
    DenseMatrix probs;               // n x C softmax of the (shifted) logits
    std::vector<double> per_sample;  // n
    double mean = 0.0;
};

// Cross-entropy on raw logits. Softmax uses max-subtraction; the loss is
// computed through log-sum-exp rather than log of a stored probability.
SoftmaxResult ce_loss(const DenseMatrix& logits, const std::vector<int>& y);

// Cross-entropy on margin-shifted logits z_k = logit_k - margins(k, b_i).
SoftmaxResult msl_loss(const DenseMatrix& logits, const std::vector<int>& y,
                       const std::vector<int>& b, const MarginTable& margins);

// Gradient of the mean (shifted) loss w.r.t. the raw logits: (p - onehot)/n.
DenseMatrix msl_grad_logits(const SoftmaxResult& result, const std::vector<int>& y);

// Gradient of the mean loss w.r.t. the margin table:
// out(k, b) = (1/n) sum over samples with b_i = b of (onehot_k - p_k).
DenseMatrix msl_grad_margins(const SoftmaxResult& result, const std::vector<int>& y,
                             const std::vector<int>& b, std::size_t num_bias);

// Whether the equalized loss requires every class in the batch to have both an
// aligned and a conflicting member, or silently skips one-sided classes (the
// relaxed form exists for the ablation that folds the loss into the model
// objective on batches without guaranteed coverage).
enum class MelCoverage { require_both_sides, skip_one_sided };

struct MelResult {
    double value = 0.0;
    // Signed per-class gap: mean CE over conflicting members minus mean CE over
    // aligned members; 0 for classes absent from the batch or skipped.
    std::vector<double> gaps;
    std::vector<char> active;  // classes that contributed a |gap| term
};

// Equalized loss: sum over classes of |mean CE(conflicting) - mean CE(aligned)|,
// with membership decided by the train-derived group table. Plain CE inside;
// margins never enter here.
MelResult mel_loss(const DenseMatrix& logits, const std::vector<int>& y,
                   const std::vector<int>& b, const GroupTable& groups,
                   MelCoverage coverage = MelCoverage::require_both_sides);

// Exact gradient of mel_loss w.r.t. the logits. Each sample's CE gradient is
// scaled by sign(gap_y)/|side| with + for conflicting members and - for
// aligned ones; the subgradient at gap = 0 is taken as 0.
DenseMatrix mel_grad_logits(const DenseMatrix& logits, const std::vector<int>& y,
                            const std::vector<int>& b, const GroupTable& groups,
                            MelCoverage coverage = MelCoverage::require_both_sides);

// Mean over (target, bias) cells of the cell-mean CE; the outer objective of
// the "margins guided by unbiased loss" ablation. Cells absent from the batch
// are excluded from the mean.
struct UnbiasedLossResult {
    double value = 0.0;
};
UnbiasedLossResult unbiased_group_loss(const DenseMatrix& logits, const std::vector<int>& y,
                                       const std::vector<int>& b, std::size_t num_classes,
                                       std::size_t num_bias);
DenseMatrix unbiased_group_loss_grad_logits(const DenseMatrix& logits,
                                            const std::vector<int>& y,
                                            const std::vector<int>& b,
                                            std::size_t num_classes, std::size_t num_bias);

}  // namespace mdn
