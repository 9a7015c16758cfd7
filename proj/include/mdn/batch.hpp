#pragma once

#include <cstddef>
#include <vector>

#include "mdn/matrix.hpp"

namespace mdn {

// One batch (or split) of labeled samples: inputs, target labels y in [0, C)
// and bias labels b in [0, B).
struct LabeledBatch {
    DenseMatrix x;        // n x d_in
    std::vector<int> y;   // n
    std::vector<int> b;   // n

    std::size_t size() const { return y.size(); }
};

// Throws DomainError on length mismatches, out-of-range labels or (when
// require_nonempty) an empty batch.
void validate(const LabeledBatch& batch, std::size_t num_classes, std::size_t num_bias,
              bool require_nonempty = true);

}  // namespace mdn
