#pragma once

#include <cstddef>
#include <vector>

#include "mdn/batch.hpp"

namespace mdn {

// Per-(target, bias) training-set bookkeeping. A cell is bias-aligned when its
// count is the maximum within its class row (ties mark every tied cell
// aligned); every other cell of the row is bias-conflicting.
struct GroupTable {
    std::size_t num_classes = 0;
    std::size_t num_bias = 0;
    std::vector<long> counts;      // C x B, row-major
    std::vector<char> aligned;     // C x B, row-major

    long count(std::size_t y, std::size_t b) const { return counts[y * num_bias + b]; }
    bool is_aligned(std::size_t y, std::size_t b) const {
        return aligned[y * num_bias + b] != 0;
    }
};

// Exact tally over the train split. Throws CoverageError when a class has no
// samples at all.
GroupTable build_group_table(const LabeledBatch& train, std::size_t num_classes,
                             std::size_t num_bias);

// True when every class row has at least one aligned and one conflicting cell
// with nonzero count (what balanced meta batches and the equalized loss need).
bool has_full_group_coverage(const GroupTable& groups);

}  // namespace mdn
