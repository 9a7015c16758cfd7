#include "mdn/groups.hpp"

#include <algorithm>
#include <string>

#include "mdn/errors.hpp"

namespace mdn {

void validate(const LabeledBatch& batch, std::size_t num_classes, std::size_t num_bias,
              bool require_nonempty) {
    if (batch.y.size() != batch.b.size() || batch.y.size() != batch.x.rows) {
        throw DomainError("batch: " + std::to_string(batch.x.rows) + " rows, " +
                          std::to_string(batch.y.size()) + " targets, " +
                          std::to_string(batch.b.size()) + " bias labels");
    }
    if (require_nonempty && batch.size() == 0) {
        throw DomainError("batch: empty");
    }
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (batch.y[i] < 0 || static_cast<std::size_t>(batch.y[i]) >= num_classes) {
            throw DomainError("batch: target label " + std::to_string(batch.y[i]) +
                              " out of range [0," + std::to_string(num_classes) + ") at row " +
                              std::to_string(i));
        }
        if (batch.b[i] < 0 || static_cast<std::size_t>(batch.b[i]) >= num_bias) {
            throw DomainError("batch: bias label " + std::to_string(batch.b[i]) +
                              " out of range [0," + std::to_string(num_bias) + ") at row " +
                              std::to_string(i));
        }
    }
}

GroupTable build_group_table(const LabeledBatch& train, std::size_t num_classes,
                             std::size_t num_bias) {
    validate(train, num_classes, num_bias);
    GroupTable table;
    table.num_classes = num_classes;
    table.num_bias = num_bias;
    table.counts.assign(num_classes * num_bias, 0);
    table.aligned.assign(num_classes * num_bias, 0);
    for (std::size_t i = 0; i < train.size(); ++i) {
        table.counts[static_cast<std::size_t>(train.y[i]) * num_bias +
                     static_cast<std::size_t>(train.b[i])] += 1;
    }
    for (std::size_t y = 0; y < num_classes; ++y) {
        const long* row = table.counts.data() + y * num_bias;
        const long mx = *std::max_element(row, row + num_bias);
        if (mx == 0) {
            throw CoverageError("group table: class " + std::to_string(y) +
                                " absent from the train split");
        }
        for (std::size_t b = 0; b < num_bias; ++b) {
            table.aligned[y * num_bias + b] = row[b] == mx ? 1 : 0;
        }
    }
    return table;
}

bool has_full_group_coverage(const GroupTable& groups) {
    for (std::size_t y = 0; y < groups.num_classes; ++y) {
        bool aligned_nonzero = false, conflicting_nonzero = false;
        for (std::size_t b = 0; b < groups.num_bias; ++b) {
            if (groups.count(y, b) <= 0) return false;
            (groups.is_aligned(y, b) ? aligned_nonzero : conflicting_nonzero) = true;
        }
        if (!aligned_nonzero || !conflicting_nonzero) return false;
    }
    return true;
}

}  // namespace mdn
