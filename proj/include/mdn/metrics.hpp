#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mdn/groups.hpp"
#include "mdn/matrix.hpp"

namespace mdn {

struct PredictionLog {
    std::vector<int> y_true, b, y_pred;

    std::size_t size() const { return y_true.size(); }
    void add(int y, int bias, int pred) {
        y_true.push_back(y);
        b.push_back(bias);
        y_pred.push_back(pred);
    }
};

struct PerGroupAccuracy {
    DenseMatrix acc;            // C x B; 0 where unsupported
    std::vector<long> support;  // C*B row-major counts

    bool supported(std::size_t y, std::size_t bias) const {
        return support[y * acc.cols + bias] > 0;
    }
};

// Exact per-(target, bias) accuracy counting. Throws DomainError on
// out-of-range labels or an empty log.
PerGroupAccuracy per_group_accuracy(const PredictionLog& log, std::size_t num_classes,
                                    std::size_t num_bias);

struct MetricsReport {
    DenseMatrix per_group_acc;
    std::vector<long> support;
    double unbiased_acc = 0.0;    // unweighted mean over supported cells
    double worst_group_acc = 0.0; // min over supported cells
    std::optional<double> bias_conflict_acc;  // absent when no conflicting cell has support
    std::optional<double> eod;                // absent when no class term is defined
    int epoch = -1;
    std::string split;
};

// Aggregates a per-group table against the train-derived alignment flags.
// Does not fill eod/epoch/split.
MetricsReport aggregate(const PerGroupAccuracy& per_group, const GroupTable& groups);

struct EodResult {
    std::optional<double> value;      // percentage points (x100)
    std::vector<int> skipped_classes; // classes lacking a defined TPR or FPR spread
};

// Equalized-odds distance, one-vs-rest per target class: the class term is
// (spread of TPR + spread of FPR)/2 across bias classes (max minus min, which
// is |TPR_0 - TPR_1| when B = 2); EOD = 100 * mean over defined class terms.
// A bias class with zero positives (TPR) or zero negatives (FPR) for a target
// class drops out of that spread; spreads over fewer than two bias classes
// leave the class term undefined.
EodResult eod(const PredictionLog& log, std::size_t num_classes, std::size_t num_bias);

// Full evaluation: per-group accuracy, aggregates, and EOD in one report.
MetricsReport evaluate(const PredictionLog& log, const GroupTable& groups);

// Delimited text, header "y_true,b,y_pred" required.
void save_prediction_log(const PredictionLog& log, const std::string& path);
PredictionLog load_prediction_log(const std::string& path);

}  // namespace mdn
