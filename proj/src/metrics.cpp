#include "mdn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "mdn/errors.hpp"

namespace mdn {

namespace {

void check_log(const PredictionLog& log, std::size_t C, std::size_t B) {
    if (log.size() == 0) throw DomainError("metrics: empty prediction log");
    if (log.b.size() != log.size() || log.y_pred.size() != log.size()) {
        throw DomainError("metrics: prediction log columns have unequal lengths");
    }
    for (std::size_t i = 0; i < log.size(); ++i) {
        const bool ok = log.y_true[i] >= 0 && static_cast<std::size_t>(log.y_true[i]) < C &&
                        log.b[i] >= 0 && static_cast<std::size_t>(log.b[i]) < B &&
                        log.y_pred[i] >= 0 && static_cast<std::size_t>(log.y_pred[i]) < C;
        if (!ok) {
            throw DomainError("metrics: row " + std::to_string(i) + " labels (" +
                              std::to_string(log.y_true[i]) + ", " + std::to_string(log.b[i]) +
                              ", " + std::to_string(log.y_pred[i]) +
                              ") outside the (class, bias) grid");
        }
    }
}

}  // namespace

PerGroupAccuracy per_group_accuracy(const PredictionLog& log, std::size_t num_classes,
                                    std::size_t num_bias) {
    check_log(log, num_classes, num_bias);
    PerGroupAccuracy out;
    out.acc = DenseMatrix(num_classes, num_bias, 0.0);
    out.support.assign(num_classes * num_bias, 0);
    std::vector<long> correct(num_classes * num_bias, 0);
    for (std::size_t i = 0; i < log.size(); ++i) {
        const std::size_t cell =
            static_cast<std::size_t>(log.y_true[i]) * num_bias +
            static_cast<std::size_t>(log.b[i]);
        out.support[cell] += 1;
        if (log.y_pred[i] == log.y_true[i]) correct[cell] += 1;
    }
    for (std::size_t y = 0; y < num_classes; ++y) {
        for (std::size_t b = 0; b < num_bias; ++b) {
            const std::size_t cell = y * num_bias + b;
            if (out.support[cell] > 0) {
                out.acc(y, b) = static_cast<double>(correct[cell]) /
                                static_cast<double>(out.support[cell]);
            }
        }
    }
    return out;
}

MetricsReport aggregate(const PerGroupAccuracy& per_group, const GroupTable& groups) {
    const std::size_t C = per_group.acc.rows;
    const std::size_t B = per_group.acc.cols;
    if (C != groups.num_classes || B != groups.num_bias) {
        throw ShapeError("aggregate: per-group table is " + std::to_string(C) + "x" +
                         std::to_string(B) + " but group table is " +
                         std::to_string(groups.num_classes) + "x" +
                         std::to_string(groups.num_bias));
    }
    MetricsReport report;
    report.per_group_acc = per_group.acc;
    report.support = per_group.support;

    double sum = 0.0;
    long cells = 0;
    double worst = std::numeric_limits<double>::infinity();
    double conflict_sum = 0.0;
    long conflict_cells = 0;
    for (std::size_t y = 0; y < C; ++y) {
        for (std::size_t b = 0; b < B; ++b) {
            if (!per_group.supported(y, b)) continue;
            const double a = per_group.acc(y, b);
            sum += a;
            cells += 1;
            worst = std::min(worst, a);
            if (!groups.is_aligned(y, b)) {
                conflict_sum += a;
                conflict_cells += 1;
            }
        }
    }
    if (cells == 0) throw DomainError("aggregate: no supported (class, bias) cells");
    report.unbiased_acc = sum / static_cast<double>(cells);
    report.worst_group_acc = worst;
    if (conflict_cells > 0) {
        report.bias_conflict_acc = conflict_sum / static_cast<double>(conflict_cells);
    }
    return report;
}

EodResult eod(const PredictionLog& log, std::size_t num_classes, std::size_t num_bias) {
    check_log(log, num_classes, num_bias);
    EodResult out;
    double total = 0.0;
    long defined = 0;
    // One-vs-rest confusion counts per (target class, bias class).
    for (std::size_t cls = 0; cls < num_classes; ++cls) {
        std::vector<long> tp(num_bias, 0), pos(num_bias, 0), fp(num_bias, 0), neg(num_bias, 0);
        for (std::size_t i = 0; i < log.size(); ++i) {
            const std::size_t bi = static_cast<std::size_t>(log.b[i]);
            const bool truth = static_cast<std::size_t>(log.y_true[i]) == cls;
            const bool pred = static_cast<std::size_t>(log.y_pred[i]) == cls;
            if (truth) {
                pos[bi] += 1;
                if (pred) tp[bi] += 1;
            } else {
                neg[bi] += 1;
                if (pred) fp[bi] += 1;
            }
        }
        auto spread = [num_bias](const std::vector<long>& hits,
                                 const std::vector<long>& totals) -> std::optional<double> {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -std::numeric_limits<double>::infinity();
            long sides = 0;
            for (std::size_t b = 0; b < num_bias; ++b) {
                if (totals[b] == 0) continue;
                const double rate =
                    static_cast<double>(hits[b]) / static_cast<double>(totals[b]);
                lo = std::min(lo, rate);
                hi = std::max(hi, rate);
                sides += 1;
            }
            if (sides < 2) return std::nullopt;
            return hi - lo;
        };
        const auto tpr_spread = spread(tp, pos);
        const auto fpr_spread = spread(fp, neg);
        if (tpr_spread && fpr_spread) {
            total += 0.5 * (*tpr_spread + *fpr_spread);
            defined += 1;
        } else {
            out.skipped_classes.push_back(static_cast<int>(cls));
        }
    }
    if (defined > 0) out.value = 100.0 * total / static_cast<double>(defined);
    return out;
}

MetricsReport evaluate(const PredictionLog& log, const GroupTable& groups) {
    MetricsReport report =
        aggregate(per_group_accuracy(log, groups.num_classes, groups.num_bias), groups);
    report.eod = eod(log, groups.num_classes, groups.num_bias).value;
    return report;
}

void save_prediction_log(const PredictionLog& log, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << "y_true,b,y_pred\n";
    for (std::size_t i = 0; i < log.size(); ++i) {
        f << log.y_true[i] << ',' << log.b[i] << ',' << log.y_pred[i] << '\n';
    }
    f.flush();
    if (!f) throw IoError("write failure on '" + path + "'");
}

PredictionLog load_prediction_log(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(f, line)) throw FormatError(path + ": empty file");
    if (line == "y_true,b,y_pred\r") line.pop_back();
    if (line != "y_true,b,y_pred") {
        throw FormatError(path + ": missing 'y_true,b,y_pred' header (got '" + line + "')");
    }
    PredictionLog log;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        int y = 0, b = 0, p = 0;
        char c1 = 0, c2 = 0;
        if (!(row >> y >> c1 >> b >> c2 >> p) || c1 != ',' || c2 != ',') {
            throw FormatError(path + ": malformed row at line " + std::to_string(lineno));
        }
        log.add(y, b, p);
    }
    if (log.size() == 0) throw FormatError(path + ": no prediction rows");
    return log;
}

}  // namespace mdn
