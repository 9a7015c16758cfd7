#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "mdn/errors.hpp"
#include "mdn/metrics.hpp"
#include "mdn/rng.hpp"

using namespace mdn;
namespace fs = std::filesystem;

namespace {

GroupTable diag_groups(std::size_t C, std::size_t B) {
    GroupTable g;
    g.num_classes = C;
    g.num_bias = B;
    g.counts.assign(C * B, 1);
    g.aligned.assign(C * B, 0);
    for (std::size_t y = 0; y < C; ++y) {
        g.counts[y * B + (y % B)] = 100;
        g.aligned[y * B + (y % B)] = 1;
    }
    return g;
}

PredictionLog random_log(std::size_t n, std::size_t C, std::size_t B, Rng& rng) {
    PredictionLog log;
    for (std::size_t i = 0; i < n; ++i) {
        log.add(static_cast<int>(rng.index(C)), static_cast<int>(rng.index(B)),
                static_cast<int>(rng.index(C)));
    }
    return log;
}

// Fill a (y, b) cell with `correct` hits out of `total`.
void fill_cell(PredictionLog& log, int y, int b, int total, int correct, int wrong_pred) {
    for (int i = 0; i < total; ++i) log.add(y, b, i < correct ? y : wrong_pred);
}

// Independent one-vs-rest equalized-odds oracle.
std::optional<double> slow_eod(const PredictionLog& log, std::size_t C, std::size_t B) {
    double total = 0.0;
    std::size_t defined = 0;
    for (std::size_t cls = 0; cls < C; ++cls) {
        std::vector<double> tpr, fpr;
        for (std::size_t bias = 0; bias < B; ++bias) {
            long tp = 0, pos = 0, fp = 0, neg = 0;
            for (std::size_t i = 0; i < log.size(); ++i) {
                if (static_cast<std::size_t>(log.b[i]) != bias) continue;
                const bool is_pos = static_cast<std::size_t>(log.y_true[i]) == cls;
                const bool pred_pos = static_cast<std::size_t>(log.y_pred[i]) == cls;
                if (is_pos) {
                    ++pos;
                    if (pred_pos) ++tp;
                } else {
                    ++neg;
                    if (pred_pos) ++fp;
                }
            }
            if (pos > 0) tpr.push_back(static_cast<double>(tp) / static_cast<double>(pos));
            if (neg > 0) fpr.push_back(static_cast<double>(fp) / static_cast<double>(neg));
        }
        if (tpr.size() < 2 || fpr.size() < 2) continue;
        const double dt = *std::max_element(tpr.begin(), tpr.end()) -
                          *std::min_element(tpr.begin(), tpr.end());
        const double df = *std::max_element(fpr.begin(), fpr.end()) -
                          *std::min_element(fpr.begin(), fpr.end());
        total += 0.5 * (dt + df);
        ++defined;
    }
    if (defined == 0) return std::nullopt;
    return 100.0 * total / static_cast<double>(defined);
}

}  // namespace

TEST_CASE("per-group accuracy equals a brute-force recount") {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const PredictionLog log = random_log(200, 3, 2, rng);
        const PerGroupAccuracy acc = per_group_accuracy(log, 3, 2);
        for (int y = 0; y < 3; ++y) {
            for (int b = 0; b < 2; ++b) {
                long hits = 0, n = 0;
                for (std::size_t i = 0; i < log.size(); ++i) {
                    if (log.y_true[i] == y && log.b[i] == b) {
                        ++n;
                        if (log.y_pred[i] == y) ++hits;
                    }
                }
                CHECK(acc.support[static_cast<std::size_t>(y) * 2 + static_cast<std::size_t>(b)] ==
                      n);
                if (n > 0) {
                    CHECK(acc.acc(static_cast<std::size_t>(y), static_cast<std::size_t>(b)) ==
                          doctest::Approx(static_cast<double>(hits) / static_cast<double>(n))
                              .epsilon(1e-15));
                }
            }
        }
    }
}

TEST_CASE("aggregation on a hand-built table") {
    PredictionLog log;
    fill_cell(log, 0, 0, 10, 9, 1);  // aligned, 0.9
    fill_cell(log, 0, 1, 10, 1, 1);  // conflicting, 0.1
    fill_cell(log, 1, 0, 10, 9, 0);  // conflicting, 0.9
    fill_cell(log, 1, 1, 10, 9, 0);  // aligned, 0.9

    const MetricsReport report = aggregate(per_group_accuracy(log, 2, 2), diag_groups(2, 2));
    CHECK(report.unbiased_acc == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(report.worst_group_acc == doctest::Approx(0.1).epsilon(1e-15));
    REQUIRE(report.bias_conflict_acc.has_value());
    CHECK(*report.bias_conflict_acc == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(report.worst_group_acc <= report.unbiased_acc);
    CHECK(report.worst_group_acc <= *report.bias_conflict_acc);
}

TEST_CASE("aggregation skips unsupported cells and reports null conflict accuracy") {
    PredictionLog log;
    fill_cell(log, 0, 0, 10, 8, 1);
    fill_cell(log, 1, 1, 10, 6, 0);  // only aligned cells have support
    const MetricsReport report = aggregate(per_group_accuracy(log, 2, 2), diag_groups(2, 2));
    CHECK(report.unbiased_acc == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(report.worst_group_acc == doctest::Approx(0.6).epsilon(1e-15));
    CHECK_FALSE(report.bias_conflict_acc.has_value());
}

TEST_CASE("equalized-odds distance on a worked example is 15 points") {
    PredictionLog log;
    // bias 0: TPR(class 0) = 0.9, FPR(class 0) = 0.2
    fill_cell(log, 0, 0, 10, 9, 1);
    fill_cell(log, 1, 0, 10, 8, 0);
    // bias 1: TPR(class 0) = 0.7, FPR(class 0) = 0.1
    fill_cell(log, 0, 1, 10, 7, 1);
    fill_cell(log, 1, 1, 10, 9, 0);
    // Both one-vs-rest class terms are (0.2 + 0.1)/2 = 0.15, so EOD = 15.
    const EodResult res = eod(log, 2, 2);
    REQUIRE(res.value.has_value());
    CHECK(*res.value == doctest::Approx(15.0).epsilon(1e-12));
    CHECK(res.skipped_classes.empty());
}

TEST_CASE("equalized-odds distance vanishes when both bias sides behave alike") {
    PredictionLog log;
    for (int b = 0; b < 2; ++b) {
        fill_cell(log, 0, b, 20, 17, 1);
        fill_cell(log, 1, b, 20, 11, 0);
    }
    const EodResult res = eod(log, 2, 2);
    REQUIRE(res.value.has_value());
    CHECK(*res.value == doctest::Approx(0.0));
}

TEST_CASE("equalized-odds distance matches the brute-force oracle") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const PredictionLog log = random_log(120, 3, 3, rng);
        const EodResult res = eod(log, 3, 3);
        const std::optional<double> want = slow_eod(log, 3, 3);
        REQUIRE(res.value.has_value() == want.has_value());
        if (want) CHECK(*res.value == doctest::Approx(*want).epsilon(1e-12));
    }
}

TEST_CASE("equalized-odds terms drop one-sided classes") {
    PredictionLog log;
    // Class 0 appears only under bias 0, so its TPR spread has one side.
    // Classes 1 and 2 cover both bias values for both their TPR and FPR sides.
    fill_cell(log, 0, 0, 10, 9, 1);
    fill_cell(log, 1, 0, 10, 8, 0);
    fill_cell(log, 1, 1, 10, 7, 2);
    fill_cell(log, 2, 0, 10, 6, 1);
    fill_cell(log, 2, 1, 10, 9, 0);
    const EodResult res = eod(log, 3, 2);
    REQUIRE(res.value.has_value());  // classes 1 and 2 still defined
    CHECK(std::count(res.skipped_classes.begin(), res.skipped_classes.end(), 0) == 1);
    CHECK(res.skipped_classes.size() == 1);
    const std::optional<double> want = slow_eod(log, 3, 2);
    REQUIRE(want.has_value());
    CHECK(*res.value == doctest::Approx(*want).epsilon(1e-12));

    // With a single bias value represented, nothing is defined.
    PredictionLog one_side;
    fill_cell(one_side, 0, 0, 10, 9, 1);
    fill_cell(one_side, 1, 0, 10, 8, 0);
    const EodResult empty = eod(one_side, 2, 2);
    CHECK_FALSE(empty.value.has_value());
    CHECK(empty.skipped_classes.size() == 2);
}

TEST_CASE("metrics are invariant to row order") {
    Rng rng(23);
    PredictionLog log = random_log(150, 3, 2, rng);
    const MetricsReport a = evaluate(log, diag_groups(3, 2));

    // Reverse the rows.
    PredictionLog rev;
    for (std::size_t i = log.size(); i-- > 0;) rev.add(log.y_true[i], log.b[i], log.y_pred[i]);
    const MetricsReport b = evaluate(rev, diag_groups(3, 2));

    CHECK(a.unbiased_acc == b.unbiased_acc);
    CHECK(a.worst_group_acc == b.worst_group_acc);
    CHECK(a.bias_conflict_acc == b.bias_conflict_acc);
    CHECK(a.eod == b.eod);
}

TEST_CASE("evaluate composes aggregation and equalized odds") {
    Rng rng(29);
    const PredictionLog log = random_log(100, 2, 2, rng);
    const GroupTable groups = diag_groups(2, 2);
    const MetricsReport full = evaluate(log, groups);
    const MetricsReport agg = aggregate(per_group_accuracy(log, 2, 2), groups);
    CHECK(full.unbiased_acc == agg.unbiased_acc);
    CHECK(full.worst_group_acc == agg.worst_group_acc);
    CHECK(full.bias_conflict_acc == agg.bias_conflict_acc);
    CHECK(full.eod == eod(log, 2, 2).value);
}

TEST_CASE("prediction logs round-trip through their CSV form exactly") {
    const fs::path dir = fs::temp_directory_path() / "mdn_test_predlog";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string path = (dir / "log.csv").string();

    Rng rng(31);
    const PredictionLog log = random_log(64, 3, 2, rng);
    save_prediction_log(log, path);
    const PredictionLog back = load_prediction_log(path);
    CHECK(back.y_true == log.y_true);
    CHECK(back.b == log.b);
    CHECK(back.y_pred == log.y_pred);

    std::ofstream bad_header((dir / "bad_header.csv").string());
    bad_header << "a,b,c\n0,0,0\n";
    bad_header.close();
    CHECK_THROWS_AS(load_prediction_log((dir / "bad_header.csv").string()), FormatError);

    std::ofstream bad_row((dir / "bad_row.csv").string());
    bad_row << "y_true,b,y_pred\n0,0,0\n1,oops,1\n";
    bad_row.close();
    try {
        load_prediction_log((dir / "bad_row.csv").string());
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("3") != std::string::npos);  // 1-based line number
    }
    CHECK_THROWS_AS(load_prediction_log((dir / "missing.csv").string()), IoError);
}

TEST_CASE("metric layer rejects malformed logs") {
    PredictionLog empty;
    CHECK_THROWS_AS(per_group_accuracy(empty, 2, 2), DomainError);
    PredictionLog bad;
    bad.add(0, 0, 5);  // prediction outside [0, C)
    CHECK_THROWS_AS(per_group_accuracy(bad, 2, 2), DomainError);
    PredictionLog bad2;
    bad2.add(0, 7, 0);
    CHECK_THROWS_AS(per_group_accuracy(bad2, 2, 2), DomainError);
}
