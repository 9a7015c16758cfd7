#include "mdn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>

#include "mdn/errors.hpp"
#include "mdn/finite_diff.hpp"
#include "mdn/groups.hpp"
#include "mdn/losses.hpp"
#include "mdn/matrix.hpp"
#include "mdn/meta.hpp"
#include "mdn/network.hpp"
#include "mdn/rng.hpp"

namespace mdn {

namespace {

constexpr double kFirstOrderThreshold = 1e-5;
constexpr double kMetaThreshold = 1e-4;
constexpr double kFirstOrderStep = 1e-6;
constexpr double kMetaStep = 1e-4;
// Instances whose equalized-loss gaps sit closer to the |.| kink than this are
// redrawn; finite differences are meaningless across the kink.
constexpr double kKinkClearance = 1e-3;

struct Dims {
    std::size_t n, C, B, d_in, hidden;
};

Dims draw_dims(Rng& rng) {
    Dims d;
    d.n = 2 + rng.index(7);       // 2..8
    d.C = 2 + rng.index(3);       // 2..4
    d.B = 2 + rng.index(2);       // 2..3
    d.d_in = 2 + rng.index(4);    // 2..5
    d.hidden = 2 + rng.index(3);  // 2..4
    return d;
}

DenseMatrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double span = 2.0) {
    DenseMatrix m(rows, cols);
    for (double& v : m.data) v = rng.uniform(-span, span);
    return m;
}

std::vector<int> random_labels(std::size_t n, std::size_t hi, Rng& rng) {
    std::vector<int> out(n);
    for (int& v : out) v = static_cast<int>(rng.index(hi));
    return out;
}

MarginTable random_margins(std::size_t C, std::size_t B, Rng& rng) {
    MarginTable m(C, B);
    for (double& v : m.values.data) v = rng.uniform(-0.8, 0.8);
    return m;
}

// A group table with one unambiguous aligned bias per class (column y mod B).
GroupTable synthetic_groups(std::size_t C, std::size_t B) {
    GroupTable g;
    g.num_classes = C;
    g.num_bias = B;
    g.counts.assign(C * B, 10);
    g.aligned.assign(C * B, 0);
    for (std::size_t y = 0; y < C; ++y) {
        g.counts[y * B + y % B] = 100;
        g.aligned[y * B + y % B] = 1;
    }
    return g;
}

// Labels guaranteeing every class has both an aligned and a conflicting member.
void coverage_labels(std::size_t C, std::size_t B, Rng& rng, std::vector<int>& y,
                     std::vector<int>& b) {
    y.clear();
    b.clear();
    for (std::size_t cls = 0; cls < C; ++cls) {
        const std::size_t aligned = cls % B;
        const std::size_t n_aligned = 1 + rng.index(2);
        const std::size_t n_conflict = 1 + rng.index(2);
        for (std::size_t i = 0; i < n_aligned; ++i) {
            y.push_back(static_cast<int>(cls));
            b.push_back(static_cast<int>(aligned));
        }
        for (std::size_t i = 0; i < n_conflict; ++i) {
            std::size_t other = rng.index(B - 1);
            if (other >= aligned) ++other;
            y.push_back(static_cast<int>(cls));
            b.push_back(static_cast<int>(other));
        }
    }
}

bool gaps_clear_of_kink(const MelResult& mel) {
    for (std::size_t c = 0; c < mel.gaps.size(); ++c) {
        if (mel.active[c] && std::abs(mel.gaps[c]) <= kKinkClearance) return false;
    }
    return true;
}

std::vector<double> concat(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

// --- suites: each returns the relative error of one random instance ---------

double check_ce_logits(Rng& rng) {
    const Dims dm = draw_dims(rng);
    const DenseMatrix logits = random_matrix(dm.n, dm.C, rng);
    const std::vector<int> y = random_labels(dm.n, dm.C, rng);
    const SoftmaxResult r = ce_loss(logits, y);
    const DenseMatrix analytic = msl_grad_logits(r, y);
    const auto f = [&](std::span<const double> flat) {
        DenseMatrix m(dm.n, dm.C);
        std::copy(flat.begin(), flat.end(), m.data.begin());
        return ce_loss(m, y).mean;
    };
    const std::vector<double> fd = finite_diff(f, logits.data, kFirstOrderStep);
    return relative_error(analytic.data, fd);
}

double check_msl_logits(Rng& rng) {
    const Dims dm = draw_dims(rng);
    const DenseMatrix logits = random_matrix(dm.n, dm.C, rng);
    const std::vector<int> y = random_labels(dm.n, dm.C, rng);
    const std::vector<int> b = random_labels(dm.n, dm.B, rng);
    const MarginTable margins = random_margins(dm.C, dm.B, rng);
    const SoftmaxResult r = msl_loss(logits, y, b, margins);
    const DenseMatrix analytic = msl_grad_logits(r, y);
    const auto f = [&](std::span<const double> flat) {
        DenseMatrix m(dm.n, dm.C);
        std::copy(flat.begin(), flat.end(), m.data.begin());
        return msl_loss(m, y, b, margins).mean;
    };
    const std::vector<double> fd = finite_diff(f, logits.data, kFirstOrderStep);
    return relative_error(analytic.data, fd);
}

double check_msl_margins(Rng& rng) {
    const Dims dm = draw_dims(rng);
    const DenseMatrix logits = random_matrix(dm.n, dm.C, rng);
    const std::vector<int> y = random_labels(dm.n, dm.C, rng);
    const std::vector<int> b = random_labels(dm.n, dm.B, rng);
    const MarginTable margins = random_margins(dm.C, dm.B, rng);
    const SoftmaxResult r = msl_loss(logits, y, b, margins);
    const DenseMatrix analytic = msl_grad_margins(r, y, b, dm.B);
    const auto f = [&](std::span<const double> flat) {
        MarginTable m(dm.C, dm.B);
        std::copy(flat.begin(), flat.end(), m.values.data.begin());
        return msl_loss(logits, y, b, m).mean;
    };
    const std::vector<double> fd = finite_diff(f, margins.values.data, kFirstOrderStep);
    return relative_error(analytic.data, fd);
}

double check_mel_logits(Rng& rng) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        std::size_t C = 2 + rng.index(3);
        std::size_t B = 2 + rng.index(2);
        const GroupTable groups = synthetic_groups(C, B);
        std::vector<int> y, b;
        coverage_labels(C, B, rng, y, b);
        const DenseMatrix logits = random_matrix(y.size(), C, rng);
        const MelResult mel = mel_loss(logits, y, b, groups);
        if (!gaps_clear_of_kink(mel)) continue;
        const DenseMatrix analytic = mel_grad_logits(logits, y, b, groups);
        const auto f = [&](std::span<const double> flat) {
            DenseMatrix m(logits.rows, logits.cols);
            std::copy(flat.begin(), flat.end(), m.data.begin());
            return mel_loss(m, y, b, groups).value;
        };
        const std::vector<double> fd = finite_diff(f, logits.data, kFirstOrderStep);
        return relative_error(analytic.data, fd);
    }
    throw NumericError("gradcheck: could not draw an equalized-loss instance away from kinks");
}

double check_backward_params(Rng& rng) {
    const Dims dm = draw_dims(rng);
    ExtractorParams ext =
        make_extractor({dm.d_in, dm.hidden, dm.hidden}, Activation::tanh, rng);
    ClassifierParams cls = make_classifier(dm.C, dm.hidden, rng);
    const DenseMatrix x = random_matrix(dm.n, dm.d_in, rng);
    const std::vector<int> y = random_labels(dm.n, dm.C, rng);

    const ForwardCache fwd = forward(ext, cls, x);
    const SoftmaxResult r = ce_loss(fwd.logits, y);
    const NetGradients grads =
        backward(fwd, ext, cls, msl_grad_logits(r, y), Reduction::sum);
    const std::vector<double> analytic = concat(flatten(grads.ext), flatten(grads.cls));

    const std::vector<double> at = concat(flatten(ext), flatten(cls));
    const std::size_t n_ext = param_count(ext);
    const auto f = [&](std::span<const double> flat) {
        ExtractorParams e = ext;
        ClassifierParams c = cls;
        unflatten(flat.subspan(0, n_ext), e);
        unflatten(flat.subspan(n_ext), c);
        return ce_loss(forward(e, c, x).logits, y).mean;
    };
    const std::vector<double> fd = finite_diff(f, at, kFirstOrderStep);
    return relative_error(analytic, fd);
}

double check_mel_classifier(Rng& rng) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        const Dims dm = draw_dims(rng);
        const ExtractorParams ext =
            make_extractor({dm.d_in, dm.hidden}, Activation::tanh, rng);
        ClassifierParams cls = make_classifier(dm.C, dm.hidden, rng);
        const GroupTable groups = synthetic_groups(dm.C, dm.B);
        std::vector<int> y, b;
        coverage_labels(dm.C, dm.B, rng, y, b);
        const DenseMatrix x = random_matrix(y.size(), dm.d_in, rng);

        const ForwardCache fwd = forward(ext, cls, x);
        const MelResult mel = mel_loss(fwd.logits, y, b, groups);
        if (!gaps_clear_of_kink(mel)) continue;
        const DenseMatrix up = mel_grad_logits(fwd.logits, y, b, groups);
        const ClassifierParams grad_phi = classifier_gradients(fwd, up, Reduction::sum);
        const std::vector<double> analytic = flatten(grad_phi);

        const auto f = [&](std::span<const double> flat) {
            ClassifierParams c = cls;
            unflatten(flat, c);
            return mel_loss(forward(ext, c, x).logits, y, b, groups).value;
        };
        const std::vector<double> fd = finite_diff(f, flatten(cls), kFirstOrderStep);
        return relative_error(analytic, fd);
    }
    throw NumericError("gradcheck: could not draw an equalized-loss instance away from kinks");
}

// The meta suite: the closed-form margin direction G must match the derivative
// of  m -> phi-hat(m) -> equalized loss, with the pseudo-stepped extractor
// frozen at the base margins (the update deliberately excludes that path).
double check_meta_margins(Rng& rng) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        const Dims dm = draw_dims(rng);
        const double alpha = 0.1;
        TrainState state;
        state.ext = make_extractor({dm.d_in, dm.hidden}, Activation::relu, rng);
        state.cls = make_classifier(dm.C, dm.hidden, rng);
        state.margins = random_margins(dm.C, dm.B, rng);
        state.alpha = alpha;

        LabeledBatch batch;
        batch.x = random_matrix(dm.n, dm.d_in, rng);
        batch.y = random_labels(dm.n, dm.C, rng);
        batch.b = random_labels(dm.n, dm.B, rng);

        const GroupTable groups = synthetic_groups(dm.C, dm.B);
        LabeledBatch meta;
        coverage_labels(dm.C, dm.B, rng, meta.y, meta.b);
        meta.x = random_matrix(meta.y.size(), dm.d_in, rng);

        const PseudoResult ps = pseudo_update(state, batch);
        const ForwardCache meta_fwd = forward(ps.ext_hat, ps.cls_hat, meta.x);
        const MelResult mel = mel_loss(meta_fwd.logits, meta.y, meta.b, groups);
        if (!gaps_clear_of_kink(mel)) continue;
        const DenseMatrix up = mel_grad_logits(meta_fwd.logits, meta.y, meta.b, groups);
        const ClassifierParams grad_phi = classifier_gradients(meta_fwd, up, Reduction::sum);
        const DenseMatrix G = margin_meta_gradient(ps.cache, grad_phi, dm.B);

        // Finite differences over the margin table. Per perturbed m the
        // classifier pseudo-step is re-run; the extractor stays at its base
        // pseudo-update, and the train-batch forward pass is margin-free.
        const auto f = [&](std::span<const double> flat) {
            MarginTable m(dm.C, dm.B);
            std::copy(flat.begin(), flat.end(), m.values.data.begin());
            const SoftmaxResult soft = msl_loss(ps.cache.fwd.logits, batch.y, batch.b, m);
            const DenseMatrix upstream = msl_grad_logits(soft, batch.y);
            const ClassifierParams gphi =
                classifier_gradients(ps.cache.fwd, upstream, Reduction::sum);
            ClassifierParams cls_hat = state.cls;
            for (std::size_t i = 0; i < cls_hat.weight.data.size(); ++i) {
                cls_hat.weight.data[i] -= alpha * gphi.weight.data[i];
            }
            for (std::size_t i = 0; i < cls_hat.bias.size(); ++i) {
                cls_hat.bias[i] -= alpha * gphi.bias[i];
            }
            const ForwardCache mf = forward(ps.ext_hat, cls_hat, meta.x);
            return mel_loss(mf.logits, meta.y, meta.b, groups).value;
        };
        const std::vector<double> fd =
            finite_diff(f, state.margins.values.data, kMetaStep);
        // The ascent direction G equals -d(equalized loss)/dm / alpha.
        std::vector<double> ref(fd.size());
        for (std::size_t i = 0; i < fd.size(); ++i) ref[i] = -fd[i] / alpha;
        return relative_error(G.data, ref);
    }
    throw NumericError("gradcheck: could not draw a meta instance away from kinks");
}

struct SuiteSpec {
    const char* name;
    double threshold;
    double (*run)(Rng&);
};

constexpr SuiteSpec kSuites[] = {
    {"ce-logits", kFirstOrderThreshold, &check_ce_logits},
    {"msl-logits", kFirstOrderThreshold, &check_msl_logits},
    {"msl-margins", kFirstOrderThreshold, &check_msl_margins},
    {"mel-logits", kFirstOrderThreshold, &check_mel_logits},
    {"backward-params", kFirstOrderThreshold, &check_backward_params},
    {"mel-classifier", kFirstOrderThreshold, &check_mel_classifier},
    {"meta-margins", kMetaThreshold, &check_meta_margins},
};

}  // namespace

std::vector<std::string> gradcheck_suite_names() {
    std::vector<std::string> names;
    for (const SuiteSpec& s : kSuites) names.emplace_back(s.name);
    return names;
}

std::vector<SuiteResult> run_gradient_checks(const GradCheckOptions& options) {
    if (options.instances < 1) throw ConfigError("gradcheck: instances must be >= 1");
    if (!options.corrupt.empty()) {
        const auto names = gradcheck_suite_names();
        if (std::find(names.begin(), names.end(), options.corrupt) == names.end()) {
            throw ConfigError("gradcheck: unknown suite '" + options.corrupt + "'");
        }
    }
    std::vector<SuiteResult> results;
    for (const SuiteSpec& suite : kSuites) {
        Rng rng = substream(options.seed, suite.name);
        SuiteResult r;
        r.name = suite.name;
        r.instances = options.instances;
        r.threshold = suite.threshold;
        for (std::size_t i = 0; i < options.instances; ++i) {
            double err = suite.run(rng);
            if (options.corrupt == suite.name) err += 1e-2;
            r.max_rel_err = std::max(r.max_rel_err, err);
        }
        r.pass = r.max_rel_err < suite.threshold;
        results.push_back(std::move(r));
    }
    return results;
}

}  // namespace mdn
