#include "mdn/meta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mdn/errors.hpp"

namespace mdn {

TrainMode train_mode_from_string(const std::string& name) {
    if (name == "vanilla") return TrainMode::vanilla;
    if (name == "resample") return TrainMode::resample;
    if (name == "mdn") return TrainMode::mdn;
    if (name == "mdn_no_mel") return TrainMode::mdn_no_mel;
    if (name == "mdn_no_msl") return TrainMode::mdn_no_msl;
    throw ConfigError("unknown train mode '" + name +
                      "' (expected vanilla, resample, mdn, mdn_no_mel, mdn_no_msl)");
}

std::string to_string(TrainMode mode) {
    switch (mode) {
        case TrainMode::vanilla: return "vanilla";
        case TrainMode::resample: return "resample";
        case TrainMode::mdn: return "mdn";
        case TrainMode::mdn_no_mel: return "mdn_no_mel";
        case TrainMode::mdn_no_msl: return "mdn_no_msl";
    }
    throw ConfigError("invalid train mode value");
}

OptimizerKind optimizer_from_string(const std::string& name) {
    if (name == "sgd") return OptimizerKind::sgd;
    if (name == "adam") return OptimizerKind::adam;
    throw ConfigError("unknown optimizer '" + name + "' (expected sgd, adam)");
}

std::string to_string(OptimizerKind kind) {
    switch (kind) {
        case OptimizerKind::sgd: return "sgd";
        case OptimizerKind::adam: return "adam";
    }
    throw ConfigError("invalid optimizer value");
}

namespace {

bool needs_balanced_sampling(TrainMode mode) { return mode != TrainMode::vanilla; }
bool draws_meta_batches(TrainMode mode) {
    return mode == TrainMode::mdn || mode == TrainMode::mdn_no_mel ||
           mode == TrainMode::mdn_no_msl;
}

}  // namespace

void validate(const TrainConfig& cfg, const DataBundle& bundle) {
    if (!(cfg.alpha > 0.0) || !std::isfinite(cfg.alpha)) {
        throw ConfigError("train: alpha must be finite and > 0");
    }
    if (!(cfg.beta >= 0.0) || !std::isfinite(cfg.beta)) {
        throw ConfigError("train: beta must be finite and >= 0");
    }
    if (cfg.epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (cfg.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (cfg.meta_per_group < 1) throw ConfigError("train: meta_per_group must be >= 1");
    if (cfg.hidden.empty()) throw ConfigError("train: need at least one hidden layer");
    for (std::size_t h : cfg.hidden) {
        if (h < 1) throw ConfigError("train: hidden layer width must be >= 1");
    }
    if (bundle.train.size() == 0) throw DomainError("train: empty train split");
    const std::size_t cells = bundle.num_classes * bundle.num_bias;
    if (draws_meta_batches(cfg.mode) && cfg.batch_size < cells) {
        throw ConfigError("train: batch_size " + std::to_string(cfg.batch_size) +
                          " below the " + std::to_string(cells) +
                          " (class, bias) cells required by mode " + to_string(cfg.mode));
    }
    if (needs_balanced_sampling(cfg.mode)) {
        for (std::size_t y = 0; y < bundle.num_classes; ++y) {
            for (std::size_t b = 0; b < bundle.num_bias; ++b) {
                if (bundle.groups.count(y, b) == 0) {
                    throw CoverageError("train: mode " + to_string(cfg.mode) +
                                        " needs every (class, bias) cell populated, but "
                                        "class " + std::to_string(y) + ", bias " +
                                        std::to_string(b) + " is empty in the train split");
                }
            }
        }
    }
}

PseudoCache make_cache(const TrainState& state, const LabeledBatch& batch) {
    PseudoCache cache;
    cache.fwd = forward(state.ext, state.cls, batch.x);
    cache.soft = msl_loss(cache.fwd.logits, batch.y, batch.b, state.margins);
    cache.y = batch.y;
    cache.b = batch.b;
    return cache;
}

PseudoResult pseudo_update(const TrainState& state, const LabeledBatch& batch) {
    PseudoResult out;
    out.cache = make_cache(state, batch);
    const DenseMatrix upstream = msl_grad_logits(out.cache.soft, out.cache.y);
    const NetGradients grads =
        backward(out.cache.fwd, state.ext, state.cls, upstream, Reduction::sum);
    out.ext_hat = state.ext;
    out.cls_hat = state.cls;
    sgd_step(out.ext_hat, out.cls_hat, grads, state.alpha);
    return out;
}

DenseMatrix margin_meta_gradient(const PseudoCache& cache,
                                 const ClassifierParams& meta_grad_phi,
                                 std::size_t num_bias) {
    const std::size_t n = cache.fwd.batch_size();
    const std::size_t C = cache.soft.probs.cols;
    const std::size_t d = cache.fwd.features.cols;
    if (meta_grad_phi.weight.rows != C || meta_grad_phi.weight.cols != d ||
        meta_grad_phi.bias.size() != C) {
        throw ShapeError("margin_meta_gradient: classifier-gradient shape (" +
                         std::to_string(meta_grad_phi.weight.rows) + "x" +
                         std::to_string(meta_grad_phi.weight.cols) + ", bias " +
                         std::to_string(meta_grad_phi.bias.size()) +
                         ") does not match the cache (" + std::to_string(C) + " classes, " +
                         std::to_string(d) + " features)");
    }
    // a_i = meta_grad_phi.weight . f_i + meta_grad_phi.bias, one row per sample.
    DenseMatrix a = matmul_nt(cache.fwd.features, meta_grad_phi.weight);
    add_row_vector(a, meta_grad_phi.bias);
    DenseMatrix G(C, num_bias, 0.0);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (cache.b[i] < 0 || static_cast<std::size_t>(cache.b[i]) >= num_bias) {
            throw DomainError("margin_meta_gradient: bias label " +
                              std::to_string(cache.b[i]) + " at row " + std::to_string(i) +
                              " outside [0, " + std::to_string(num_bias) + ")");
        }
        const double* p = cache.soft.probs.row_ptr(i);
        const double* ai = a.row_ptr(i);
        double dot = 0.0;
        for (std::size_t k = 0; k < C; ++k) dot += p[k] * ai[k];
        const std::size_t bi = static_cast<std::size_t>(cache.b[i]);
        for (std::size_t k = 0; k < C; ++k) {
            G(k, bi) += inv_n * p[k] * (dot - ai[k]);
        }
    }
    return G;
}

MarginTable margin_step(const MarginTable& margins, const DenseMatrix& meta_grad,
                        double alpha, double beta) {
    if (!(alpha > 0.0)) throw ConfigError("margin_step: alpha must be > 0");
    if (!(beta >= 0.0)) throw ConfigError("margin_step: beta must be >= 0");
    if (!margins.values.same_shape(meta_grad)) {
        throw ShapeError("margin_step: gradient shape does not match the margin table");
    }
    MarginTable out = margins;
    const double scale = alpha * beta;
    for (std::size_t i = 0; i < out.values.data.size(); ++i) {
        const double v = margins.values.data[i] + scale * meta_grad.data[i];
        if (!std::isfinite(v)) {
            throw NumericError("margin_step: non-finite margin at class " +
                               std::to_string(i / margins.num_bias()) + ", bias " +
                               std::to_string(i % margins.num_bias()));
        }
        out.values.data[i] = v;
    }
    return out;
}

namespace {

void apply_model_step(TrainState& state, const NetGradients& grads) {
    if (state.optimizer == OptimizerKind::sgd) {
        sgd_step(state.ext, state.cls, grads, state.alpha);
    } else {
        adam_step(state.ext, state.cls, grads, state.adam, state.alpha);
    }
}

void push_record(TrainState& state, double msl, std::optional<double> mel) {
    IterationRecord rec;
    rec.iter = state.t;
    rec.msl = msl;
    rec.mel = mel;
    rec.margins = state.margins.values;
    state.history.push_back(std::move(rec));
}

void accumulate(NetGradients& into, const NetGradients& add) {
    for (std::size_t l = 0; l < into.ext.layers.size(); ++l) {
        DenseLayer& dst = into.ext.layers[l];
        const DenseLayer& src = add.ext.layers[l];
        for (std::size_t i = 0; i < dst.weight.data.size(); ++i) {
            dst.weight.data[i] += src.weight.data[i];
        }
        for (std::size_t i = 0; i < dst.bias.size(); ++i) dst.bias[i] += src.bias[i];
    }
    for (std::size_t i = 0; i < into.cls.weight.data.size(); ++i) {
        into.cls.weight.data[i] += add.cls.weight.data[i];
    }
    for (std::size_t i = 0; i < into.cls.bias.size(); ++i) {
        into.cls.bias[i] += add.cls.bias[i];
    }
}

}  // namespace

double final_update(TrainState& state, const PseudoCache& cache,
                    const MarginTable& new_margins, std::optional<double> mel_value) {
    // Raw logits do not depend on the margins, so the cached forward pass is
    // reused; only the shift and everything downstream is recomputed.
    const SoftmaxResult soft = msl_loss(cache.fwd.logits, cache.y, cache.b, new_margins);
    const DenseMatrix upstream = msl_grad_logits(soft, cache.y);
    const NetGradients grads =
        backward(cache.fwd, state.ext, state.cls, upstream, Reduction::sum);
    apply_model_step(state, grads);
    state.margins = new_margins;
    state.t += 1;
    push_record(state, soft.mean, mel_value);
    return soft.mean;
}

PredictionLog predict(const ExtractorParams& ext, const ClassifierParams& cls,
                      const LabeledBatch& split) {
    const ForwardCache fwd = forward(ext, cls, split.x);
    PredictionLog log;
    for (std::size_t i = 0; i < fwd.batch_size(); ++i) {
        const double* z = fwd.logits.row_ptr(i);
        std::size_t best = 0;
        for (std::size_t k = 1; k < fwd.logits.cols; ++k) {
            if (z[k] > z[best]) best = k;  // ties keep the lowest class index
        }
        log.add(split.y[i], split.b[i], static_cast<int>(best));
    }
    return log;
}

namespace {

void run_iteration(const TrainConfig& cfg, const DataBundle& bundle, TrainState& state,
                   Rng& batch_rng, Rng& meta_rng) {
    switch (cfg.mode) {
        case TrainMode::vanilla: {
            const LabeledBatch batch = sample_train_batch(bundle, cfg.batch_size, batch_rng);
            final_update(state, make_cache(state, batch), state.margins, std::nullopt);
            return;
        }
        case TrainMode::resample: {
            const LabeledBatch batch =
                sample_balanced_batch(bundle, cfg.batch_size, batch_rng);
            final_update(state, make_cache(state, batch), state.margins, std::nullopt);
            return;
        }
        case TrainMode::mdn:
        case TrainMode::mdn_no_mel: {
            const LabeledBatch batch = sample_train_batch(bundle, cfg.batch_size, batch_rng);
            const PseudoResult ps = pseudo_update(state, batch);
            const LabeledBatch meta =
                sample_meta_batch(bundle, cfg.meta_per_group, meta_rng);
            const ForwardCache meta_fwd = forward(ps.ext_hat, ps.cls_hat, meta.x);
            double meta_value = 0.0;
            DenseMatrix meta_grad;
            if (cfg.mode == TrainMode::mdn) {
                meta_value = mel_loss(meta_fwd.logits, meta.y, meta.b, bundle.groups).value;
                meta_grad = mel_grad_logits(meta_fwd.logits, meta.y, meta.b, bundle.groups);
            } else {
                meta_value = unbiased_group_loss(meta_fwd.logits, meta.y, meta.b,
                                                 bundle.num_classes, bundle.num_bias)
                                 .value;
                meta_grad = unbiased_group_loss_grad_logits(
                    meta_fwd.logits, meta.y, meta.b, bundle.num_classes, bundle.num_bias);
            }
            const ClassifierParams grad_phi =
                classifier_gradients(meta_fwd, meta_grad, Reduction::sum);
            const DenseMatrix G = margin_meta_gradient(ps.cache, grad_phi, bundle.num_bias);
            const MarginTable next = margin_step(state.margins, G, cfg.alpha, cfg.beta);
            final_update(state, ps.cache, next, meta_value);
            return;
        }
        case TrainMode::mdn_no_msl: {
            // Margins never move; the meta objective joins the model objective
            // directly and both gradients flow through the whole network.
            const LabeledBatch batch = sample_train_batch(bundle, cfg.batch_size, batch_rng);
            const PseudoCache cache = make_cache(state, batch);
            const DenseMatrix up_train = msl_grad_logits(cache.soft, cache.y);
            NetGradients grads =
                backward(cache.fwd, state.ext, state.cls, up_train, Reduction::sum);
            const LabeledBatch meta =
                sample_meta_batch(bundle, cfg.meta_per_group, meta_rng);
            const ForwardCache meta_fwd = forward(state.ext, state.cls, meta.x);
            const MelResult mel = mel_loss(meta_fwd.logits, meta.y, meta.b, bundle.groups);
            const DenseMatrix up_meta =
                mel_grad_logits(meta_fwd.logits, meta.y, meta.b, bundle.groups);
            accumulate(grads,
                       backward(meta_fwd, state.ext, state.cls, up_meta, Reduction::sum));
            apply_model_step(state, grads);
            state.t += 1;
            push_record(state, cache.soft.mean, mel.value);
            return;
        }
    }
    throw ConfigError("train: invalid mode value");
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const DataBundle& bundle,
                  const EpochObserver& on_epoch, const IterationObserver& on_iteration) {
    validate(cfg, bundle);
    Rng init_rng = substream(cfg.seed, "init");
    Rng batch_rng = substream(cfg.seed, "batches");
    Rng meta_rng = substream(cfg.seed, "meta-batches");

    TrainResult result;
    TrainState& state = result.state;
    std::vector<std::size_t> dims;
    dims.push_back(bundle.train.x.cols);
    for (std::size_t h : cfg.hidden) dims.push_back(h);
    state.ext = make_extractor(dims, cfg.activation, init_rng);
    state.cls = make_classifier(bundle.num_classes, state.ext.feature_dim(), init_rng);
    state.margins = MarginTable(bundle.num_classes, bundle.num_bias);
    state.alpha = cfg.alpha;
    state.optimizer = cfg.optimizer;
    if (cfg.optimizer == OptimizerKind::adam) {
        state.adam = make_adam_state(param_count(state.ext) + param_count(state.cls));
    }

    const std::size_t iters_per_epoch =
        (bundle.train.size() + cfg.batch_size - 1) / cfg.batch_size;
    double best_val = -std::numeric_limits<double>::infinity();
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        for (std::size_t it = 0; it < iters_per_epoch; ++it) {
            run_iteration(cfg, bundle, state, batch_rng, meta_rng);
            if (on_iteration) on_iteration(state.history.back());
        }
        EpochRecord rec;
        rec.epoch = epoch;
        const PredictionLog val_log = predict(state.ext, state.cls, bundle.val);
        rec.test_log = predict(state.ext, state.cls, bundle.test);
        rec.val = evaluate(val_log, bundle.groups);
        rec.val.epoch = static_cast<int>(epoch);
        rec.val.split = "val";
        rec.test = evaluate(rec.test_log, bundle.groups);
        rec.test.epoch = static_cast<int>(epoch);
        rec.test.split = "test";
        rec.margins = state.margins.values;
        if (rec.val.unbiased_acc > best_val) {
            best_val = rec.val.unbiased_acc;
            result.best_epoch = epoch;
            result.best_test = rec.test;
            result.best_margins = rec.margins;
            result.best_test_log = rec.test_log;
        }
        if (on_epoch) on_epoch(rec);
        result.epochs.push_back(std::move(rec));
    }
    return result;
}

}  // namespace mdn
