#include "mdn/optim.hpp"

#include <cmath>
#include <string>

#include "mdn/errors.hpp"

namespace mdn {

namespace {

void require_finite_grads(std::span<const double> grads, const char* where) {
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!std::isfinite(grads[i])) {
            throw NumericError(std::string(where) + ": non-finite gradient at flat index " +
                               std::to_string(i));
        }
    }
}

void require_positive_lr(double lr, const char* where) {
    if (!(lr > 0.0)) {
        throw ConfigError(std::string(where) + ": learning rate must be > 0, got " +
                          std::to_string(lr));
    }
}

// Fixed traversal order: extractor layers (weight, bias) then classifier.
template <typename ParamFn>
void visit_params(ExtractorParams& theta, ClassifierParams& phi, const NetGradients& grads,
                  ParamFn&& fn) {
    if (grads.ext.layers.size() != theta.layers.size()) {
        throw ShapeError("optimizer: gradient has " + std::to_string(grads.ext.layers.size()) +
                         " extractor layers, params have " + std::to_string(theta.layers.size()));
    }
    for (std::size_t k = 0; k < theta.layers.size(); ++k) {
        DenseLayer& layer = theta.layers[k];
        const DenseLayer& g = grads.ext.layers[k];
        if (!layer.weight.same_shape(g.weight) || layer.bias.size() != g.bias.size()) {
            throw ShapeError("optimizer: extractor layer " + std::to_string(k) +
                             " gradient shape mismatch");
        }
        for (std::size_t i = 0; i < layer.weight.data.size(); ++i)
            fn(layer.weight.data[i], g.weight.data[i]);
        for (std::size_t i = 0; i < layer.bias.size(); ++i) fn(layer.bias[i], g.bias[i]);
    }
    if (!phi.weight.same_shape(grads.cls.weight) || phi.bias.size() != grads.cls.bias.size()) {
        throw ShapeError("optimizer: classifier gradient shape mismatch");
    }
    for (std::size_t i = 0; i < phi.weight.data.size(); ++i)
        fn(phi.weight.data[i], grads.cls.weight.data[i]);
    for (std::size_t i = 0; i < phi.bias.size(); ++i) fn(phi.bias[i], grads.cls.bias[i]);
}

void require_finite_net_grads(const NetGradients& grads, const char* where) {
    for (std::size_t k = 0; k < grads.ext.layers.size(); ++k) {
        if (!all_finite(grads.ext.layers[k].weight) || !all_finite(grads.ext.layers[k].bias)) {
            throw NumericError(std::string(where) + ": non-finite gradient in extractor layer " +
                               std::to_string(k));
        }
    }
    if (!all_finite(grads.cls.weight) || !all_finite(grads.cls.bias)) {
        throw NumericError(std::string(where) + ": non-finite gradient in classifier");
    }
}

}  // namespace

void sgd_step(std::span<double> params, std::span<const double> grads, double lr) {
    require_positive_lr(lr, "sgd_step");
    if (params.size() != grads.size()) {
        throw ShapeError("sgd_step: params/grads size mismatch");
    }
    require_finite_grads(grads, "sgd_step");
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
}

void sgd_step(ExtractorParams& theta, ClassifierParams& phi, const NetGradients& grads,
              double lr) {
    require_positive_lr(lr, "sgd_step");
    require_finite_net_grads(grads, "sgd_step");
    visit_params(theta, phi, grads, [lr](double& p, double g) { p -= lr * g; });
}

AdamState make_adam_state(std::size_t param_count) {
    AdamState s;
    s.m.assign(param_count, 0.0);
    s.v.assign(param_count, 0.0);
    s.step = 0;
    return s;
}

namespace {

struct AdamCore {
    AdamState& state;
    double lr, beta1, beta2, eps, bc1, bc2;
    std::size_t cursor = 0;

    void operator()(double& p, double g) {
        double& m = state.m[cursor];
        double& v = state.v[cursor];
        ++cursor;
        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v + (1.0 - beta2) * g * g;
        const double mhat = m / bc1;
        const double vhat = v / bc2;
        p -= lr * mhat / (std::sqrt(vhat) + eps);
    }
};

AdamCore begin_adam(AdamState& state, std::size_t count, double lr, double beta1, double beta2,
                    double eps) {
    require_positive_lr(lr, "adam_step");
    if (state.step < 0) throw ConfigError("adam_step: negative step counter");
    if (state.m.size() != count || state.v.size() != count) {
        throw ShapeError("adam_step: state sized for " + std::to_string(state.m.size()) +
                         " params, got " + std::to_string(count));
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    return AdamCore{state, lr, beta1, beta2, eps, bc1, bc2};
}

}  // namespace

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
    if (params.size() != grads.size()) {
        throw ShapeError("adam_step: params/grads size mismatch");
    }
    require_finite_grads(grads, "adam_step");
    AdamCore core = begin_adam(state, params.size(), lr, beta1, beta2, eps);
    for (std::size_t i = 0; i < params.size(); ++i) core(params[i], grads[i]);
}

void adam_step(ExtractorParams& theta, ClassifierParams& phi, const NetGradients& grads,
               AdamState& state, double lr, double beta1, double beta2, double eps) {
    require_finite_net_grads(grads, "adam_step");
    const std::size_t count = param_count(theta) + param_count(phi);
    AdamCore core = begin_adam(state, count, lr, beta1, beta2, eps);
    visit_params(theta, phi, grads, core);
}

}  // namespace mdn
