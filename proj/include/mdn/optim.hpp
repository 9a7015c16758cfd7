#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mdn/network.hpp"

namespace mdn {

// p <- p - lr * g. Requires lr > 0 and finite gradients; a non-finite gradient
// aborts the step before any parameter is touched.
void sgd_step(std::span<double> params, std::span<const double> grads, double lr);
void sgd_step(ExtractorParams& theta, ClassifierParams& phi, const NetGradients& grads,
              double lr);

struct AdamState {
    std::vector<double> m;  // first moment
    std::vector<double> v;  // second moment
    long step = 0;
};

AdamState make_adam_state(std::size_t param_count);

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
void adam_step(ExtractorParams& theta, ClassifierParams& phi, const NetGradients& grads,
               AdamState& state, double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

}  // namespace mdn
