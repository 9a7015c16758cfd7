#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mdn/matrix.hpp"
#include "mdn/rng.hpp"

namespace mdn {

enum class Activation { relu, tanh, identity };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation a);

struct DenseLayer {
    DenseMatrix weight;        // d_out x d_in
    std::vector<double> bias;  // d_out
};

// Feature extractor: an MLP applied to flattened inputs. Adjacent layer
// dimensions must chain; the last out-dim is the feature dimension d.
struct ExtractorParams {
    std::vector<DenseLayer> layers;
    Activation activation = Activation::relu;

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().weight.cols; }
    std::size_t feature_dim() const { return layers.empty() ? 0 : layers.back().weight.rows; }
};

// Linear classifier on top of the extracted features.
struct ClassifierParams {
    DenseMatrix weight;        // C x d
    std::vector<double> bias;  // C

    std::size_t num_classes() const { return weight.rows; }
    std::size_t feature_dim() const { return weight.cols; }
};

// Everything backprop needs from one forward pass over a batch.
struct ForwardCache {
    DenseMatrix input;                       // n x d_in
    std::vector<DenseMatrix> pre;            // per layer, n x d_k
    std::vector<DenseMatrix> activations;    // per layer, n x d_k
    DenseMatrix features;                    // n x d
    DenseMatrix logits;                      // n x C

    std::size_t batch_size() const { return input.rows; }
};

struct NetGradients {
    ExtractorParams ext;   // same shapes as the extractor
    ClassifierParams cls;  // same shapes as the classifier
};

// How upstream logit gradients are reduced over the batch. `mean` treats the
// upstream as per-sample dL_i/dlogits and returns gradients of (1/n) sum L_i;
// `sum` treats the upstream as the exact gradient of a scalar already carrying
// any normalization.
enum class Reduction { mean, sum };

void validate(const ExtractorParams& theta);
void validate_pair(const ExtractorParams& theta, const ClassifierParams& phi);

ForwardCache forward(const ExtractorParams& theta, const ClassifierParams& phi,
                     const DenseMatrix& x);

NetGradients backward(const ForwardCache& cache, const ExtractorParams& theta,
                      const ClassifierParams& phi, const DenseMatrix& dl_dlogits,
                      Reduction reduction = Reduction::mean);

// Gradient of the classifier parameters only; the meta step needs nothing else.
ClassifierParams classifier_gradients(const ForwardCache& cache,
                                      const DenseMatrix& dl_dlogits,
                                      Reduction reduction = Reduction::mean);

// dims = {d_in, hidden..., d}. Weights ~ uniform(-s, s), s = sqrt(6/(fan_in+fan_out));
// biases start at zero.
ExtractorParams make_extractor(const std::vector<std::size_t>& dims, Activation act, Rng& rng);
ClassifierParams make_classifier(std::size_t num_classes, std::size_t feature_dim, Rng& rng);

// Flat views over parameters, used by the finite-difference harness and the
// optimizers. Order is fixed: extractor layers in order (weight then bias),
// then classifier weight, then classifier bias.
std::size_t param_count(const ExtractorParams& theta);
std::size_t param_count(const ClassifierParams& phi);
std::vector<double> flatten(const ExtractorParams& theta);
std::vector<double> flatten(const ClassifierParams& phi);
void unflatten(std::span<const double> flat, ExtractorParams& theta);
void unflatten(std::span<const double> flat, ClassifierParams& phi);

}  // namespace mdn
