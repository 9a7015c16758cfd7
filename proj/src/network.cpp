#include "mdn/network.hpp"

#include <cmath>
#include <cstring>

#include "mdn/errors.hpp"

namespace mdn {

Activation activation_from_string(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "identity") return Activation::identity;
    throw ConfigError("unknown activation '" + name + "' (relu, tanh, identity)");
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::identity: return "identity";
    }
    return "?";
}

void validate(const ExtractorParams& theta) {
    if (theta.layers.empty()) throw ShapeError("extractor has no layers");
    for (std::size_t k = 0; k < theta.layers.size(); ++k) {
        const DenseLayer& layer = theta.layers[k];
        if (layer.bias.size() != layer.weight.rows) {
            throw ShapeError("extractor layer " + std::to_string(k) + ": bias length " +
                             std::to_string(layer.bias.size()) + " vs " +
                             std::to_string(layer.weight.rows) + " rows");
        }
        if (k > 0 && layer.weight.cols != theta.layers[k - 1].weight.rows) {
            throw ShapeError("extractor layer " + std::to_string(k) + ": in-dim " +
                             std::to_string(layer.weight.cols) + " does not chain with layer " +
                             std::to_string(k - 1) + " out-dim " +
                             std::to_string(theta.layers[k - 1].weight.rows));
        }
    }
}

void validate_pair(const ExtractorParams& theta, const ClassifierParams& phi) {
    validate(theta);
    if (phi.weight.cols != theta.feature_dim()) {
        throw ShapeError("classifier in-dim " + std::to_string(phi.weight.cols) +
                         " vs feature dim " + std::to_string(theta.feature_dim()));
    }
    if (phi.bias.size() != phi.weight.rows) {
        throw ShapeError("classifier bias length " + std::to_string(phi.bias.size()) +
                         " vs " + std::to_string(phi.weight.rows) + " classes");
    }
}

namespace {

void apply_activation(DenseMatrix& m, Activation act) {
    switch (act) {
        case Activation::relu:
            for (double& x : m.data) x = x > 0.0 ? x : 0.0;
            break;
        case Activation::tanh:
            for (double& x : m.data) x = std::tanh(x);
            break;
        case Activation::identity:
            break;
    }
}

// Derivative through the stored pre-activation / activation values.
// relu' at exactly 0 is taken as 0.
double activation_grad(Activation act, double pre, double post) {
    switch (act) {
        case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
        case Activation::tanh: return 1.0 - post * post;
        case Activation::identity: return 1.0;
    }
    return 0.0;
}

}  // namespace

ForwardCache forward(const ExtractorParams& theta, const ClassifierParams& phi,
                     const DenseMatrix& x) {
    validate_pair(theta, phi);
    if (x.cols != theta.input_dim()) {
        throw ShapeError("forward: input has " + std::to_string(x.cols) +
                         " columns, extractor layer 0 expects " +
                         std::to_string(theta.input_dim()));
    }

    ForwardCache cache;
    cache.input = x;
    cache.pre.reserve(theta.layers.size());
    cache.activations.reserve(theta.layers.size());

    const DenseMatrix* h = &cache.input;
    for (const DenseLayer& layer : theta.layers) {
        DenseMatrix z = matmul_nt(*h, layer.weight);
        add_row_vector(z, layer.bias);
        cache.pre.push_back(z);
        apply_activation(z, theta.activation);
        cache.activations.push_back(std::move(z));
        h = &cache.activations.back();
    }
    cache.features = cache.activations.back();
    cache.logits = matmul_nt(cache.features, phi.weight);
    add_row_vector(cache.logits, phi.bias);
    return cache;
}

NetGradients backward(const ForwardCache& cache, const ExtractorParams& theta,
                      const ClassifierParams& phi, const DenseMatrix& dl_dlogits,
                      Reduction reduction) {
    if (!dl_dlogits.same_shape(cache.logits)) {
        throw ShapeError("backward: upstream gradient " + std::to_string(dl_dlogits.rows) +
                         "x" + std::to_string(dl_dlogits.cols) + " vs logits " +
                         std::to_string(cache.logits.rows) + "x" +
                         std::to_string(cache.logits.cols));
    }
    const std::size_t n = cache.batch_size();
    const double s = reduction == Reduction::mean ? 1.0 / static_cast<double>(n) : 1.0;

    NetGradients g;
    g.cls.weight = matmul_tn(dl_dlogits, cache.features);
    scale(g.cls.weight, s);
    g.cls.bias = column_sums(dl_dlogits);
    for (double& v : g.cls.bias) v *= s;

    DenseMatrix dh = matmul(dl_dlogits, phi.weight);  // n x d
    g.ext.layers.resize(theta.layers.size());
    for (std::size_t k = theta.layers.size(); k-- > 0;) {
        const DenseMatrix& pre = cache.pre[k];
        const DenseMatrix& post = cache.activations[k];
        DenseMatrix dpre = dh;
        for (std::size_t i = 0; i < dpre.data.size(); ++i) {
            dpre.data[i] *= activation_grad(theta.activation, pre.data[i], post.data[i]);
        }
        const DenseMatrix& below = k == 0 ? cache.input : cache.activations[k - 1];
        g.ext.layers[k].weight = matmul_tn(dpre, below);
        scale(g.ext.layers[k].weight, s);
        g.ext.layers[k].bias = column_sums(dpre);
        for (double& v : g.ext.layers[k].bias) v *= s;
        if (k > 0) dh = matmul(dpre, theta.layers[k].weight);
    }
    g.ext.activation = theta.activation;
    return g;
}

ClassifierParams classifier_gradients(const ForwardCache& cache,
                                      const DenseMatrix& dl_dlogits, Reduction reduction) {
    if (!dl_dlogits.same_shape(cache.logits)) {
        throw ShapeError("classifier_gradients: upstream shape mismatch");
    }
    const double s =
        reduction == Reduction::mean ? 1.0 / static_cast<double>(cache.batch_size()) : 1.0;
    ClassifierParams g;
    g.weight = matmul_tn(dl_dlogits, cache.features);
    scale(g.weight, s);
    g.bias = column_sums(dl_dlogits);
    for (double& v : g.bias) v *= s;
    return g;
}

ExtractorParams make_extractor(const std::vector<std::size_t>& dims, Activation act, Rng& rng) {
    if (dims.size() < 2) throw ConfigError("extractor needs at least input and feature dims");
    ExtractorParams theta;
    theta.activation = act;
    for (std::size_t k = 1; k < dims.size(); ++k) {
        DenseLayer layer;
        layer.weight = DenseMatrix(dims[k], dims[k - 1]);
        const double s = std::sqrt(6.0 / static_cast<double>(dims[k] + dims[k - 1]));
        for (double& w : layer.weight.data) w = rng.uniform(-s, s);
        layer.bias.assign(dims[k], 0.0);
        theta.layers.push_back(std::move(layer));
    }
    return theta;
}

ClassifierParams make_classifier(std::size_t num_classes, std::size_t feature_dim, Rng& rng) {
    if (num_classes < 2) throw ConfigError("classifier needs at least 2 classes");
    if (feature_dim < 1) throw ConfigError("classifier needs feature dim >= 1");
    ClassifierParams phi;
    phi.weight = DenseMatrix(num_classes, feature_dim);
    const double s = std::sqrt(6.0 / static_cast<double>(num_classes + feature_dim));
    for (double& w : phi.weight.data) w = rng.uniform(-s, s);
    phi.bias.assign(num_classes, 0.0);
    return phi;
}

std::size_t param_count(const ExtractorParams& theta) {
    std::size_t n = 0;
    for (const DenseLayer& layer : theta.layers) n += layer.weight.size() + layer.bias.size();
    return n;
}

std::size_t param_count(const ClassifierParams& phi) {
    return phi.weight.size() + phi.bias.size();
}

std::vector<double> flatten(const ExtractorParams& theta) {
    std::vector<double> flat;
    flat.reserve(param_count(theta));
    for (const DenseLayer& layer : theta.layers) {
        flat.insert(flat.end(), layer.weight.data.begin(), layer.weight.data.end());
        flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
    }
    return flat;
}

std::vector<double> flatten(const ClassifierParams& phi) {
    std::vector<double> flat;
    flat.reserve(param_count(phi));
    flat.insert(flat.end(), phi.weight.data.begin(), phi.weight.data.end());
    flat.insert(flat.end(), phi.bias.begin(), phi.bias.end());
    return flat;
}

void unflatten(std::span<const double> flat, ExtractorParams& theta) {
    if (flat.size() != param_count(theta)) {
        throw ShapeError("unflatten: extractor expects " + std::to_string(param_count(theta)) +
                         " values, got " + std::to_string(flat.size()));
    }
    std::size_t off = 0;
    for (DenseLayer& layer : theta.layers) {
        std::memcpy(layer.weight.data.data(), flat.data() + off,
                    layer.weight.size() * sizeof(double));
        off += layer.weight.size();
        std::memcpy(layer.bias.data(), flat.data() + off, layer.bias.size() * sizeof(double));
        off += layer.bias.size();
    }
}

void unflatten(std::span<const double> flat, ClassifierParams& phi) {
    if (flat.size() != param_count(phi)) {
        throw ShapeError("unflatten: classifier expects " + std::to_string(param_count(phi)) +
                         " values, got " + std::to_string(flat.size()));
    }
    std::memcpy(phi.weight.data.data(), flat.data(), phi.weight.size() * sizeof(double));
    std::memcpy(phi.bias.data(), flat.data() + phi.weight.size(),
                phi.bias.size() * sizeof(double));
}

}  // namespace mdn
