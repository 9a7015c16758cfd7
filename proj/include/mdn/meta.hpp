#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mdn/batch.hpp"
#include "mdn/data.hpp"
#include "mdn/losses.hpp"
#include "mdn/metrics.hpp"
#include "mdn/network.hpp"
#include "mdn/optim.hpp"

namespace mdn {

enum class TrainMode { vanilla, resample, mdn, mdn_no_mel, mdn_no_msl };
enum class OptimizerKind { sgd, adam };

TrainMode train_mode_from_string(const std::string& name);
std::string to_string(TrainMode mode);
OptimizerKind optimizer_from_string(const std::string& name);
std::string to_string(OptimizerKind kind);

struct TrainConfig {
    double alpha = 0.1;   // model step size: the pseudo step and the sgd final step
    double beta = 5e-3;   // margin step size
    std::size_t batch_size = 128;
    std::size_t meta_per_group = 4;  // meta batch rows per (y, b) cell
    std::size_t epochs = 5;
    std::uint64_t seed = 1;
    TrainMode mode = TrainMode::mdn;
    OptimizerKind optimizer = OptimizerKind::sgd;  // final update only
    std::vector<std::size_t> hidden = {100, 100};
    Activation activation = Activation::relu;
};

// Startup validation: config invariants plus, for every mode that balances
// batches over (y, b) cells, full group coverage of the train split.
void validate(const TrainConfig& cfg, const DataBundle& bundle);

struct IterationRecord {
    std::size_t iter = 0;       // 1-based, global across epochs
    double msl = 0.0;           // model objective value at this step's margins
    std::optional<double> mel;  // meta objective value; absent for non-meta modes
    DenseMatrix margins;        // post-step snapshot, C x B
};

struct TrainState {
    ExtractorParams ext;
    ClassifierParams cls;
    MarginTable margins;
    std::size_t t = 0;  // completed iterations
    double alpha = 0.1;
    OptimizerKind optimizer = OptimizerKind::sgd;
    AdamState adam;  // engaged only when optimizer == adam
    std::vector<IterationRecord> history;
};

// The pseudo step's retained context: shifted softmax and features at the
// pre-update parameters (theta^t, phi^t, m^t), plus the batch labels.
struct PseudoCache {
    ForwardCache fwd;
    SoftmaxResult soft;
    std::vector<int> y, b;
};

// Forward + shifted softmax of one batch at the state's current parameters.
PseudoCache make_cache(const TrainState& state, const LabeledBatch& batch);

struct PseudoResult {
    ExtractorParams ext_hat;
    ClassifierParams cls_hat;
    PseudoCache cache;
};

// One plain-SGD step of the model objective on copies of the parameters;
// the state itself is never mutated.
PseudoResult pseudo_update(const TrainState& state, const LabeledBatch& batch);

// Closed-form margin meta-gradient G: with a_j = meta_grad_phi.weight.row(j)
// . f_i + meta_grad_phi.bias[j] per sample, G(k, b) = (1/n) sum over samples
// with b_i = b of p_k * (<p, a> - a_k), all quantities at the pre-update
// parameters held by the cache. The margin ascent step is m += alpha*beta*G.
DenseMatrix margin_meta_gradient(const PseudoCache& cache,
                                 const ClassifierParams& meta_grad_phi,
                                 std::size_t num_bias);

// m + alpha*beta*G, validated finite. beta = 0 leaves every entry bit-identical.
MarginTable margin_step(const MarginTable& margins, const DenseMatrix& meta_grad,
                        double alpha, double beta);

// Real parameter update with the configured optimizer, using the model-loss
// gradient at (theta^t, phi^t, new_margins) recomputed from the cache's
// forward pass. Adopts new_margins, increments t, appends the history record.
// Returns the recorded model objective value.
double final_update(TrainState& state, const PseudoCache& cache,
                    const MarginTable& new_margins, std::optional<double> mel_value);

// Argmax predictions (ties -> lowest class index) over one split.
PredictionLog predict(const ExtractorParams& ext, const ClassifierParams& cls,
                      const LabeledBatch& split);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    MetricsReport val, test;
    DenseMatrix margins;     // end-of-epoch snapshot
    PredictionLog test_log;  // predictions behind `test`
};

struct TrainResult {
    TrainState state;
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;      // 1-based; argmax val unbiased acc, first wins
    MetricsReport best_test;         // the reported metrics
    DenseMatrix best_margins;        // margins at the best epoch
    PredictionLog best_test_log;
};

using EpochObserver = std::function<void(const EpochRecord&)>;
using IterationObserver = std::function<void(const IterationRecord&)>;

// Runs the full loop: per iteration, sample a train batch, run the mode's
// update, and record history; per epoch, evaluate val + test and track the
// best-validation epoch. Iterations per epoch = ceil(n_train / batch_size).
TrainResult train(const TrainConfig& cfg, const DataBundle& bundle,
                  const EpochObserver& on_epoch = {},
                  const IterationObserver& on_iteration = {});

}  // namespace mdn
