#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "mdn/data.hpp"
#include "mdn/errors.hpp"
#include "mdn/gradcheck.hpp"
#include "mdn/groups.hpp"
#include "mdn/losses.hpp"
#include "mdn/meta.hpp"
#include "mdn/metrics.hpp"
#include "mdn/runner.hpp"

namespace py = pybind11;

namespace {

mdn::DenseMatrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                           const char* what) {
    if (a.ndim() != 2) {
        throw py::value_error(std::string(what) + " must be a 2-d float array");
    }
    mdn::DenseMatrix m(static_cast<std::size_t>(a.shape(0)),
                       static_cast<std::size_t>(a.shape(1)));
    std::memcpy(m.data.data(), a.data(), sizeof(double) * m.data.size());
    return m;
}

py::array_t<double> from_matrix(const mdn::DenseMatrix& m) {
    py::array_t<double> a({m.rows, m.cols});
    std::memcpy(a.mutable_data(), m.data.data(), sizeof(double) * m.data.size());
    return a;
}

std::vector<int> to_labels(const py::array_t<int, py::array::c_style | py::array::forcecast>& a,
                           const char* what) {
    if (a.ndim() != 1) throw py::value_error(std::string(what) + " must be a 1-d int array");
    return std::vector<int>(a.data(), a.data() + a.shape(0));
}

py::array_t<int> from_labels(const std::vector<int>& v) {
    py::array_t<int> a(static_cast<py::ssize_t>(v.size()));
    std::memcpy(a.mutable_data(), v.data(), sizeof(int) * v.size());
    return a;
}

// Group table from raw train counts, with the max-count-per-row alignment rule.
mdn::GroupTable table_from_counts(
    const py::array_t<long, py::array::c_style | py::array::forcecast>& counts) {
    if (counts.ndim() != 2) throw py::value_error("counts must be a 2-d int array");
    mdn::GroupTable g;
    g.num_classes = static_cast<std::size_t>(counts.shape(0));
    g.num_bias = static_cast<std::size_t>(counts.shape(1));
    g.counts.assign(counts.data(), counts.data() + counts.size());
    g.aligned.assign(g.counts.size(), 0);
    for (std::size_t y = 0; y < g.num_classes; ++y) {
        long best = 0;
        for (std::size_t b = 0; b < g.num_bias; ++b) {
            best = std::max(best, g.count(y, b));
        }
        for (std::size_t b = 0; b < g.num_bias; ++b) {
            g.aligned[y * g.num_bias + b] = g.count(y, b) == best ? 1 : 0;
        }
    }
    return g;
}

py::dict split_dict(const mdn::LabeledBatch& split) {
    py::dict d;
    d["x"] = from_matrix(split.x);
    d["y"] = from_labels(split.y);
    d["b"] = from_labels(split.b);
    return d;
}

mdn::DatasetConfig dataset_config(const std::string& kind, std::size_t classes,
                                  std::size_t bias, double rho, std::size_t n_train,
                                  std::size_t n_test, double noise, std::uint64_t seed) {
    mdn::DatasetConfig cfg;
    cfg.kind = mdn::dataset_kind_from_string(kind);
    cfg.num_classes = classes;
    cfg.num_bias = bias;
    cfg.rho = rho;
    cfg.n_train = n_train;
    cfg.n_test = n_test;
    cfg.noise = noise;
    cfg.seed = seed;
    return cfg;
}

py::dict bundle_dict(const mdn::DataBundle& bundle) {
    py::dict d;
    d["classes"] = bundle.num_classes;
    d["bias"] = bundle.num_bias;
    d["train"] = split_dict(bundle.train);
    d["val"] = split_dict(bundle.val);
    d["test"] = split_dict(bundle.test);
    py::array_t<long> counts({bundle.num_classes, bundle.num_bias});
    py::array_t<bool> aligned({bundle.num_classes, bundle.num_bias});
    std::memcpy(counts.mutable_data(), bundle.groups.counts.data(),
                sizeof(long) * bundle.groups.counts.size());
    for (std::size_t i = 0; i < bundle.groups.aligned.size(); ++i) {
        aligned.mutable_data()[i] = bundle.groups.aligned[i] != 0;
    }
    d["group_counts"] = counts;
    d["group_aligned"] = aligned;
    d["realized_correlation"] = mdn::realized_correlation(bundle);
    return d;
}

py::dict report_dict(const mdn::MetricsReport& r) {
    py::dict d;
    d["unbiased_acc"] = r.unbiased_acc;
    d["worst_group_acc"] = r.worst_group_acc;
    d["bias_conflict_acc"] =
        r.bias_conflict_acc ? py::object(py::float_(*r.bias_conflict_acc)) : py::none();
    d["eod"] = r.eod ? py::object(py::float_(*r.eod)) : py::none();
    d["per_group_acc"] = from_matrix(r.per_group_acc);
    return d;
}

}  // namespace

PYBIND11_MODULE(_mdnfair, m) {
    m.doc() = "Margin-based debiasing engine: group-margin softmax loss with "
              "meta-learned margins, biased synthetic datasets, and fairness metrics";
    m.attr("__version__") = mdn::kVersion;

    py::register_exception<mdn::Error>(m, "EngineError", PyExc_RuntimeError);

    m.def(
        "generate_dataset",
        [](const std::string& kind, std::size_t classes, std::size_t bias, double rho,
           std::size_t n_train, std::size_t n_test, double noise, std::uint64_t seed) {
            return bundle_dict(mdn::generate(
                dataset_config(kind, classes, bias, rho, n_train, n_test, noise, seed)));
        },
        py::arg("kind") = "blobs", py::arg("classes") = 2, py::arg("bias") = 2,
        py::arg("rho") = 0.99, py::arg("n_train") = 2000, py::arg("n_test") = 400,
        py::arg("noise") = 0.5, py::arg("seed") = 1,
        "Generate a biased dataset; returns splits, group counts and alignment");

    m.def(
        "ce_loss",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& logits,
           const py::array_t<int, py::array::c_style | py::array::forcecast>& y) {
            const auto r = mdn::ce_loss(to_matrix(logits, "logits"), to_labels(y, "y"));
            return py::make_tuple(r.mean, from_matrix(r.probs));
        },
        py::arg("logits"), py::arg("y"),
        "Mean cross-entropy; returns (loss, softmax probabilities)");

    m.def(
        "msl_loss",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& logits,
           const py::array_t<int, py::array::c_style | py::array::forcecast>& y,
           const py::array_t<int, py::array::c_style | py::array::forcecast>& b,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& margins) {
            mdn::MarginTable table;
            table.values = to_matrix(margins, "margins");
            const auto r = mdn::msl_loss(to_matrix(logits, "logits"), to_labels(y, "y"),
                                         to_labels(b, "b"), table);
            return py::make_tuple(r.mean, from_matrix(r.probs));
        },
        py::arg("logits"), py::arg("y"), py::arg("b"), py::arg("margins"),
        "Margin-shifted softmax loss; returns (loss, shifted softmax probabilities)");

    m.def(
        "msl_grad_margins",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& logits,
           const py::array_t<int, py::array::c_style | py::array::forcecast>& y,
           const py::array_t<int, py::array::c_style | py::array::forcecast>& b,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& margins) {
            mdn::MarginTable table;
            table.values = to_matrix(margins, "margins");
            const auto r = mdn::msl_loss(to_matrix(logits, "logits"), to_labels(y, "y"),
                                         to_labels(b, "b"), table);
            return from_matrix(mdn::msl_grad_margins(r, to_labels(y, "y"), to_labels(b, "b"),
                                                     table.num_bias()));
        },
        py::arg("logits"), py::arg("y"), py::arg("b"), py::arg("margins"),
        "Batch-mean gradient of the margin-shifted loss w.r.t. the margin table");

    m.def(
        "mel_loss",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& logits,
           const py::array_t<int, py::array::c_style | py::array::forcecast>& y,
           const py::array_t<int, py::array::c_style | py::array::forcecast>& b,
           const py::array_t<long, py::array::c_style | py::array::forcecast>& counts) {
            const mdn::GroupTable groups = table_from_counts(counts);
            const auto r = mdn::mel_loss(to_matrix(logits, "logits"), to_labels(y, "y"),
                                         to_labels(b, "b"), groups);
            return py::make_tuple(r.value, r.gaps);
        },
        py::arg("logits"), py::arg("y"), py::arg("b"), py::arg("counts"),
        "Equalized loss over (class, bias) groups; returns (value, per-class gaps)");

    m.def(
        "metrics",
        [](const py::array_t<int, py::array::c_style | py::array::forcecast>& y_true,
           const py::array_t<int, py::array::c_style | py::array::forcecast>& b,
           const py::array_t<int, py::array::c_style | py::array::forcecast>& y_pred,
           const py::array_t<long, py::array::c_style | py::array::forcecast>& counts) {
            mdn::PredictionLog log;
            log.y_true = to_labels(y_true, "y_true");
            log.b = to_labels(b, "b");
            log.y_pred = to_labels(y_pred, "y_pred");
            return report_dict(mdn::evaluate(log, table_from_counts(counts)));
        },
        py::arg("y_true"), py::arg("b"), py::arg("y_pred"), py::arg("counts"),
        "Per-group / unbiased / worst-group / bias-conflict accuracy and EOD");

    m.def(
        "run_gradient_checks",
        [](std::uint64_t seed, std::size_t instances) {
            mdn::GradCheckOptions opt;
            opt.seed = seed;
            opt.instances = instances;
            py::list out;
            for (const mdn::SuiteResult& r : mdn::run_gradient_checks(opt)) {
                py::dict d;
                d["name"] = r.name;
                d["max_rel_err"] = r.max_rel_err;
                d["threshold"] = r.threshold;
                d["pass"] = r.pass;
                out.append(std::move(d));
            }
            return out;
        },
        py::arg("seed") = 1, py::arg("instances") = 5,
        "Finite-difference verification of every analytic gradient");

    m.def(
        "train",
        [](const std::string& kind, std::size_t classes, std::size_t bias, double rho,
           std::size_t n_train, std::size_t n_test, double noise, const std::string& mode,
           double alpha, double beta, std::size_t batch_size, std::size_t meta_per_group,
           std::size_t epochs, const std::vector<std::size_t>& hidden,
           const std::string& activation, const std::string& optimizer,
           std::uint64_t seed) {
            const mdn::DataBundle bundle = mdn::generate(
                dataset_config(kind, classes, bias, rho, n_train, n_test, noise, seed));
            mdn::TrainConfig cfg;
            cfg.mode = mdn::train_mode_from_string(mode);
            cfg.alpha = alpha;
            cfg.beta = beta;
            cfg.batch_size = batch_size;
            cfg.meta_per_group = meta_per_group;
            cfg.epochs = epochs;
            cfg.hidden = hidden;
            cfg.activation = mdn::activation_from_string(activation);
            cfg.optimizer = mdn::optimizer_from_string(optimizer);
            cfg.seed = seed;
            const mdn::TrainResult result = mdn::train(cfg, bundle);
            py::dict d;
            d["best_epoch"] = result.best_epoch;
            d["test"] = report_dict(result.best_test);
            d["margins"] = from_matrix(result.best_margins);
            py::list epochs_out;
            for (const mdn::EpochRecord& e : result.epochs) {
                py::dict ed;
                ed["epoch"] = e.epoch;
                ed["val"] = report_dict(e.val);
                ed["test"] = report_dict(e.test);
                epochs_out.append(std::move(ed));
            }
            d["epochs"] = std::move(epochs_out);
            return d;
        },
        py::arg("kind") = "blobs", py::arg("classes") = 2, py::arg("bias") = 2,
        py::arg("rho") = 0.99, py::arg("n_train") = 2000, py::arg("n_test") = 400,
        py::arg("noise") = 0.5, py::arg("mode") = "mdn", py::arg("alpha") = 0.1,
        py::arg("beta") = 5e-3, py::arg("batch_size") = 128, py::arg("meta_per_group") = 4,
        py::arg("epochs") = 5, py::arg("hidden") = std::vector<std::size_t>{100, 100},
        py::arg("activation") = "relu", py::arg("optimizer") = "sgd", py::arg("seed") = 1,
        "Generate a dataset and train one mode end to end; returns the best-epoch report");
}
