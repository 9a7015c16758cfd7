#include "mdn/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mdn/errors.hpp"

namespace mdn {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "': cannot parse '" + value +
                          "' as a number");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        if (!value.empty() && value[0] == '-') throw std::invalid_argument("negative");
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing characters");
        return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "': cannot parse '" + value +
                          "' as a non-negative integer");
    }
}

std::size_t parse_size(const std::string& key, const std::string& value) {
    return static_cast<std::size_t>(parse_u64(key, value));
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) {
            throw ConfigError("config: key '" + key + "': empty element in list '" + value +
                              "'");
        }
        out.push_back(parse_size(key, item));
    }
    if (out.empty()) {
        throw ConfigError("config: key '" + key + "': expected a comma-separated list");
    }
    return out;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void apply_key_value(ExperimentSpec& spec, const std::string& key, const std::string& value) {
    if (key == "dataset.kind") {
        spec.dataset.kind = dataset_kind_from_string(value);
    } else if (key == "dataset.classes") {
        spec.dataset.num_classes = parse_size(key, value);
    } else if (key == "dataset.bias") {
        spec.dataset.num_bias = parse_size(key, value);
    } else if (key == "dataset.rho") {
        spec.dataset.rho = parse_double(key, value);
    } else if (key == "dataset.n_train") {
        spec.dataset.n_train = parse_size(key, value);
    } else if (key == "dataset.n_test") {
        spec.dataset.n_test = parse_size(key, value);
    } else if (key == "dataset.noise") {
        spec.dataset.noise = parse_double(key, value);
    } else if (key == "dataset.idx_images") {
        spec.dataset.idx_images = value;
    } else if (key == "dataset.idx_labels") {
        spec.dataset.idx_labels = value;
    } else if (key == "dataset.bundle") {
        spec.bundle_path = value;
    } else if (key == "train.alpha") {
        spec.train.alpha = parse_double(key, value);
    } else if (key == "train.beta") {
        spec.train.beta = parse_double(key, value);
    } else if (key == "train.batch_size") {
        spec.train.batch_size = parse_size(key, value);
    } else if (key == "train.meta_per_group") {
        spec.train.meta_per_group = parse_size(key, value);
    } else if (key == "train.epochs") {
        spec.train.epochs = parse_size(key, value);
    } else if (key == "train.mode") {
        spec.train.mode = train_mode_from_string(value);
    } else if (key == "train.optimizer") {
        spec.train.optimizer = optimizer_from_string(value);
    } else if (key == "train.hidden") {
        spec.train.hidden = parse_size_list(key, value);
    } else if (key == "train.activation") {
        spec.train.activation = activation_from_string(value);
    } else if (key == "run.seed") {
        spec.seed = parse_u64(key, value);
    } else if (key == "run.reps") {
        spec.reps = parse_size(key, value);
    } else if (key == "run.output") {
        spec.output = value;
    } else {
        throw ConfigError("config: unknown key '" + key + "'");
    }
}

void apply_config_text(ExperimentSpec& spec, const std::string& text,
                       const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: " + origin + ":" + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config: " + origin + ":" + std::to_string(lineno) +
                              ": empty key");
        }
        apply_key_value(spec, key, value);
    }
}

void apply_config_file(ExperimentSpec& spec, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << f.rdbuf();
    apply_config_text(spec, buf.str(), path);
}

ExperimentSpec parse_spec(const std::vector<std::string>& config_files,
                          const std::vector<std::string>& overrides) {
    ExperimentSpec spec;
    for (const std::string& path : config_files) apply_config_file(spec, path);
    for (const std::string& kv : overrides) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: override '" + kv + "' is not of the form key=value");
        }
        apply_key_value(spec, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    }
    return spec;
}

std::string serialize_spec(const ExperimentSpec& spec) {
    std::ostringstream out;
    out << "dataset.kind = " << to_string(spec.dataset.kind) << '\n';
    out << "dataset.classes = " << spec.dataset.num_classes << '\n';
    out << "dataset.bias = " << spec.dataset.num_bias << '\n';
    out << "dataset.rho = " << fmt_double(spec.dataset.rho) << '\n';
    out << "dataset.n_train = " << spec.dataset.n_train << '\n';
    out << "dataset.n_test = " << spec.dataset.n_test << '\n';
    out << "dataset.noise = " << fmt_double(spec.dataset.noise) << '\n';
    if (!spec.dataset.idx_images.empty()) {
        out << "dataset.idx_images = " << spec.dataset.idx_images << '\n';
    }
    if (!spec.dataset.idx_labels.empty()) {
        out << "dataset.idx_labels = " << spec.dataset.idx_labels << '\n';
    }
    if (!spec.bundle_path.empty()) out << "dataset.bundle = " << spec.bundle_path << '\n';
    out << "train.alpha = " << fmt_double(spec.train.alpha) << '\n';
    out << "train.beta = " << fmt_double(spec.train.beta) << '\n';
    out << "train.batch_size = " << spec.train.batch_size << '\n';
    out << "train.meta_per_group = " << spec.train.meta_per_group << '\n';
    out << "train.epochs = " << spec.train.epochs << '\n';
    out << "train.mode = " << to_string(spec.train.mode) << '\n';
    out << "train.optimizer = " << to_string(spec.train.optimizer) << '\n';
    out << "train.hidden = ";
    for (std::size_t i = 0; i < spec.train.hidden.size(); ++i) {
        if (i) out << ',';
        out << spec.train.hidden[i];
    }
    out << '\n';
    out << "train.activation = " << to_string(spec.train.activation) << '\n';
    out << "run.seed = " << spec.seed << '\n';
    out << "run.reps = " << spec.reps << '\n';
    out << "run.output = " << spec.output << '\n';
    return out.str();
}

void validate(const ExperimentSpec& spec) {
    if (spec.reps < 1) throw ConfigError("config: run.reps must be >= 1");
    if (spec.output.empty()) throw ConfigError("config: run.output must be set");
    if (spec.bundle_path.empty()) validate(spec.dataset);
}

}  // namespace mdn
