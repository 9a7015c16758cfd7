#include "mdn/finite_diff.hpp"

#include <cmath>
#include <string>

#include "mdn/errors.hpp"

namespace mdn {

std::vector<double> finite_diff(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> at, double step) {
    if (!(step > 0.0)) {
        throw ConfigError("finite_diff: step must be > 0");
    }
    std::vector<double> x(at.begin(), at.end());
    std::vector<double> grad(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + step;
        const double up = f(x);
        x[i] = orig - step;
        const double down = f(x);
        x[i] = orig;
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw NumericError("finite_diff: non-finite loss at coordinate " +
                               std::to_string(i));
        }
        grad[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

double relative_error(std::span<const double> a, std::span<const double> b,
                      double scale_floor) {
    if (a.size() != b.size()) {
        throw ShapeError("relative_error: length mismatch");
    }
    double diff = 0.0, scale = scale_floor;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff = std::max(diff, std::abs(a[i] - b[i]));
        scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
    }
    return diff / scale;
}

}  // namespace mdn
