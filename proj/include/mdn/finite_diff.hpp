#pragma once

#include <functional>
#include <span>
#include <vector>

namespace mdn {

// Central-difference gradient estimate of a deterministic scalar function:
// (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate. The verification oracle
// behind every gradient test in the project.
std::vector<double> finite_diff(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> at, double step);

// max_i |a_i - b_i| / max(scale_floor, max_i |a_i|, max_i |b_i|)
double relative_error(std::span<const double> a, std::span<const double> b,
                      double scale_floor = 1e-8);

}  // namespace mdn
