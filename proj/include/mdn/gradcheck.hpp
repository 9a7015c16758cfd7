#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace mdn {

struct GradCheckOptions {
    std::uint64_t seed = 1;
    std::size_t instances = 5;  // random instances per suite
    // Test hook: name of the one suite whose analytic gradient is deliberately
    // perturbed, to prove the checks can fail. Empty = no corruption.
    std::string corrupt;
};

struct SuiteResult {
    std::string name;
    std::size_t instances = 0;
    double max_rel_err = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

// Every finite-difference verification suite, in reporting order:
//   ce-logits      d(mean CE)/d(logits)
//   msl-logits     d(mean margin-shifted loss)/d(logits)
//   msl-margins    d(mean margin-shifted loss)/d(margin table)
//   mel-logits     d(equalized loss)/d(logits), away from |gap| kinks
//   backward-params  full network backprop, d(mean CE)/d(all parameters)
//   mel-classifier d(equalized loss)/d(classifier parameters)
//   meta-margins   the second-order margin update direction vs the derivative
//                  of margins -> pseudo-stepped classifier -> equalized loss
std::vector<std::string> gradcheck_suite_names();

// Runs every suite on `instances` random instances each and reports the worst
// relative error per suite. Deterministic given options.
std::vector<SuiteResult> run_gradient_checks(const GradCheckOptions& options);

}  // namespace mdn
