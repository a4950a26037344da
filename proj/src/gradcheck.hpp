#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace scvfp {

// Central finite differences against reverse-mode gradients. The callable
// rebuilds the loss graph from the current values of the named leaf
// parameters on every invocation.

struct TensorGradError {
    std::string name;
    double max_rel_error = 0.0;
    size_t worst_element = 0;
    double autodiff = 0.0;
    double numeric = 0.0;
    size_t checked = 0;
    size_t skipped = 0;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_tensor;
    size_t worst_element = 0;
    double worst_autodiff = 0.0;
    double worst_numeric = 0.0;
    size_t checked = 0;
    size_t skipped = 0;
    std::vector<TensorGradError> per_tensor;
};

struct GradCheckOptions {
    double epsilon = 1e-5;
    // Consulted after every loss evaluation; returning true marks the
    // evaluation as sitting near a non-differentiable point (e.g. an |cos|
    // kink), and the element whose perturbation produced it is skipped.
    std::function<bool()> near_kink;
    // Test hook: corrupt the reverse-mode gradients before comparing.
    bool sabotage_backward = false;
};

GradCheckReport grad_check(const std::function<Tensor()>& loss_fn,
                           const std::vector<std::pair<std::string, Tensor>>& params,
                           const GradCheckOptions& options = {});

}  // namespace scvfp
