#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace scvfp {

GradCheckReport grad_check(const std::function<Tensor()>& loss_fn,
                           const std::vector<std::pair<std::string, Tensor>>& params,
                           const GradCheckOptions& options) {
    const double eps = options.epsilon;

    // Reverse-mode gradients at the base point.
    for (const auto& [name, p] : params) {
        Tensor t = p;
        t.zero_grad();
    }
    Tensor base_loss = loss_fn();
    const bool base_kinked = options.near_kink && options.near_kink();
    backward(base_loss);

    std::vector<std::vector<double>> autodiff;
    autodiff.reserve(params.size());
    for (const auto& [name, p] : params) {
        autodiff.emplace_back(p.grad().begin(), p.grad().end());
        if (autodiff.back().empty()) autodiff.back().assign(p.numel(), 0.0);
    }
    if (options.sabotage_backward && !autodiff.empty() && !autodiff.front().empty())
        autodiff.front().front() += 0.5;

    GradCheckReport report;
    NoGradGuard no_grad;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Tensor p = params[pi].second;
        TensorGradError entry;
        entry.name = params[pi].first;
        auto vals = p.mutable_values();
        for (size_t ei = 0; ei < vals.size(); ++ei) {
            const double saved = vals[ei];
            vals[ei] = saved + eps;
            const double plus = loss_fn().item();
            const bool plus_kinked = options.near_kink && options.near_kink();
            vals[ei] = saved - eps;
            const double minus = loss_fn().item();
            const bool minus_kinked = options.near_kink && options.near_kink();
            vals[ei] = saved;
            if (base_kinked || plus_kinked || minus_kinked) {
                ++entry.skipped;
                ++report.skipped;
                continue;
            }
            const double numeric = (plus - minus) / (2.0 * eps);
            const double ad = autodiff[pi][ei];
            const double denom = std::max({std::abs(ad), std::abs(numeric), 1e-8});
            const double rel = std::abs(ad - numeric) / denom;
            ++entry.checked;
            ++report.checked;
            if (rel > entry.max_rel_error) {
                entry.max_rel_error = rel;
                entry.worst_element = ei;
                entry.autodiff = ad;
                entry.numeric = numeric;
            }
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_tensor = entry.name;
                report.worst_element = ei;
                report.worst_autodiff = ad;
                report.worst_numeric = numeric;
            }
        }
        report.per_tensor.push_back(std::move(entry));
    }
    return report;
}

}  // namespace scvfp
