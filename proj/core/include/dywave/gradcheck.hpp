#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "dywave/autodiff.hpp"
#include "dywave/tensor.hpp"

namespace dywave::gradcheck {

// Builds the graph with `fn`, runs backward, then re-evaluates the scalar at
// x±h per coordinate and compares central differences against the analytic
// gradient. Inputs are rebuilt as fresh leaves on every evaluation so cached
// forward state cannot leak between probes.
//
// rel err = |g_ad - g_fd| / max(1, |g_ad|, |g_fd|)
struct Result {
    double max_rel_err = 0.0;
    std::size_t checked = 0;
};

inline Result check(const std::function<Var(const std::vector<Var>&)>& fn,
                    std::vector<Tensor> inputs, double h = 1e-5,
                    std::size_t max_coords_per_input = static_cast<std::size_t>(-1)) {
    std::vector<Var> leaves;
    leaves.reserve(inputs.size());
    for (const auto& t : inputs) leaves.push_back(Var::param(t));
    Var loss = fn(leaves);
    backward(loss);

    auto eval = [&](const std::vector<Tensor>& xs) {
        std::vector<Var> ls;
        ls.reserve(xs.size());
        for (const auto& t : xs) ls.push_back(Var::constant(t));
        return fn(ls).value()[0];
    };

    Result res;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        std::size_t n = inputs[i].numel();
        // deterministic stride-based subsampling for large tensors
        std::size_t step = 1;
        if (n > max_coords_per_input) step = (n + max_coords_per_input - 1) / max_coords_per_input;
        for (std::size_t j = 0; j < n; j += step) {
            double orig = inputs[i][j];
            inputs[i][j] = orig + h;
            double fp = eval(inputs);
            inputs[i][j] = orig - h;
            double fm = eval(inputs);
            inputs[i][j] = orig;
            double g_fd = (fp - fm) / (2.0 * h);
            double g_ad = leaves[i].has_grad() ? leaves[i].grad()[j] : 0.0;
            double denom = std::max({1.0, std::abs(g_ad), std::abs(g_fd)});
            double rel = std::abs(g_ad - g_fd) / denom;
            if (rel > res.max_rel_err) res.max_rel_err = rel;
            ++res.checked;
        }
    }
    return res;
}

} // namespace dywave::gradcheck
