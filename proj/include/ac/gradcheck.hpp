#pragma once
// Central finite-difference verification of reverse-mode gradients.
// Meant for the 64-bit mode; float gives meaningless comparisons at eps=1e-4.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "ac/autodiff.hpp"

namespace ac {

// Relative error with a unit floor, so near-zero coordinates compare
// absolutely: |a-b| / max(1, |a|, |b|).
inline double rel_error(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// f must return a scalar VarT<double> recomputed from the leaves each call.
// Compares the reverse-mode gradient of every coordinate of every leaf
// against (f(x+eps) - f(x-eps)) / 2eps and returns the max rel_error.
inline double grad_check(const std::function<VarT<double>()>& f,
                         const std::vector<VarT<double>*>& leaves, double eps = 1e-4) {
    VarT<double> loss = f();
    if (loss.val().numel() != 1)
        throw std::invalid_argument("grad_check: function must be scalar-valued, got " +
                                    loss.shape().str());
    for (auto* leaf : leaves) leaf->zero_grad();
    backward(loss);

    std::vector<ArrayT<double>> analytic;
    analytic.reserve(leaves.size());
    for (auto* leaf : leaves)
        analytic.push_back(leaf->grad().numel() ? leaf->grad()
                                                : ArrayT<double>(leaf->shape(), 0.0));

    double worst = 0.0;
    NoGradGuard ng;
    for (std::size_t li = 0; li < leaves.size(); ++li) {
        auto& x = leaves[li]->val();
        for (std::int64_t i = 0; i < x.numel(); ++i) {
            const double orig = x[i];
            x[i] = orig + eps;
            const double fp = f().val()[0];
            x[i] = orig - eps;
            const double fm = f().val()[0];
            x[i] = orig;
            const double fd = (fp - fm) / (2.0 * eps);
            worst = std::max(worst, rel_error(analytic[li][i], fd));
        }
    }
    return worst;
}

// Single-tensor convenience form.
inline double grad_check(const std::function<VarT<double>(const VarT<double>&)>& f,
                         ArrayT<double> x, double eps = 1e-4) {
    VarT<double> leaf(std::move(x), true);
    return grad_check([&] { return f(leaf); }, {&leaf}, eps);
}

}  // namespace ac
