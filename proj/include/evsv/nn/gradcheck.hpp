#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "evsv/core/tensor.hpp"

namespace evsv::nn {

// Central finite differences against analytic gradients. loss_fn must be a
// deterministic function of the current parameter values. Returns the
// maximum relative error over all parameter elements.
inline double grad_check(const std::function<double()>& loss_fn,
                         const std::vector<Tensor*>& params,
                         const std::vector<const Tensor*>& analytic,
                         double eps = 1e-4) {
    double max_rel = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& theta = *params[p];
        const Tensor& an = *analytic[p];
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double saved = theta[i];
            theta[i] = saved + eps;
            const double f_plus = loss_fn();
            theta[i] = saved - eps;
            const double f_minus = loss_fn();
            theta[i] = saved;
            const double fd = (f_plus - f_minus) / (2.0 * eps);
            const double denom = std::max(std::fabs(fd) + std::fabs(an[i]), 1e-8);
            const double rel = std::fabs(fd - an[i]) / denom;
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

}  // namespace evsv::nn
