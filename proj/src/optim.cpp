#include "ran/optim.hpp"

#include <cmath>
#include <utility>

#include "ran/kernels.hpp"

namespace ran {

SgdMomentum::SgdMomentum(std::vector<Parameter*> params, double lr,
                         double momentum)
    : params_(std::move(params)), lr_(lr), momentum_(momentum) {
    velocity_.reserve(params_.size());
    for (const Parameter* p : params_) velocity_.emplace_back(p->size(), 0.0);
}

void SgdMomentum::step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Parameter& p = *params_[i];
        if (!all_finite(p.grad))
            throw NumericError("sgd_step: non-finite gradient in parameter '" +
                               p.name + "'");
        Vec& v = velocity_[i];
        if (momentum_ == 0.0) {
            kernels::axpy(-lr_, p.grad.data(), p.value.data(), p.size());
        } else {
            kernels::scale(momentum_, v.data(), v.size());
            kernels::axpy(1.0, p.grad.data(), v.data(), v.size());
            kernels::axpy(-lr_, v.data(), p.value.data(), p.size());
        }
    }
}

void SgdMomentum::zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
}

std::vector<Vec> finite_diff_grad(const std::function<double()>& loss_fn,
                                  const std::vector<Parameter*>& params,
                                  double epsilon) {
    std::vector<Vec> grads;
    grads.reserve(params.size());
    for (Parameter* p : params) {
        Vec g(p->size());
        for (std::size_t i = 0; i < p->size(); ++i) {
            const double saved = p->value[i];
            p->value[i] = saved + epsilon;
            const double up = loss_fn();
            p->value[i] = saved - epsilon;
            const double down = loss_fn();
            p->value[i] = saved;
            g[i] = (up - down) / (2.0 * epsilon);
        }
        grads.push_back(std::move(g));
    }
    return grads;
}

GradCheckResult grad_check(const std::function<double()>& loss_fn,
                           const std::function<void()>& backward_fn,
                           const std::vector<Parameter*>& params,
                           double epsilon, double rel_tol, double abs_tol) {
    for (Parameter* p : params) p->zero_grad();
    backward_fn();

    const auto numeric = finite_diff_grad(loss_fn, params, epsilon);

    GradCheckResult res;
    constexpr double kSmallGrad = 1e-3;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        const Parameter& p = *params[pi];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double a = p.grad[i];
            const double n = numeric[pi][i];
            const double abs_err = std::fabs(a - n);
            if (std::fabs(n) < kSmallGrad && std::fabs(a) < kSmallGrad) {
                if (abs_err > res.max_abs_err) {
                    res.max_abs_err = abs_err;
                    if (abs_err > abs_tol) res.worst_param = p.name;
                }
            } else {
                const double rel = abs_err / std::max(std::fabs(a), std::fabs(n));
                if (rel > res.max_rel_err) {
                    res.max_rel_err = rel;
                    res.worst_param = p.name;
                }
            }
        }
    }
    res.ok = res.max_rel_err < rel_tol && res.max_abs_err < abs_tol;
    return res;
}

}  // namespace ran
