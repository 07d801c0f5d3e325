#pragma once

// SGD with classical momentum, the central-difference gradient oracle, and
// the gradient check that compares the two.

#include <functional>
#include <vector>

#include "ran/tensor.hpp"

namespace ran {

// v <- momentum * v + grad;  value <- value - lr * v.
// With momentum 0 this is exactly vanilla gradient descent.
class SgdMomentum {
  public:
    explicit SgdMomentum(std::vector<Parameter*> params, double lr,
                         double momentum = 0.9);

    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

    // Applies one update from the accumulated gradients. Throws NumericError
    // (naming the parameter) if any gradient entry is non-finite.
    void step();

    void zero_grad();

  private:
    std::vector<Parameter*> params_;
    std::vector<Vec> velocity_;
    double lr_;
    double momentum_;
};

// Central differences (f(p+eps) - f(p-eps)) / (2 eps) per scalar entry.
// loss_fn must be deterministic; parameter values are restored on return.
std::vector<Vec> finite_diff_grad(const std::function<double()>& loss_fn,
                                  const std::vector<Parameter*>& params,
                                  double epsilon = 1e-5);

struct GradCheckResult {
    double max_rel_err = 0.0;   // over entries with |numeric| >= abs_floor
    double max_abs_err = 0.0;   // over entries with |numeric| < abs_floor
    std::string worst_param;
    bool ok = false;
};

// Compares accumulated analytic gradients in params against the finite
// difference oracle. Entries with |numeric grad| < 1e-3 are held to an
// absolute tolerance instead of a relative one.
GradCheckResult grad_check(const std::function<double()>& loss_fn,
                           const std::function<void()>& backward_fn,
                           const std::vector<Parameter*>& params,
                           double epsilon = 1e-5, double rel_tol = 1e-4,
                           double abs_tol = 1e-7);

}  // namespace ran
