#ifndef MFGP_KERNELS_HPP
#define MFGP_KERNELS_HPP

#include <Eigen/Dense>
#include <cmath>

#include "mfgp/errors.hpp"

namespace mfgp {

/// Hyperparameters of one squared-exponential ARD kernel:
///   k(x, x') = variance * exp(-0.5 * sum_d ard_weights[d] * (x_d - x'_d)^2)
/// Each ARD weight is an inverse squared length scale, one per input dimension.
struct KernelParams {
  double variance = 1.0;
  Eigen::VectorXd ard_weights;

  int dim() const { return static_cast<int>(ard_weights.size()); }

  void validate() const {
    if (!std::isfinite(variance) || variance <= 0.0)
      throw UsageError("KernelParams: variance must be finite and > 0");
    if (ard_weights.size() == 0)
      throw UsageError("KernelParams: ard_weights must be non-empty");
    for (Eigen::Index d = 0; d < ard_weights.size(); ++d)
      if (!std::isfinite(ard_weights[d]) || ard_weights[d] <= 0.0)
        throw UsageError("KernelParams: ard_weights must be finite and > 0");
  }
};

namespace detail {

template <typename DA, typename DB>
void check_kernel_args(const Eigen::MatrixBase<DA>& x,
                       const Eigen::MatrixBase<DB>& x_prime,
                       const KernelParams& params) {
  if (x.size() != x_prime.size() || x.size() != params.ard_weights.size())
    throw UsageError("se kernel: x, x' and ard_weights must share one dimension");
}

}  // namespace detail

/// Squared-exponential ARD kernel value.
template <typename DA, typename DB>
double se_eval(const Eigen::MatrixBase<DA>& x, const Eigen::MatrixBase<DB>& x_prime,
               const KernelParams& params) {
  detail::check_kernel_args(x, x_prime, params);
  double q = 0.0;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    const double t = x[d] - x_prime[d];
    q += params.ard_weights[d] * t * t;
  }
  return params.variance * std::exp(-0.5 * q);
}

/// Gradient of se_eval with respect to (log variance, log ard_weights[0..D-1]),
/// returned in that order as a vector of length D + 1.
template <typename DA, typename DB>
Eigen::VectorXd se_grad(const Eigen::MatrixBase<DA>& x,
                        const Eigen::MatrixBase<DB>& x_prime,
                        const KernelParams& params) {
  detail::check_kernel_args(x, x_prime, params);
  const Eigen::Index d_in = x.size();
  const double k = se_eval(x, x_prime, params);
  Eigen::VectorXd g(d_in + 1);
  g[0] = k;  // d k / d log(variance) = k
  for (Eigen::Index d = 0; d < d_in; ++d) {
    const double t = x[d] - x_prime[d];
    // d k / d log(w_d) = -0.5 * w_d * t^2 * k
    g[d + 1] = -0.5 * params.ard_weights[d] * t * t * k;
  }
  return g;
}

}  // namespace mfgp

#endif
