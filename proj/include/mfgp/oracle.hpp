#ifndef MFGP_ORACLE_HPP
#define MFGP_ORACLE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "mfgp/operators.hpp"
#include "mfgp/quadrature.hpp"

namespace mfgp {

/// Step configuration for the numeric operator application. Steps are relative
/// to a per-dimension length scale; outer_scale widens them when the operator
/// is applied on top of an already finite-differenced function, where smaller
/// steps would amplify roundoff of the inner evaluation.
struct OracleSettings {
  double first_step_rel = 1e-4;   // central difference, first derivatives
  double second_step_rel = 1e-3;  // five-point stencil, second derivatives
  double outer_scale = 10.0;
  int integral_nodes = 64;
};

enum class OracleSide { left, right, both };

namespace detail {

template <typename Fn>
double fd_first(Fn&& fn, const Eigen::VectorXd& x, int d, double h) {
  Eigen::VectorXd a = x, b = x;
  a[d] += h;
  b[d] -= h;
  return (fn(a) - fn(b)) / (2.0 * h);
}

template <typename Fn>
double fd_second(Fn&& fn, const Eigen::VectorXd& x, int d, double h) {
  Eigen::VectorXd p1 = x, p2 = x, m1 = x, m2 = x;
  p1[d] += h;
  p2[d] += 2.0 * h;
  m1[d] -= h;
  m2[d] -= 2.0 * h;
  return (-fn(p2) + 16.0 * fn(p1) - 30.0 * fn(x) + 16.0 * fn(m1) - fn(m2)) /
         (12.0 * h * h);
}

}  // namespace detail

/// Apply the operator to a scalar function numerically at x, composing central
/// differences and Gauss-Legendre integration per the operator definition.
/// lengths supplies one characteristic scale per dimension for step sizes.
/// The fractional variant has no local stencil and is rejected.
template <typename Fn>
double apply_operator_numeric(const LinearOperatorSpec& op, Fn&& fn,
                              const Eigen::VectorXd& x,
                              const Eigen::VectorXd& lengths,
                              const OracleSettings& settings = {},
                              bool outer = false) {
  if (x.size() != lengths.size())
    throw UsageError("apply_operator_numeric: x and lengths disagree");
  validate_operator(op, static_cast<int>(x.size()));
  const double scale = outer ? settings.outer_scale : 1.0;
  const auto h1 = [&](int d) { return settings.first_step_rel * scale * lengths[d]; };
  const auto h2 = [&](int d) { return settings.second_step_rel * scale * lengths[d]; };

  return std::visit(
      [&](const auto& o) -> double {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Identity>) {
          return fn(x);
        } else if constexpr (std::is_same_v<T, FirstDerivative1D>) {
          return detail::fd_first(fn, x, 0, h1(0));
        } else if constexpr (std::is_same_v<T, IntegroDifferential1D>) {
          const double deriv = detail::fd_first(fn, x, 0, h1(0));
          const double integral = integrate_gl(
              [&](double s) {
                Eigen::VectorXd p(1);
                p[0] = s;
                return fn(p);
              },
              o.lower_bound, x[0], settings.integral_nodes);
          return deriv + integral;
        } else if constexpr (std::is_same_v<T, Laplacian>) {
          double acc = 0.0;
          for (int d = 0; d < o.dimension; ++d)
            acc += detail::fd_second(fn, x, d, h2(d));
          return acc;
        } else if constexpr (std::is_same_v<T, AdvectionDiffusionReaction>) {
          return detail::fd_first(fn, x, 0, h1(0)) +
                 detail::fd_first(fn, x, 1, h1(1)) -
                 detail::fd_second(fn, x, 1, h2(1)) - fn(x);
        } else {
          throw UsageError(
              "apply_operator_numeric: fractional operator has no stencil form");
        }
      },
      op);
}

/// Numeric counterpart of the closed-form transformed kernels, built on
/// se_eval only. side selects which argument the operator hits: left is
/// L_x g(x, x'), right is L_x' g(x, x'), both is L_x L_x' g(x, x').
inline double op_kernel_numeric_oracle(const LinearOperatorSpec& op,
                                       const KernelParams& params,
                                       const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& x_prime,
                                       OracleSide side,
                                       const OracleSettings& settings = {}) {
  params.validate();
  if (x.size() != x_prime.size() || x.size() != params.ard_weights.size())
    throw UsageError("op_kernel_numeric_oracle: dimension mismatch");
  const Eigen::VectorXd lengths = params.ard_weights.cwiseSqrt().cwiseInverse();

  const auto right_applied = [&](const Eigen::VectorXd& xa,
                                 const Eigen::VectorXd& xb) {
    return apply_operator_numeric(
        op, [&](const Eigen::VectorXd& q) { return se_eval(xa, q, params); }, xb,
        lengths, settings, false);
  };

  switch (side) {
    case OracleSide::right:
      return right_applied(x, x_prime);
    case OracleSide::left:
      // g is symmetric, so L on the first slot of g(x, x') is L on the second
      // slot of g(x', x).
      return right_applied(x_prime, x);
    case OracleSide::both:
      return apply_operator_numeric(
          op, [&](const Eigen::VectorXd& q) { return right_applied(q, x_prime); },
          x, lengths, settings, true);
  }
  throw UsageError("op_kernel_numeric_oracle: bad side");
}

}  // namespace mfgp

#endif
