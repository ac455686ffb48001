#ifndef MFGP_OPERATORS_HPP
#define MFGP_OPERATORS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <variant>

#include "mfgp/errors.hpp"
#include "mfgp/fractional.hpp"
#include "mfgp/kernels.hpp"

namespace mfgp {

// Linear operators L acting on the solution u, so that f = L u. Each entry of
// the catalog below has closed-form transformed kernels L_x L_x' g (both
// arguments, "ff") and L_x' g (second argument only, "uf") for the
// squared-exponential ARD kernel g, except the fractional variant, which is
// evaluated by frequency quadrature (see fractional.hpp).

struct Identity {};

/// L u = u' on 1D inputs.
struct FirstDerivative1D {};

/// L u = u'(x) + integral_{lower_bound}^{x} u(s) ds on 1D inputs.
struct IntegroDifferential1D {
  double lower_bound = 0.0;
};

/// L u = sum_d d^2 u / d x_d^2 on D-dimensional inputs.
struct Laplacian {
  int dimension = 1;
};

/// L u = u_t + u_x - u_xx - u on (t, x) inputs; coordinate 0 is t.
struct AdvectionDiffusionReaction {};

/// L u = D^alpha u - u with the two-sided Riemann-Liouville derivative of
/// order alpha in (0, 2), evaluated spectrally with the attached rule.
struct FractionalRL {
  double alpha = 0.5;
  QuadratureSpec quadrature;
};

using LinearOperatorSpec =
    std::variant<Identity, FirstDerivative1D, IntegroDifferential1D, Laplacian,
                 AdvectionDiffusionReaction, FractionalRL>;

/// Input dimension the operator requires, or -1 when any dimension works.
inline int operator_dim(const LinearOperatorSpec& op) {
  return std::visit(
      [](const auto& o) -> int {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Identity>) return -1;
        else if constexpr (std::is_same_v<T, Laplacian>) return o.dimension;
        else if constexpr (std::is_same_v<T, AdvectionDiffusionReaction>) return 2;
        else return 1;
      },
      op);
}

inline std::string operator_name(const LinearOperatorSpec& op) {
  return std::visit(
      [](const auto& o) -> std::string {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Identity>) return "identity";
        else if constexpr (std::is_same_v<T, FirstDerivative1D>) return "first_derivative";
        else if constexpr (std::is_same_v<T, IntegroDifferential1D>) return "integro_differential";
        else if constexpr (std::is_same_v<T, Laplacian>) return "laplacian";
        else if constexpr (std::is_same_v<T, AdvectionDiffusionReaction>)
          return "advection_diffusion_reaction";
        else return "fractional";
      },
      op);
}

/// Check internal parameters and compatibility with input dimension D.
inline void validate_operator(const LinearOperatorSpec& op, int input_dim) {
  if (input_dim < 1) throw UsageError("operator: input dimension must be >= 1");
  std::visit(
      [&](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, IntegroDifferential1D>) {
          if (!std::isfinite(o.lower_bound))
            throw UsageError("integro_differential: lower_bound must be finite");
        } else if constexpr (std::is_same_v<T, Laplacian>) {
          if (o.dimension < 1)
            throw UsageError("laplacian: dimension must be >= 1");
        } else if constexpr (std::is_same_v<T, FractionalRL>) {
          if (!std::isfinite(o.alpha) || o.alpha <= 0.0 || o.alpha >= 2.0)
            throw UsageError("fractional: alpha must lie in (0, 2)");
          o.quadrature.validate();
        }
      },
      op);
  const int want = operator_dim(op);
  if (want > 0 && want != input_dim)
    throw UsageError("operator '" + operator_name(op) + "' expects dimension " +
                     std::to_string(want) + ", got " + std::to_string(input_dim));
}

namespace detail {

inline double gaussian_factor(double w, double t) {
  return std::exp(-0.5 * w * t * t);
}

/// E(z) = integral_0^z erf(s) ds = z erf(z) + (exp(-z^2) - 1) / sqrt(pi).
inline double erf_antiderivative(double z) {
  return z * std::erf(z) + (std::exp(-z * z) - 1.0) / std::sqrt(M_PI);
}

template <typename DA, typename DB>
void check_operator_args(const LinearOperatorSpec& op, const KernelParams& params,
                         const Eigen::MatrixBase<DA>& x,
                         const Eigen::MatrixBase<DB>& x_prime) {
  params.validate();
  if (x.size() != x_prime.size() || x.size() != params.ard_weights.size())
    throw UsageError("operator kernel: x, x' and ard_weights must share one dimension");
  validate_operator(op, static_cast<int>(x.size()));
}

// --- first derivative -------------------------------------------------------

inline double first_derivative_uf(const KernelParams& p, double t) {
  const double w = p.ard_weights[0];
  return p.variance * w * t * gaussian_factor(w, t);
}

inline double first_derivative_ff(const KernelParams& p, double t) {
  const double w = p.ard_weights[0];
  return p.variance * w * (1.0 - w * t * t) * gaussian_factor(w, t);
}

inline Eigen::Vector2d first_derivative_uf_grad(const KernelParams& p, double t) {
  const double w = p.ard_weights[0];
  const double g = gaussian_factor(w, t);
  const double value = p.variance * w * t * g;
  // d/dw [w t G] = t G (1 - w t^2 / 2)
  const double dw = p.variance * t * g * (1.0 - 0.5 * w * t * t);
  return {value, w * dw};
}

inline Eigen::Vector2d first_derivative_ff_grad(const KernelParams& p, double t) {
  const double w = p.ard_weights[0];
  const double g = gaussian_factor(w, t);
  const double t2 = t * t;
  const double value = p.variance * w * (1.0 - w * t2) * g;
  const double dw =
      p.variance * g * (1.0 - 2.0 * w * t2 - 0.5 * w * t2 * (1.0 - w * t2));
  return {value, w * dw};
}

// --- integro-differential ---------------------------------------------------
//
// With c = x - a, c' = x' - a, t = x - x', s = sqrt(w/2):
//   uf = s^2-free form: variance [ w t G(t) + sqrt(pi/2w) (erf(s c_u) - erf(s t)) ]
//   ff = variance [ w (1 - w t^2) G(t) + G(c) + G(c') - 2 G(t)
//                   + (sqrt(pi)/w) (E(s c) + E(s c') - E(s t)) ]
// where G(z) = exp(-w z^2 / 2) and E is erf_antiderivative.

inline double integro_uf(const IntegroDifferential1D& op, const KernelParams& p,
                         double x_u, double x_f) {
  const double w = p.ard_weights[0];
  const double t = x_u - x_f;
  const double cu = x_u - op.lower_bound;
  const double s = std::sqrt(0.5 * w);
  const double tail = std::sqrt(0.5 * M_PI / w) * (std::erf(s * cu) - std::erf(s * t));
  return p.variance * (w * t * gaussian_factor(w, t) + tail);
}

inline double integro_ff(const IntegroDifferential1D& op, const KernelParams& p,
                         double x, double x_prime) {
  const double w = p.ard_weights[0];
  const double t = x - x_prime;
  const double c = x - op.lower_bound;
  const double cp = x_prime - op.lower_bound;
  const double s = std::sqrt(0.5 * w);
  const double gt = gaussian_factor(w, t);
  const double sum =
      w * (1.0 - w * t * t) * gt + gaussian_factor(w, c) + gaussian_factor(w, cp) -
      2.0 * gt +
      (std::sqrt(M_PI) / w) * (erf_antiderivative(s * c) +
                               erf_antiderivative(s * cp) - erf_antiderivative(s * t));
  return p.variance * sum;
}

inline Eigen::Vector2d integro_uf_grad(const IntegroDifferential1D& op,
                                       const KernelParams& p, double x_u,
                                       double x_f) {
  const double w = p.ard_weights[0];
  const double t = x_u - x_f;
  const double cu = x_u - op.lower_bound;
  const double s = std::sqrt(0.5 * w);
  const double gt = gaussian_factor(w, t);
  const double gcu = gaussian_factor(w, cu);
  const double erf_diff = std::erf(s * cu) - std::erf(s * t);
  const double value = p.variance * (w * t * gt + std::sqrt(0.5 * M_PI / w) * erf_diff);
  const double dw = p.variance *
      (t * gt * (1.0 - 0.5 * w * t * t) -
       (0.5 / w) * std::sqrt(0.5 * M_PI / w) * erf_diff +
       (0.5 / w) * (cu * gcu - t * gt));
  return {value, w * dw};
}

inline Eigen::Vector2d integro_ff_grad(const IntegroDifferential1D& op,
                                       const KernelParams& p, double x,
                                       double x_prime) {
  const double w = p.ard_weights[0];
  const double t = x - x_prime;
  const double c = x - op.lower_bound;
  const double cp = x_prime - op.lower_bound;
  const double s = std::sqrt(0.5 * w);
  const double t2 = t * t;
  const double gt = gaussian_factor(w, t);
  const double gc = gaussian_factor(w, c);
  const double gcp = gaussian_factor(w, cp);
  const double e_sum = erf_antiderivative(s * c) + erf_antiderivative(s * cp) -
                       erf_antiderivative(s * t);
  const double sqrt_pi = std::sqrt(M_PI);
  const double value = p.variance * (w * (1.0 - w * t2) * gt + gc + gcp - 2.0 * gt +
                                     (sqrt_pi / w) * e_sum);
  double dw = (1.0 - 2.0 * w * t2 - 0.5 * w * t2 * (1.0 - w * t2)) * gt;
  dw += -0.5 * c * c * gc + 0.5 * t2 * gt;
  dw += -0.5 * cp * cp * gcp + 0.5 * t2 * gt;
  dw += -(sqrt_pi / (w * w)) * e_sum +
        (sqrt_pi * s / (2.0 * w * w)) *
            (c * std::erf(s * c) + cp * std::erf(s * cp) - t * std::erf(s * t));
  return {value, w * p.variance * dw};
}

// --- Laplacian --------------------------------------------------------------
//
// With A_d = w_d^2 t_d^2 - w_d (the factor a second derivative in dimension d
// applies to the product kernel) and C_d = 2 w_d^2 (1 - 2 w_d t_d^2):
//   uf = g sum_d A_d
//   ff = g [ (sum_d A_d)^2 + sum_d C_d ]
// C_d corrects the d = e term of the double sum to the true fourth-derivative
// factor w^4 t^4 - 6 w^3 t^2 + 3 w^2.

template <typename DA, typename DB>
double laplacian_uf(const KernelParams& p, const Eigen::MatrixBase<DA>& x,
                    const Eigen::MatrixBase<DB>& xp) {
  const double g = se_eval(x, xp, p);
  double sa = 0.0;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    const double w = p.ard_weights[d];
    const double t = x[d] - xp[d];
    sa += w * w * t * t - w;
  }
  return g * sa;
}

template <typename DA, typename DB>
double laplacian_ff(const KernelParams& p, const Eigen::MatrixBase<DA>& x,
                    const Eigen::MatrixBase<DB>& xp) {
  const double g = se_eval(x, xp, p);
  double sa = 0.0, sc = 0.0;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    const double w = p.ard_weights[d];
    const double t2 = (x[d] - xp[d]) * (x[d] - xp[d]);
    sa += w * w * t2 - w;
    sc += 2.0 * w * w * (1.0 - 2.0 * w * t2);
  }
  return g * (sa * sa + sc);
}

template <typename DA, typename DB>
Eigen::VectorXd laplacian_uf_grad(const KernelParams& p,
                                  const Eigen::MatrixBase<DA>& x,
                                  const Eigen::MatrixBase<DB>& xp) {
  const Eigen::Index dim = x.size();
  const double g = se_eval(x, xp, p);
  double sa = 0.0;
  for (Eigen::Index d = 0; d < dim; ++d) {
    const double w = p.ard_weights[d];
    const double t = x[d] - xp[d];
    sa += w * w * t * t - w;
  }
  Eigen::VectorXd out(dim + 1);
  out[0] = g * sa;
  for (Eigen::Index d = 0; d < dim; ++d) {
    const double w = p.ard_weights[d];
    const double t2 = (x[d] - xp[d]) * (x[d] - xp[d]);
    out[d + 1] = w * g * (-0.5 * t2 * sa + (2.0 * w * t2 - 1.0));
  }
  return out;
}

template <typename DA, typename DB>
Eigen::VectorXd laplacian_ff_grad(const KernelParams& p,
                                  const Eigen::MatrixBase<DA>& x,
                                  const Eigen::MatrixBase<DB>& xp) {
  const Eigen::Index dim = x.size();
  const double g = se_eval(x, xp, p);
  double sa = 0.0, sc = 0.0;
  for (Eigen::Index d = 0; d < dim; ++d) {
    const double w = p.ard_weights[d];
    const double t2 = (x[d] - xp[d]) * (x[d] - xp[d]);
    sa += w * w * t2 - w;
    sc += 2.0 * w * w * (1.0 - 2.0 * w * t2);
  }
  const double body = sa * sa + sc;
  Eigen::VectorXd out(dim + 1);
  out[0] = g * body;
  for (Eigen::Index d = 0; d < dim; ++d) {
    const double w = p.ard_weights[d];
    const double t2 = (x[d] - xp[d]) * (x[d] - xp[d]);
    out[d + 1] = w * g * (-0.5 * t2 * body + 2.0 * sa * (2.0 * w * t2 - 1.0) +
                          4.0 * w - 12.0 * w * w * t2);
  }
  return out;
}

// --- advection-diffusion-reaction -------------------------------------------
//
// Multiplier applied to g by L on the primed argument:
//   P = wt t0 + wx t1 - wx^2 t1^2 + wx - 1
// and on the unprimed argument:
//   Q = -wt t0 - wx t1 - wx^2 t1^2 + wx - 1
// with t0 = t - t', t1 = x - x'. The remainder of the product rule gives
//   ff = g (P Q + wt + wx + 2 wx^2 - 4 wx^3 t1^2).

struct AdrTerms {
  double g, p, q, r, t0, t1;
};

template <typename DA, typename DB>
AdrTerms adr_terms(const KernelParams& par, const Eigen::MatrixBase<DA>& x,
                   const Eigen::MatrixBase<DB>& xp) {
  AdrTerms t;
  const double wt = par.ard_weights[0], wx = par.ard_weights[1];
  t.t0 = x[0] - xp[0];
  t.t1 = x[1] - xp[1];
  t.g = se_eval(x, xp, par);
  const double t1sq = t.t1 * t.t1;
  t.p = wt * t.t0 + wx * t.t1 - wx * wx * t1sq + wx - 1.0;
  t.q = -wt * t.t0 - wx * t.t1 - wx * wx * t1sq + wx - 1.0;
  t.r = wt + wx + 2.0 * wx * wx - 4.0 * wx * wx * wx * t1sq;
  return t;
}

template <typename DA, typename DB>
double adr_uf(const KernelParams& par, const Eigen::MatrixBase<DA>& x,
              const Eigen::MatrixBase<DB>& xp) {
  const AdrTerms t = adr_terms(par, x, xp);
  return t.g * t.p;
}

template <typename DA, typename DB>
double adr_ff(const KernelParams& par, const Eigen::MatrixBase<DA>& x,
              const Eigen::MatrixBase<DB>& xp) {
  const AdrTerms t = adr_terms(par, x, xp);
  return t.g * (t.p * t.q + t.r);
}

template <typename DA, typename DB>
Eigen::VectorXd adr_uf_grad(const KernelParams& par, const Eigen::MatrixBase<DA>& x,
                            const Eigen::MatrixBase<DB>& xp) {
  const AdrTerms t = adr_terms(par, x, xp);
  const double wt = par.ard_weights[0], wx = par.ard_weights[1];
  Eigen::VectorXd out(3);
  out[0] = t.g * t.p;
  out[1] = wt * t.g * (-0.5 * t.t0 * t.t0 * t.p + t.t0);
  out[2] = wx * t.g * (-0.5 * t.t1 * t.t1 * t.p +
                       (t.t1 - 2.0 * wx * t.t1 * t.t1 + 1.0));
  return out;
}

template <typename DA, typename DB>
Eigen::VectorXd adr_ff_grad(const KernelParams& par, const Eigen::MatrixBase<DA>& x,
                            const Eigen::MatrixBase<DB>& xp) {
  const AdrTerms t = adr_terms(par, x, xp);
  const double wt = par.ard_weights[0], wx = par.ard_weights[1];
  const double t1sq = t.t1 * t.t1;
  const double body = t.p * t.q + t.r;
  const double dp_dwt = t.t0, dq_dwt = -t.t0;
  const double dp_dwx = t.t1 - 2.0 * wx * t1sq + 1.0;
  const double dq_dwx = -t.t1 - 2.0 * wx * t1sq + 1.0;
  const double dr_dwt = 1.0;
  const double dr_dwx = 1.0 + 4.0 * wx - 12.0 * wx * wx * t1sq;
  Eigen::VectorXd out(3);
  out[0] = t.g * body;
  out[1] = wt * t.g * (-0.5 * t.t0 * t.t0 * body +
                       dp_dwt * t.q + t.p * dq_dwt + dr_dwt);
  out[2] = wx * t.g * (-0.5 * t1sq * body + dp_dwx * t.q + t.p * dq_dwx + dr_dwx);
  return out;
}

}  // namespace detail

/// L_x L_x' g(x, x'): covariance of the forcing f = L u between two locations.
template <typename DA, typename DB>
double op_kernel_ff(const LinearOperatorSpec& op, const KernelParams& params,
                    const Eigen::MatrixBase<DA>& x,
                    const Eigen::MatrixBase<DB>& x_prime) {
  detail::check_operator_args(op, params, x, x_prime);
  return std::visit(
      [&](const auto& o) -> double {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Identity>) {
          return se_eval(x, x_prime, params);
        } else if constexpr (std::is_same_v<T, FirstDerivative1D>) {
          return detail::first_derivative_ff(params, x[0] - x_prime[0]);
        } else if constexpr (std::is_same_v<T, IntegroDifferential1D>) {
          return detail::integro_ff(o, params, x[0], x_prime[0]);
        } else if constexpr (std::is_same_v<T, Laplacian>) {
          return detail::laplacian_ff(params, x, x_prime);
        } else if constexpr (std::is_same_v<T, AdvectionDiffusionReaction>) {
          return detail::adr_ff(params, x, x_prime);
        } else {
          return fractional_kernel_ff(o.alpha, params, x[0], x_prime[0],
                                      o.quadrature);
        }
      },
      op);
}

/// L_x' g(x_u, x_f): covariance of the solution u at x_u with the forcing f at
/// x_f. The operator acts on the second argument only.
template <typename DA, typename DB>
double op_kernel_uf(const LinearOperatorSpec& op, const KernelParams& params,
                    const Eigen::MatrixBase<DA>& x_u,
                    const Eigen::MatrixBase<DB>& x_f) {
  detail::check_operator_args(op, params, x_u, x_f);
  return std::visit(
      [&](const auto& o) -> double {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Identity>) {
          return se_eval(x_u, x_f, params);
        } else if constexpr (std::is_same_v<T, FirstDerivative1D>) {
          return detail::first_derivative_uf(params, x_u[0] - x_f[0]);
        } else if constexpr (std::is_same_v<T, IntegroDifferential1D>) {
          return detail::integro_uf(o, params, x_u[0], x_f[0]);
        } else if constexpr (std::is_same_v<T, Laplacian>) {
          return detail::laplacian_uf(params, x_u, x_f);
        } else if constexpr (std::is_same_v<T, AdvectionDiffusionReaction>) {
          return detail::adr_uf(params, x_u, x_f);
        } else {
          return fractional_kernel_uf(o.alpha, params, x_u[0], x_f[0],
                                      o.quadrature);
        }
      },
      op);
}

/// Gradient of op_kernel_ff with respect to (log variance, log ard_weights),
/// in the same layout as se_grad.
template <typename DA, typename DB>
Eigen::VectorXd op_kernel_ff_grad(const LinearOperatorSpec& op,
                                  const KernelParams& params,
                                  const Eigen::MatrixBase<DA>& x,
                                  const Eigen::MatrixBase<DB>& x_prime) {
  detail::check_operator_args(op, params, x, x_prime);
  return std::visit(
      [&](const auto& o) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Identity>) {
          return se_grad(x, x_prime, params);
        } else if constexpr (std::is_same_v<T, FirstDerivative1D>) {
          return detail::first_derivative_ff_grad(params, x[0] - x_prime[0]);
        } else if constexpr (std::is_same_v<T, IntegroDifferential1D>) {
          return detail::integro_ff_grad(o, params, x[0], x_prime[0]);
        } else if constexpr (std::is_same_v<T, Laplacian>) {
          return detail::laplacian_ff_grad(params, x, x_prime);
        } else if constexpr (std::is_same_v<T, AdvectionDiffusionReaction>) {
          return detail::adr_ff_grad(params, x, x_prime);
        } else {
          const auto eval = fractional_ff_eval(o.alpha, params, x[0], x_prime[0],
                                               o.quadrature);
          return Eigen::Vector2d{eval.d_log_variance, eval.d_log_weight};
        }
      },
      op);
}

/// Gradient of op_kernel_uf with respect to (log variance, log ard_weights).
template <typename DA, typename DB>
Eigen::VectorXd op_kernel_uf_grad(const LinearOperatorSpec& op,
                                  const KernelParams& params,
                                  const Eigen::MatrixBase<DA>& x_u,
                                  const Eigen::MatrixBase<DB>& x_f) {
  detail::check_operator_args(op, params, x_u, x_f);
  return std::visit(
      [&](const auto& o) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Identity>) {
          return se_grad(x_u, x_f, params);
        } else if constexpr (std::is_same_v<T, FirstDerivative1D>) {
          return detail::first_derivative_uf_grad(params, x_u[0] - x_f[0]);
        } else if constexpr (std::is_same_v<T, IntegroDifferential1D>) {
          return detail::integro_uf_grad(o, params, x_u[0], x_f[0]);
        } else if constexpr (std::is_same_v<T, Laplacian>) {
          return detail::laplacian_uf_grad(params, x_u, x_f);
        } else if constexpr (std::is_same_v<T, AdvectionDiffusionReaction>) {
          return detail::adr_uf_grad(params, x_u, x_f);
        } else {
          const auto eval = fractional_uf_eval(o.alpha, params, x_u[0], x_f[0],
                                               o.quadrature);
          return Eigen::Vector2d{eval.d_log_variance, eval.d_log_weight};
        }
      },
      op);
}

}  // namespace mfgp

#endif
