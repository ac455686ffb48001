#ifndef MFGP_QUADRATURE_HPP
#define MFGP_QUADRATURE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <mutex>
#include <unordered_map>

#include "mfgp/errors.hpp"

namespace mfgp {

/// Gauss-Legendre rule on [-1, 1]. Obtain through gauss_legendre(); rules are
/// computed once per node count and shared behind an immutable handle.
struct GaussLegendreRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

namespace detail {

inline GaussLegendreRule build_gauss_legendre(int n) {
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Chebyshev-based initial guess, then Newton on P_n.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace detail

/// Shared n-node Gauss-Legendre rule on [-1, 1].
inline std::shared_ptr<const GaussLegendreRule> gauss_legendre(int n) {
  if (n < 1) throw UsageError("gauss_legendre: node count must be >= 1");
  static std::mutex mutex;
  static std::unordered_map<int, std::shared_ptr<const GaussLegendreRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) {
    it = cache.emplace(n, std::make_shared<const GaussLegendreRule>(
                              detail::build_gauss_legendre(n))).first;
  }
  return it->second;
}

/// Integrate fn over [a, b] with an n-node Gauss-Legendre rule. The bounds may
/// be in either order; the usual signed-integral convention applies.
template <typename Fn>
double integrate_gl(Fn&& fn, double a, double b, int n) {
  const auto rule = gauss_legendre(n);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    acc += rule->weights[i] * fn(mid + half * rule->nodes[i]);
  return half * acc;
}

}  // namespace mfgp

#endif
