#include "mfgp/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace mfgp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Probe {
  double a = 0.0;
  double f = kInf;
  double slope = 0.0;  // d f(x + a d) / d a
  Eigen::VectorXd x, g;
  bool finite = false;
};

class LineSearch {
 public:
  LineSearch(const GradObjective& obj, const Eigen::VectorXd& x0, double f0,
             const Eigen::VectorXd& g0, const Eigen::VectorXd& dir,
             const LbfgsOptions& opt)
      : obj_(obj), x0_(x0), dir_(dir), opt_(opt), f0_(f0),
        slope0_(g0.dot(dir)) {}

  Probe probe(double a) {
    Probe p;
    p.a = a;
    p.x = x0_ + a * dir_;
    p.g.resize(x0_.size());
    p.f = obj_(p.x, p.g);
    p.finite = std::isfinite(p.f) && p.g.allFinite();
    if (!p.finite) p.f = kInf;
    p.slope = p.finite ? p.g.dot(dir_) : 0.0;
    ++evals_;
    return p;
  }

  bool sufficient_decrease(const Probe& p) const {
    return p.f <= f0_ + opt_.wolfe_c1 * p.a * slope0_;
  }

  bool curvature_ok(const Probe& p) const {
    return std::abs(p.slope) <= -opt_.wolfe_c2 * slope0_;
  }

  // Strong Wolfe search; returns a probe with finite f on success.
  Probe run(double a_init) {
    Probe lo;  // best point with sufficient decrease found so far
    Probe prev;
    prev.a = 0.0;
    prev.f = f0_;
    prev.slope = slope0_;
    prev.finite = true;
    double a = a_init;
    for (int i = 0; i < opt_.max_line_search && evals_ < 3 * opt_.max_line_search;
         ++i) {
      Probe cur = probe(a);
      if (!cur.finite) {
        // Stepped past the feasible region; shrink toward prev.
        Probe z = zoom(prev, cur);
        return z;
      }
      if (!sufficient_decrease(cur) || (i > 0 && cur.f >= prev.f)) {
        return zoom(prev, cur);
      }
      if (curvature_ok(cur)) return cur;
      if (cur.slope >= 0.0) return zoom(cur, prev);
      prev = cur;
      a = std::min(2.0 * a, 1e10);
    }
    // Fall back to the last finite point with decrease, if any.
    if (prev.a > 0.0 && prev.f < f0_) return prev;
    Probe fail;
    fail.finite = false;
    return fail;
  }

 private:
  // lo satisfies sufficient decrease (or is the origin); hi brackets. hi may
  // be infeasible, in which case interpolation degenerates to bisection.
  Probe zoom(Probe lo, Probe hi) {
    for (int i = 0; i < opt_.max_line_search; ++i) {
      double a;
      if (lo.finite && hi.finite && std::isfinite(hi.f)) {
        // Quadratic interpolation through (lo.f, lo.slope, hi.f); guarded.
        const double d = hi.a - lo.a;
        const double denom = 2.0 * (hi.f - lo.f - lo.slope * d);
        a = (std::abs(denom) > 1e-300) ? lo.a - lo.slope * d * d / denom
                                       : 0.5 * (lo.a + hi.a);
        const double lo_b = std::min(lo.a, hi.a), hi_b = std::max(lo.a, hi.a);
        const double margin = 0.1 * (hi_b - lo_b);
        if (!(a > lo_b + margin && a < hi_b - margin)) a = 0.5 * (lo.a + hi.a);
      } else {
        a = 0.5 * (lo.a + hi.a);
      }
      Probe cur = probe(a);
      if (!cur.finite || !sufficient_decrease(cur) ||
          (lo.finite && cur.f >= lo.f && lo.a > 0.0)) {
        hi = cur;
      } else {
        if (curvature_ok(cur)) return cur;
        if (cur.slope * (hi.a - lo.a) >= 0.0) hi = lo;
        lo = cur;
      }
      if (std::abs(hi.a - lo.a) < 1e-14 * std::max(1.0, std::abs(lo.a))) break;
    }
    if (lo.a > 0.0 && lo.finite && lo.f < f0_) return lo;
    Probe fail;
    fail.finite = false;
    return fail;
  }

  const GradObjective& obj_;
  const Eigen::VectorXd& x0_;
  const Eigen::VectorXd& dir_;
  const LbfgsOptions& opt_;
  double f0_, slope0_;
  int evals_ = 0;
};

}  // namespace

LbfgsResult lbfgs_minimize(const GradObjective& objective,
                           const Eigen::VectorXd& x0,
                           const LbfgsOptions& options) {
  const int n = static_cast<int>(x0.size());
  LbfgsResult res;
  res.x = x0;
  res.grad.resize(n);
  res.f = objective(res.x, res.grad);
  if (!std::isfinite(res.f) || !res.grad.allFinite()) {
    res.f = kInf;
    res.message = "objective not finite at the starting point";
    return res;
  }

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  double gamma = 1.0;
  bool tried_reset = false;

  for (res.iterations = 0; res.iterations < options.max_iterations;
       ++res.iterations) {
    if (res.grad.lpNorm<Eigen::Infinity>() <= options.grad_tolerance) {
      res.converged = true;
      return res;
    }

    // Two-loop recursion.
    Eigen::VectorXd q = res.grad;
    std::vector<double> alpha(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    q *= gamma;
    for (size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    Eigen::VectorXd dir = -q;

    double slope = res.grad.dot(dir);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      gamma = 1.0;
      dir = -res.grad;
      slope = res.grad.dot(dir);
    }

    const double a_init =
        (s_hist.empty() && res.iterations == 0)
            ? std::min(1.0, 1.0 / std::max(1.0, res.grad.lpNorm<Eigen::Infinity>()))
            : 1.0;
    LineSearch search(objective, res.x, res.f, res.grad, dir, options);
    Probe step = search.run(a_init);

    if (!step.finite) {
      if (!tried_reset && !s_hist.empty()) {
        // Retry once from scratch along steepest descent.
        tried_reset = true;
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        gamma = 1.0;
        continue;
      }
      res.message = "line search failed";
      return res;
    }
    tried_reset = false;

    Eigen::VectorXd s = step.x - res.x;
    Eigen::VectorXd y = step.g - res.grad;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > options.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      gamma = sy / y_hist.back().squaredNorm();
    }

    const double f_prev = res.f;
    res.x = std::move(step.x);
    res.f = step.f;
    res.grad = std::move(step.g);

    if (std::abs(f_prev - res.f) <=
        1e-15 * std::max(1.0, std::abs(f_prev))) {
      // Progress stalled at numerical precision.
      res.converged =
          res.grad.lpNorm<Eigen::Infinity>() <= options.grad_tolerance;
      res.message = res.converged ? "" : "stalled";
      return res;
    }
  }
  res.message = "iteration limit reached";
  return res;
}

}  // namespace mfgp
