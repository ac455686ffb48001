#ifndef MFGP_LBFGS_HPP
#define MFGP_LBFGS_HPP

#include <Eigen/Dense>
#include <functional>
#include <string>

namespace mfgp {

/// Objective with gradient. May return a non-finite value to mark an
/// infeasible point; the line search treats that as "too far".
using GradObjective =
    std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsOptions {
  int memory = 10;
  int max_iterations = 1000;
  double grad_tolerance = 1e-6;  // on the max norm
  int max_line_search = 40;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd grad;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

/// Limited-memory BFGS with a strong Wolfe line search.
LbfgsResult lbfgs_minimize(const GradObjective& objective,
                           const Eigen::VectorXd& x0,
                           const LbfgsOptions& options = {});

}  // namespace mfgp

#endif
