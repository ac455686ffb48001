#ifndef MFGP_MODEL_HPP
#define MFGP_MODEL_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "mfgp/dataset.hpp"
#include "mfgp/kernels.hpp"
#include "mfgp/operators.hpp"

namespace mfgp {

/// Full hyperparameter set of the two-level model. The solution prior is
/// u = rho * u1 + delta with u1 ~ GP(0, g1(level1)), delta ~ GP(0, g2(level2)),
/// so u ~ GP(0, rho^2 g1 + g2). Noise variances attach to the anchor, low and
/// high observation blocks.
struct HyperParams {
  KernelParams level1, level2;
  double rho = 1.0;
  double noise_anchor = 1e-4;
  double noise_low = 1e-4;
  double noise_high = 1e-4;

  void validate() const {
    level1.validate();
    level2.validate();
    if (level1.dim() != level2.dim())
      throw UsageError("HyperParams: level dimensions disagree");
    if (!std::isfinite(rho)) throw UsageError("HyperParams: rho must be finite");
    for (double v : {noise_anchor, noise_low, noise_high})
      if (!std::isfinite(v) || v < 0.0)
        throw UsageError("HyperParams: noise variances must be finite and >= 0");
  }
};

/// Values pinned during training; anything set here leaves the unconstrained
/// vector.
struct FrozenParams {
  std::optional<double> rho;
  std::optional<double> noise_anchor;
  std::optional<double> noise_low;
  std::optional<double> noise_high;
};

/// Bijection between HyperParams and the unconstrained optimization vector.
/// Kernel variances and ARD weights travel as logs, rho raw, and each free
/// noise variance as log(v - noise_floor), which keeps v >= noise_floor.
/// Layout: [log s1^2, log w1_1..D, log s2^2, log w2_1..D, rho?, psi_n0?,
/// psi_n1?, psi_n2?] with frozen entries omitted.
struct ParamSpace {
  int input_dim = 1;
  double noise_floor = 1e-8;
  FrozenParams frozen;

  int size() const;
  Eigen::VectorXd encode(const HyperParams& hp) const;
  HyperParams decode(const Eigen::VectorXd& v) const;
  std::vector<std::string> names() const;
};

/// Dense joint covariance over [anchors; low; high] with observation noise on
/// the diagonal blocks.
Eigen::MatrixXd assemble_K(const MultiFidelityDataset& data,
                           const HyperParams& hp, const LinearOperatorSpec& op);

struct CholeskyResult {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};

/// Cholesky factorization with an escalating diagonal jitter ladder: 0, then
/// 1e-10 .. 1e-4 times the mean diagonal in decade steps. Throws
/// NumericalError naming a smallest-eigenvalue estimate if all levels fail.
CholeskyResult cholesky_with_jitter(const Eigen::MatrixXd& K);

/// Negative log marginal likelihood of the stacked observations.
double nlml(const MultiFidelityDataset& data, const HyperParams& hp,
            const LinearOperatorSpec& op);

/// Gradient of nlml over the unconstrained encoding defined by space.
Eigen::VectorXd nlml_grad(const MultiFidelityDataset& data, const HyperParams& hp,
                          const LinearOperatorSpec& op, const ParamSpace& space);

struct TrainedModel {
  HyperParams hyperparams;
  LinearOperatorSpec op;
  MultiFidelityDataset dataset;
  Eigen::MatrixXd chol_lower;   // L with L L^T = K + jitter I
  Eigen::VectorXd weights;      // K^{-1} y
  double nlml_value = 0.0;
  double jitter = 0.0;
};

/// Build a model at fixed hyperparameters (no optimization).
TrainedModel fit_model(const MultiFidelityDataset& data, const HyperParams& hp,
                       const LinearOperatorSpec& op);

struct TrainConfig {
  int restarts = 10;
  unsigned long long seed = 0;
  int max_iterations = 1000;
  double tolerance = 1e-6;
  double noise_floor = 1e-8;
  int lbfgs_memory = 10;
  FrozenParams freeze;
};

struct TrainReport {
  std::vector<double> restart_nlml;  // +inf marks a failed restart
  int best_restart = -1;
  int iterations = 0;
  double grad_max_norm = 0.0;
  bool converged = false;
  double jitter = 0.0;
};

/// Maximum-likelihood training: multi-start L-BFGS over the unconstrained
/// encoding, deterministic per (seed, restart index). Throws NumericalError if
/// every restart fails to produce a finite objective.
TrainedModel train(const MultiFidelityDataset& data, const LinearOperatorSpec& op,
                   const TrainConfig& config, TrainReport* report = nullptr);

namespace detail {

/// nlml and its gradient from one assembly/factorization pass.
double nlml_value_and_grad(const MultiFidelityDataset& data, const HyperParams& hp,
                           const LinearOperatorSpec& op, const ParamSpace& space,
                           Eigen::VectorXd* grad, double* jitter_out = nullptr);

}  // namespace detail

}  // namespace mfgp

#endif
