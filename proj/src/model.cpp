#include "mfgp/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mfgp/lbfgs.hpp"

namespace mfgp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int free_extra_count(const FrozenParams& f) {
  return (f.rho ? 0 : 1) + (f.noise_anchor ? 0 : 1) + (f.noise_low ? 0 : 1) +
         (f.noise_high ? 0 : 1);
}

double encode_noise(double v, double floor) {
  return std::log(std::max(v - floor, 1e-300));
}

// Block index of a global row: 0 anchors, 1 low, 2 high.
struct BlockLayout {
  int n0, n1, n2;
  int block(int i) const { return i < n0 ? 0 : (i < n0 + n1 ? 1 : 2); }
  int local(int i, int b) const { return b == 0 ? i : (b == 1 ? i - n0 : i - n0 - n1); }
};

const Eigen::MatrixXd& block_x(const MultiFidelityDataset& d, int b) {
  return b == 0 ? d.anchor_x : (b == 1 ? d.low_x : d.high_x);
}

}  // namespace

int ParamSpace::size() const {
  return 2 * (input_dim + 1) + free_extra_count(frozen);
}

Eigen::VectorXd ParamSpace::encode(const HyperParams& hp) const {
  if (hp.level1.dim() != input_dim)
    throw UsageError("ParamSpace: hyperparameter dimension mismatch");
  Eigen::VectorXd v(size());
  int k = 0;
  v[k++] = std::log(hp.level1.variance);
  for (int d = 0; d < input_dim; ++d) v[k++] = std::log(hp.level1.ard_weights[d]);
  v[k++] = std::log(hp.level2.variance);
  for (int d = 0; d < input_dim; ++d) v[k++] = std::log(hp.level2.ard_weights[d]);
  if (!frozen.rho) v[k++] = hp.rho;
  if (!frozen.noise_anchor) v[k++] = encode_noise(hp.noise_anchor, noise_floor);
  if (!frozen.noise_low) v[k++] = encode_noise(hp.noise_low, noise_floor);
  if (!frozen.noise_high) v[k++] = encode_noise(hp.noise_high, noise_floor);
  return v;
}

HyperParams ParamSpace::decode(const Eigen::VectorXd& v) const {
  if (v.size() != size())
    throw UsageError("ParamSpace: encoded vector has the wrong length");
  HyperParams hp;
  int k = 0;
  hp.level1.variance = std::exp(v[k++]);
  hp.level1.ard_weights.resize(input_dim);
  for (int d = 0; d < input_dim; ++d) hp.level1.ard_weights[d] = std::exp(v[k++]);
  hp.level2.variance = std::exp(v[k++]);
  hp.level2.ard_weights.resize(input_dim);
  for (int d = 0; d < input_dim; ++d) hp.level2.ard_weights[d] = std::exp(v[k++]);
  hp.rho = frozen.rho ? *frozen.rho : v[k++];
  hp.noise_anchor =
      frozen.noise_anchor ? *frozen.noise_anchor : noise_floor + std::exp(v[k++]);
  hp.noise_low =
      frozen.noise_low ? *frozen.noise_low : noise_floor + std::exp(v[k++]);
  hp.noise_high =
      frozen.noise_high ? *frozen.noise_high : noise_floor + std::exp(v[k++]);
  return hp;
}

std::vector<std::string> ParamSpace::names() const {
  std::vector<std::string> out;
  out.push_back("log_variance1");
  for (int d = 0; d < input_dim; ++d)
    out.push_back("log_weight1_" + std::to_string(d + 1));
  out.push_back("log_variance2");
  for (int d = 0; d < input_dim; ++d)
    out.push_back("log_weight2_" + std::to_string(d + 1));
  if (!frozen.rho) out.push_back("rho");
  if (!frozen.noise_anchor) out.push_back("noise_anchor");
  if (!frozen.noise_low) out.push_back("noise_low");
  if (!frozen.noise_high) out.push_back("noise_high");
  return out;
}

Eigen::MatrixXd assemble_K(const MultiFidelityDataset& data, const HyperParams& hp,
                           const LinearOperatorSpec& op) {
  data.validate();
  hp.validate();
  if (hp.level1.dim() != data.dim())
    throw UsageError("assemble_K: hyperparameter/data dimension mismatch");
  validate_operator(op, data.dim());

  const BlockLayout lay{data.n_anchor(), data.n_low(), data.n_high()};
  const int n = data.total();
  const double rho = hp.rho, rho2 = rho * rho;
  const double noise[3] = {hp.noise_anchor, hp.noise_low, hp.noise_high};

  Eigen::MatrixXd K(n, n);
  for (int j = 0; j < n; ++j) {
    const int bj = lay.block(j);
    const auto xj = block_x(data, bj).row(lay.local(j, bj));
    for (int i = 0; i <= j; ++i) {
      const int bi = lay.block(i);
      const auto xi = block_x(data, bi).row(lay.local(i, bi));
      double v = 0.0;
      if (bi == 0 && bj == 0) {
        v = rho2 * se_eval(xi, xj, hp.level1) + se_eval(xi, xj, hp.level2);
      } else if (bi == 0 && bj == 1) {
        v = rho * op_kernel_uf(op, hp.level1, xi, xj);
      } else if (bi == 0 && bj == 2) {
        v = rho2 * op_kernel_uf(op, hp.level1, xi, xj) +
            op_kernel_uf(op, hp.level2, xi, xj);
      } else if (bi == 1 && bj == 1) {
        v = op_kernel_ff(op, hp.level1, xi, xj);
      } else if (bi == 1 && bj == 2) {
        v = rho * op_kernel_ff(op, hp.level1, xi, xj);
      } else {
        v = rho2 * op_kernel_ff(op, hp.level1, xi, xj) +
            op_kernel_ff(op, hp.level2, xi, xj);
      }
      if (i == j) v += noise[bi];
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

CholeskyResult cholesky_with_jitter(const Eigen::MatrixXd& K) {
  const int n = static_cast<int>(K.rows());
  const double scale = n > 0 ? K.diagonal().mean() : 0.0;
  std::vector<double> rungs{0.0};
  for (double r = 1e-10; r <= 1.0000001e-4; r *= 10.0) rungs.push_back(r * scale);

  Eigen::LLT<Eigen::MatrixXd> llt;
  for (double jitter : rungs) {
    Eigen::MatrixXd Kj = K;
    Kj.diagonal().array() += jitter;
    llt.compute(Kj);
    if (llt.info() == Eigen::Success) {
      CholeskyResult res;
      res.lower = llt.matrixL();
      res.jitter = jitter;
      return res;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K, Eigen::EigenvaluesOnly);
  const double min_eig =
      es.info() == Eigen::Success && n > 0 ? es.eigenvalues().minCoeff() : 0.0;
  throw NumericalError(
      "covariance factorization failed at maximum jitter; smallest eigenvalue "
      "is approximately " +
      std::to_string(min_eig));
}

namespace {

double nlml_from_factor(const CholeskyResult& chol, const Eigen::VectorXd& y,
                        Eigen::VectorXd* alpha_out) {
  const int n = static_cast<int>(y.size());
  Eigen::VectorXd z = chol.lower.triangularView<Eigen::Lower>().solve(y);
  Eigen::VectorXd alpha =
      chol.lower.transpose().triangularView<Eigen::Upper>().solve(z);
  const double log_det_half = chol.lower.diagonal().array().log().sum();
  const double value = 0.5 * y.dot(alpha) + log_det_half +
                       0.5 * n * std::log(2.0 * M_PI);
  if (alpha_out) *alpha_out = std::move(alpha);
  return value;
}

}  // namespace

double nlml(const MultiFidelityDataset& data, const HyperParams& hp,
            const LinearOperatorSpec& op) {
  const Eigen::MatrixXd K = assemble_K(data, hp, op);
  const CholeskyResult chol = cholesky_with_jitter(K);
  return nlml_from_factor(chol, data.stacked_y(), nullptr);
}

namespace detail {

double nlml_value_and_grad(const MultiFidelityDataset& data, const HyperParams& hp,
                           const LinearOperatorSpec& op, const ParamSpace& space,
                           Eigen::VectorXd* grad, double* jitter_out) {
  const Eigen::MatrixXd K = assemble_K(data, hp, op);
  const CholeskyResult chol = cholesky_with_jitter(K);
  if (jitter_out) *jitter_out = chol.jitter;
  const Eigen::VectorXd y = data.stacked_y();
  Eigen::VectorXd alpha;
  const double value = nlml_from_factor(chol, y, &alpha);
  if (!grad) return value;

  const int n = data.total();
  const int dim = space.input_dim;
  const int nt = dim + 1;  // size of one kernel-parameter stack

  // M = K^{-1} - alpha alpha^T; gradient of NLML is 1/2 tr(M dK/dpsi).
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n);
  chol.lower.triangularView<Eigen::Lower>().solveInPlace(M);
  chol.lower.transpose().triangularView<Eigen::Upper>().solveInPlace(M);
  M.noalias() -= alpha * alpha.transpose();

  grad->setZero(space.size());
  auto theta1 = grad->segment(0, nt);
  auto theta2 = grad->segment(nt, nt);
  int k = 2 * nt;
  const int rho_at = space.frozen.rho ? -1 : k;
  if (rho_at >= 0) ++k;
  const int noise_at[3] = {space.frozen.noise_anchor ? -1 : k++,
                           space.frozen.noise_low ? -1 : k++,
                           space.frozen.noise_high ? -1 : k++};

  const BlockLayout lay{data.n_anchor(), data.n_low(), data.n_high()};
  const double rho = hp.rho, rho2 = rho * rho;

  for (int j = 0; j < n; ++j) {
    const int bj = lay.block(j);
    const auto xj = block_x(data, bj).row(lay.local(j, bj));
    for (int i = 0; i <= j; ++i) {
      const int bi = lay.block(i);
      const auto xi = block_x(data, bi).row(lay.local(i, bi));
      const double m = (i == j) ? 0.5 * M(i, i) : M(i, j);

      // Level-1 kernel gradient, its value (first entry), and the scale the
      // block applies to it; level-2 contributes on (a,a), (a,h), (h,h).
      if (bi == 0 && bj == 0) {
        const Eigen::VectorXd g1 = se_grad(xi, xj, hp.level1);
        theta1 += (m * rho2) * g1;
        theta2 += m * se_grad(xi, xj, hp.level2);
        if (rho_at >= 0) (*grad)[rho_at] += m * 2.0 * rho * g1[0];
      } else if (bi == 0 && bj == 1) {
        const Eigen::VectorXd g1 = op_kernel_uf_grad(op, hp.level1, xi, xj);
        theta1 += (m * rho) * g1;
        if (rho_at >= 0) (*grad)[rho_at] += m * g1[0];
      } else if (bi == 0 && bj == 2) {
        const Eigen::VectorXd g1 = op_kernel_uf_grad(op, hp.level1, xi, xj);
        theta1 += (m * rho2) * g1;
        theta2 += m * op_kernel_uf_grad(op, hp.level2, xi, xj);
        if (rho_at >= 0) (*grad)[rho_at] += m * 2.0 * rho * g1[0];
      } else if (bi == 1 && bj == 1) {
        theta1 += m * op_kernel_ff_grad(op, hp.level1, xi, xj);
      } else if (bi == 1 && bj == 2) {
        const Eigen::VectorXd g1 = op_kernel_ff_grad(op, hp.level1, xi, xj);
        theta1 += (m * rho) * g1;
        if (rho_at >= 0) (*grad)[rho_at] += m * g1[0];
      } else {
        const Eigen::VectorXd g1 = op_kernel_ff_grad(op, hp.level1, xi, xj);
        theta1 += (m * rho2) * g1;
        theta2 += m * op_kernel_ff_grad(op, hp.level2, xi, xj);
        if (rho_at >= 0) (*grad)[rho_at] += m * 2.0 * rho * g1[0];
      }
    }
  }

  // Free noise variances enter only their own diagonal; with the shifted-log
  // encoding dv/dpsi = v - floor.
  const double dv[3] = {hp.noise_anchor - space.noise_floor,
                        hp.noise_low - space.noise_floor,
                        hp.noise_high - space.noise_floor};
  for (int i = 0; i < n; ++i) {
    const int b = lay.block(i);
    if (noise_at[b] >= 0) (*grad)[noise_at[b]] += 0.5 * M(i, i) * dv[b];
  }
  return value;
}

}  // namespace detail

Eigen::VectorXd nlml_grad(const MultiFidelityDataset& data, const HyperParams& hp,
                          const LinearOperatorSpec& op, const ParamSpace& space) {
  Eigen::VectorXd g;
  detail::nlml_value_and_grad(data, hp, op, space, &g);
  return g;
}

TrainedModel fit_model(const MultiFidelityDataset& data, const HyperParams& hp,
                       const LinearOperatorSpec& op) {
  const Eigen::MatrixXd K = assemble_K(data, hp, op);
  const CholeskyResult chol = cholesky_with_jitter(K);
  TrainedModel model;
  model.hyperparams = hp;
  model.op = op;
  model.dataset = data;
  model.chol_lower = chol.lower;
  model.jitter = chol.jitter;
  const Eigen::VectorXd y = data.stacked_y();
  Eigen::VectorXd alpha;
  model.nlml_value = nlml_from_factor(chol, y, &alpha);
  model.weights = std::move(alpha);
  return model;
}

namespace {

double guarded_log_var(const Eigen::VectorXd& y, double pooled) {
  if (y.size() < 2) return pooled;
  const double mean = y.mean();
  const double var = (y.array() - mean).square().sum() / (y.size() - 1);
  return std::log(std::max(var, 1e-8));
}

// Median over per-dimension squared distances of all point pairs; 0 entries
// are skipped so duplicated points do not zero the scale.
Eigen::VectorXd median_sq_dist(const MultiFidelityDataset& data) {
  const int dim = data.dim();
  Eigen::MatrixXd all(data.total(), dim);
  int r = 0;
  for (const auto* m : {&data.anchor_x, &data.low_x, &data.high_x}) {
    if (m->rows() > 0) all.middleRows(r, m->rows()) = *m;
    r += static_cast<int>(m->rows());
  }
  Eigen::VectorXd med(dim);
  std::vector<double> d2;
  for (int d = 0; d < dim; ++d) {
    d2.clear();
    for (int i = 0; i < all.rows(); ++i)
      for (int j = i + 1; j < all.rows(); ++j) {
        const double t = all(i, d) - all(j, d);
        if (t != 0.0) d2.push_back(t * t);
      }
    if (d2.empty()) {
      med[d] = 1.0;
    } else {
      auto mid = d2.begin() + d2.size() / 2;
      std::nth_element(d2.begin(), mid, d2.end());
      med[d] = *mid;
    }
  }
  return med;
}

}  // namespace

TrainedModel train(const MultiFidelityDataset& data, const LinearOperatorSpec& op,
                   const TrainConfig& config, TrainReport* report) {
  data.validate();
  validate_operator(op, data.dim());
  if (config.restarts < 1) throw UsageError("train: restarts must be >= 1");

  const int dim = data.dim();
  ParamSpace space;
  space.input_dim = dim;
  space.noise_floor = config.noise_floor;
  space.frozen = config.freeze;

  // Data-derived centers for the randomized initializations.
  const double pooled = guarded_log_var(data.stacked_y(), 0.0);
  const double log_var1 = guarded_log_var(data.low_y, pooled);
  const double log_var2 = guarded_log_var(data.high_y, pooled);
  const double log_var0 = guarded_log_var(data.anchor_y, pooled);
  const Eigen::VectorXd msd = median_sq_dist(data);
  auto noise_center = [&](double log_var) {
    const double target =
        std::max(0.01 * std::exp(log_var), 2.0 * config.noise_floor);
    return std::log(target - config.noise_floor);
  };

  // The marginal likelihood of scarce data is unbounded along rays where one
  // level collapses to a near-delta kernel (variance -> 0, weight -> infinity
  // with their product fixed), which zeroes the prior variance at anchors
  // whose observed value is exactly the prior mean. Optimization is therefore
  // confined to a broad box around the data-derived centers, applied as a
  // smooth tanh squash of the kernel coordinates; nlml itself is untouched.
  const double half_width = 9.0;
  Eigen::VectorXd squash_center = Eigen::VectorXd::Zero(space.size());
  Eigen::VectorXd squash_width =
      Eigen::VectorXd::Constant(space.size(), kInf);
  squash_center[0] = log_var1;
  squash_width[0] = half_width;
  squash_center[dim + 1] = log_var2;
  squash_width[dim + 1] = half_width;
  for (int d = 0; d < dim; ++d) {
    squash_center[1 + d] = squash_center[dim + 2 + d] = -std::log(msd[d]);
    squash_width[1 + d] = squash_width[dim + 2 + d] = half_width;
  }
  const auto squash = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd z = x;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (std::isfinite(squash_width[i]))
        z[i] = squash_center[i] +
               squash_width[i] *
                   std::tanh((x[i] - squash_center[i]) / squash_width[i]);
    return z;
  };

  // A single anchor whose observed value sits at the prior mean rewards
  // shrinking the solution-level variances without bound, and the resulting
  // overconfident posteriors extrapolate the discrepancy level to zero. A
  // weak log-normal prior on the two level variances (centered at the data
  // scale, sd 2 in log space) keeps the estimate honest; it perturbs fits
  // near the data scale by well under a nat. Reported nlml values stay pure.
  const double prior_sd = 2.0;
  const auto log_var_prior = [&](const Eigen::VectorXd& z,
                                 Eigen::VectorXd& g) -> double {
    double pen = 0.0;
    for (const int i : {0, dim + 1}) {
      const double dev = z[i] - squash_center[i];
      pen += 0.5 * dev * dev / (prior_sd * prior_sd);
      g[i] += dev / (prior_sd * prior_sd);
    }
    return pen;
  };

  GradObjective objective = [&](const Eigen::VectorXd& v,
                                Eigen::VectorXd& g) -> double {
    try {
      const Eigen::VectorXd z = squash(v);
      const HyperParams hp = space.decode(z);
      double f = detail::nlml_value_and_grad(data, hp, op, space, &g);
      f += log_var_prior(z, g);
      for (Eigen::Index i = 0; i < v.size(); ++i)
        if (std::isfinite(squash_width[i])) {
          const double th =
              std::tanh((v[i] - squash_center[i]) / squash_width[i]);
          g[i] *= 1.0 - th * th;
        }
      return f;
    } catch (const NumericalError&) {
    } catch (const UsageError&) {
    }
    g.setZero(space.size());
    return kInf;
  };

  LbfgsOptions opt;
  opt.memory = config.lbfgs_memory;
  opt.max_iterations = config.max_iterations;
  opt.grad_tolerance = config.tolerance;

  TrainReport local;
  TrainReport& rep = report ? *report : local;
  rep = TrainReport{};
  rep.restart_nlml.assign(config.restarts, kInf);

  // Besides the boxed collapse above, a spurious interior stationary point
  // survives where the cross-correlation is driven to zero and the level-2
  // variance far below the data scale; its only benefit is zeroing the prior
  // variance at the anchor locations, and it predicts noise everywhere.
  // Restarts that end there are kept only as a fallback.
  const auto degenerate = [&](const HyperParams& hp) {
    return !space.frozen.rho.has_value() && std::abs(hp.rho) < 0.05 &&
           hp.level2.variance < std::exp(log_var2 - 5.0);
  };

  Eigen::VectorXd best_x;
  double best_f = kInf;
  LbfgsResult best_res;
  int best_restart = -1;
  Eigen::VectorXd fallback_x;
  double fallback_f = kInf;
  LbfgsResult fallback_res;
  int fallback_restart = -1;

  for (int restart = 0; restart < config.restarts; ++restart) {
    std::seed_seq seq{static_cast<std::uint64_t>(config.seed),
                      static_cast<std::uint64_t>(restart)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> rho_init(0.5, 1.5);

    // Fixed draw order; frozen entries are drawn too, then discarded by the
    // encoding, so the free draws do not depend on what is frozen.
    HyperParams hp0;
    hp0.level1.variance = std::exp(log_var1 + normal(rng));
    hp0.level1.ard_weights.resize(dim);
    for (int d = 0; d < dim; ++d)
      hp0.level1.ard_weights[d] = std::exp(-std::log(msd[d]) + normal(rng));
    hp0.level2.variance = std::exp(log_var2 + normal(rng));
    hp0.level2.ard_weights.resize(dim);
    for (int d = 0; d < dim; ++d)
      hp0.level2.ard_weights[d] = std::exp(-std::log(msd[d]) + normal(rng));
    hp0.rho = rho_init(rng);
    hp0.noise_anchor =
        config.noise_floor + std::exp(noise_center(log_var0) + normal(rng));
    hp0.noise_low =
        config.noise_floor + std::exp(noise_center(log_var1) + normal(rng));
    hp0.noise_high =
        config.noise_floor + std::exp(noise_center(log_var2) + normal(rng));

    const LbfgsResult res = lbfgs_minimize(objective, space.encode(hp0), opt);
    rep.restart_nlml[restart] = res.f;
    const bool bad =
        !std::isfinite(res.f) || degenerate(space.decode(squash(res.x)));
    if (!bad && res.f < best_f) {
      best_f = res.f;
      best_x = res.x;
      best_res = res;
      best_restart = restart;
    }
    if (res.f < fallback_f) {
      fallback_f = res.f;
      fallback_x = res.x;
      fallback_res = res;
      fallback_restart = restart;
    }
  }

  if (best_restart < 0) {
    best_f = fallback_f;
    best_x = fallback_x;
    best_res = fallback_res;
    best_restart = fallback_restart;
  }
  rep.best_restart = best_restart;

  if (!std::isfinite(best_f))
    throw NumericalError("training failed: no restart produced a finite "
                         "objective value");

  rep.iterations = best_res.iterations;
  rep.grad_max_norm = best_res.grad.lpNorm<Eigen::Infinity>();
  rep.converged = best_res.converged;

  TrainedModel model = fit_model(data, space.decode(squash(best_x)), op);
  rep.jitter = model.jitter;
  return model;
}

}  // namespace mfgp
