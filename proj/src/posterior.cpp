#include "mfgp/posterior.hpp"

#include <cmath>

#include "mfgp/benchmarks.hpp"

namespace mfgp {
namespace {

void check_queries(const TrainedModel& model, const Eigen::MatrixXd& queries) {
  if (queries.rows() > 0 && queries.cols() != model.dataset.dim())
    throw UsageError("predict: query dimension does not match the training data");
  if (queries.rows() > 0 && !queries.allFinite())
    throw UsageError("predict: queries contain non-finite values");
}

double clamp_variance(double raw) {
  if (raw < -1e-10)
    throw NumericalError("posterior variance " + std::to_string(raw) +
                         " is negative beyond the numerical tolerance");
  return std::max(raw, 0.0);
}

// Shared solve: given the cross-covariance vector c and prior variance,
// mean = c . weights, variance = prior - ||lower \ c||^2.
void push_prediction(const TrainedModel& model, const Eigen::VectorXd& cross,
                     double prior, Eigen::Index q, PosteriorPrediction* out) {
  out->mean[q] = cross.dot(model.weights);
  const Eigen::VectorXd z =
      model.chol_lower.triangularView<Eigen::Lower>().solve(cross);
  out->variance[q] = clamp_variance(prior - z.squaredNorm());
}

}  // namespace

PosteriorPrediction predict_u(const TrainedModel& model,
                              const Eigen::MatrixXd& queries) {
  if (model.dataset.n_anchor() < 1)
    throw UsageError(
        "predict_u: the training set has no anchor observations, so the "
        "solution level is undetermined");
  check_queries(model, queries);
  const auto& d = model.dataset;
  const auto& hp = model.hyperparams;
  const double rho = hp.rho, rho2 = rho * rho;
  const double prior = rho2 * hp.level1.variance + hp.level2.variance;

  PosteriorPrediction out;
  out.mean.resize(queries.rows());
  out.variance.resize(queries.rows());
  Eigen::VectorXd cross(d.total());
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    const auto x = queries.row(q);
    int k = 0;
    for (int j = 0; j < d.n_anchor(); ++j, ++k)
      cross[k] = rho2 * se_eval(x, d.anchor_x.row(j), hp.level1) +
                 se_eval(x, d.anchor_x.row(j), hp.level2);
    for (int j = 0; j < d.n_low(); ++j, ++k)
      cross[k] = rho * op_kernel_uf(model.op, hp.level1, x, d.low_x.row(j));
    for (int j = 0; j < d.n_high(); ++j, ++k)
      cross[k] = rho2 * op_kernel_uf(model.op, hp.level1, x, d.high_x.row(j)) +
                 op_kernel_uf(model.op, hp.level2, x, d.high_x.row(j));
    push_prediction(model, cross, prior, q, &out);
  }
  return out;
}

PosteriorPrediction predict_f(const TrainedModel& model,
                              const Eigen::MatrixXd& queries) {
  check_queries(model, queries);
  const auto& d = model.dataset;
  const auto& hp = model.hyperparams;
  const double rho = hp.rho, rho2 = rho * rho;

  PosteriorPrediction out;
  out.mean.resize(queries.rows());
  out.variance.resize(queries.rows());
  Eigen::VectorXd cross(d.total());
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    const auto x = queries.row(q);
    // The operator acts on the f side, which is the query here, so the
    // anchor entries put the query in the second slot.
    int k = 0;
    for (int j = 0; j < d.n_anchor(); ++j, ++k)
      cross[k] = rho2 * op_kernel_uf(model.op, hp.level1, d.anchor_x.row(j), x) +
                 op_kernel_uf(model.op, hp.level2, d.anchor_x.row(j), x);
    for (int j = 0; j < d.n_low(); ++j, ++k)
      cross[k] = rho * op_kernel_ff(model.op, hp.level1, x, d.low_x.row(j));
    for (int j = 0; j < d.n_high(); ++j, ++k)
      cross[k] = rho2 * op_kernel_ff(model.op, hp.level1, x, d.high_x.row(j)) +
                 op_kernel_ff(model.op, hp.level2, x, d.high_x.row(j));
    const double prior = rho2 * op_kernel_ff(model.op, hp.level1, x, x) +
                         op_kernel_ff(model.op, hp.level2, x, x);
    push_prediction(model, cross, prior, q, &out);
  }
  return out;
}

Selection select_next(const TrainedModel& model,
                      const Eigen::MatrixXd& candidates) {
  if (candidates.rows() == 0)
    throw UsageError("select_next: candidate list is empty");
  const PosteriorPrediction pred = predict_f(model, candidates);
  Selection sel;
  sel.index = 0;
  sel.variance = pred.variance[0];
  for (Eigen::Index i = 1; i < pred.variance.size(); ++i) {
    if (pred.variance[i] > sel.variance) {
      sel.variance = pred.variance[i];
      sel.index = i;
    }
  }
  sel.point = candidates.row(sel.index);
  return sel;
}

ActiveLearningResult run_active_loop(
    const MultiFidelityDataset& initial, const LinearOperatorSpec& op,
    int budget, const TrainConfig& train_config,
    const Eigen::MatrixXd& candidates,
    const std::function<double(const Eigen::RowVectorXd&)>& acquire,
    const ActiveEvalSet* eval) {
  if (budget < 0) throw UsageError("active loop: budget must be >= 0");
  if (candidates.rows() == 0)
    throw UsageError("active loop: candidate grid is empty");

  ActiveLearningResult result;
  MultiFidelityDataset data = initial;
  for (int it = 0; it <= budget; ++it) {
    TrainConfig cfg = train_config;
    cfg.seed = train_config.seed + static_cast<unsigned long long>(it);
    TrainedModel model;
    try {
      model = train(data, op, cfg);
    } catch (const NumericalError& err) {
      result.error = err.what();
      return result;
    }

    ActiveLearningStep step;
    step.iteration = it;
    step.n_anchor = data.n_anchor();
    step.n_low = data.n_low();
    step.n_high = data.n_high();
    step.nlml = model.nlml_value;
    if (eval && eval->points.rows() > 0) {
      if (eval->exact_u.size() > 0) {
        const PosteriorPrediction pu = predict_u(model, eval->points);
        step.error_u = rel_l2_error(pu.mean, eval->exact_u);
      }
      if (eval->exact_f.size() > 0) {
        const PosteriorPrediction pf = predict_f(model, eval->points);
        step.error_f = rel_l2_error(pf.mean, eval->exact_f);
      }
    }
    step.selected = select_next(model, candidates);
    result.history.push_back(std::move(step));
    result.model = std::move(model);

    if (it == budget) break;
    const Eigen::RowVectorXd x_new = result.history.back().selected.point;
    const double y_new = acquire(x_new);
    data.high_x.conservativeResize(data.high_x.rows() + 1, Eigen::NoChange);
    data.high_x.row(data.high_x.rows() - 1) = x_new;
    data.high_y.conservativeResize(data.high_y.size() + 1);
    data.high_y[data.high_y.size() - 1] = y_new;
  }
  return result;
}

}  // namespace mfgp
