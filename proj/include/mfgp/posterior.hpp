#ifndef MFGP_POSTERIOR_HPP
#define MFGP_POSTERIOR_HPP

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mfgp/model.hpp"

namespace mfgp {

struct PosteriorPrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

// Posterior over the solution u at the query points. Needs at least one
// anchor observation in the training set; without one the solution level is
// only determined up to the null space of the operator.
PosteriorPrediction predict_u(const TrainedModel& model,
                              const Eigen::MatrixXd& queries);

// Posterior over the forcing f at the query points.
PosteriorPrediction predict_f(const TrainedModel& model,
                              const Eigen::MatrixXd& queries);

// Candidate with the largest posterior forcing variance; ties resolve to the
// lowest index.
struct Selection {
  Eigen::Index index = -1;
  Eigen::RowVectorXd point;
  double variance = 0.0;
};

Selection select_next(const TrainedModel& model,
                      const Eigen::MatrixXd& candidates);

// Optional ground truth for tracking errors along the acquisition loop.
struct ActiveEvalSet {
  Eigen::MatrixXd points;
  Eigen::VectorXd exact_u;  // empty when unknown
  Eigen::VectorXd exact_f;  // empty when unknown
};

struct ActiveLearningStep {
  int iteration = 0;
  int n_anchor = 0, n_low = 0, n_high = 0;  // sizes the model was trained on
  double nlml = 0.0;
  double error_u = std::numeric_limits<double>::quiet_NaN();
  double error_f = std::numeric_limits<double>::quiet_NaN();
  Selection selected;  // would-be acquisition recorded for the last entry too
};

struct ActiveLearningResult {
  std::vector<ActiveLearningStep> history;
  std::optional<TrainedModel> model;  // model behind the last history entry
  std::string error;                  // nonempty if the loop stopped early
};

// Max-variance acquisition loop. Each round trains on the current data,
// records errors against the eval set, picks the candidate with the largest
// forcing variance, and appends the observation returned by `acquire` to the
// high fidelity block. Runs `budget` acquisitions; the history has one extra
// trailing entry for the final model, whose selection is recorded but not
// acquired. On a training failure the history collected so far is returned
// with `error` set.
ActiveLearningResult run_active_loop(
    const MultiFidelityDataset& initial, const LinearOperatorSpec& op,
    int budget, const TrainConfig& train_config,
    const Eigen::MatrixXd& candidates,
    const std::function<double(const Eigen::RowVectorXd&)>& acquire,
    const ActiveEvalSet* eval = nullptr);

}  // namespace mfgp

#endif  // MFGP_POSTERIOR_HPP
