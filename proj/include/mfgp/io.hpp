#ifndef MFGP_IO_HPP
#define MFGP_IO_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mfgp/model.hpp"

namespace mfgp {

// Scientific notation with 17 significant digits; round-trips doubles.
std::string format_float(double value);

// Header row then one comma-separated line per matrix row, newline
// terminated. Floating columns use format_float.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& rows);

Eigen::MatrixXd read_csv(const std::string& path, int expected_cols = -1);

struct ObservationsCsv {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

// Columns x_1..x_D, y. An empty table (header only) is valid.
ObservationsCsv read_observations_csv(const std::string& path);
void write_observations_csv(const std::string& path, const Eigen::MatrixXd& x,
                            const Eigen::VectorXd& y);

nlohmann::json operator_to_json(const LinearOperatorSpec& op);
LinearOperatorSpec operator_from_json(const nlohmann::json& j);

nlohmann::json hyperparams_to_json(const HyperParams& hp);
HyperParams hyperparams_from_json(const nlohmann::json& j);

// Self-describing versioned JSON model file; the covariance factorization
// is rebuilt on load.
void save_model(const std::string& path, const TrainedModel& model);
TrainedModel load_model(const std::string& path);

}  // namespace mfgp

#endif  // MFGP_IO_HPP
