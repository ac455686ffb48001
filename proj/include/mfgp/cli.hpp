#ifndef MFGP_CLI_HPP
#define MFGP_CLI_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mfgp/model.hpp"
#include "mfgp/operators.hpp"

namespace mfgp {

struct RunConfig {
  std::string command;  // train, predict, active-learn, benchmark, kernel-check
  std::string problem;  // named problem; alternative to data paths
  std::optional<LinearOperatorSpec> op;

  struct DataPaths {
    std::string anchors, low, high;  // observation CSVs
    std::string queries;             // prediction inputs
    std::string model;               // trained model to load
  } data;

  TrainConfig train;

  int eval_grid = 0;            // points per dimension, 0 = problem default
  Eigen::MatrixXd eval_bounds;  // dim x 2, empty = problem domain

  int active_budget = 20;
  int active_grid = 30;

  std::vector<std::uint64_t> seeds;  // benchmark replicates
  std::uint64_t seed = 0;
  std::string output_dir = ".";
};

RunConfig parse_config_json(const nlohmann::json& j);
RunConfig parse_config(const std::string& path);

// Canonical form: parse(serialize(parse(x))) == parse(x).
nlohmann::json serialize_config(const RunConfig& config);

// Executes the configured command, writing artifacts under output_dir.
// Throws UsageError / NumericalError; the binary maps them to exit codes
// 1 and 2.
void run(const RunConfig& config);

}  // namespace mfgp

#endif  // MFGP_CLI_HPP
