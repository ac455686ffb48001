#include "mfgp/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <random>

#include "mfgp/benchmarks.hpp"
#include "mfgp/io.hpp"
#include "mfgp/oracle.hpp"
#include "mfgp/posterior.hpp"

namespace mfgp {
namespace {

using json = nlohmann::json;

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    bool known = false;
    for (const char* a : allowed)
      if (key == a) {
        known = true;
        break;
      }
    if (!known)
      throw UsageError("config" + (where.empty() ? "" : "." + where) +
                       ": unknown key '" + key + "'");
  }
}

const json& field(const json& obj, const std::string& key) { return obj.at(key); }

double num_at(const json& obj, const std::string& key) {
  const json& v = field(obj, key);
  if (!v.is_number())
    throw UsageError("config: '" + key + "' must be a number");
  return v.get<double>();
}

int int_at(const json& obj, const std::string& key) {
  const json& v = field(obj, key);
  if (!v.is_number_integer())
    throw UsageError("config: '" + key + "' must be an integer");
  return v.get<int>();
}

std::uint64_t uint_at(const json& obj, const std::string& key) {
  const json& v = field(obj, key);
  if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0))
    throw UsageError("config: '" + key + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

std::string str_at(const json& obj, const std::string& key) {
  const json& v = field(obj, key);
  if (!v.is_string())
    throw UsageError("config: '" + key + "' must be a string");
  return v.get<std::string>();
}

void parse_freeze_entry(FrozenParams& freeze, const std::string& name,
                        double value) {
  if (name == "rho")
    freeze.rho = value;
  else if (name == "noise_anchor")
    freeze.noise_anchor = value;
  else if (name == "noise_low")
    freeze.noise_low = value;
  else if (name == "noise_high")
    freeze.noise_high = value;
  else
    throw UsageError("config: unknown frozen parameter '" + name +
                     "'; expected rho, noise_anchor, noise_low, or noise_high");
}

FrozenParams parse_freeze(const json& j) {
  FrozenParams freeze;
  if (j.is_object()) {
    for (const auto& [key, value] : j.items()) {
      if (!value.is_number())
        throw UsageError("config: frozen value for '" + key +
                         "' must be a number");
      parse_freeze_entry(freeze, key, value.get<double>());
    }
  } else if (j.is_array()) {
    for (const auto& entry : j) {
      if (!entry.is_string())
        throw UsageError(
            "config: freeze array entries must be 'name=value' strings");
      const std::string s = entry.get<std::string>();
      const auto eq = s.find('=');
      if (eq == std::string::npos)
        throw UsageError("config: freeze entry '" + s +
                         "' is not of the form name=value");
      const std::string name = s.substr(0, eq);
      double value = 0.0;
      try {
        size_t used = 0;
        value = std::stod(s.substr(eq + 1), &used);
        if (used != s.size() - eq - 1) throw std::invalid_argument(s);
      } catch (const std::exception&) {
        throw UsageError("config: freeze entry '" + s +
                         "' has a malformed value");
      }
      parse_freeze_entry(freeze, name, value);
    }
  } else {
    throw UsageError(
        "config: 'freeze' must be an object or an array of name=value strings");
  }
  return freeze;
}

FrozenParams merge_freeze(const FrozenParams& base,
                          const FrozenParams& override_) {
  FrozenParams out = base;
  if (override_.rho) out.rho = override_.rho;
  if (override_.noise_anchor) out.noise_anchor = override_.noise_anchor;
  if (override_.noise_low) out.noise_low = override_.noise_low;
  if (override_.noise_high) out.noise_high = override_.noise_high;
  return out;
}

json freeze_to_json(const FrozenParams& freeze) {
  json j = json::object();
  if (freeze.rho) j["rho"] = *freeze.rho;
  if (freeze.noise_anchor) j["noise_anchor"] = *freeze.noise_anchor;
  if (freeze.noise_low) j["noise_low"] = *freeze.noise_low;
  if (freeze.noise_high) j["noise_high"] = *freeze.noise_high;
  return j;
}

json bounds_to_json(const Eigen::MatrixXd& bounds) {
  json rows = json::array();
  for (Eigen::Index d = 0; d < bounds.rows(); ++d)
    rows.push_back(json::array({bounds(d, 0), bounds(d, 1)}));
  return rows;
}

Eigen::MatrixXd bounds_from_json(const json& j) {
  if (!j.is_array())
    throw UsageError("config: 'bounds' must be an array of [lower, upper] pairs");
  Eigen::MatrixXd bounds(static_cast<Eigen::Index>(j.size()), 2);
  for (Eigen::Index d = 0; d < bounds.rows(); ++d) {
    const auto& row = j.at(d);
    if (!row.is_array() || row.size() != 2 || !row.at(0).is_number() ||
        !row.at(1).is_number())
      throw UsageError("config: 'bounds' rows must be [lower, upper] numbers");
    bounds(d, 0) = row.at(0).get<double>();
    bounds(d, 1) = row.at(1).get<double>();
    if (!(bounds(d, 0) < bounds(d, 1)))
      throw UsageError("config: 'bounds' rows need lower < upper");
  }
  return bounds;
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

void write_report(const RunConfig& config, json report) {
  report["config"] = serialize_config(config);
  const std::string path = config.output_dir + "/report.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot open '" + path + "' for writing");
  out << report.dump(2) << "\n";
}

// Representative ARD weight used when no trained kernel is available: the
// benchmark forcings vary on the scale of sin(2 pi x), where the fitted
// weight lands near (2 pi)^2.
constexpr double kDriftProbeWeight = 40.0;

std::vector<std::pair<double, double>> drift_pairs() {
  std::vector<std::pair<double, double>> pairs;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      pairs.emplace_back(0.1 + 0.2 * i, 0.1 + 0.2 * j);
  return pairs;
}

void note_fractional_drift(const LinearOperatorSpec& op,
                           const KernelParams& level1, json& warnings) {
  const auto* frac = std::get_if<FractionalRL>(&op);
  if (!frac) return;
  const double drift = fractional_refinement_drift(frac->alpha, level1,
                                                   frac->quadrature, drift_pairs());
  if (drift > 1e-6)
    warnings.push_back(
        "fractional quadrature not converged: doubling the rule moved kernel "
        "values by a relative " +
        format_float(drift));
}

KernelParams drift_probe_params(int dim) {
  KernelParams p;
  p.variance = 1.0;
  p.ard_weights = Eigen::VectorXd::Constant(dim, kDriftProbeWeight);
  return p;
}

MultiFidelityDataset load_dataset(const RunConfig& config, int dim_hint) {
  MultiFidelityDataset data;
  int dim = dim_hint;
  auto read_block = [&](const std::string& path, Eigen::MatrixXd& x,
                        Eigen::VectorXd& y) {
    if (path.empty()) return;
    const ObservationsCsv obs = read_observations_csv(path);
    if (dim > 0 && obs.x.cols() != dim)
      throw UsageError(path + ": expected " + std::to_string(dim) +
                       " coordinate columns, found " +
                       std::to_string(obs.x.cols()));
    if (dim <= 0) dim = static_cast<int>(obs.x.cols());
    x = obs.x;
    y = obs.y;
  };
  read_block(config.data.anchors, data.anchor_x, data.anchor_y);
  read_block(config.data.low, data.low_x, data.low_y);
  read_block(config.data.high, data.high_x, data.high_y);
  if (dim <= 0)
    throw UsageError("config: no observation files given and no problem named");
  auto fix_empty = [&](Eigen::MatrixXd& x) {
    if (x.cols() != dim) x.resize(0, dim);
  };
  fix_empty(data.anchor_x);
  fix_empty(data.low_x);
  fix_empty(data.high_x);
  data.validate();
  return data;
}

void run_train(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  json warnings = json::array();
  json notes = json::array();

  MultiFidelityDataset data;
  LinearOperatorSpec op;
  TrainConfig cfg = config.train;
  if (!config.problem.empty()) {
    const ProblemSpec problem = make_problem(config.problem);
    data = generate_observations(problem, config.seed);
    op = config.op ? *config.op : problem.op;
    cfg.freeze = merge_freeze(problem.default_freeze, config.train.freeze);
    if (config.problem == "adr1d")
      notes.push_back(
          "adr1d ships the solution/forcing pair that satisfies the operator "
          "identity check; commonly printed closed forms differ in the sine "
          "frequency of the solution");
  } else {
    if (!config.op)
      throw UsageError("config: train needs an operator when no problem is named");
    op = *config.op;
    data = load_dataset(config, operator_dim(op));
  }

  TrainReport train_report;
  const TrainedModel model = train(data, op, cfg, &train_report);
  note_fractional_drift(op, model.hyperparams.level1, warnings);

  save_model(config.output_dir + "/model.json", model);

  json report;
  report["command"] = "train";
  report["nlml"] = model.nlml_value;
  report["hyperparams"] = hyperparams_to_json(model.hyperparams);
  report["jitter"] = model.jitter;
  report["best_restart"] = train_report.best_restart;
  report["restart_nlml"] = train_report.restart_nlml;
  report["iterations"] = train_report.iterations;
  report["converged"] = train_report.converged;
  report["wall_time_seconds"] = elapsed_seconds(start);
  report["warnings"] = warnings;
  report["notes"] = notes;
  write_report(config, report);
}

void run_predict(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  if (config.data.model.empty())
    throw UsageError("config: predict needs data.model");
  if (config.data.queries.empty())
    throw UsageError("config: predict needs data.queries");
  const TrainedModel model = load_model(config.data.model);
  const int dim = model.dataset.dim();
  const Eigen::MatrixXd queries = read_csv(config.data.queries, dim);

  const PosteriorPrediction pu = predict_u(model, queries);
  const PosteriorPrediction pf = predict_f(model, queries);

  std::vector<std::string> header;
  for (int d = 0; d < dim; ++d) header.push_back("x_" + std::to_string(d + 1));
  header.insert(header.end(), {"u_mean", "u_std", "f_mean", "f_std"});
  Eigen::MatrixXd table(queries.rows(), dim + 4);
  table.leftCols(dim) = queries;
  table.col(dim) = pu.mean;
  table.col(dim + 1) = pu.variance.cwiseSqrt();
  table.col(dim + 2) = pf.mean;
  table.col(dim + 3) = pf.variance.cwiseSqrt();
  write_csv(config.output_dir + "/predictions.csv", header, table);

  json warnings = json::array();
  note_fractional_drift(model.op, model.hyperparams.level1, warnings);
  json report;
  report["command"] = "predict";
  report["query_count"] = queries.rows();
  report["wall_time_seconds"] = elapsed_seconds(start);
  report["warnings"] = warnings;
  report["notes"] = json::array();
  write_report(config, report);
}

void run_active_learn(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  if (config.problem.empty())
    throw UsageError("config: active-learn needs a named problem");
  const ProblemSpec problem = make_problem(config.problem);

  const ActiveLearningResult result = run_problem_active_loop(
      problem, config.active_budget, config.train, config.seed,
      config.active_grid);

  std::ofstream out(config.output_dir + "/active_history.csv",
                    std::ios::binary);
  if (!out)
    throw UsageError("cannot open active_history.csv for writing");
  out << "iteration,n2";
  for (int d = 0; d < problem.dim; ++d) out << ",x*_" << d + 1;
  out << ",max_Vf,rel_err_u,rel_err_f\n";
  for (const auto& step : result.history) {
    out << step.iteration << "," << step.n_high;
    for (int d = 0; d < problem.dim; ++d)
      out << "," << format_float(step.selected.point[d]);
    out << "," << format_float(step.selected.variance) << ","
        << format_float(step.error_u) << "," << format_float(step.error_f)
        << "\n";
  }
  out.close();

  if (result.model) save_model(config.output_dir + "/model.json", *result.model);

  json warnings = json::array();
  json notes = json::array();
  if (result.model)
    note_fractional_drift(problem.op, result.model->hyperparams.level1,
                          warnings);
  if (config.problem == "adr1d")
    notes.push_back(
        "adr1d ships the solution/forcing pair that satisfies the operator "
        "identity check; commonly printed closed forms differ in the sine "
        "frequency of the solution");
  json report;
  report["command"] = "active-learn";
  report["iterations_recorded"] = result.history.size();
  if (!result.history.empty()) {
    report["final_rel_err_u"] = result.history.back().error_u;
    report["final_rel_err_f"] = result.history.back().error_f;
    report["final_nlml"] = result.history.back().nlml;
  }
  if (!result.error.empty()) report["error"] = result.error;
  report["wall_time_seconds"] = elapsed_seconds(start);
  report["warnings"] = warnings;
  report["notes"] = notes;
  write_report(config, report);

  if (!result.error.empty()) throw NumericalError(result.error);
}

void run_benchmark_cmd(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  if (config.problem.empty())
    throw UsageError("config: benchmark needs a named problem");
  const ProblemSpec problem = make_problem(config.problem);

  std::vector<std::uint64_t> seeds = config.seeds;
  if (seeds.empty()) seeds.push_back(config.seed);

  std::vector<BenchmarkRunResult> results;
  results.reserve(seeds.size());
  for (const std::uint64_t s : seeds)
    results.push_back(run_benchmark(problem, s, config.train));

  std::ofstream out(config.output_dir + "/benchmark_errors.csv",
                    std::ios::binary);
  if (!out)
    throw UsageError("cannot open benchmark_errors.csv for writing");
  out << "seed,err_u_multi,err_f_multi,err_u_single,err_f_single,nlml_multi,"
         "nlml_single,coverage3_multi\n";
  for (size_t i = 0; i < seeds.size(); ++i) {
    const auto& r = results[i];
    out << seeds[i] << "," << format_float(r.err_u_multi) << ","
        << format_float(r.err_f_multi) << "," << format_float(r.err_u_single)
        << "," << format_float(r.err_f_single) << ","
        << format_float(r.nlml_multi) << "," << format_float(r.nlml_single)
        << "," << format_float(r.coverage3_multi) << "\n";
  }
  out.close();

  auto median_of = [&](auto member) {
    std::vector<double> v;
    for (const auto& r : results) v.push_back(r.*member);
    auto mid = v.begin() + v.size() / 2;
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
  };

  json warnings = json::array();
  note_fractional_drift(problem.op, drift_probe_params(problem.dim), warnings);
  json notes = json::array();
  if (config.problem == "adr1d")
    notes.push_back(
        "adr1d ships the solution/forcing pair that satisfies the operator "
        "identity check; commonly printed closed forms differ in the sine "
        "frequency of the solution");
  json report;
  report["command"] = "benchmark";
  report["problem"] = config.problem;
  report["seed_count"] = seeds.size();
  report["median_err_u_multi"] = median_of(&BenchmarkRunResult::err_u_multi);
  report["median_err_f_multi"] = median_of(&BenchmarkRunResult::err_f_multi);
  report["median_err_u_single"] = median_of(&BenchmarkRunResult::err_u_single);
  report["median_err_f_single"] = median_of(&BenchmarkRunResult::err_f_single);
  report["median_coverage3_multi"] =
      median_of(&BenchmarkRunResult::coverage3_multi);
  report["wall_time_seconds"] = elapsed_seconds(start);
  report["warnings"] = warnings;
  report["notes"] = notes;
  write_report(config, report);
}

struct KernelCheckRow {
  std::string op_name, quantity;
  double max_rel_error, tolerance;
  bool pass;
};

KernelCheckRow oracle_row(const LinearOperatorSpec& op,
                          const std::string& quantity, OracleSide side,
                          std::uint64_t seed) {
  const int dim = operator_dim(op) > 0 ? operator_dim(op) : 1;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(0.15, 0.9);
  std::uniform_real_distribution<double> logw(-0.5, 0.8);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    KernelParams params;
    params.variance = std::exp(logw(rng));
    params.ard_weights = Eigen::VectorXd::NullaryExpr(
        dim, [&](Eigen::Index) { return std::exp(logw(rng)); });
    Eigen::VectorXd x(dim), xp(dim);
    for (int d = 0; d < dim; ++d) {
      x[d] = pos(rng);
      xp[d] = pos(rng);
    }
    const double closed =
        side == OracleSide::both
            ? op_kernel_ff(op, params, x.transpose(), xp.transpose())
            : op_kernel_uf(op, params, x.transpose(), xp.transpose());
    const double numeric = op_kernel_numeric_oracle(op, params, x, xp, side);
    const double rel = std::abs(closed - numeric) /
                       (std::max(std::abs(closed), std::abs(numeric)) + 1e-12);
    worst = std::max(worst, rel);
  }
  return {operator_name(op), quantity, worst, 1e-4, worst <= 1e-4};
}

void run_kernel_check(const RunConfig& config) {
  std::vector<KernelCheckRow> rows;
  const std::vector<LinearOperatorSpec> catalog = {
      Identity{}, FirstDerivative1D{}, IntegroDifferential1D{0.0},
      Laplacian{2}, AdvectionDiffusionReaction{}};
  std::uint64_t salt = config.seed;
  for (const auto& op : catalog) {
    rows.push_back(oracle_row(op, "uf", OracleSide::right, salt++));
    rows.push_back(oracle_row(op, "ff", OracleSide::both, salt++));
  }
  for (const double alpha : {0.3, 1.5}) {
    KernelParams params = drift_probe_params(1);
    const QuadratureSpec quad = quadrature_for_alpha(alpha, kDriftProbeWeight);
    const double drift =
        fractional_refinement_drift(alpha, params, quad, drift_pairs());
    KernelCheckRow row;
    row.op_name = "fractional(alpha=" + format_float(alpha) + ")";
    row.quantity = "refinement_drift";
    row.max_rel_error = drift;
    row.tolerance = 1e-6;
    row.pass = drift <= 1e-6;
    rows.push_back(row);
  }

  std::ofstream out(config.output_dir + "/kernel_check.csv", std::ios::binary);
  if (!out) throw UsageError("cannot open kernel_check.csv for writing");
  out << "operator,quantity,max_rel_error,tolerance,status\n";
  bool all_pass = true;
  std::string worst_case;
  for (const auto& row : rows) {
    out << row.op_name << "," << row.quantity << ","
        << format_float(row.max_rel_error) << "," << format_float(row.tolerance)
        << "," << (row.pass ? "pass" : "fail") << "\n";
    if (!row.pass) {
      all_pass = false;
      if (worst_case.empty()) worst_case = row.op_name + " " + row.quantity;
    }
  }
  out.close();

  json report;
  report["command"] = "kernel-check";
  report["all_pass"] = all_pass;
  report["warnings"] = json::array();
  report["notes"] = json::array();
  write_report(config, report);

  if (!all_pass)
    throw NumericalError("kernel check failed: closed form and oracle disagree "
                         "beyond tolerance for " + worst_case);
}

}  // namespace

RunConfig parse_config_json(const json& j) {
  if (!j.is_object()) throw UsageError("config: top level must be an object");
  check_keys(j, "", {"command", "problem", "operator", "data", "train", "eval",
                     "active", "seeds", "seed", "output_dir"});
  RunConfig config;
  if (!j.contains("command"))
    throw UsageError("config: missing required key 'command'");
  config.command = str_at(j, "command");
  const bool known_command =
      config.command == "train" || config.command == "predict" ||
      config.command == "active-learn" || config.command == "benchmark" ||
      config.command == "kernel-check";
  if (!known_command)
    throw UsageError("config: unknown command '" + config.command +
                     "'; expected train, predict, active-learn, benchmark, or "
                     "kernel-check");

  if (j.contains("problem")) config.problem = str_at(j, "problem");
  if (j.contains("operator")) {
    const LinearOperatorSpec op = operator_from_json(j.at("operator"));
    validate_operator(op, operator_dim(op) > 0 ? operator_dim(op) : 1);
    config.op = op;
  }
  if (j.contains("seed")) config.seed = uint_at(j, "seed");

  if (j.contains("data")) {
    const json& d = j.at("data");
    check_keys(d, "data", {"anchors", "low", "high", "queries", "model"});
    if (d.contains("anchors")) config.data.anchors = str_at(d, "anchors");
    if (d.contains("low")) config.data.low = str_at(d, "low");
    if (d.contains("high")) config.data.high = str_at(d, "high");
    if (d.contains("queries")) config.data.queries = str_at(d, "queries");
    if (d.contains("model")) config.data.model = str_at(d, "model");
  }

  config.train.seed = config.seed;
  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t, "train",
               {"restarts", "seed", "max_iterations", "tolerance", "freeze",
                "noise_floor"});
    if (t.contains("restarts")) config.train.restarts = int_at(t, "restarts");
    if (t.contains("seed")) config.train.seed = uint_at(t, "seed");
    if (t.contains("max_iterations"))
      config.train.max_iterations = int_at(t, "max_iterations");
    if (t.contains("tolerance")) config.train.tolerance = num_at(t, "tolerance");
    if (t.contains("noise_floor"))
      config.train.noise_floor = num_at(t, "noise_floor");
    if (t.contains("freeze")) config.train.freeze = parse_freeze(t.at("freeze"));
    if (config.train.restarts < 1)
      throw UsageError("config: train.restarts must be >= 1");
    if (config.train.max_iterations < 1)
      throw UsageError("config: train.max_iterations must be >= 1");
    if (!(config.train.tolerance > 0.0))
      throw UsageError("config: train.tolerance must be > 0");
    if (!(config.train.noise_floor > 0.0))
      throw UsageError("config: train.noise_floor must be > 0");
  }

  if (j.contains("eval")) {
    const json& e = j.at("eval");
    check_keys(e, "eval", {"grid", "bounds"});
    if (e.contains("grid")) {
      config.eval_grid = int_at(e, "grid");
      if (config.eval_grid < 0)
        throw UsageError("config: eval.grid must be >= 0");
    }
    if (e.contains("bounds")) config.eval_bounds = bounds_from_json(e.at("bounds"));
  }

  if (j.contains("active")) {
    const json& a = j.at("active");
    check_keys(a, "active", {"budget", "grid"});
    if (a.contains("budget")) {
      config.active_budget = int_at(a, "budget");
      if (config.active_budget < 0)
        throw UsageError("config: active.budget must be >= 0");
    }
    if (a.contains("grid")) {
      config.active_grid = int_at(a, "grid");
      if (config.active_grid < 1)
        throw UsageError("config: active.grid must be >= 1");
    }
  }

  if (j.contains("seeds")) {
    const json& s = j.at("seeds");
    if (!s.is_array())
      throw UsageError("config: 'seeds' must be an array of integers");
    for (const auto& entry : s) {
      if (!entry.is_number_integer() || entry.get<long long>() < 0)
        throw UsageError("config: 'seeds' entries must be non-negative integers");
      config.seeds.push_back(entry.get<std::uint64_t>());
    }
  }

  if (j.contains("output_dir")) config.output_dir = str_at(j, "output_dir");
  if (config.output_dir.empty())
    throw UsageError("config: output_dir must not be empty");
  if (!config.problem.empty()) make_problem(config.problem);  // validates name
  return config;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UsageError(path + ": not valid JSON: " + e.what());
  }
  return parse_config_json(j);
}

json serialize_config(const RunConfig& config) {
  json j;
  j["command"] = config.command;
  if (!config.problem.empty()) j["problem"] = config.problem;
  if (config.op) j["operator"] = operator_to_json(*config.op);
  j["data"] = {{"anchors", config.data.anchors},
               {"low", config.data.low},
               {"high", config.data.high},
               {"queries", config.data.queries},
               {"model", config.data.model}};
  j["train"] = {{"restarts", config.train.restarts},
                {"seed", config.train.seed},
                {"max_iterations", config.train.max_iterations},
                {"tolerance", config.train.tolerance},
                {"noise_floor", config.train.noise_floor},
                {"freeze", freeze_to_json(config.train.freeze)}};
  j["eval"] = {{"grid", config.eval_grid}};
  if (config.eval_bounds.size() > 0)
    j["eval"]["bounds"] = bounds_to_json(config.eval_bounds);
  j["active"] = {{"budget", config.active_budget}, {"grid", config.active_grid}};
  if (!config.seeds.empty()) j["seeds"] = config.seeds;
  j["seed"] = config.seed;
  j["output_dir"] = config.output_dir;
  return j;
}

void run(const RunConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec)
    throw UsageError("cannot create output directory '" + config.output_dir +
                     "': " + ec.message());
  if (config.command == "train")
    run_train(config);
  else if (config.command == "predict")
    run_predict(config);
  else if (config.command == "active-learn")
    run_active_learn(config);
  else if (config.command == "benchmark")
    run_benchmark_cmd(config);
  else if (config.command == "kernel-check")
    run_kernel_check(config);
  else
    throw UsageError("config: unknown command '" + config.command + "'");
}

}  // namespace mfgp
