#include "mfgp/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mfgp/errors.hpp"

namespace mfgp {
namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, int cols_hint) {
  if (!j.is_array()) throw UsageError("model file: expected an array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  if (n == 0) return Eigen::MatrixXd(0, cols_hint);
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd m(n, cols);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = j.at(i);
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw UsageError("model file: ragged matrix rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row.at(c).get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  if (!j.is_array()) throw UsageError("model file: expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j.at(i).get<double>();
  return v;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' '))
      field.pop_back();
    size_t start = field.find_first_not_of(' ');
    fields.push_back(start == std::string::npos ? "" : field.substr(start));
  }
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_double(const std::string& s, const std::string& path) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError(path + ": cannot parse '" + s + "' as a number");
  }
}

}  // namespace

std::string format_float(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", value);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& rows) {
  if (static_cast<Eigen::Index>(header.size()) != rows.cols() &&
      !(rows.rows() == 0 && rows.cols() == 0))
    throw UsageError("write_csv: header width does not match the data");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot open '" + path + "' for writing");
  for (size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << "\n";
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c)
      out << (c ? "," : "") << format_float(rows(r, c));
    out << "\n";
  }
  if (!out) throw UsageError("failed while writing '" + path + "'");
}

Eigen::MatrixXd read_csv(const std::string& path, int expected_cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line))
    throw UsageError(path + ": missing header row");
  const auto header = split_line(line);
  const auto cols = static_cast<Eigen::Index>(header.size());
  if (cols == 0) throw UsageError(path + ": empty header row");
  if (expected_cols >= 0 && cols != expected_cols)
    throw UsageError(path + ": expected " + std::to_string(expected_cols) +
                     " columns, found " + std::to_string(cols));
  std::vector<double> values;
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = split_line(line);
    if (static_cast<Eigen::Index>(fields.size()) != cols)
      throw UsageError(path + ": row " + std::to_string(rows + 1) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(cols));
    for (const auto& f : fields) values.push_back(parse_double(f, path));
    ++rows;
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = values[r * cols + c];
  return m;
}

ObservationsCsv read_observations_csv(const std::string& path) {
  const Eigen::MatrixXd table = read_csv(path);
  if (table.cols() < 2)
    throw UsageError(path + ": observations need columns x_1..x_D and y");
  ObservationsCsv obs;
  obs.x = table.leftCols(table.cols() - 1);
  obs.y = table.col(table.cols() - 1);
  return obs;
}

void write_observations_csv(const std::string& path, const Eigen::MatrixXd& x,
                            const Eigen::VectorXd& y) {
  if (x.rows() != y.size())
    throw UsageError("write_observations_csv: row count mismatch");
  std::vector<std::string> header;
  for (Eigen::Index d = 0; d < x.cols(); ++d)
    header.push_back("x_" + std::to_string(d + 1));
  header.push_back("y");
  Eigen::MatrixXd table(x.rows(), x.cols() + 1);
  table.leftCols(x.cols()) = x;
  table.col(x.cols()) = y;
  write_csv(path, header, table);
}

json operator_to_json(const LinearOperatorSpec& op) {
  json j;
  j["variant"] = operator_name(op);
  if (const auto* integro = std::get_if<IntegroDifferential1D>(&op)) {
    j["lower_bound"] = integro->lower_bound;
  } else if (const auto* lap = std::get_if<Laplacian>(&op)) {
    j["dimension"] = lap->dimension;
  } else if (const auto* frac = std::get_if<FractionalRL>(&op)) {
    j["alpha"] = frac->alpha;
    j["quadrature"] = {{"node_count", frac->quadrature.node_count},
                       {"frequency_cutoff", frac->quadrature.frequency_cutoff}};
  }
  return j;
}

LinearOperatorSpec operator_from_json(const json& j) {
  if (!j.is_object() || !j.contains("variant"))
    throw UsageError("operator: expected an object with a 'variant' field");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "variant" && key != "lower_bound" && key != "dimension" &&
        key != "alpha" && key != "quadrature")
      throw UsageError("operator: unknown key '" + key + "'");
  }
  const std::string name = j.at("variant").get<std::string>();
  LinearOperatorSpec op;
  if (name == "identity") {
    op = Identity{};
  } else if (name == "first_derivative") {
    op = FirstDerivative1D{};
  } else if (name == "integro_differential") {
    IntegroDifferential1D integro;
    if (j.contains("lower_bound"))
      integro.lower_bound = j.at("lower_bound").get<double>();
    op = integro;
  } else if (name == "laplacian") {
    if (!j.contains("dimension"))
      throw UsageError("operator: laplacian needs a 'dimension' field");
    Laplacian lap;
    lap.dimension = j.at("dimension").get<int>();
    op = lap;
  } else if (name == "advection_diffusion_reaction") {
    op = AdvectionDiffusionReaction{};
  } else if (name == "fractional") {
    if (!j.contains("alpha"))
      throw UsageError("operator: fractional needs an 'alpha' field");
    FractionalRL frac;
    frac.alpha = j.at("alpha").get<double>();
    if (j.contains("quadrature")) {
      const auto& q = j.at("quadrature");
      for (const auto& [key, value] : q.items()) {
        (void)value;
        if (key != "node_count" && key != "frequency_cutoff")
          throw UsageError("operator.quadrature: unknown key '" + key + "'");
      }
      if (q.contains("node_count"))
        frac.quadrature.node_count = q.at("node_count").get<int>();
      if (q.contains("frequency_cutoff"))
        frac.quadrature.frequency_cutoff =
            q.at("frequency_cutoff").get<double>();
    }
    op = frac;
  } else {
    throw UsageError(
        "operator: unknown variant '" + name +
        "'; expected identity, first_derivative, integro_differential, "
        "laplacian, advection_diffusion_reaction, or fractional");
  }
  return op;
}

json hyperparams_to_json(const HyperParams& hp) {
  json j;
  j["level1"] = {{"variance", hp.level1.variance},
                 {"ard_weights", vector_to_json(hp.level1.ard_weights)}};
  j["level2"] = {{"variance", hp.level2.variance},
                 {"ard_weights", vector_to_json(hp.level2.ard_weights)}};
  j["rho"] = hp.rho;
  j["noise_anchor"] = hp.noise_anchor;
  j["noise_low"] = hp.noise_low;
  j["noise_high"] = hp.noise_high;
  return j;
}

HyperParams hyperparams_from_json(const json& j) {
  HyperParams hp;
  auto level = [&](const char* key) {
    const auto& lj = j.at(key);
    KernelParams k;
    k.variance = lj.at("variance").get<double>();
    k.ard_weights = vector_from_json(lj.at("ard_weights"));
    return k;
  };
  hp.level1 = level("level1");
  hp.level2 = level("level2");
  hp.rho = j.at("rho").get<double>();
  hp.noise_anchor = j.at("noise_anchor").get<double>();
  hp.noise_low = j.at("noise_low").get<double>();
  hp.noise_high = j.at("noise_high").get<double>();
  return hp;
}

void save_model(const std::string& path, const TrainedModel& model) {
  json j;
  j["format"] = "mfgp-model";
  j["version"] = 1;
  j["operator"] = operator_to_json(model.op);
  j["hyperparams"] = hyperparams_to_json(model.hyperparams);
  j["dataset"] = {{"anchor_x", matrix_to_json(model.dataset.anchor_x)},
                  {"anchor_y", vector_to_json(model.dataset.anchor_y)},
                  {"low_x", matrix_to_json(model.dataset.low_x)},
                  {"low_y", vector_to_json(model.dataset.low_y)},
                  {"high_x", matrix_to_json(model.dataset.high_x)},
                  {"high_y", vector_to_json(model.dataset.high_y)},
                  {"dim", model.dataset.dim()}};
  j["nlml"] = model.nlml_value;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
  if (!out) throw UsageError("failed while writing '" + path + "'");
}

TrainedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "' for reading");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UsageError(path + ": not valid JSON: " + e.what());
  }
  try {
    if (!j.contains("format") || j.at("format").get<std::string>() != "mfgp-model")
      throw UsageError(path + ": not a model file (missing format tag)");
    if (!j.contains("version") || j.at("version").get<int>() != 1)
      throw UsageError(path + ": unsupported model file version");
    const LinearOperatorSpec op = operator_from_json(j.at("operator"));
    const HyperParams hp = hyperparams_from_json(j.at("hyperparams"));
    const auto& dj = j.at("dataset");
    const int dim = dj.at("dim").get<int>();
    MultiFidelityDataset data;
    data.anchor_x = matrix_from_json(dj.at("anchor_x"), dim);
    data.anchor_y = vector_from_json(dj.at("anchor_y"));
    data.low_x = matrix_from_json(dj.at("low_x"), dim);
    data.low_y = vector_from_json(dj.at("low_y"));
    data.high_x = matrix_from_json(dj.at("high_x"), dim);
    data.high_y = vector_from_json(dj.at("high_y"));
    data.validate();
    return fit_model(data, hp, op);
  } catch (const json::exception& e) {
    throw UsageError(path + ": malformed model file: " + e.what());
  }
}

}  // namespace mfgp
