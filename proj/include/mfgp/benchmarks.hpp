#ifndef MFGP_BENCHMARKS_HPP
#define MFGP_BENCHMARKS_HPP

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mfgp/model.hpp"
#include "mfgp/operators.hpp"
#include "mfgp/posterior.hpp"

namespace mfgp {

enum class AnchorPolicy {
  interior_random,     // uniform in the domain box
  boundary_midpoints,  // deterministic edge midpoints, 2D only
  boundary_random,     // uniform on the listed boundary segments
  fixed_list,          // exact coordinates given
};

// One frequency of a band-limited exact solution, written against the
// complex exponential e^{-i w x}. Conjugate pairs keep the sum real.
struct HarmonicMode {
  double frequency = 0.0;
  std::complex<double> coefficient;
};

std::complex<double> harmonic_value(const std::vector<HarmonicMode>& modes,
                                    double x);
// Applies D^alpha - I through the Fourier symbol, mode by mode.
double harmonic_operator_value(const std::vector<HarmonicMode>& modes,
                               double alpha, double x);

struct ProblemSpec {
  std::string name;
  LinearOperatorSpec op;
  int dim = 1;
  Eigen::MatrixXd domain;  // dim x 2 bounds
  std::function<double(const Eigen::RowVectorXd&)> f_high;
  std::function<double(const Eigen::RowVectorXd&)> f_low;
  std::function<double(const Eigen::RowVectorXd&)> u_exact;  // may be null
  bool has_exact_u = false;
  std::array<double, 3> noise_std{0.0, 0.0, 0.0};   // anchor, low, high
  std::array<int, 3> sample_sizes{0, 0, 0};         // n0, n1, n2
  AnchorPolicy anchor_policy = AnchorPolicy::interior_random;
  Eigen::MatrixXd fixed_anchor_x;  // one row per anchor, fixed_list only
  int anchors_per_edge = 0;        // boundary_midpoints only
  std::vector<std::pair<Eigen::RowVectorXd, Eigen::RowVectorXd>>
      boundary_segments;           // boundary_random only
  // Parameters pinned during training, e.g. noise of noise-free blocks.
  FrozenParams default_freeze;
  // Fourier form of the exact solution, fractional problems only.
  std::vector<HarmonicMode> exact_modes;

  void validate() const;
};

// Known problem names: integro1d, poisson2d, adr1d, poisson10d, fractional1d.
ProblemSpec make_problem(const std::string& name);
std::vector<std::string> problem_names();

// Draws observation locations per the anchor policy (uniform box for the f
// blocks), then adds Gaussian noise. Blocks are drawn in order anchor, low,
// high, locations before noise; noise-free blocks consume no draws.
MultiFidelityDataset generate_observations(const ProblemSpec& problem,
                                           std::uint64_t seed);

double rel_l2_error(const Eigen::VectorXd& predicted,
                    const Eigen::VectorXd& exact);

// Inclusive uniform grid over the domain box, last dimension fastest.
Eigen::MatrixXd uniform_grid(const Eigen::MatrixXd& domain, int per_dim);

// Evaluation layout used for the error tables: 200 points in 1D, 50x50 in
// 2D, otherwise 2000 uniform random points with a fixed internal seed.
Eigen::MatrixXd default_eval_points(const ProblemSpec& problem);

struct ArdReport {
  Eigen::VectorXd level1_weights, level2_weights;
  Eigen::VectorXd level1_ratio, level2_ratio;  // weight / median weight
};

ArdReport ard_report(const TrainedModel& model);

// Largest |L u_exact - f_high| over sampled domain points, scaled by the
// largest |f_high| sampled. Differential operators are applied by the
// finite-difference oracle, the fractional operator through the Fourier
// form of the exact solution.
double operator_identity_max_rel_error(const ProblemSpec& problem,
                                       int point_count, std::uint64_t seed);

struct BenchmarkRunResult {
  double err_u_multi = 0.0, err_f_multi = 0.0;
  double err_u_single = 0.0, err_f_single = 0.0;
  double nlml_multi = 0.0, nlml_single = 0.0;
  // Fraction of eval points where |mean - exact| <= 3 std for u.
  double coverage3_multi = 0.0;
};

// Trains on one seeded draw twice: once with all fidelity levels, once with
// the low block dropped and the cross-correlation pinned at zero, and
// reports errors over the default evaluation grid.
BenchmarkRunResult run_benchmark(const ProblemSpec& problem,
                                 std::uint64_t seed,
                                 const TrainConfig& base_config);

// Acquisition loop against the problem's high-fidelity forcing, candidates
// on an inclusive grid_per_dim^dim grid, errors on the default grid.
ActiveLearningResult run_problem_active_loop(const ProblemSpec& problem,
                                             int budget,
                                             const TrainConfig& base_config,
                                             std::uint64_t seed,
                                             int grid_per_dim);

}  // namespace mfgp

#endif  // MFGP_BENCHMARKS_HPP
