#ifndef MFGP_DATASET_HPP
#define MFGP_DATASET_HPP

#include <Eigen/Dense>
#include <cmath>

#include "mfgp/errors.hpp"

namespace mfgp {

/// Observations for the three blocks of the joint model, ordered everywhere as
/// [anchors; low; high]:
///   anchors: y0 = u(x0) + e0, direct (noisy) solution values
///   low:     y1 = f1(x1) + e1, low-fidelity forcing observations
///   high:    y2 = f(x2) + e2, high-fidelity forcing observations
/// Rows of the x matrices are points. Empty blocks have zero rows; dim() is
/// taken from the first non-empty block.
struct MultiFidelityDataset {
  Eigen::MatrixXd anchor_x, low_x, high_x;
  Eigen::VectorXd anchor_y, low_y, high_y;

  int n_anchor() const { return static_cast<int>(anchor_x.rows()); }
  int n_low() const { return static_cast<int>(low_x.rows()); }
  int n_high() const { return static_cast<int>(high_x.rows()); }
  int total() const { return n_anchor() + n_low() + n_high(); }

  int dim() const {
    if (anchor_x.rows() > 0) return static_cast<int>(anchor_x.cols());
    if (low_x.rows() > 0) return static_cast<int>(low_x.cols());
    if (high_x.rows() > 0) return static_cast<int>(high_x.cols());
    return 0;
  }

  void validate() const {
    if (total() < 1)
      throw UsageError("dataset: at least one observation is required");
    const int d = dim();
    if (d < 1) throw UsageError("dataset: input dimension must be >= 1");
    auto check_block = [&](const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           const char* name) {
      if (x.rows() != y.size())
        throw UsageError(std::string("dataset: ") + name +
                         " x/y row counts disagree");
      if (x.rows() > 0 && x.cols() != d)
        throw UsageError(std::string("dataset: ") + name +
                         " block dimension disagrees with the others");
      if (x.rows() > 0 && (!x.allFinite() || !y.allFinite()))
        throw UsageError(std::string("dataset: ") + name +
                         " block contains non-finite values");
    };
    check_block(anchor_x, anchor_y, "anchor");
    check_block(low_x, low_y, "low");
    check_block(high_x, high_y, "high");
  }

  /// All targets stacked in block order.
  Eigen::VectorXd stacked_y() const {
    Eigen::VectorXd y(total());
    y << anchor_y, low_y, high_y;
    return y;
  }
};

}  // namespace mfgp

#endif
