#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace modeseek {

/// n points in R^d with optional positive weights and per-point bandwidths.
class DataSet {
 public:
  explicit DataSet(Eigen::MatrixXd points,
                   std::optional<Eigen::VectorXd> weights = std::nullopt,
                   std::optional<Eigen::VectorXd> bandwidths = std::nullopt)
      : points_(std::move(points)),
        weights_(std::move(weights)),
        bandwidths_(std::move(bandwidths)) {
    if (points_.rows() < 1) throw std::invalid_argument("dataset needs at least one point");
    if (points_.cols() < 1) throw std::invalid_argument("dataset needs dimension >= 1");
    if (!points_.allFinite()) throw std::invalid_argument("dataset has non-finite coordinates");
    check_positive(weights_, "weights");
    check_positive(bandwidths_, "bandwidths");
  }

  /// One-dimensional dataset from a list of scalars.
  static DataSet from_values(std::initializer_list<double> values) {
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(values.size()), 1);
    Eigen::Index i = 0;
    for (double v : values) pts(i++, 0) = v;
    return DataSet(std::move(pts));
  }

  Eigen::Index size() const { return points_.rows(); }
  Eigen::Index dim() const { return points_.cols(); }
  const Eigen::MatrixXd& points() const { return points_; }
  auto point(Eigen::Index i) const { return points_.row(i).transpose(); }

  bool has_weights() const { return weights_.has_value(); }
  bool has_bandwidths() const { return bandwidths_.has_value(); }
  double weight(Eigen::Index i) const { return weights_ ? (*weights_)(i) : 1.0; }
  /// Per-point bandwidth, or `shared` when the dataset carries none.
  double bandwidth(Eigen::Index i, double shared) const {
    return bandwidths_ ? (*bandwidths_)(i) : shared;
  }
  const std::optional<Eigen::VectorXd>& weights() const { return weights_; }
  const std::optional<Eigen::VectorXd>& bandwidths() const { return bandwidths_; }

  /// Largest pairwise distance.
  double diameter() const {
    double best = 0.0;
    for (Eigen::Index i = 0; i < size(); ++i)
      for (Eigen::Index j = i + 1; j < size(); ++j)
        best = std::max(best, (points_.row(i) - points_.row(j)).norm());
    return best;
  }

 private:
  void check_positive(const std::optional<Eigen::VectorXd>& v, const char* what) const {
    if (!v) return;
    if (v->size() != points_.rows())
      throw std::invalid_argument(std::string(what) + " length does not match point count");
    for (Eigen::Index i = 0; i < v->size(); ++i)
      if (!((*v)(i) > 0.0) || !std::isfinite((*v)(i)))
        throw std::invalid_argument(std::string(what) + " must be positive and finite");
  }

  Eigen::MatrixXd points_;
  std::optional<Eigen::VectorXd> weights_;
  std::optional<Eigen::VectorXd> bandwidths_;
};

}  // namespace modeseek
