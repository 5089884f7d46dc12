#pragma once

// Data-adaptive levels: alpha(.) is fit on held-out data so that a quality
// criterion (claim retention, interval length) is met at most points, then the
// function class is augmented with alpha so the issued levels stay calibrated.

#include "condconf/qr_solver.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace condconf {

struct QualityCriterion {
  enum class Kind { retention_at_least, interval_length_at_most };

  Kind kind = Kind::retention_at_least;
  double threshold = 0.7;

  static QualityCriterion retention_at_least(double rho) { return {Kind::retention_at_least, rho}; }
  static QualityCriterion length_at_most(double max_len) { return {Kind::interval_length_at_most, max_len}; }

  /// Q applied to the measured quantity (retained fraction or interval length).
  bool met(double measured) const {
    return kind == Kind::retention_at_least ? measured >= threshold : measured <= threshold;
  }
};

/// Smallest grid level from which Q holds at every larger level; the grid
/// minimum when Q holds everywhere and 1 when Q fails at the top of the grid.
double alpha_star(const std::vector<double>& grid, const std::vector<int>& quality_by_level);

/// 0.01, 0.02, ..., 0.99.
std::vector<double> default_alpha_grid();

/// k / (count + 1) for k = 1..count: evenly spaced strictly inside (0, 1).
std::vector<double> even_alpha_grid(int count);

struct LevelFunction {
  Vector coefficients;
  double fit_quantile = 0.85;
  double lo = 0.1;
  double hi = 0.5;

  double evaluate(const Vector& features) const;
  Vector evaluate(const FeatureMatrix& features) const;
};

struct LevelEstimationData {
  FeatureMatrix features;
  Vector scores;  ///< finite conformity scores

  /// Quantity Q is judged on for point i when its cutoff is tau: retained claim
  /// fraction or interval length, matching the criterion kind.
  std::function<double(Index i, double tau)> measure;

  /// Record ids of these rows and of rows reserved for calibration. Optional;
  /// when both are given they must not overlap.
  std::vector<std::string> ids;
  std::vector<std::string> reserved_ids;
};

struct LevelEstimateOptions {
  std::vector<double> grid = default_alpha_grid();
  QualityCriterion criterion;
  double fit_quantile = 0.85;
  double lo = 0.1;
  double hi = 0.5;
  std::uint64_t seed = 0;
};

struct LevelEstimate {
  LevelFunction function;
  std::vector<Index> fold1;
  std::vector<Index> fold2;
  Vector alpha_star;  ///< one per fold-2 row
};

LevelEstimate estimate_level_function(const LevelEstimationData& data,
                                      const LevelEstimateOptions& options);

/// Column layout produced by augment_features. Reusable for test rows so the
/// same columns are built at calibration and prediction time.
class AlphaFeatureMap {
 public:
  AlphaFeatureMap() = default;
  AlphaFeatureMap(std::vector<double> bin_edges, bool linear_alpha,
                  std::optional<double> square_center);

  /// Decides which candidate columns survive (occupied, not collinear) and
  /// returns the augmented calibration matrix. Warnings name dropped columns.
  FeatureMatrix fit(const FeatureMatrix& base, const Vector& alpha_values,
                    const Matrix* group_cols = nullptr);

  Vector row(const Vector& base_row, double alpha, const Vector* group_row = nullptr) const;

  const std::vector<std::string>& warnings() const { return warnings_; }
  const std::vector<std::string>& column_names() const { return names_; }
  Index width() const { return static_cast<Index>(kept_.size()); }

 private:
  Vector candidates(const Vector& base_row, double alpha, const Vector* group_row) const;
  std::vector<std::string> candidate_names(Index base_cols, Index group_count) const;

  std::vector<double> edges_;
  bool linear_alpha_ = false;
  std::optional<double> square_center_;
  Index base_cols_ = 0;
  Index group_count_ = 0;
  std::vector<Index> kept_;
  std::vector<std::string> names_;
  std::vector<std::string> warnings_;
};

/// Index of the bin [e_k, e_{k+1}) holding `alpha` (the last bin is closed), or -1.
int bin_of(const std::vector<double>& edges, double alpha);

/// Base columns followed by alpha-bin indicators (and bin x group products).
/// Empty bins and columns collinear with earlier ones are dropped.
FeatureMatrix augment_features(const FeatureMatrix& base, const Vector& alpha_values,
                               const std::vector<double>& bin_edges,
                               const Matrix* group_cols = nullptr,
                               std::vector<std::string>* warnings = nullptr);

}  // namespace condconf
