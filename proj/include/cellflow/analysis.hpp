#pragma once

// Regression and burst-classification metrics, and K-Means clustering of
// bin series.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cellflow/features.hpp"

namespace cellflow {

double rmse(std::span<const double> predicted, std::span<const double> actual);

/// Mean of the training-set uplink counts.
double burst_threshold(std::span<const double> train_targets);

/// value > threshold, strictly.
std::vector<bool> label_bursts(std::span<const double> values, double threshold);

struct BurstReport {
  double threshold = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// Set when precision or recall had a zero denominator and was defined as 0.
  bool zero_division = false;
};

BurstReport classification_report(const std::vector<bool>& predicted, const std::vector<bool>& actual);

struct KMeansOptions {
  std::size_t k = 4;
  std::uint64_t seed = 0;
  std::size_t max_iter = 300;
  /// Independent k-means++ restarts; the lowest final inertia wins.
  std::size_t restarts = 25;
};

struct ClusterResult {
  std::size_t k = 0;
  std::vector<std::vector<double>> centroids;
  std::vector<std::size_t> assignments;
  double inertia = 0.0;
  std::size_t iterations = 0;
  /// Inertia after every assignment step of the winning restart.
  std::vector<double> inertia_history;
  std::vector<std::string> feature_subset;
  double bin_size = 0.0;
};

/// Lloyd's algorithm with k-means++ seeding. Nearest-centroid ties go to
/// the lowest index; an emptied cluster is re-seeded with the point
/// farthest from its current centroid.
ClusterResult kmeans(const std::vector<std::vector<double>>& points, const KMeansOptions& options);

struct BinSeries {
  double bin_size = 0.0;
  std::vector<BinnedSample> bins;
};

struct GridCell {
  double bin_size = 0.0;
  std::vector<std::string> feature_subset;
  std::optional<ClusterResult> result;  ///< empty when the cell was skipped
  std::string skip_reason;
};

/// The two feature subsets compared by the clustering grid.
const std::vector<std::vector<std::string>>& cluster_feature_subsets();

/// K-Means (k = options.k) on every series x feature subset. Padding bins
/// are excluded. Cell i uses seed derive_seed(options.seed, i).
std::vector<GridCell> cluster_grid(std::span<const BinSeries> series, const KMeansOptions& options,
                                   const std::vector<std::vector<std::string>>& subsets =
                                       cluster_feature_subsets());

/// Points (one per non-padding bin) for a feature subset.
std::vector<std::vector<double>> cluster_points(std::span<const BinnedSample> bins,
                                                const std::vector<std::string>& features);

void write_burst_report(std::ostream& out, const BurstReport& report);
void write_prediction_series(std::ostream& out, std::span<const double> actual,
                             std::span<const double> predicted);
void write_assignments(std::ostream& out, const ClusterResult& result,
                       const std::vector<std::vector<double>>& points);
void write_centroids(std::ostream& out, const ClusterResult& result);

}  // namespace cellflow
