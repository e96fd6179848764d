#pragma once

// End-to-end pipelines for the named experiment presets: regression
// (bin -> pad -> window -> [filter] -> split -> train -> evaluate),
// application classification over labeled sessions, and the K-Means grid.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cellflow/analysis.hpp"
#include "cellflow/dataset.hpp"
#include "cellflow/features.hpp"
#include "cellflow/ingest.hpp"
#include "cellflow/lstm.hpp"
#include "cellflow/synth.hpp"

namespace cellflow {

/// Ordered key=value summary; values are preformatted.
using Summary = std::map<std::string, std::string>;

struct RegressionSetup {
  WindowConfig window;
  PaddingMode padding = PaddingMode::Zero;
  std::size_t max_run = 2;
  bool nonzero_filter = false;
  double train_fraction = 0.8;
  TrainConfig train{.epochs = 10};
};

struct RegressionOutcome {
  std::size_t bins = 0;
  double zero_bin_fraction = 0.0;
  std::size_t train_windows = 0;
  std::size_t test_windows = 0;
  std::vector<double> train_actual;
  std::vector<double> train_predicted;
  std::vector<double> test_actual;
  std::vector<double> test_predicted;
  double train_rmse = 0.0;
  double test_rmse = 0.0;
  /// Test RMSE of predicting the training-target mean everywhere.
  double baseline_test_rmse = 0.0;
  double test_prediction_variance = 0.0;
  double test_target_variance = 0.0;
  BurstReport burst;  ///< on the test windows
  double all_positive_f1 = 0.0;
  double all_negative_f1 = 0.0;
  TrainResult training;
  std::vector<std::string> warnings;
};

/// Population variance; 0 for an empty series.
double variance(std::span<const double> values);

RegressionOutcome run_regression(std::span<const LabeledPacket> packets, const RegressionSetup& setup);

struct ClassificationSetup {
  WindowConfig window{5.0, 12, default_window_features(), "uplink_count"};
  double train_fraction = 0.8;  ///< of sessions, chronologically
  TrainConfig train{.learning_rate = 0.05, .epochs = 30};
};

struct ClassificationOutcome {
  std::size_t train_sessions = 0;
  std::size_t test_sessions = 0;
  std::size_t train_windows = 0;
  std::size_t test_windows = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::array<std::array<std::size_t, 4>, 4> confusion{};  ///< [actual][predicted], test set
  TrainResult training;
};

/// Per-session windows labeled with the session's application.
WindowedDataset session_windows(std::span<const LabeledPacket> packets,
                                std::span<const Session> sessions, const WindowConfig& window);

ClassificationOutcome run_classification(std::span<const LabeledPacket> packets,
                                         std::span<const Session> sessions,
                                         const ClassificationSetup& setup);

/// Bin sizes used by the clustering grid.
const std::vector<double>& cluster_bin_sizes();

struct ClusterGridOutcome {
  std::vector<BinSeries> series;  ///< unpadded bins per bin size
  std::vector<GridCell> cells;
};

ClusterGridOutcome run_cluster_grid(std::span<const LabeledPacket> packets,
                                    std::span<const double> bin_sizes, const KMeansOptions& options,
                                    const std::vector<std::vector<std::string>>& subsets =
                                        cluster_feature_subsets());

/// A named end-to-end configuration.
struct ExperimentPreset {
  std::string name;
  std::string description;
  bool clustering = false;
  RegressionSetup regression;  ///< unused when clustering
};

const std::vector<ExperimentPreset>& experiment_presets();
const ExperimentPreset& find_experiment(std::string_view name);

/// Training overrides applied on top of a preset.
struct TrainOverrides {
  std::optional<double> learning_rate;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> hidden_size;
  std::optional<double> clip_norm;
  std::optional<double> train_fraction;
};

void apply_overrides(RegressionSetup& setup, const TrainOverrides& overrides);

/// Light and heavy bursty sources of the bundled trace: the surfing and
/// streaming profiles with 8 s mean ON and 50 s mean OFF periods, the heavy
/// one at 40 uplink packets/s.
std::vector<AppProfile> bundled_profiles();

inline constexpr std::uint64_t kBundledTraceSeed = 8;
inline constexpr double kBundledTraceDuration = 3600.0;
inline constexpr double kBundledSessionLength = 120.0;

/// The synthetic trace experiments fall back to when no capture is given:
/// one hour of alternating light and heavy 120 s sessions, about 80% empty
/// 1 s bins.
SynthTrace bundled_trace(std::uint64_t seed = kBundledTraceSeed);

/// Labels a synthetic trace with its known endpoints.
std::vector<LabeledPacket> label_synthetic(std::span<const PacketRecord> packets);

/// Runs a preset and writes every output under `out_dir` (created if
/// needed). Returns the summary that was written to summary.txt.
Summary run_experiment(const ExperimentPreset& preset, std::span<const LabeledPacket> packets,
                       std::uint64_t seed, const TrainOverrides& overrides,
                       const std::filesystem::path& out_dir);

/// Writes regression artifacts (predictions, burst report, loss history,
/// model) and returns the summary entries.
Summary write_regression_outputs(const RegressionOutcome& outcome, const std::filesystem::path& out_dir);

/// Writes per-cell assignments and centroids and returns the summary entries.
Summary write_cluster_outputs(const ClusterGridOutcome& grid, const std::filesystem::path& out_dir);

void write_summary(const std::filesystem::path& path, const Summary& summary);

}  // namespace cellflow
