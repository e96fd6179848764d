#include "cellflow/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cellflow/error.hpp"
#include "cellflow/textio.hpp"

namespace cellflow {
namespace {

namespace fs = std::filesystem;

std::string fmt(double v) { return textio::format_double(v); }

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::string subset_tag(const std::vector<std::string>& subset) {
  std::string tag;
  for (const std::string& f : subset) {
    if (!tag.empty()) tag += '-';
    if (f == "uplink_count") tag += "ul";
    else if (f == "downlink_count") tag += "dl";
    else if (f == "ud_ratio") tag += "ratio";
    else tag += f;
  }
  return tag;
}

std::string bin_tag(double bin_size) { return fmt(bin_size) + "s"; }

// Dense bins [0, count) anchored at `origin`; empty bins are padding.
std::vector<BinnedSample> dense_bins(std::span<const LabeledPacket> packets, double bin_size,
                                     double origin, std::int64_t count) {
  std::vector<BinnedSample> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<BinnedSample> bins = bin_packets(packets, bin_size, origin);
  std::size_t next = 0;
  for (std::int64_t index = 0; index < count; ++index) {
    if (next < bins.size() && bins[next].bin_index == index) {
      out.push_back(bins[next++]);
    } else {
      BinnedSample pad;
      pad.bin_index = index;
      pad.bin_start = origin + static_cast<double>(index) * bin_size;
      pad.is_padding = true;
      out.push_back(pad);
    }
  }
  return out;
}

}  // namespace

double variance(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size());
}

RegressionOutcome run_regression(std::span<const LabeledPacket> packets, const RegressionSetup& setup) {
  RegressionOutcome out;
  const double bin_size = setup.window.bin_size;
  const auto bins = bin_packets(packets, bin_size);
  const auto padded = apply_padding(bins, bin_size, setup.padding, setup.max_run);
  out.bins = padded.size();
  out.zero_bin_fraction = zero_bin_fraction(padded);

  WindowedDataset ds = make_windows(padded, setup.window);
  if (setup.nonzero_filter) {
    Diagnostics diag;
    ds = filter_nonzero_targets(ds, &diag);
    out.warnings = diag.warnings;
    if (ds.empty()) throw Error("no window has a non-zero target");
  }
  auto [train_set, test_set] = split(ds, setup.train_fraction);
  out.train_windows = train_set.size();
  out.test_windows = test_set.size();

  out.training = train(train_set, setup.train, HeadKind::Regression);
  const LstmModel& model = out.training.model;
  out.train_actual = targets(train_set);
  out.test_actual = targets(test_set);
  out.train_predicted = predict(train_set, model);
  out.test_predicted = predict(test_set, model);
  out.train_rmse = rmse(out.train_predicted, out.train_actual);
  out.test_rmse = rmse(out.test_predicted, out.test_actual);

  const double threshold = burst_threshold(out.train_actual);
  const std::vector<double> constant(out.test_actual.size(), threshold);
  out.baseline_test_rmse = rmse(constant, out.test_actual);
  out.test_prediction_variance = variance(out.test_predicted);
  out.test_target_variance = variance(out.test_actual);

  const auto actual_bursts = label_bursts(out.test_actual, threshold);
  out.burst = classification_report(label_bursts(out.test_predicted, threshold), actual_bursts);
  out.burst.threshold = threshold;
  out.all_positive_f1 =
      classification_report(std::vector<bool>(actual_bursts.size(), true), actual_bursts).f1;
  out.all_negative_f1 =
      classification_report(std::vector<bool>(actual_bursts.size(), false), actual_bursts).f1;
  return out;
}

WindowedDataset session_windows(std::span<const LabeledPacket> packets,
                                std::span<const Session> sessions, const WindowConfig& window) {
  WindowedDataset ds;
  ds.config = window;
  std::size_t cursor = 0;
  for (const Session& s : sessions) {
    while (cursor < packets.size() && packets[cursor].record.timestamp < s.start) ++cursor;
    const std::size_t first = cursor;
    while (cursor < packets.size() && packets[cursor].record.timestamp < s.end) ++cursor;
    const auto count = static_cast<std::int64_t>(std::ceil((s.end - s.start) / window.bin_size));
    if (count <= static_cast<std::int64_t>(window.history_len)) continue;
    const auto bins = dense_bins(packets.subspan(first, cursor - first), window.bin_size, s.start, count);
    WindowedDataset part = make_labeled_windows(bins, window, static_cast<int>(s.app));
    std::ranges::move(part.windows, std::back_inserter(ds.windows));
  }
  return ds;
}

ClassificationOutcome run_classification(std::span<const LabeledPacket> packets,
                                         std::span<const Session> sessions,
                                         const ClassificationSetup& setup) {
  if (sessions.size() < 2) throw Error("classification needs at least two sessions");
  if (!(setup.train_fraction > 0.0 && setup.train_fraction < 1.0)) {
    throw Error("train fraction must lie strictly between 0 and 1");
  }
  const auto n_train = static_cast<std::size_t>(
      std::floor(static_cast<double>(sessions.size()) * setup.train_fraction));
  if (n_train == 0 || n_train >= sessions.size()) throw Error("session split leaves one side empty");

  ClassificationOutcome out;
  out.train_sessions = n_train;
  out.test_sessions = sessions.size() - n_train;
  const WindowedDataset train_set = session_windows(packets, sessions.first(n_train), setup.window);
  const WindowedDataset test_set = session_windows(packets, sessions.subspan(n_train), setup.window);
  if (train_set.empty() || test_set.empty()) throw Error("sessions too short for the window history");
  out.train_windows = train_set.size();
  out.test_windows = test_set.size();

  out.training = train(train_set, setup.train, HeadKind::Softmax4);
  auto accuracy = [](const WindowedDataset& ds, const std::vector<int>& predicted) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (predicted[i] == static_cast<int>(ds.windows[i].target)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(ds.size());
  };
  out.train_accuracy = accuracy(train_set, predict_classes(train_set, out.training.model));
  const auto test_pred = predict_classes(test_set, out.training.model);
  out.test_accuracy = accuracy(test_set, test_pred);
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    ++out.confusion[static_cast<std::size_t>(test_set.windows[i].target)][static_cast<std::size_t>(test_pred[i])];
  }
  return out;
}

const std::vector<double>& cluster_bin_sizes() {
  static const std::vector<double> sizes{1.0, 30.0, 60.0};
  return sizes;
}

ClusterGridOutcome run_cluster_grid(std::span<const LabeledPacket> packets,
                                    std::span<const double> bin_sizes, const KMeansOptions& options,
                                    const std::vector<std::vector<std::string>>& subsets) {
  ClusterGridOutcome out;
  for (double size : bin_sizes) out.series.push_back({size, bin_packets(packets, size)});
  out.cells = cluster_grid(out.series, options, subsets);
  return out;
}

const std::vector<ExperimentPreset>& experiment_presets() {
  static const std::vector<ExperimentPreset> presets = [] {
    auto regression = [](double bin, std::size_t history, PaddingMode padding, bool nonzero) {
      RegressionSetup s;
      s.window.bin_size = bin;
      s.window.history_len = history;
      s.padding = padding;
      s.max_run = 2;
      s.nonzero_filter = nonzero;
      return s;
    };
    std::vector<ExperimentPreset> p;
    p.push_back({"1x60", "1 s bins, 60-row history, zero padding", false,
                 regression(1.0, 60, PaddingMode::Zero, false)});
    p.push_back({"3x20", "3 s bins, 20-row history, zero padding", false,
                 regression(3.0, 20, PaddingMode::Zero, false)});
    p.push_back({"60x1", "60 s bins, single-row history, zero padding", false,
                 regression(60.0, 1, PaddingMode::Zero, false)});
    p.push_back({"propad-1x10", "1 s bins, 10-row history, ProPadding (max run 2)", false,
                 regression(1.0, 10, PaddingMode::Pro, false)});
    p.push_back({"nonzero-1x10", "1 s bins, 10-row zero-padded history, non-zero targets only",
                 false, regression(1.0, 10, PaddingMode::Zero, true)});
    p.push_back({"cluster-grid", "K-Means (k=4) over 1/30/60 s bins with and without UL/DL ratio",
                 true, {}});
    return p;
  }();
  return presets;
}

const ExperimentPreset& find_experiment(std::string_view name) {
  std::vector<std::string> names;
  for (const ExperimentPreset& p : experiment_presets()) {
    if (p.name == name) return p;
    names.push_back(p.name);
  }
  throw Error("unknown experiment '" + std::string(name) + "' (valid: " + textio::join(names, ", ") + ")");
}

void apply_overrides(RegressionSetup& setup, const TrainOverrides& o) {
  if (o.learning_rate) setup.train.learning_rate = *o.learning_rate;
  if (o.epochs) setup.train.epochs = *o.epochs;
  if (o.batch_size) setup.train.batch_size = *o.batch_size;
  if (o.hidden_size) setup.train.hidden_size = *o.hidden_size;
  if (o.clip_norm) setup.train.clip_norm = *o.clip_norm;
  if (o.train_fraction) setup.train_fraction = *o.train_fraction;
}

std::vector<AppProfile> bundled_profiles() {
  AppProfile light = default_profile(App::Surfing);
  light.mean_on = 8.0;
  light.mean_off = 50.0;
  AppProfile heavy = default_profile(App::Streaming);
  heavy.uplink_rate = 40.0;
  heavy.mean_on = 8.0;
  heavy.mean_off = 50.0;
  return {light, heavy};
}

SynthTrace bundled_trace(std::uint64_t seed) {
  return generate_cycle(bundled_profiles(), kBundledTraceDuration, kBundledSessionLength, seed);
}

std::vector<LabeledPacket> label_synthetic(std::span<const PacketRecord> packets) {
  const EndpointMap endpoints{std::string(kSynthTowerAddr), {std::string(kSynthUserAddr)}};
  return label_direction(packets, endpoints).packets;
}

void write_summary(const fs::path& path, const Summary& summary) {
  auto out = open_out(path);
  for (const auto& [key, value] : summary) out << key << '=' << value << '\n';
}

Summary write_regression_outputs(const RegressionOutcome& o, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  {
    auto out = open_out(out_dir / "predictions_train.csv");
    write_prediction_series(out, o.train_actual, o.train_predicted);
  }
  {
    auto out = open_out(out_dir / "predictions_test.csv");
    write_prediction_series(out, o.test_actual, o.test_predicted);
  }
  {
    auto out = open_out(out_dir / "burst_report.txt");
    write_burst_report(out, o.burst);
  }
  {
    auto out = open_out(out_dir / "loss_history.csv");
    out << "epoch,loss\n";
    for (std::size_t e = 0; e < o.training.loss_history.size(); ++e) {
      out << e << ',' << fmt(o.training.loss_history[e]) << '\n';
    }
  }
  {
    auto out = open_out(out_dir / "model.txt");
    save_model(out, o.training.model);
  }

  Summary s;
  s["bins"] = std::to_string(o.bins);
  s["zero_bin_fraction"] = fmt(o.zero_bin_fraction);
  s["train_windows"] = std::to_string(o.train_windows);
  s["test_windows"] = std::to_string(o.test_windows);
  s["train_rmse"] = fmt(o.train_rmse);
  s["test_rmse"] = fmt(o.test_rmse);
  s["baseline_test_rmse"] = fmt(o.baseline_test_rmse);
  s["test_prediction_variance"] = fmt(o.test_prediction_variance);
  s["test_target_variance"] = fmt(o.test_target_variance);
  s["burst_threshold"] = fmt(o.burst.threshold);
  s["burst_tp"] = std::to_string(o.burst.tp);
  s["burst_fp"] = std::to_string(o.burst.fp);
  s["burst_fn"] = std::to_string(o.burst.fn);
  s["burst_tn"] = std::to_string(o.burst.tn);
  s["burst_accuracy"] = fmt(o.burst.accuracy);
  s["burst_precision"] = fmt(o.burst.precision);
  s["burst_recall"] = fmt(o.burst.recall);
  s["burst_f1"] = fmt(o.burst.f1);
  s["baseline_all_positive_f1"] = fmt(o.all_positive_f1);
  s["baseline_all_negative_f1"] = fmt(o.all_negative_f1);
  s["final_train_loss"] = fmt(o.training.loss_history.back());
  if (!o.warnings.empty()) s["warnings"] = textio::join(o.warnings, "; ");
  return s;
}

Summary write_cluster_outputs(const ClusterGridOutcome& grid, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  Summary s;
  s["cells"] = std::to_string(grid.cells.size());
  for (const GridCell& cell : grid.cells) {
    const std::string tag = bin_tag(cell.bin_size) + "_" + subset_tag(cell.feature_subset);
    if (!cell.result) {
      s[tag + ".skipped"] = cell.skip_reason;
      continue;
    }
    const ClusterResult& r = *cell.result;
    const auto series = std::ranges::find(grid.series, cell.bin_size, &BinSeries::bin_size);
    const auto points = cluster_points(series->bins, cell.feature_subset);
    {
      auto out = open_out(out_dir / ("cluster_" + tag + "_assignments.csv"));
      write_assignments(out, r, points);
    }
    {
      auto out = open_out(out_dir / ("cluster_" + tag + "_centroids.csv"));
      write_centroids(out, r);
    }
    std::vector<std::size_t> sizes(r.k, 0);
    for (std::size_t a : r.assignments) ++sizes[a];
    std::vector<std::string> size_text;
    for (std::size_t n : sizes) size_text.push_back(std::to_string(n));
    s[tag + ".points"] = std::to_string(points.size());
    s[tag + ".inertia"] = fmt(r.inertia);
    s[tag + ".iterations"] = std::to_string(r.iterations);
    s[tag + ".cluster_sizes"] = textio::join(size_text, " ");
  }
  return s;
}

Summary run_experiment(const ExperimentPreset& preset, std::span<const LabeledPacket> packets,
                       std::uint64_t seed, const TrainOverrides& overrides, const fs::path& out_dir) {
  Summary s;
  if (preset.clustering) {
    KMeansOptions options;
    options.k = 4;
    options.seed = seed;
    s = write_cluster_outputs(run_cluster_grid(packets, cluster_bin_sizes(), options), out_dir);
  } else {
    RegressionSetup setup = preset.regression;
    setup.train.seed = seed;
    apply_overrides(setup, overrides);
    s = write_regression_outputs(run_regression(packets, setup), out_dir);
    s["bin_size"] = fmt(setup.window.bin_size);
    s["history_len"] = std::to_string(setup.window.history_len);
    s["padding"] = std::string(padding_mode_name(setup.padding));
    s["max_run"] = std::to_string(setup.max_run);
    s["nonzero_filter"] = setup.nonzero_filter ? "true" : "false";
    s["train_fraction"] = fmt(setup.train_fraction);
    s["learning_rate"] = fmt(setup.train.learning_rate);
    s["epochs"] = std::to_string(setup.train.epochs);
    s["batch_size"] = std::to_string(setup.train.batch_size);
    s["hidden_size"] = std::to_string(setup.train.hidden_size);
    s["clip_norm"] = setup.train.clip_norm ? fmt(*setup.train.clip_norm) : "none";
  }
  s["experiment"] = preset.name;
  s["seed"] = std::to_string(seed);
  s["packets"] = std::to_string(packets.size());
  write_summary(out_dir / "summary.txt", s);
  return s;
}

}  // namespace cellflow
