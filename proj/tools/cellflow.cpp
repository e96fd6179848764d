// cellflow command-line front end.
//
// Every subcommand reads and writes plain delimited text. Outputs default
// to $CELLFLOW_OUT_DIR (or the current directory) when no path is given.
// --config FILE reads `key = value` lines named after the long options,
// grouped under a [subcommand] section.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cellflow/error.hpp"
#include "cellflow/experiment.hpp"
#include "cellflow/kernels.hpp"
#include "cellflow/textio.hpp"

namespace fs = std::filesystem;
using namespace cellflow;

namespace {

fs::path out_root() {
  const char* env = std::getenv("CELLFLOW_OUT_DIR");
  return env && *env ? fs::path(env) : fs::path(".");
}

fs::path output_path(const std::string& given, const std::string& fallback) {
  return given.empty() ? out_root() / fallback : fs::path(given);
}

fs::path output_dir(const std::string& given) { return given.empty() ? out_root() : fs::path(given); }

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

fs::path sidecar(const fs::path& capture, const std::string& ext) {
  fs::path p = capture;
  return p.replace_extension(ext);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  for (const std::string& part : textio::split_csv(text)) {
    const auto t = textio::trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

// Endpoint sidecar: `tower=<addr>` and `users=<addr>,<addr>` lines.
void write_endpoints(const fs::path& path, const EndpointMap& eps) {
  auto out = open_out(path);
  out << "tower=" << eps.tower_addr << '\n';
  out << "users=" << textio::join(std::vector<std::string>(eps.user_addrs.begin(), eps.user_addrs.end()), ",")
      << '\n';
}

EndpointMap read_endpoints(const fs::path& path) {
  auto in = open_in(path);
  EndpointMap eps;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = textio::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw Error(path.string() + ": expected key=value, got '" + std::string(t) + "'");
    const std::string key(textio::trim(t.substr(0, eq)));
    const std::string value(textio::trim(t.substr(eq + 1)));
    if (key == "tower") eps.tower_addr = value;
    else if (key == "users") {
      for (auto& u : split_list(value)) eps.user_addrs.insert(u);
    } else {
      throw Error(path.string() + ": unknown key '" + key + "'");
    }
  }
  return eps;
}

struct CaptureArgs {
  std::string in;
  std::string tower;
  std::string users;
  std::string endpoints;
  bool drop_bad_rows = false;

  void add(CLI::App* app, bool required = true) {
    auto* opt = app->add_option("--in", in, "packet capture (CSV)");
    if (required) opt->required();
    app->add_option("--tower", tower, "tower address (skips inference)");
    app->add_option("--users", users, "comma-separated user addresses");
    app->add_option("--endpoints", endpoints, "endpoint file with tower= and users= lines");
    app->add_flag("--drop-bad-rows", drop_bad_rows, "skip malformed rows instead of failing");
  }

  // Explicit flags, then an explicit endpoint file, then the sidecar written
  // by `synth`, then inference.
  std::vector<LabeledPacket> load(std::vector<PacketRecord>* raw = nullptr) const {
    auto stream = open_in(in);
    ParsedCapture parsed = parse_capture(stream, CaptureSchema{}, drop_bad_rows);
    if (parsed.dropped_rows > 0) {
      std::cerr << "cellflow: dropped " << parsed.dropped_rows << " malformed rows\n";
    }
    EndpointMap eps;
    if (!tower.empty() || !users.empty()) {
      if (tower.empty() || users.empty()) throw Error("--tower and --users must be given together");
      eps.tower_addr = tower;
      for (auto& u : split_list(users)) eps.user_addrs.insert(u);
    } else if (!endpoints.empty()) {
      eps = read_endpoints(endpoints);
    } else if (fs::exists(sidecar(in, ".endpoints"))) {
      eps = read_endpoints(sidecar(in, ".endpoints"));
    } else {
      try {
        eps = infer_endpoints(parsed.records);
      } catch (const AmbiguityError& e) {
        throw AmbiguityError(std::string(e.what()) + " with --tower and --users, or --endpoints");
      }
    }
    validate(eps);
    LabelResult labeled = label_direction(parsed.records, eps);
    if (labeled.skipped > 0) {
      std::cerr << "cellflow: skipped " << labeled.skipped << " packets outside the endpoint map\n";
    }
    if (raw) *raw = std::move(parsed.records);
    return std::move(labeled.packets);
  }
};

std::vector<Session> load_sessions(const std::string& given, const std::string& capture) {
  const fs::path path = given.empty() ? sidecar(capture, ".sessions.csv") : fs::path(given);
  auto in = open_in(path);
  return read_sessions(in);
}

struct TrainFlags {
  std::optional<double> lr;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch;
  std::optional<std::size_t> hidden;
  std::optional<double> clip;
  bool no_clip = false;
  std::optional<double> train_fraction;

  void add(CLI::App* app) {
    app->add_option("--lr", lr, "learning rate");
    app->add_option("--epochs", epochs, "training epochs");
    app->add_option("--batch", batch, "mini-batch size");
    app->add_option("--hidden", hidden, "LSTM hidden units");
    app->add_option("--clip", clip, "global gradient-norm clip");
    app->add_flag("--no-clip", no_clip, "disable gradient clipping");
    app->add_option("--train-fraction", train_fraction, "chronological training share");
  }

  TrainOverrides overrides() const {
    TrainOverrides o;
    o.learning_rate = lr;
    o.epochs = epochs;
    o.batch_size = batch;
    o.hidden_size = hidden;
    o.clip_norm = clip;
    o.train_fraction = train_fraction;
    return o;
  }

  void apply(TrainConfig& cfg) const {
    if (lr) cfg.learning_rate = *lr;
    if (epochs) cfg.epochs = *epochs;
    if (batch) cfg.batch_size = *batch;
    if (hidden) cfg.hidden_size = *hidden;
    if (clip) cfg.clip_norm = *clip;
    if (no_clip) cfg.clip_norm.reset();
  }
};

// Window and padding settings shared by train and evaluate. A preset fills
// in defaults; explicit flags win.
struct WindowFlags {
  std::string preset;
  std::optional<double> bin_size;
  std::optional<std::size_t> history;
  std::string padding;
  std::optional<std::size_t> max_run;
  bool nonzero_filter = false;
  std::string features;
  std::string target;

  void add(CLI::App* app) {
    app->add_option("--preset", preset, "window preset (cfg-1x60, ...) or regression experiment name");
    app->add_option("--bin-size", bin_size, "bin width in seconds");
    app->add_option("--history", history, "history rows per window");
    app->add_option("--padding", padding, "none, zero or pro");
    app->add_option("--max-run", max_run, "longest gap ProPadding fills");
    app->add_flag("--nonzero-filter", nonzero_filter, "keep only windows with a non-zero target");
    app->add_option("--features", features, "comma-separated feature names");
    app->add_option("--target", target, "target feature name");
  }

  RegressionSetup resolve() const {
    RegressionSetup s;
    s.window.bin_size = 1.0;
    s.window.history_len = 10;
    if (!preset.empty()) {
      bool found = false;
      for (const WindowPreset& w : window_presets()) {
        if (w.name != preset) continue;
        s.window.bin_size = w.bin_size;
        s.window.history_len = w.history_len;
        s.padding = w.padding;
        s.max_run = w.max_run;
        found = true;
      }
      if (!found) {
        const ExperimentPreset& e = find_experiment(preset);
        if (e.clustering) throw Error("preset '" + preset + "' is not a regression preset");
        s = e.regression;
      }
    }
    if (bin_size) s.window.bin_size = *bin_size;
    if (history) s.window.history_len = *history;
    if (!padding.empty()) s.padding = parse_padding_mode(padding);
    if (max_run) s.max_run = *max_run;
    if (nonzero_filter) s.nonzero_filter = true;
    if (!features.empty()) s.window.feature_names = split_list(features);
    if (!target.empty()) s.window.target_name = target;
    return s;
  }
};

std::vector<BinnedSample> load_bins(const std::string& bins_path, const CaptureArgs& capture,
                                    double bin_size, PaddingMode padding, std::size_t max_run) {
  std::vector<BinnedSample> bins;
  if (!bins_path.empty()) {
    auto in = open_in(bins_path);
    bins = read_bins(in);
  } else {
    bins = bin_packets(capture.load(), bin_size);
  }
  return apply_padding(bins, bin_size, padding, max_run);
}

void write_loss_history(const fs::path& path, const std::vector<double>& history) {
  auto out = open_out(path);
  out << "epoch,loss\n";
  for (std::size_t e = 0; e < history.size(); ++e) out << e << ',' << textio::format_double(history[e]) << '\n';
}

void print_summary(const Summary& s) {
  for (const auto& [k, v] : s) std::cout << k << '=' << v << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cellflow: cellular traffic feature extraction, LSTM forecasting and clustering"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");
  app.set_config("--config", "", "INI file; options go under a [subcommand] section");
  app.fallthrough();

  std::uint64_t seed = 0;
  auto seed_option = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "random seed (required)")->required();
  };

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic packet capture");
  std::string synth_profile = "mixed";
  double synth_duration = -1.0;
  double synth_session = 300.0;
  bool synth_bundled = false;
  std::string synth_out;
  synth->add_option("--profile", synth_profile, "surfing, video_call, voice_call, streaming or mixed");
  synth->add_option("--duration", synth_duration, "seconds");
  synth->add_option("--session-length", synth_session, "session length for mixed traces");
  synth->add_flag("--bundled", synth_bundled, "the fixed trace used by `experiment`");
  synth->add_option("--out", synth_out, "capture path (default trace.csv)");
  seed_option(synth);

  // featurize
  auto* featurize = app.add_subcommand("featurize", "bin a capture into per-interval features");
  CaptureArgs feat_capture;
  double feat_bin = 0.0;
  std::string feat_padding = "zero";
  std::size_t feat_max_run = 2;
  std::string feat_out;
  feat_capture.add(featurize);
  featurize->add_option("--bin-size", feat_bin, "bin width in seconds")->required();
  featurize->add_option("--padding", feat_padding, "none, zero or pro");
  featurize->add_option("--max-run", feat_max_run, "longest gap ProPadding fills");
  featurize->add_option("--out", feat_out, "bin file (default bins.csv)");

  // interarrival
  auto* inter = app.add_subcommand("interarrival", "inter-arrival statistics and histogram");
  CaptureArgs inter_capture;
  double inter_bucket = 0.01;
  std::string inter_out;
  inter_capture.add(inter);
  inter->add_option("--bucket-width", inter_bucket, "histogram bucket width in seconds");
  inter->add_option("--out", inter_out, "output file (default interarrival.csv)");

  // train
  auto* train_cmd = app.add_subcommand("train", "train an LSTM regression or application classifier");
  CaptureArgs train_capture;
  std::string train_bins;
  std::string train_sessions;
  std::string train_head = "regression";
  std::string train_model_out;
  WindowFlags train_window;
  TrainFlags train_flags;
  train_capture.add(train_cmd, false);
  train_cmd->add_option("--in-features", train_bins, "bin file from featurize");
  train_cmd->add_option("--sessions", train_sessions, "session label file (softmax head)");
  train_cmd->add_option("--head", train_head, "regression or softmax");
  train_cmd->add_option("--model-out", train_model_out, "model path (default model.txt)");
  train_window.add(train_cmd);
  train_flags.add(train_cmd);
  seed_option(train_cmd);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "score a regression model on a bin series");
  CaptureArgs eval_capture;
  std::string eval_model;
  std::string eval_bins;
  std::string eval_features;
  std::string eval_padding = "zero";
  std::size_t eval_max_run = 2;
  bool eval_nonzero = false;
  std::optional<double> eval_fraction;
  std::string eval_out;
  evaluate->add_option("--model", eval_model, "model file")->required();
  eval_capture.add(evaluate, false);
  evaluate->add_option("--in-features", eval_bins, "bin file from featurize");
  evaluate->add_option("--features", eval_features, "feature columns (default: the model's)");
  evaluate->add_option("--padding", eval_padding, "padding applied to --in captures");
  evaluate->add_option("--max-run", eval_max_run, "longest gap ProPadding fills");
  evaluate->add_flag("--nonzero-filter", eval_nonzero, "keep only windows with a non-zero target");
  evaluate->add_option("--train-fraction", eval_fraction, "score only the windows after this share");
  evaluate->add_option("--out-dir", eval_out, "output directory");

  // cluster
  auto* cluster = app.add_subcommand("cluster", "K-Means over bin sizes and feature subsets");
  CaptureArgs cluster_capture;
  std::vector<double> cluster_bins = cluster_bin_sizes();
  bool with_ratio = false;
  bool without_ratio = false;
  std::size_t cluster_k = 4;
  std::string cluster_out;
  cluster_capture.add(cluster);
  cluster->add_option("--bin-sizes", cluster_bins, "bin widths in seconds")->delimiter(',');
  cluster->add_flag("--with-ratio", with_ratio, "only the subset including ud_ratio");
  cluster->add_flag("--without-ratio", without_ratio, "only the uplink/downlink count subset");
  cluster->add_option("--k", cluster_k, "clusters");
  cluster->add_option("--out-dir", cluster_out, "output directory");
  seed_option(cluster);

  // experiment
  auto* experiment = app.add_subcommand("experiment", "run a named replication end-to-end");
  std::string exp_name;
  CaptureArgs exp_capture;
  TrainFlags exp_flags;
  std::string exp_out;
  std::vector<std::string> preset_names;
  for (const ExperimentPreset& p : experiment_presets()) preset_names.push_back(p.name);
  experiment->add_option("name", exp_name, "one of: " + textio::join(preset_names, ", "))->required();
  exp_capture.add(experiment, false);
  exp_flags.add(experiment);
  experiment->add_option("--out-dir", exp_out, "output directory");
  seed_option(experiment);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "cellflow: error: " << e.what() << '\n';
    return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
  }

  try {
    if (synth->parsed()) {
      SynthTrace trace;
      if (synth_bundled) {
        trace = bundled_trace();
      } else {
        if (synth_duration < 0.0) throw Error("--duration is required unless --bundled is given");
        if (synth_profile == "mixed") {
          std::vector<WeightedProfile> all;
          for (std::size_t a = 0; a < kAppCount; ++a) all.push_back({default_profile(static_cast<App>(a)), 1.0});
          trace = generate_mixed(all, synth_duration, synth_session, seed);
        } else {
          trace = generate(default_profile(parse_app(synth_profile)), synth_duration, seed);
        }
      }
      const fs::path path = output_path(synth_out, "trace.csv");
      {
        auto out = open_out(path);
        write_capture(out, trace.packets);
      }
      {
        auto out = open_out(sidecar(path, ".sessions.csv"));
        write_sessions(out, trace.sessions);
      }
      write_endpoints(sidecar(path, ".endpoints"),
                      EndpointMap{std::string(kSynthTowerAddr), {std::string(kSynthUserAddr)}});
      std::cout << "packets=" << trace.packets.size() << "\nsessions=" << trace.sessions.size()
                << "\nout=" << path.string() << '\n';
    } else if (featurize->parsed()) {
      const auto packets = feat_capture.load();
      const auto bins = apply_padding(bin_packets(packets, feat_bin), feat_bin,
                                      parse_padding_mode(feat_padding), feat_max_run);
      const fs::path path = output_path(feat_out, "bins.csv");
      auto out = open_out(path);
      write_bins(out, bins);
      std::cout << "bins=" << bins.size() << "\nzero_bin_fraction=" << textio::format_double(zero_bin_fraction(bins))
                << "\nout=" << path.string() << '\n';
    } else if (inter->parsed()) {
      const auto stats = interarrival(inter_capture.load(), inter_bucket);
      const fs::path path = output_path(inter_out, "interarrival.csv");
      auto out = open_out(path);
      write_interarrival(out, stats);
      std::cout << "deltas=" << stats.deltas.size() << "\nmean=" << textio::format_double(stats.mean)
                << "\nout=" << path.string() << '\n';
    } else if (train_cmd->parsed()) {
      const HeadKind head = parse_head_kind(train_head);
      const RegressionSetup setup = train_window.resolve();
      TrainConfig cfg = setup.train;
      train_flags.apply(cfg);
      cfg.seed = seed;
      const fs::path model_path = output_path(train_model_out, "model.txt");
      Summary s;
      TrainResult result;
      if (head == HeadKind::Softmax4) {
        if (train_capture.in.empty()) throw Error("the softmax head trains from --in with session labels");
        ClassificationSetup cs;
        if (train_window.bin_size) cs.window.bin_size = *train_window.bin_size;
        if (train_window.history) cs.window.history_len = *train_window.history;
        if (!train_window.features.empty()) cs.window.feature_names = split_list(train_window.features);
        if (train_flags.train_fraction) cs.train_fraction = *train_flags.train_fraction;
        cs.train = cfg;
        const auto sessions = load_sessions(train_sessions, train_capture.in);
        ClassificationOutcome o = run_classification(train_capture.load(), sessions, cs);
        s["train_sessions"] = std::to_string(o.train_sessions);
        s["test_sessions"] = std::to_string(o.test_sessions);
        s["train_windows"] = std::to_string(o.train_windows);
        s["test_windows"] = std::to_string(o.test_windows);
        s["train_accuracy"] = textio::format_double(o.train_accuracy);
        s["test_accuracy"] = textio::format_double(o.test_accuracy);
        result = std::move(o.training);
      } else {
        if (train_bins.empty() == train_capture.in.empty()) {
          throw Error("give exactly one of --in and --in-features");
        }
        const auto bins = load_bins(train_bins, train_capture, setup.window.bin_size, setup.padding, setup.max_run);
        WindowedDataset ds = make_windows(bins, setup.window);
        if (setup.nonzero_filter) {
          Diagnostics diag;
          ds = filter_nonzero_targets(ds, &diag);
          for (const auto& w : diag.warnings) std::cerr << "cellflow: warning: " << w << '\n';
        }
        const double fraction = train_flags.train_fraction.value_or(1.0);
        const WindowedDataset train_set = fraction >= 1.0 ? ds : split(ds, fraction).first;
        result = train(train_set, cfg, head);
        s["train_windows"] = std::to_string(train_set.size());
        s["train_rmse"] = textio::format_double(rmse(predict(train_set, result.model), targets(train_set)));
      }
      {
        auto out = open_out(model_path);
        save_model(out, result.model);
      }
      write_loss_history(sidecar(model_path, ".loss.csv"), result.loss_history);
      s["final_train_loss"] = textio::format_double(result.loss_history.back());
      s["model"] = model_path.string();
      print_summary(s);
    } else if (evaluate->parsed()) {
      LstmModel model;
      {
        auto in = open_in(eval_model);
        model = load_model(in);
      }
      if (model.head.kind != HeadKind::Regression) throw Error("evaluate scores regression models only");
      if (eval_bins.empty() == eval_capture.in.empty()) throw Error("give exactly one of --in and --in-features");
      WindowConfig window = model.window;
      if (!eval_features.empty()) window.feature_names = split_list(eval_features);
      const auto bins = load_bins(eval_bins, eval_capture, window.bin_size,
                                  eval_bins.empty() ? parse_padding_mode(eval_padding) : PaddingMode::None,
                                  eval_max_run);
      WindowedDataset ds = make_windows(bins, window);
      if (eval_nonzero) ds = filter_nonzero_targets(ds, nullptr);
      if (eval_fraction) ds = split(ds, *eval_fraction).second;
      if (ds.empty()) throw Error("no windows to evaluate");
      const auto predicted = predict(ds, model);
      const auto actual = targets(ds);
      const BurstReport report = [&] {
        BurstReport r = classification_report(label_bursts(predicted, model.burst_threshold),
                                              label_bursts(actual, model.burst_threshold));
        r.threshold = model.burst_threshold;
        return r;
      }();
      const fs::path dir = output_dir(eval_out);
      fs::create_directories(dir);
      {
        auto out = open_out(dir / "predictions.csv");
        write_prediction_series(out, actual, predicted);
      }
      {
        auto out = open_out(dir / "burst_report.txt");
        write_burst_report(out, report);
      }
      Summary s;
      s["windows"] = std::to_string(ds.size());
      s["rmse"] = textio::format_double(rmse(predicted, actual));
      s["burst_f1"] = textio::format_double(report.f1);
      write_summary(dir / "evaluation.txt", s);
      print_summary(s);
    } else if (cluster->parsed()) {
      if (with_ratio && without_ratio) throw Error("--with-ratio and --without-ratio are exclusive");
      std::vector<std::vector<std::string>> subsets = cluster_feature_subsets();
      if (with_ratio) subsets = {subsets[1]};
      if (without_ratio) subsets = {subsets[0]};
      KMeansOptions options;
      options.k = cluster_k;
      options.seed = seed;
      const auto grid = run_cluster_grid(cluster_capture.load(), cluster_bins, options, subsets);
      const fs::path dir = output_dir(cluster_out);
      Summary s = write_cluster_outputs(grid, dir);
      s["seed"] = std::to_string(seed);
      write_summary(dir / "summary.txt", s);
      print_summary(s);
    } else if (experiment->parsed()) {
      const ExperimentPreset& preset = find_experiment(exp_name);
      std::vector<LabeledPacket> packets;
      if (exp_capture.in.empty()) {
        packets = label_synthetic(bundled_trace().packets);
      } else {
        packets = exp_capture.load();
      }
      TrainOverrides o = exp_flags.overrides();
      if (exp_flags.no_clip) throw Error("--no-clip is not supported by experiment presets");
      const fs::path dir = output_dir(exp_out);
      print_summary(run_experiment(preset, packets, seed, o, dir));
    }
  } catch (const std::exception& e) {
    std::cerr << "cellflow: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
