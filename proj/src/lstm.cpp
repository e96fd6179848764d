#include "cellflow/lstm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "cellflow/error.hpp"
#include "cellflow/kernels.hpp"
#include "cellflow/rng.hpp"
#include "cellflow/textio.hpp"

namespace cellflow {
namespace {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::uint64_t fingerprint(const LstmParams& p, const HeadParams& head) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ static_cast<std::uint64_t>(head.kind);
  auto absorb = [&h](std::span<const double> values) {
    for (double v : values) h = (std::rotl(h, 23) ^ std::bit_cast<std::uint64_t>(v)) * 0x100000001b3ULL;
  };
  absorb(p.W.values());
  absorb(p.U.values());
  absorb(p.b);
  absorb(head.W.values());
  absorb(head.b);
  return h;
}

void check_shapes(const LstmParams& p, const HeadParams& head) {
  const std::size_t rows = kGateCount * p.hidden_size;
  if (p.hidden_size == 0 || p.input_size == 0) throw ShapeError("LSTM sizes must be positive");
  if (p.W.rows() != rows || p.W.cols() != p.input_size || p.U.rows() != rows ||
      p.U.cols() != p.hidden_size || p.b.size() != rows) {
    throw ShapeError("LSTM parameter shapes disagree with hidden/input sizes");
  }
  if (head.b.size() != head_output_dim(head.kind) || head.W.rows() != head.b.size() ||
      head.W.cols() != p.hidden_size) {
    throw ShapeError("head parameter shapes disagree with the head kind or hidden size");
  }
}

void require_finite(std::span<const double> values, const char* what, std::size_t step) {
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (!std::isfinite(values[j])) {
      throw NumericError(std::string("non-finite ") + what + "[" + std::to_string(j) +
                         "] at step " + std::to_string(step));
    }
  }
}

// One LSTM step. `gates` receives the activated i, f, o, g blocks.
void step(const LstmParams& p, std::span<const double> x, std::span<const double> h_prev,
          std::span<const double> c_prev, std::span<double> gates, std::span<double> c_out,
          std::span<double> tanh_c, std::span<double> h_out) {
  const std::size_t H = p.hidden_size;
  std::ranges::copy(p.b, gates.begin());
  kernels::gemv(p.W.values(), kGateCount * H, p.input_size, x, gates);
  kernels::gemv(p.U.values(), kGateCount * H, H, h_prev, gates);
  for (std::size_t j = 0; j < H; ++j) {
    const double i = sigmoid(gates[j]);
    const double f = sigmoid(gates[H + j]);
    const double o = sigmoid(gates[2 * H + j]);
    const double g = std::tanh(gates[3 * H + j]);
    gates[j] = i;
    gates[H + j] = f;
    gates[2 * H + j] = o;
    gates[3 * H + j] = g;
    const double c = f * c_prev[j] + i * g;
    const double tc = std::tanh(c);
    c_out[j] = c;
    tanh_c[j] = tc;
    h_out[j] = o * tc;
  }
}

void resize(Matrix& m, std::size_t rows, std::size_t cols) {
  if (m.rows() != rows || m.cols() != cols) m = Matrix(rows, cols);
}

int class_label(double target) {
  const double r = std::round(target);
  if (r != target || r < 0.0 || r > 3.0) {
    throw Error("Softmax4 target must be a class index in 0..3, got " + textio::format_double(target));
  }
  return static_cast<int>(r);
}

void subtract_scaled(std::span<double> params, std::span<const double> grads, double lr) {
  kernels::axpy(-lr, grads, params);
}

double sum_squares(std::span<const double> v) { return kernels::dot(v, v); }

}  // namespace

std::string_view gate_name(Gate gate) noexcept {
  switch (gate) {
    case Gate::Input: return "input";
    case Gate::Forget: return "forget";
    case Gate::Output: return "output";
    case Gate::Candidate: return "candidate";
  }
  return "?";
}

std::string_view head_kind_name(HeadKind kind) noexcept {
  return kind == HeadKind::Regression ? "regression" : "softmax";
}

HeadKind parse_head_kind(std::string_view name) {
  if (name == "regression") return HeadKind::Regression;
  if (name == "softmax" || name == "softmax4") return HeadKind::Softmax4;
  throw Error("unknown head '" + std::string(name) + "' (valid: regression, softmax)");
}

std::size_t head_output_dim(HeadKind kind) noexcept { return kind == HeadKind::Regression ? 1 : 4; }

LstmParams LstmParams::zeros(std::size_t input_size, std::size_t hidden_size) {
  LstmParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  p.W = Matrix(kGateCount * hidden_size, input_size);
  p.U = Matrix(kGateCount * hidden_size, hidden_size);
  p.b.assign(kGateCount * hidden_size, 0.0);
  return p;
}

std::span<double> LstmParams::input_weights(Gate gate) {
  const auto g = static_cast<std::size_t>(gate);
  return W.values().subspan(g * hidden_size * input_size, hidden_size * input_size);
}

std::span<double> LstmParams::recurrent_weights(Gate gate) {
  const auto g = static_cast<std::size_t>(gate);
  return U.values().subspan(g * hidden_size * hidden_size, hidden_size * hidden_size);
}

std::span<double> LstmParams::bias(Gate gate) {
  const auto g = static_cast<std::size_t>(gate);
  return std::span<double>(b).subspan(g * hidden_size, hidden_size);
}

HeadParams HeadParams::zeros(HeadKind kind, std::size_t hidden_size) {
  HeadParams head;
  head.kind = kind;
  head.W = Matrix(head_output_dim(kind), hidden_size);
  head.b.assign(head_output_dim(kind), 0.0);
  return head;
}

CellState CellState::zeros(std::size_t hidden_size) {
  return {std::vector<double>(hidden_size, 0.0), std::vector<double>(hidden_size, 0.0)};
}

std::pair<CellState, StepCache> cell_forward(std::span<const double> x, const CellState& state,
                                             const LstmParams& p) {
  if (x.size() != p.input_size) {
    throw ShapeError("input has " + std::to_string(x.size()) + " components, expected " +
                     std::to_string(p.input_size));
  }
  if (state.h.size() != p.hidden_size || state.c.size() != p.hidden_size) {
    throw ShapeError("cell state size differs from hidden size " + std::to_string(p.hidden_size));
  }
  const std::size_t H = p.hidden_size;
  std::vector<double> gates(kGateCount * H);
  CellState next = CellState::zeros(H);
  StepCache cache;
  cache.x.assign(x.begin(), x.end());
  cache.h_prev = state.h;
  cache.c_prev = state.c;
  cache.tanh_c.resize(H);
  step(p, x, state.h, state.c, gates, next.c, cache.tanh_c, next.h);
  require_finite(next.c, "c", 0);
  require_finite(next.h, "h", 0);
  for (std::size_t g = 0; g < kGateCount; ++g) {
    cache.gates[g].assign(gates.begin() + static_cast<std::ptrdiff_t>(g * H),
                          gates.begin() + static_cast<std::ptrdiff_t>((g + 1) * H));
  }
  return {std::move(next), std::move(cache)};
}

double softmax_in_place(std::span<double> logits) {
  const double m = *std::ranges::max_element(logits);
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : logits) v /= sum;
  return m + std::log(sum);
}

std::vector<double> forward(const Matrix& window, const LstmParams& p, const HeadParams& head,
                            ForwardCache& cache) {
  check_shapes(p, head);
  if (window.rows() == 0) throw Error("cannot run the LSTM on an empty window");
  if (window.cols() != p.input_size) {
    throw ShapeError("window has " + std::to_string(window.cols()) + " features, model expects " +
                     std::to_string(p.input_size));
  }
  const std::size_t T = window.rows();
  const std::size_t H = p.hidden_size;
  cache.steps = T;
  cache.input_size = p.input_size;
  cache.hidden_size = H;
  cache.kind = head.kind;
  cache.fingerprint = fingerprint(p, head);
  cache.x = window;
  resize(cache.h, T + 1, H);
  resize(cache.c, T + 1, H);
  resize(cache.gates, T, kGateCount * H);
  resize(cache.tanh_c, T, H);
  std::ranges::fill(cache.h.row(0), 0.0);
  std::ranges::fill(cache.c.row(0), 0.0);

  for (std::size_t t = 0; t < T; ++t) {
    step(p, window.row(t), cache.h.row(t), cache.c.row(t), cache.gates.row(t), cache.c.row(t + 1),
         cache.tanh_c.row(t), cache.h.row(t + 1));
    require_finite(cache.c.row(t + 1), "c", t);
    require_finite(cache.h.row(t + 1), "h", t);
  }

  cache.logits = head.b;
  kernels::gemv(head.W.values(), head.W.rows(), H, cache.h.row(T), cache.logits);
  cache.output = cache.logits;
  if (head.kind == HeadKind::Softmax4) softmax_in_place(cache.output);
  require_finite(cache.output, "output", T - 1);
  return cache.output;
}

std::vector<double> forward(const Matrix& window, const LstmParams& p, const HeadParams& head) {
  ForwardCache cache;
  return forward(window, p, head, cache);
}

Gradients Gradients::zeros_like(const LstmParams& p, const HeadParams& head) {
  return {LstmParams::zeros(p.input_size, p.hidden_size), HeadParams::zeros(head.kind, p.hidden_size)};
}

void Gradients::set_zero() {
  std::ranges::fill(lstm.W.values(), 0.0);
  std::ranges::fill(lstm.U.values(), 0.0);
  std::ranges::fill(lstm.b, 0.0);
  std::ranges::fill(head.W.values(), 0.0);
  std::ranges::fill(head.b, 0.0);
}

double Gradients::squared_norm() const {
  return sum_squares(lstm.W.values()) + sum_squares(lstm.U.values()) + sum_squares(lstm.b) +
         sum_squares(head.W.values()) + sum_squares(head.b);
}

void Gradients::scale(double factor) {
  for (double& v : lstm.W.values()) v *= factor;
  for (double& v : lstm.U.values()) v *= factor;
  for (double& v : lstm.b) v *= factor;
  for (double& v : head.W.values()) v *= factor;
  for (double& v : head.b) v *= factor;
}

void backward(const ForwardCache& cache, const LstmParams& p, const HeadParams& head,
              std::span<const double> d_logits, Gradients& into) {
  check_shapes(p, head);
  if (cache.steps == 0 || cache.input_size != p.input_size || cache.hidden_size != p.hidden_size ||
      cache.kind != head.kind) {
    throw Error("forward cache does not match the parameters passed to backward");
  }
  if (cache.fingerprint != fingerprint(p, head)) {
    throw Error("stale forward cache: parameters changed since the forward pass");
  }
  if (d_logits.size() != head.output_dim()) {
    throw ShapeError("loss gradient has " + std::to_string(d_logits.size()) +
                     " components, head has " + std::to_string(head.output_dim()));
  }
  if (into.lstm.W.rows() != p.W.rows() || into.lstm.W.cols() != p.W.cols() ||
      into.lstm.U.cols() != p.U.cols() || into.head.W.rows() != head.W.rows()) {
    throw ShapeError("gradient accumulator shapes differ from the parameters");
  }

  const std::size_t H = p.hidden_size;
  const std::size_t I = p.input_size;
  const std::size_t T = cache.steps;
  const std::size_t G = kGateCount * H;

  kernels::rank1(into.head.W.values(), head.W.rows(), H, d_logits, cache.h.row(T));
  kernels::axpy(1.0, d_logits, into.head.b);

  std::vector<double> dh(H, 0.0);
  std::vector<double> dc_next(H, 0.0);
  std::vector<double> dz(G, 0.0);
  kernels::gemv_t(head.W.values(), head.W.rows(), H, d_logits, dh);

  for (std::size_t t = T; t-- > 0;) {
    const auto gates = cache.gates.row(t);
    const auto c_prev = cache.c.row(t);
    const auto tanh_c = cache.tanh_c.row(t);
    for (std::size_t j = 0; j < H; ++j) {
      const double i = gates[j];
      const double f = gates[H + j];
      const double o = gates[2 * H + j];
      const double g = gates[3 * H + j];
      const double tc = tanh_c[j];
      const double d_o = dh[j] * tc;
      const double dc = dc_next[j] + dh[j] * o * (1.0 - tc * tc);
      dz[j] = dc * g * i * (1.0 - i);
      dz[H + j] = dc * c_prev[j] * f * (1.0 - f);
      dz[2 * H + j] = d_o * o * (1.0 - o);
      dz[3 * H + j] = dc * i * (1.0 - g * g);
      dc_next[j] = dc * f;
    }
    kernels::rank1(into.lstm.W.values(), G, I, dz, cache.x.row(t));
    kernels::rank1(into.lstm.U.values(), G, H, dz, cache.h.row(t));
    kernels::axpy(1.0, dz, into.lstm.b);
    std::ranges::fill(dh, 0.0);
    kernels::gemv_t(p.U.values(), G, H, dz, dh);
  }
}

Gradients backward(const ForwardCache& cache, const LstmParams& p, const HeadParams& head,
                   std::span<const double> d_logits) {
  Gradients g = Gradients::zeros_like(p, head);
  backward(cache, p, head, d_logits, g);
  return g;
}

LossValue loss_and_gradient(const ForwardCache& cache, double target) {
  LossValue out;
  if (cache.kind == HeadKind::Regression) {
    const double diff = cache.output.at(0) - target;
    out.loss = diff * diff;
    out.d_logits = {2.0 * diff};
    return out;
  }
  const int label = class_label(target);
  const double m = *std::ranges::max_element(cache.logits);
  double sum = 0.0;
  for (double z : cache.logits) sum += std::exp(z - m);
  out.loss = m + std::log(sum) - cache.logits[static_cast<std::size_t>(label)];
  out.d_logits = cache.output;
  out.d_logits[static_cast<std::size_t>(label)] -= 1.0;
  return out;
}

void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw Error("learning rate must be a finite non-negative number");
  }
  if (cfg.epochs == 0) throw Error("epochs must be positive");
  if (cfg.batch_size == 0) throw Error("batch size must be positive");
  if (cfg.hidden_size == 0) throw Error("hidden size must be positive");
  if (cfg.clip_norm && !(*cfg.clip_norm > 0.0)) throw Error("clip norm must be positive");
}

void initialize(LstmParams& p, HeadParams& head, std::uint64_t seed) {
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(p.hidden_size));
  auto fill = [&](std::span<double> values) {
    for (double& v : values) v = rng.uniform(-bound, bound);
  };
  fill(p.W.values());
  fill(p.U.values());
  fill(p.b);
  fill(head.W.values());
  fill(head.b);
}

TrainResult train(const WindowedDataset& train_set, const TrainConfig& cfg, HeadKind kind) {
  validate(cfg);
  if (train_set.empty()) throw Error("cannot train on an empty dataset");
  if (kind == HeadKind::Softmax4) {
    for (const Window& w : train_set.windows) class_label(w.target);
  }

  TrainResult result;
  LstmModel& model = result.model;
  model.window = train_set.config;
  if (kind == HeadKind::Regression) {
    double sum = 0.0;
    for (const Window& w : train_set.windows) sum += w.target;
    model.burst_threshold = sum / static_cast<double>(train_set.size());
  }
  model.scaler = fit_scaler(train_set, kind == HeadKind::Regression ? TargetScaling::MinMax
                                                                    : TargetScaling::Identity);
  const WindowedDataset scaled = model.scaler.apply(train_set);
  model.lstm = LstmParams::zeros(train_set.feature_count(), cfg.hidden_size);
  model.head = HeadParams::zeros(kind, cfg.hidden_size);
  initialize(model.lstm, model.head, derive_seed(cfg.seed, 0));

  Rng order_rng(derive_seed(cfg.seed, 1));
  std::vector<std::size_t> order(scaled.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  Gradients grads = Gradients::zeros_like(model.lstm, model.head);
  ForwardCache cache;
  result.loss_history.reserve(cfg.epochs);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[order_rng.below(i)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0, batch = 0; start < order.size(); start += cfg.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      grads.set_zero();
      for (std::size_t k = start; k < end; ++k) {
        const Window& w = scaled.windows[order[k]];
        forward(w.history, model.lstm, model.head, cache);
        LossValue lv = loss_and_gradient(cache, w.target);
        if (!std::isfinite(lv.loss)) {
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch));
        }
        epoch_loss += lv.loss;
        backward(cache, model.lstm, model.head, lv.d_logits, grads);
      }
      grads.scale(1.0 / static_cast<double>(end - start));
      if (cfg.clip_norm) {
        const double norm = std::sqrt(grads.squared_norm());
        if (norm > *cfg.clip_norm) grads.scale(*cfg.clip_norm / norm);
      }
      subtract_scaled(model.lstm.W.values(), grads.lstm.W.values(), cfg.learning_rate);
      subtract_scaled(model.lstm.U.values(), grads.lstm.U.values(), cfg.learning_rate);
      subtract_scaled(model.lstm.b, grads.lstm.b, cfg.learning_rate);
      subtract_scaled(model.head.W.values(), grads.head.W.values(), cfg.learning_rate);
      subtract_scaled(model.head.b, grads.head.b, cfg.learning_rate);
    }
    result.loss_history.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  return result;
}

namespace {

WindowedDataset scaled_inputs(const WindowedDataset& ds, const LstmModel& model) {
  if (ds.feature_count() != model.lstm.input_size) {
    throw ShapeError("model expects " + std::to_string(model.lstm.input_size) +
                     " features per row but the dataset has " + std::to_string(ds.feature_count()));
  }
  return model.scaler.apply_features(ds);
}

}  // namespace

std::vector<double> predict(const WindowedDataset& ds, const LstmModel& model) {
  if (model.head.kind != HeadKind::Regression) throw Error("predict needs a regression model");
  std::vector<double> out;
  if (ds.empty()) return out;
  const WindowedDataset scaled = scaled_inputs(ds, model);
  ForwardCache cache;
  out.reserve(scaled.size());
  for (const Window& w : scaled.windows) {
    const double y = forward(w.history, model.lstm, model.head, cache).front();
    out.push_back(std::max(0.0, model.scaler.invert_target(y)));
  }
  return out;
}

std::vector<std::array<double, 4>> predict_proba(const WindowedDataset& ds, const LstmModel& model) {
  if (model.head.kind != HeadKind::Softmax4) throw Error("predict_proba needs a softmax model");
  std::vector<std::array<double, 4>> out;
  if (ds.empty()) return out;
  const WindowedDataset scaled = scaled_inputs(ds, model);
  ForwardCache cache;
  out.reserve(scaled.size());
  for (const Window& w : scaled.windows) {
    const auto p = forward(w.history, model.lstm, model.head, cache);
    out.push_back({p[0], p[1], p[2], p[3]});
  }
  return out;
}

std::vector<int> predict_classes(const WindowedDataset& ds, const LstmModel& model) {
  std::vector<int> out;
  for (const auto& p : predict_proba(ds, model)) {
    out.push_back(static_cast<int>(std::ranges::max_element(p) - p.begin()));
  }
  return out;
}

GradCheckReport grad_check(const LstmParams& p, const HeadParams& head, const Matrix& window,
                           double target, double epsilon) {
  LstmParams params = p;
  HeadParams out_head = head;
  ForwardCache cache;
  forward(window, params, out_head, cache);
  const LossValue lv = loss_and_gradient(cache, target);
  const Gradients analytic = backward(cache, params, out_head, lv.d_logits);

  auto loss_at = [&] {
    ForwardCache c;
    forward(window, params, out_head, c);
    return loss_and_gradient(c, target).loss;
  };

  GradCheckReport report;
  const std::size_t H = params.hidden_size;
  auto check = [&](std::string_view name, std::span<double> values, std::span<const double> grads,
                   std::size_t cols, bool gated) {
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double saved = values[k];
      values[k] = saved + epsilon;
      const double up = loss_at();
      values[k] = saved - epsilon;
      const double down = loss_at();
      values[k] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = grads[k];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-12});
      ++report.parameters_checked;
      if (rel > report.max_relative_error || report.worst_parameter.empty()) {
        report.max_relative_error = std::max(report.max_relative_error, rel);
        const std::size_t row = k / cols;
        std::string label(name);
        if (gated) label += "[" + std::string(gate_name(static_cast<Gate>(row / H))) + "]";
        report.worst_parameter =
            label + "(" + std::to_string(gated ? row % H : row) + "," + std::to_string(k % cols) + ")";
      }
    }
  };
  check("W", params.W.values(), analytic.lstm.W.values(), params.input_size, true);
  check("U", params.U.values(), analytic.lstm.U.values(), H, true);
  check("b", params.b, analytic.lstm.b, 1, true);
  check("head.W", out_head.W.values(), analytic.head.W.values(), H, false);
  check("head.b", out_head.b, analytic.head.b, 1, false);
  return report;
}

}  // namespace cellflow
