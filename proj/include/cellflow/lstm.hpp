#pragma once

// Single-layer LSTM with a dense head, trained by backpropagation through
// time and plain mini-batch gradient descent. Double precision throughout.
//
// Gate equations for one step with input x and previous state (h, c):
//   i  = sigmoid(W_i x + U_i h + b_i)
//   f  = sigmoid(W_f x + U_f h + b_f)
//   o  = sigmoid(W_o x + U_o h + b_o)
//   g  = tanh(W_g x + U_g h + b_g)
//   c' = f * c + i * g
//   h' = o * tanh(c')

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cellflow/dataset.hpp"
#include "cellflow/matrix.hpp"

namespace cellflow {

enum class Gate : std::size_t { Input = 0, Forget = 1, Output = 2, Candidate = 3 };
inline constexpr std::size_t kGateCount = 4;

std::string_view gate_name(Gate gate) noexcept;

enum class HeadKind { Regression, Softmax4 };

std::string_view head_kind_name(HeadKind kind) noexcept;
HeadKind parse_head_kind(std::string_view name);

/// LSTM weights with the four gates stacked in `Gate` order: rows
/// [g*hidden, (g+1)*hidden) of W, U and b belong to gate g.
struct LstmParams {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  Matrix W;               ///< (4*hidden) x input
  Matrix U;               ///< (4*hidden) x hidden
  std::vector<double> b;  ///< 4*hidden

  static LstmParams zeros(std::size_t input_size, std::size_t hidden_size);

  std::span<double> input_weights(Gate gate);
  std::span<double> recurrent_weights(Gate gate);
  std::span<double> bias(Gate gate);

  friend bool operator==(const LstmParams&, const LstmParams&) = default;
};

struct HeadParams {
  HeadKind kind = HeadKind::Regression;
  Matrix W;               ///< output_dim x hidden
  std::vector<double> b;  ///< output_dim

  static HeadParams zeros(HeadKind kind, std::size_t hidden_size);
  std::size_t output_dim() const noexcept { return b.size(); }

  friend bool operator==(const HeadParams&, const HeadParams&) = default;
};

std::size_t head_output_dim(HeadKind kind) noexcept;

struct CellState {
  std::vector<double> h;
  std::vector<double> c;

  static CellState zeros(std::size_t hidden_size);
};

/// Activated gate values of one step, in `Gate` order.
struct StepCache {
  std::vector<double> x;
  std::vector<double> h_prev;
  std::vector<double> c_prev;
  std::array<std::vector<double>, kGateCount> gates;
  std::vector<double> tanh_c;
};

std::pair<CellState, StepCache> cell_forward(std::span<const double> x, const CellState& state,
                                             const LstmParams& p);

/// Everything `backward` needs from a forward pass over one window.
struct ForwardCache {
  std::size_t steps = 0;
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  HeadKind kind = HeadKind::Regression;
  std::uint64_t fingerprint = 0;  ///< of the parameters used
  Matrix x;                       ///< steps x input
  Matrix h;                       ///< (steps + 1) x hidden, row 0 is the initial state
  Matrix c;                       ///< (steps + 1) x hidden
  Matrix gates;                   ///< steps x (4*hidden), activated
  Matrix tanh_c;                  ///< steps x hidden
  std::vector<double> logits;     ///< head pre-activation
  std::vector<double> output;     ///< regression value or probabilities
};

/// Runs the window rows in order from a zero state and applies the head.
/// Regression output is a single value; Softmax4 output is 4 probabilities.
std::vector<double> forward(const Matrix& window, const LstmParams& p, const HeadParams& head,
                            ForwardCache& cache);

std::vector<double> forward(const Matrix& window, const LstmParams& p, const HeadParams& head);

struct Gradients {
  LstmParams lstm;
  HeadParams head;

  static Gradients zeros_like(const LstmParams& p, const HeadParams& head);
  void set_zero();
  double squared_norm() const;
  void scale(double factor);
};

/// Backpropagation through time. `d_logits` is the loss gradient with
/// respect to the head pre-activation (the regression value, or the four
/// softmax logits). Gradients are added to `into`.
void backward(const ForwardCache& cache, const LstmParams& p, const HeadParams& head,
              std::span<const double> d_logits, Gradients& into);

Gradients backward(const ForwardCache& cache, const LstmParams& p, const HeadParams& head,
                   std::span<const double> d_logits);

struct LossValue {
  double loss = 0.0;
  std::vector<double> d_logits;
};

/// Squared error (y - target)^2 for regression; -log p[target] for Softmax4.
LossValue loss_and_gradient(const ForwardCache& cache, double target);

double softmax_in_place(std::span<double> logits);

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  std::optional<double> clip_norm = 5.0;
  std::size_t hidden_size = 100;
};

void validate(const TrainConfig& cfg);

struct LstmModel {
  LstmParams lstm;
  HeadParams head;
  Scaler scaler;
  WindowConfig window;
  double burst_threshold = 0.0;  ///< mean training target (regression)

  friend bool operator==(const LstmModel&, const LstmModel&) = default;
};

struct TrainResult {
  LstmModel model;
  std::vector<double> loss_history;  ///< mean training loss per epoch (scaled units)
};

/// Uniform initialization in [-1/sqrt(hidden), 1/sqrt(hidden)].
void initialize(LstmParams& p, HeadParams& head, std::uint64_t seed);

/// Fits a scaler on `train`, initializes from `cfg.seed` and runs
/// mini-batch gradient descent with optional global-norm clipping.
TrainResult train(const WindowedDataset& train, const TrainConfig& cfg, HeadKind kind);

/// Regression predictions in original target units, clamped at 0.
std::vector<double> predict(const WindowedDataset& ds, const LstmModel& model);

/// Class probabilities per window (Softmax4 models).
std::vector<std::array<double, 4>> predict_proba(const WindowedDataset& ds, const LstmModel& model);
std::vector<int> predict_classes(const WindowedDataset& ds, const LstmModel& model);

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t parameters_checked = 0;
};

/// Central finite differences over every parameter, relative error
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
GradCheckReport grad_check(const LstmParams& p, const HeadParams& head, const Matrix& window,
                           double target, double epsilon);

/// Text model format, version line first; see README for the layout.
void save_model(std::ostream& out, const LstmModel& model);
LstmModel load_model(std::istream& in);

}  // namespace cellflow
