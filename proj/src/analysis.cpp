#include "cellflow/analysis.hpp"

#include <cmath>
#include <ostream>

#include "cellflow/error.hpp"
#include "cellflow/textio.hpp"

namespace cellflow {

double rmse(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) {
    throw ShapeError("rmse: " + std::to_string(predicted.size()) + " predictions vs " +
                     std::to_string(actual.size()) + " actual values");
  }
  if (predicted.empty()) throw Error("rmse of an empty series");
  double ss = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double r = predicted[i] - actual[i];
    ss += r * r;
  }
  return std::sqrt(ss / static_cast<double>(predicted.size()));
}

double burst_threshold(std::span<const double> train_targets) {
  if (train_targets.empty()) throw Error("burst threshold of an empty training set");
  double sum = 0.0;
  for (double v : train_targets) sum += v;
  return sum / static_cast<double>(train_targets.size());
}

std::vector<bool> label_bursts(std::span<const double> values, double threshold) {
  std::vector<bool> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(v > threshold);
  return out;
}

BurstReport classification_report(const std::vector<bool>& predicted, const std::vector<bool>& actual) {
  if (predicted.size() != actual.size()) {
    throw ShapeError("classification report: " + std::to_string(predicted.size()) +
                     " predictions vs " + std::to_string(actual.size()) + " labels");
  }
  if (predicted.empty()) throw Error("classification report of an empty series");
  BurstReport r;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] && actual[i]) ++r.tp;
    else if (predicted[i]) ++r.fp;
    else if (actual[i]) ++r.fn;
    else ++r.tn;
  }
  const auto n = static_cast<double>(predicted.size());
  r.accuracy = static_cast<double>(r.tp + r.tn) / n;
  if (r.tp + r.fp > 0) {
    r.precision = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp);
  } else {
    r.zero_division = true;
  }
  if (r.tp + r.fn > 0) {
    r.recall = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
  } else {
    r.zero_division = true;
  }
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

void write_burst_report(std::ostream& out, const BurstReport& r) {
  out << "threshold=" << textio::format_double(r.threshold) << '\n'
      << "tp=" << r.tp << '\n'
      << "fp=" << r.fp << '\n'
      << "fn=" << r.fn << '\n'
      << "tn=" << r.tn << '\n'
      << "accuracy=" << textio::format_double(r.accuracy) << '\n'
      << "precision=" << textio::format_double(r.precision) << '\n'
      << "recall=" << textio::format_double(r.recall) << '\n'
      << "f1=" << textio::format_double(r.f1) << '\n'
      << "zero_division=" << (r.zero_division ? "true" : "false") << '\n';
}

void write_prediction_series(std::ostream& out, std::span<const double> actual,
                             std::span<const double> predicted) {
  if (actual.size() != predicted.size()) throw ShapeError("prediction series length mismatch");
  out << "window,actual,predicted\n";
  for (std::size_t i = 0; i < actual.size(); ++i) {
    out << i << ',' << textio::format_double(actual[i]) << ','
        << textio::format_double(predicted[i]) << '\n';
  }
}

}  // namespace cellflow
