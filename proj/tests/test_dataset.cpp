#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "cellflow/dataset.hpp"
#include "cellflow/error.hpp"

namespace cellflow {
namespace {

std::vector<BinnedSample> series(const std::vector<std::int64_t>& uplink) {
  std::vector<BinnedSample> out;
  for (std::size_t i = 0; i < uplink.size(); ++i) {
    BinnedSample b;
    b.bin_index = static_cast<std::int64_t>(i);
    b.bin_start = static_cast<double>(i);
    b.uplink_count = uplink[i];
    b.downlink_count = static_cast<std::int64_t>(i % 3);
    b.uplink_bytes = 100 * uplink[i];
    b.downlink_bytes = 50 * b.downlink_count;
    b.total_bytes = b.uplink_bytes + b.downlink_bytes;
    b.ud_ratio = static_cast<double>(b.uplink_count) / std::max<double>(b.downlink_count, 1);
    b.is_padding = uplink[i] == 0 && b.downlink_count == 0;
    out.push_back(b);
  }
  return out;
}

WindowConfig config(std::size_t history) {
  WindowConfig c;
  c.history_len = history;
  return c;
}

TEST(MakeWindows, IndexArithmetic) {
  const auto bins = series({10, 11, 12, 13, 14});
  const auto ds = make_windows(bins, config(3));
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.windows[0].history.rows(), 3u);
  EXPECT_EQ(ds.windows[0].history.cols(), 5u);
  EXPECT_DOUBLE_EQ(ds.windows[0].history(0, 0), 10.0);
  EXPECT_DOUBLE_EQ(ds.windows[0].history(2, 0), 12.0);
  EXPECT_DOUBLE_EQ(ds.windows[0].target, 13.0);
  EXPECT_DOUBLE_EQ(ds.windows[1].history(0, 0), 11.0);
  EXPECT_DOUBLE_EQ(ds.windows[1].target, 14.0);
  EXPECT_EQ(ds.windows[1].target_bin_index, 4);
}

TEST(MakeWindows, NeedsMoreBinsThanHistory) {
  EXPECT_THROW(make_windows(series({1, 2, 3}), config(3)), Error);
  EXPECT_THROW(make_windows(series({1, 2, 3}), config(0)), Error);
}

TEST(MakeWindows, SingleRowHistory) {
  std::vector<std::int64_t> up(61, 1);
  const auto ds = make_windows(series(up), config(1));
  EXPECT_EQ(ds.size(), 60u);
  for (const auto& w : ds.windows) EXPECT_EQ(w.history.rows(), 1u);
}

TEST(MakeWindows, UnknownTargetRejected) {
  WindowConfig c = config(1);
  c.target_name = "nope";
  EXPECT_THROW(make_windows(series({1, 2}), c), Error);
}

// Flattening the histories reproduces each bin row between 1 and
// history_len times.
TEST(MakeWindows, EveryRowCoveredBoundedTimes) {
  std::mt19937_64 gen(5);
  std::vector<std::int64_t> up(40);
  for (auto& u : up) u = static_cast<std::int64_t>(gen() % 9);
  const auto bins = series(up);
  const std::size_t history = 7;
  const auto ds = make_windows(bins, config(history));
  std::vector<std::size_t> seen(bins.size(), 0);
  for (std::size_t w = 0; w < ds.size(); ++w) {
    for (std::size_t r = 0; r < history; ++r) {
      EXPECT_DOUBLE_EQ(ds.windows[w].history(r, 0), static_cast<double>(up[w + r]));
      ++seen[w + r];
    }
  }
  for (std::size_t i = 0; i + 1 < bins.size(); ++i) {
    EXPECT_GE(seen[i], 1u);
    EXPECT_LE(seen[i], history);
  }
}

TEST(FilterNonzero, KeepsNonzeroTargets) {
  const auto ds = make_windows(series({9, 0, 5, 0, 3}), config(1));
  const auto f = filter_nonzero_targets(ds);
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(targets(f), (std::vector<double>{5, 3}));
  EXPECT_DOUBLE_EQ(f.windows[0].history(0, 0), 0.0);  // zero history rows survive
}

TEST(FilterNonzero, FixedPointAndIdempotent) {
  const auto ds = make_windows(series({1, 2, 3, 4}), config(2));
  EXPECT_EQ(targets(filter_nonzero_targets(ds)), targets(ds));
  const auto mixed = make_windows(series({0, 2, 0, 4, 0, 1}), config(1));
  const auto once = filter_nonzero_targets(mixed);
  EXPECT_EQ(targets(filter_nonzero_targets(once)), targets(once));
}

TEST(FilterNonzero, AllZeroWarns) {
  const auto ds = make_windows(series({1, 0, 0, 0}), config(1));
  Diagnostics diag;
  EXPECT_TRUE(filter_nonzero_targets(ds, &diag).empty());
  EXPECT_EQ(diag.warnings.size(), 1u);
}

TEST(Split, ChronologicalFractions) {
  std::vector<std::int64_t> up(101);
  for (std::size_t i = 0; i < up.size(); ++i) up[i] = static_cast<std::int64_t>(i);
  const auto ds = make_windows(series(up), config(1));
  auto [train, test] = split(ds, 0.8);
  EXPECT_EQ(train.size(), 80u);
  EXPECT_EQ(test.size(), 20u);
  EXPECT_LT(train.windows.back().target_bin_index, test.windows.front().target_bin_index);
}

TEST(Split, Boundaries) {
  const auto two = make_windows(series({1, 2, 3}), config(1));
  auto [a, b] = split(two, 0.5);
  EXPECT_EQ(a.size(), 1u);
  EXPECT_EQ(b.size(), 1u);
  const auto one = make_windows(series({1, 2}), config(1));
  EXPECT_THROW(split(one, 0.5), Error);
  EXPECT_THROW(split(two, 0.0), Error);
  EXPECT_THROW(split(two, 1.0), Error);
}

TEST(Scaler, MinMaxAndConstantColumns) {
  const auto ds = make_windows(series({0, 10, 5, 5}), config(1));
  const Scaler s = fit_scaler(ds);
  EXPECT_DOUBLE_EQ(s.scale_feature(0, 5.0), 0.5);
  // ud_ratio etc. vary; make a constant column explicitly.
  const Scaler c({3.0}, {3.0}, 2.0, 2.0);
  EXPECT_DOUBLE_EQ(c.scale_feature(0, 3.0), 0.0);
  EXPECT_DOUBLE_EQ(c.scale_target(2.0), 0.0);
  EXPECT_DOUBLE_EQ(c.invert_target(c.scale_target(2.0)), 2.0);
}

TEST(Scaler, InvertApplyIdentity) {
  const Scaler s({0.0}, {1.0}, 1.25, 19.5);
  for (double y : {7.3, 1.25, 19.5, 0.0, 100.0}) {
    const double back = s.invert_target(s.scale_target(y));
    EXPECT_LE(std::abs(back - y), 1e-12 * std::max(1.0, std::abs(y)));
  }
}

TEST(Scaler, UnfittedAndMismatchedUseRejected) {
  const Scaler s;
  EXPECT_THROW(s.scale_target(1.0), Error);
  const auto ds = make_windows(series({1, 2, 3}), config(1));
  EXPECT_THROW(s.apply(ds), Error);
  const Scaler narrow({0.0}, {1.0}, 0.0, 1.0);
  EXPECT_THROW(narrow.apply(ds), ShapeError);
}

// Fitting on the training part alone is deterministic and ignores the test
// part; refitting on everything can change the scaling.
TEST(Scaler, FitsOnTrainOnly) {
  const auto ds = make_windows(series({1, 2, 3, 4, 50, 60}), config(1));
  auto [train, test] = split(ds, 0.6);
  const Scaler a = fit_scaler(train);
  const Scaler b = fit_scaler(train);
  EXPECT_EQ(a, b);
  EXPECT_DOUBLE_EQ(a.target_max(), 4.0);
  EXPECT_NE(fit_scaler(ds), a);
  EXPECT_GT(a.apply(test).windows.back().target, 1.0);
}

TEST(Presets, KnownNamesAndError) {
  EXPECT_EQ(find_window_preset("cfg-1x60").history_len, 60u);
  EXPECT_DOUBLE_EQ(find_window_preset("cfg-3x20").bin_size, 3.0);
  EXPECT_EQ(find_window_preset("cfg-60x1").history_len, 1u);
  EXPECT_EQ(find_window_preset("cfg-1x10").padding, PaddingMode::Pro);
  try {
    find_window_preset("cfg-2x2");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("cfg-1x60"), std::string::npos);
  }
}

TEST(WriteWindows, OneHeaderLinePerWindow) {
  const auto ds = make_windows(series({1, 2, 3, 4}), config(2));
  std::ostringstream out;
  write_windows(out, ds);
  const std::string text = out.str();
  std::size_t headers = 0;
  for (std::size_t pos = 0; (pos = text.find("window,", pos)) != std::string::npos; ++pos) ++headers;
  EXPECT_EQ(headers, 2u);
}

}  // namespace
}  // namespace cellflow
