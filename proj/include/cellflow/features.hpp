#pragma once

// Time-bin aggregation of labeled packets, ZeroPadding / ProPadding and
// inter-arrival statistics.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cellflow/ingest.hpp"

namespace cellflow {

struct BinnedSample {
  std::int64_t bin_index = 0;
  double bin_start = 0.0;
  std::int64_t uplink_count = 0;
  std::int64_t downlink_count = 0;
  std::int64_t uplink_bytes = 0;
  std::int64_t downlink_bytes = 0;
  double ud_ratio = 0.0;  ///< uplink_count / max(downlink_count, 1)
  std::int64_t total_bytes = 0;
  bool is_padding = false;

  friend bool operator==(const BinnedSample&, const BinnedSample&) = default;
};

/// Names accepted by `feature_value`, in canonical column order.
const std::vector<std::string>& feature_names();

/// Numeric value of a named feature; throws Error for an unknown name.
double feature_value(const BinnedSample& bin, std::string_view name);

/// Aggregates packets into half-open bins [start, start + bin_size)
/// anchored at `origin`, or at the earliest timestamp when origin is NaN.
/// Only non-empty bins are returned, in ascending index order.
std::vector<BinnedSample> bin_packets(std::span<const LabeledPacket> packets, double bin_size,
                                      double origin = std::numeric_limits<double>::quiet_NaN());

/// Fills every missing index between the first and last bin with a zero
/// padding bin.
std::vector<BinnedSample> zero_pad(std::span<const BinnedSample> bins, double bin_size);

/// Like `zero_pad` but pads over [first_index, last_index], which must
/// enclose every bin.
std::vector<BinnedSample> zero_pad(std::span<const BinnedSample> bins, double bin_size,
                                   std::int64_t first_index, std::int64_t last_index);

/// Like `zero_pad`, but each run of missing indices receives at most
/// `max_run` padding bins (the earliest ones of the run).
std::vector<BinnedSample> pro_pad(std::span<const BinnedSample> bins, double bin_size,
                                  std::size_t max_run);

enum class PaddingMode { None, Zero, Pro };

PaddingMode parse_padding_mode(std::string_view name);
std::string_view padding_mode_name(PaddingMode mode);

/// Dispatches to zero_pad / pro_pad; `None` returns the bins unchanged.
std::vector<BinnedSample> apply_padding(std::span<const BinnedSample> bins, double bin_size,
                                        PaddingMode mode, std::size_t max_run);

/// Fraction of bins flagged as padding or carrying no packets.
double zero_bin_fraction(std::span<const BinnedSample> bins);

struct InterArrivalStats {
  std::vector<double> deltas;
  double mean = 0.0;
  double variance = 0.0;  ///< population variance
  double min = 0.0;
  double max = 0.0;
  /// (bucket upper bound, count); bucket k covers [k*w, (k+1)*w).
  std::vector<std::pair<double, std::size_t>> histogram;
};

InterArrivalStats interarrival(std::span<const LabeledPacket> packets, double bucket_width);

/// Featurized series as comma-separated text with a header row.
void write_bins(std::ostream& out, std::span<const BinnedSample> bins);
std::vector<BinnedSample> read_bins(std::istream& in);

void write_interarrival(std::ostream& out, const InterArrivalStats& stats);

}  // namespace cellflow
