#include "cellflow/features.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include "cellflow/error.hpp"
#include "cellflow/textio.hpp"

namespace cellflow {
namespace {

void require_bin_size(double bin_size) {
  if (!(bin_size > 0.0) || !std::isfinite(bin_size)) {
    throw Error("bin size must be a positive finite number of seconds");
  }
}

void require_sorted_unique(std::span<const BinnedSample> bins) {
  for (std::size_t i = 1; i < bins.size(); ++i) {
    if (bins[i].bin_index == bins[i - 1].bin_index) {
      throw Error("duplicate bin index " + std::to_string(bins[i].bin_index));
    }
    if (bins[i].bin_index < bins[i - 1].bin_index) {
      throw Error("bins are not sorted by index at position " + std::to_string(i));
    }
  }
}

BinnedSample padding_bin(std::int64_t index, double start) {
  BinnedSample bin;
  bin.bin_index = index;
  bin.bin_start = start;
  bin.is_padding = true;
  return bin;
}

// Shared gap filler; `cap` bounds the padding bins inserted per gap.
std::vector<BinnedSample> fill_gaps(std::span<const BinnedSample> bins, double bin_size,
                                    std::size_t cap) {
  require_bin_size(bin_size);
  require_sorted_unique(bins);
  std::vector<BinnedSample> out;
  if (bins.empty()) return out;
  const BinnedSample& anchor = bins.front();
  auto start_of = [&](std::int64_t index) {
    return anchor.bin_start + static_cast<double>(index - anchor.bin_index) * bin_size;
  };
  out.push_back(bins.front());
  for (std::size_t i = 1; i < bins.size(); ++i) {
    const std::int64_t gap = bins[i].bin_index - bins[i - 1].bin_index - 1;
    const std::int64_t fill =
        static_cast<std::uint64_t>(gap) > cap ? static_cast<std::int64_t>(cap) : gap;
    for (std::int64_t k = 1; k <= fill; ++k) {
      const std::int64_t index = bins[i - 1].bin_index + k;
      out.push_back(padding_bin(index, start_of(index)));
    }
    out.push_back(bins[i]);
  }
  return out;
}

}  // namespace

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names{"uplink_count", "downlink_count", "uplink_bytes",
                                              "downlink_bytes", "ud_ratio", "total_bytes"};
  return names;
}

double feature_value(const BinnedSample& bin, std::string_view name) {
  if (name == "uplink_count") return static_cast<double>(bin.uplink_count);
  if (name == "downlink_count") return static_cast<double>(bin.downlink_count);
  if (name == "uplink_bytes") return static_cast<double>(bin.uplink_bytes);
  if (name == "downlink_bytes") return static_cast<double>(bin.downlink_bytes);
  if (name == "ud_ratio") return bin.ud_ratio;
  if (name == "total_bytes") return static_cast<double>(bin.total_bytes);
  throw Error("unknown feature '" + std::string(name) + "' (valid: " +
              textio::join(feature_names(), ", ") + ")");
}

std::vector<BinnedSample> bin_packets(std::span<const LabeledPacket> packets, double bin_size,
                                      double origin) {
  require_bin_size(bin_size);
  std::vector<BinnedSample> out;
  if (packets.empty()) return out;

  double t0 = origin;
  if (std::isnan(t0)) {
    t0 = packets.front().record.timestamp;
    for (const LabeledPacket& p : packets) t0 = std::min(t0, p.record.timestamp);
  }

  std::map<std::int64_t, BinnedSample> bins;
  for (const LabeledPacket& p : packets) {
    const double offset = p.record.timestamp - t0;
    if (offset < 0.0) throw Error("packet timestamp precedes the bin origin");
    const auto index = static_cast<std::int64_t>(std::floor(offset / bin_size));
    BinnedSample& bin = bins[index];
    if (p.direction == Direction::Uplink) {
      ++bin.uplink_count;
      bin.uplink_bytes += p.record.length;
    } else {
      ++bin.downlink_count;
      bin.downlink_bytes += p.record.length;
    }
  }

  out.reserve(bins.size());
  for (auto& [index, bin] : bins) {
    bin.bin_index = index;
    bin.bin_start = t0 + static_cast<double>(index) * bin_size;
    bin.total_bytes = bin.uplink_bytes + bin.downlink_bytes;
    bin.ud_ratio = static_cast<double>(bin.uplink_count) /
                   static_cast<double>(std::max<std::int64_t>(bin.downlink_count, 1));
    out.push_back(bin);
  }
  return out;
}

std::vector<BinnedSample> zero_pad(std::span<const BinnedSample> bins, double bin_size) {
  return fill_gaps(bins, bin_size, std::numeric_limits<std::size_t>::max());
}

std::vector<BinnedSample> zero_pad(std::span<const BinnedSample> bins, double bin_size,
                                   std::int64_t first_index, std::int64_t last_index) {
  require_bin_size(bin_size);
  require_sorted_unique(bins);
  if (first_index > last_index) throw Error("empty padding range");
  if (bins.empty()) throw Error("cannot pad a range without an anchor bin");
  if (bins.front().bin_index < first_index || bins.back().bin_index > last_index) {
    throw Error("padding range does not enclose every bin");
  }
  const BinnedSample& anchor = bins.front();
  auto start_of = [&](std::int64_t index) {
    return anchor.bin_start + static_cast<double>(index - anchor.bin_index) * bin_size;
  };
  std::vector<BinnedSample> out;
  out.reserve(static_cast<std::size_t>(last_index - first_index + 1));
  std::size_t next = 0;
  for (std::int64_t index = first_index; index <= last_index; ++index) {
    if (next < bins.size() && bins[next].bin_index == index) {
      out.push_back(bins[next++]);
    } else {
      out.push_back(padding_bin(index, start_of(index)));
    }
  }
  return out;
}

std::vector<BinnedSample> pro_pad(std::span<const BinnedSample> bins, double bin_size,
                                  std::size_t max_run) {
  if (max_run == 0) throw Error("ProPadding max_run must be at least 1");
  return fill_gaps(bins, bin_size, max_run);
}

PaddingMode parse_padding_mode(std::string_view name) {
  if (name == "none") return PaddingMode::None;
  if (name == "zero") return PaddingMode::Zero;
  if (name == "pro") return PaddingMode::Pro;
  throw Error("unknown padding mode '" + std::string(name) + "' (valid: none, zero, pro)");
}

std::string_view padding_mode_name(PaddingMode mode) {
  switch (mode) {
    case PaddingMode::None: return "none";
    case PaddingMode::Zero: return "zero";
    case PaddingMode::Pro: return "pro";
  }
  return "none";
}

std::vector<BinnedSample> apply_padding(std::span<const BinnedSample> bins, double bin_size,
                                        PaddingMode mode, std::size_t max_run) {
  switch (mode) {
    case PaddingMode::Zero: return zero_pad(bins, bin_size);
    case PaddingMode::Pro: return pro_pad(bins, bin_size, max_run);
    case PaddingMode::None: break;
  }
  require_sorted_unique(bins);
  return {bins.begin(), bins.end()};
}

double zero_bin_fraction(std::span<const BinnedSample> bins) {
  if (bins.empty()) return 0.0;
  std::size_t zeros = 0;
  for (const BinnedSample& b : bins) {
    if (b.is_padding || (b.uplink_count == 0 && b.downlink_count == 0)) ++zeros;
  }
  return static_cast<double>(zeros) / static_cast<double>(bins.size());
}

InterArrivalStats interarrival(std::span<const LabeledPacket> packets, double bucket_width) {
  if (packets.size() < 2) throw Error("inter-arrival analysis needs at least two packets");
  if (!(bucket_width > 0.0) || !std::isfinite(bucket_width)) {
    throw Error("histogram bucket width must be positive");
  }
  InterArrivalStats stats;
  stats.deltas.reserve(packets.size() - 1);
  for (std::size_t i = 1; i < packets.size(); ++i) {
    const double d = packets[i].record.timestamp - packets[i - 1].record.timestamp;
    if (d < 0.0) {
      throw Error("timestamps decrease at packet " + std::to_string(i) +
                  "; sort the capture first");
    }
    stats.deltas.push_back(d);
  }
  const double n = static_cast<double>(stats.deltas.size());
  double sum = 0.0;
  stats.min = stats.deltas.front();
  stats.max = stats.deltas.front();
  for (double d : stats.deltas) {
    sum += d;
    stats.min = std::min(stats.min, d);
    stats.max = std::max(stats.max, d);
  }
  stats.mean = sum / n;
  double ss = 0.0;
  for (double d : stats.deltas) ss += (d - stats.mean) * (d - stats.mean);
  stats.variance = ss / n;

  const auto buckets = static_cast<std::size_t>(std::floor(stats.max / bucket_width)) + 1;
  std::vector<std::size_t> counts(buckets, 0);
  for (double d : stats.deltas) {
    const auto k = std::min(static_cast<std::size_t>(std::floor(d / bucket_width)), buckets - 1);
    ++counts[k];
  }
  stats.histogram.reserve(buckets);
  for (std::size_t k = 0; k < buckets; ++k) {
    stats.histogram.emplace_back(static_cast<double>(k + 1) * bucket_width, counts[k]);
  }
  return stats;
}

void write_bins(std::ostream& out, std::span<const BinnedSample> bins) {
  out << "bin_index,bin_start,uplink_count,downlink_count,uplink_bytes,downlink_bytes,ud_ratio,"
         "total_bytes,is_padding\n";
  for (const BinnedSample& b : bins) {
    out << b.bin_index << ',' << textio::format_double(b.bin_start) << ',' << b.uplink_count << ','
        << b.downlink_count << ',' << b.uplink_bytes << ',' << b.downlink_bytes << ','
        << textio::format_double(b.ud_ratio) << ',' << b.total_bytes << ','
        << (b.is_padding ? 1 : 0) << '\n';
  }
}

std::vector<BinnedSample> read_bins(std::istream& in) {
  static const std::vector<std::string> columns{
      "bin_index",      "bin_start", "uplink_count", "downlink_count", "uplink_bytes",
      "downlink_bytes", "ud_ratio",  "total_bytes",  "is_padding"};
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty feature file: missing header row");
  const auto header = textio::split_csv(line);
  std::vector<std::size_t> pos;
  for (const std::string& name : columns) {
    auto it = std::find_if(header.begin(), header.end(),
                           [&](const std::string& h) { return textio::trim(h) == name; });
    if (it == header.end()) throw SchemaError("missing required column '" + name + "'");
    pos.push_back(static_cast<std::size_t>(it - header.begin()));
  }

  std::vector<BinnedSample> bins;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (textio::trim(line).empty()) continue;
    const auto f = textio::split_csv(line);
    if (f.size() < header.size()) throw ParseError(line_no, "too few fields");
    auto integer = [&](std::size_t col) {
      auto v = textio::parse_int(f[pos[col]]);
      if (!v) throw ParseError(line_no, "invalid " + columns[col] + " '" + f[pos[col]] + "'");
      return *v;
    };
    auto real = [&](std::size_t col) {
      auto v = textio::parse_double(f[pos[col]]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError(line_no, "invalid " + columns[col] + " '" + f[pos[col]] + "'");
      }
      return *v;
    };
    BinnedSample b;
    b.bin_index = integer(0);
    b.bin_start = real(1);
    b.uplink_count = integer(2);
    b.downlink_count = integer(3);
    b.uplink_bytes = integer(4);
    b.downlink_bytes = integer(5);
    b.ud_ratio = real(6);
    b.total_bytes = integer(7);
    const auto pad = integer(8);
    if (pad != 0 && pad != 1) throw ParseError(line_no, "is_padding must be 0 or 1");
    b.is_padding = pad == 1;
    if (b.total_bytes != b.uplink_bytes + b.downlink_bytes) {
      throw ParseError(line_no, "total_bytes differs from uplink_bytes + downlink_bytes");
    }
    bins.push_back(b);
  }
  return bins;
}

void write_interarrival(std::ostream& out, const InterArrivalStats& stats) {
  out << "bucket_upper_bound,count\n";
  for (const auto& [bound, count] : stats.histogram) {
    out << textio::format_double(bound) << ',' << count << '\n';
  }
}

}  // namespace cellflow
