#include "cellflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "cellflow/error.hpp"
#include "cellflow/rng.hpp"
#include "cellflow/textio.hpp"

namespace cellflow {
namespace {

double to_microseconds(double t, double limit) {
  return std::min(std::round(t * 1e6) / 1e6, limit);
}

std::int64_t draw_length(Rng& rng, double mean) {
  const double excess = std::max(mean - static_cast<double>(kMinPacketLength), 0.0);
  // Geometric on {0, 1, ...} with mean (1 - p) / p = excess.
  const double p = 1.0 / (excess + 1.0);
  return kMinPacketLength + static_cast<std::int64_t>(rng.geometric(p));
}

struct Arrival {
  double t;
  bool uplink;
  std::int64_t length;
};

void poisson_arrivals(Rng& rng, double from, double to, double rate, double len_mean, bool uplink,
                      std::vector<Arrival>& out) {
  double t = from + rng.exponential(1.0 / rate);
  while (t < to) {
    out.push_back({t, uplink, draw_length(rng, len_mean)});
    t += rng.exponential(1.0 / rate);
  }
}

std::string_view protocol_of(App app) {
  return app == App::VideoCall || app == App::VoiceCall ? "UDP" : "TCP";
}

}  // namespace

std::string_view app_name(App app) noexcept {
  switch (app) {
    case App::Surfing: return "surfing";
    case App::VideoCall: return "video_call";
    case App::VoiceCall: return "voice_call";
    case App::Streaming: return "streaming";
  }
  return "?";
}

App parse_app(std::string_view name) {
  if (name == "surfing" || name == "surf") return App::Surfing;
  if (name == "video_call" || name == "video") return App::VideoCall;
  if (name == "voice_call" || name == "voice") return App::VoiceCall;
  if (name == "streaming" || name == "stream") return App::Streaming;
  throw Error("unknown application profile '" + std::string(name) +
              "' (valid: surfing, video_call, voice_call, streaming)");
}

const AppProfile& default_profile(App app) {
  static const AppProfile profiles[kAppCount] = {
      {App::Surfing, 6.0, 30.0, 2.0, 20.0, 120.0, 1100.0},
      {App::VideoCall, 110.0, 120.0, 60.0, 4.0, 900.0, 1000.0},
      {App::VoiceCall, 50.0, 50.0, 30.0, 5.0, 160.0, 160.0},
      {App::Streaming, 10.0, 250.0, 8.0, 12.0, 80.0, 1400.0},
  };
  return profiles[static_cast<std::size_t>(app)];
}

void validate(const AppProfile& p) {
  if (!(p.uplink_rate > 0 && p.downlink_rate > 0 && p.mean_on > 0 && p.mean_off > 0 &&
        p.uplink_len_mean > 0 && p.downlink_len_mean > 0)) {
    throw Error("profile " + std::string(app_name(p.app)) + ": rates and means must be positive");
  }
}

SynthTrace generate(const AppProfile& profile, double duration, std::uint64_t seed) {
  validate(profile);
  if (!(duration >= 0.0) || !std::isfinite(duration)) throw Error("duration must be non-negative");
  SynthTrace trace;
  trace.duration = duration;
  trace.seed = seed;
  if (duration == 0.0) return trace;
  trace.sessions.push_back({0.0, duration, profile.app});

  Rng rng(seed);
  std::vector<Arrival> arrivals;
  bool on = rng.uniform() < profile.mean_on / (profile.mean_on + profile.mean_off);
  double t = 0.0;
  while (t < duration) {
    const double length = rng.exponential(on ? profile.mean_on : profile.mean_off);
    const double end = std::min(t + length, duration);
    if (on && end > t) {
      trace.on_periods.emplace_back(t, end);
      poisson_arrivals(rng, t, end, profile.uplink_rate, profile.uplink_len_mean, true, arrivals);
      poisson_arrivals(rng, t, end, profile.downlink_rate, profile.downlink_len_mean, false, arrivals);
    }
    t = end;
    on = !on;
  }

  for (Arrival& a : arrivals) a.t = to_microseconds(a.t, duration);
  std::ranges::stable_sort(arrivals, {}, &Arrival::t);

  const std::string proto(protocol_of(profile.app));
  trace.packets.reserve(arrivals.size());
  for (const Arrival& a : arrivals) {
    PacketRecord r;
    r.timestamp = a.t;
    r.src_addr = std::string(a.uplink ? kSynthUserAddr : kSynthTowerAddr);
    r.dst_addr = std::string(a.uplink ? kSynthTowerAddr : kSynthUserAddr);
    r.length = a.length;
    r.protocol = proto;
    trace.packets.push_back(std::move(r));
  }
  return trace;
}

namespace {

// Generates [start, end) as one session and appends it to `trace`.
void append_session(SynthTrace& trace, const AppProfile& profile, double start, double end,
                    std::uint64_t seed) {
  SynthTrace part = generate(profile, end - start, seed);
  for (PacketRecord& r : part.packets) {
    r.timestamp = to_microseconds(start + r.timestamp, end);
    trace.packets.push_back(std::move(r));
  }
  for (const auto& [a, b] : part.on_periods) trace.on_periods.emplace_back(start + a, start + b);
  trace.sessions.push_back({start, end, profile.app});
}

}  // namespace

SynthTrace generate_mixed(std::span<const WeightedProfile> profiles, double duration,
                          double session_length, std::uint64_t seed) {
  if (profiles.empty()) throw Error("mixed generation needs at least one profile");
  double total_weight = 0.0;
  for (const WeightedProfile& wp : profiles) {
    validate(wp.profile);
    if (!(wp.weight > 0.0) || !std::isfinite(wp.weight)) throw Error("profile weights must be positive");
    total_weight += wp.weight;
  }
  if (!(duration >= 0.0) || !std::isfinite(duration)) throw Error("duration must be non-negative");
  if (!(session_length > 0.0)) throw Error("session length must be positive");

  SynthTrace trace;
  trace.duration = duration;
  trace.seed = seed;
  Rng chooser(derive_seed(seed, ~std::uint64_t{0}));
  std::uint64_t index = 0;
  for (double start = 0.0; start < duration; start += session_length, ++index) {
    const double end = std::min(start + session_length, duration);
    double pick = chooser.uniform() * total_weight;
    const WeightedProfile* chosen = &profiles.back();
    for (const WeightedProfile& wp : profiles) {
      if (pick < wp.weight) {
        chosen = &wp;
        break;
      }
      pick -= wp.weight;
    }
    append_session(trace, chosen->profile, start, end, derive_seed(seed, index));
  }
  return trace;
}

SynthTrace generate_cycle(std::span<const AppProfile> cycle, double duration, double session_length,
                          std::uint64_t seed) {
  if (cycle.empty()) throw Error("cyclic generation needs at least one profile");
  for (const AppProfile& p : cycle) validate(p);
  if (!(duration >= 0.0) || !std::isfinite(duration)) throw Error("duration must be non-negative");
  if (!(session_length > 0.0)) throw Error("session length must be positive");
  SynthTrace trace;
  trace.duration = duration;
  trace.seed = seed;
  std::uint64_t index = 0;
  for (double start = 0.0; start < duration; start += session_length, ++index) {
    const double end = std::min(start + session_length, duration);
    append_session(trace, cycle[index % cycle.size()], start, end, derive_seed(seed, index));
  }
  return trace;
}

void write_sessions(std::ostream& out, std::span<const Session> sessions) {
  out << "session_start,session_end,app_label\n";
  for (const Session& s : sessions) {
    out << textio::format_double(s.start) << ',' << textio::format_double(s.end) << ','
        << app_name(s.app) << '\n';
  }
}

std::vector<Session> read_sessions(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty label file: missing header row");
  const auto header = textio::split_csv(line);
  if (header.size() < 3 || textio::trim(header[0]) != "session_start" ||
      textio::trim(header[1]) != "session_end" || textio::trim(header[2]) != "app_label") {
    throw SchemaError("label file header must be session_start,session_end,app_label");
  }
  std::vector<Session> sessions;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (textio::trim(line).empty()) continue;
    const auto f = textio::split_csv(line);
    if (f.size() < 3) throw ParseError(line_no, "expected 3 fields");
    const auto start = textio::parse_double(f[0]);
    const auto end = textio::parse_double(f[1]);
    if (!start || !end || *end < *start) throw ParseError(line_no, "invalid session bounds");
    try {
      sessions.push_back({*start, *end, parse_app(textio::trim(f[2]))});
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return sessions;
}

std::vector<std::vector<PacketRecord>> split_by_session(std::span<const PacketRecord> records,
                                                        std::span<const Session> sessions) {
  for (std::size_t s = 1; s < sessions.size(); ++s) {
    if (sessions[s].start < sessions[s - 1].end) throw Error("sessions overlap or are unsorted");
  }
  std::vector<std::vector<PacketRecord>> out(sessions.size());
  for (const PacketRecord& r : records) {
    auto it = std::ranges::upper_bound(sessions, r.timestamp, {}, &Session::start);
    if (it == sessions.begin()) continue;
    const auto s = static_cast<std::size_t>(it - sessions.begin()) - 1;
    const bool last = s + 1 == sessions.size();
    if (r.timestamp < sessions[s].end || (last && r.timestamp == sessions[s].end)) {
      out[s].push_back(r);
    }
  }
  return out;
}

}  // namespace cellflow
