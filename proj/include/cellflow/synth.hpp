#pragma once

// Seeded ON/OFF traffic generator for four application profiles.
//
// A source alternates between ON and OFF periods with exponentially
// distributed lengths. During ON periods uplink and downlink packets
// arrive as independent Poisson processes. Packet length is
// 40 + Geometric(p) bytes with p chosen so the mean matches the profile.
// Timestamps are rounded to whole microseconds.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cellflow/ingest.hpp"

namespace cellflow {

enum class App { Surfing = 0, VideoCall = 1, VoiceCall = 2, Streaming = 3 };
inline constexpr std::size_t kAppCount = 4;

std::string_view app_name(App app) noexcept;
/// Accepts the canonical names and the short forms surf, video, voice, stream.
App parse_app(std::string_view name);

struct AppProfile {
  App app = App::Surfing;
  double uplink_rate = 1.0;    ///< packets/s while ON
  double downlink_rate = 1.0;  ///< packets/s while ON
  double mean_on = 1.0;        ///< seconds
  double mean_off = 1.0;       ///< seconds
  double uplink_len_mean = 100.0;
  double downlink_len_mean = 100.0;
};

const AppProfile& default_profile(App app);
void validate(const AppProfile& profile);

inline constexpr std::string_view kSynthUserAddr = "10.0.0.2";
inline constexpr std::string_view kSynthTowerAddr = "172.16.0.1";
inline constexpr std::int64_t kMinPacketLength = 40;

struct Session {
  double start = 0.0;
  double end = 0.0;
  App app = App::Surfing;

  friend bool operator==(const Session&, const Session&) = default;
};

struct SynthTrace {
  std::vector<PacketRecord> packets;
  std::vector<Session> sessions;
  std::vector<std::pair<double, double>> on_periods;
  double duration = 0.0;
  std::uint64_t seed = 0;
};

SynthTrace generate(const AppProfile& profile, double duration, std::uint64_t seed);

struct WeightedProfile {
  AppProfile profile;
  double weight = 1.0;
};

/// Splits [0, duration) into back-to-back sessions of `session_length`
/// seconds (the last one may be shorter), picks a profile per session by
/// weight and generates it with seed derive_seed(seed, session index).
SynthTrace generate_mixed(std::span<const WeightedProfile> profiles, double duration,
                          double session_length, std::uint64_t seed);

/// Like generate_mixed, but session i uses cycle[i % cycle.size()].
SynthTrace generate_cycle(std::span<const AppProfile> cycle, double duration, double session_length,
                          std::uint64_t seed);

/// `session_start,session_end,app_label` rows with a header.
void write_sessions(std::ostream& out, std::span<const Session> sessions);
std::vector<Session> read_sessions(std::istream& in);

/// Packets of `records` whose timestamps fall in [session.start, session.end).
/// The final session also keeps packets at exactly its end.
std::vector<std::vector<PacketRecord>> split_by_session(std::span<const PacketRecord> records,
                                                        std::span<const Session> sessions);

}  // namespace cellflow
