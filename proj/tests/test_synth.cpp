#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "cellflow/error.hpp"
#include "cellflow/features.hpp"
#include "cellflow/ingest.hpp"
#include "cellflow/synth.hpp"

namespace cellflow {
namespace {

bool same_packets(const std::vector<PacketRecord>& a, const std::vector<PacketRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].timestamp != b[i].timestamp || a[i].src_addr != b[i].src_addr ||
        a[i].dst_addr != b[i].dst_addr || a[i].length != b[i].length || a[i].protocol != b[i].protocol) {
      return false;
    }
  }
  return true;
}

TEST(Generate, ZeroDurationAndErrors) {
  EXPECT_TRUE(generate(default_profile(App::VoiceCall), 0.0, 1).packets.empty());
  EXPECT_THROW(generate(default_profile(App::VoiceCall), -1.0, 1), Error);
  AppProfile bad = default_profile(App::Surfing);
  bad.mean_off = 0.0;
  EXPECT_THROW(generate(bad, 10.0, 1), Error);
}

TEST(Generate, DeterministicPerSeed) {
  const auto& prof = default_profile(App::Streaming);
  const auto a = generate(prof, 600.0, 12);
  EXPECT_TRUE(same_packets(a.packets, generate(prof, 600.0, 12).packets));
  EXPECT_FALSE(same_packets(a.packets, generate(prof, 600.0, 13).packets));
}

TEST(Generate, PacketInvariants) {
  for (App app : {App::Surfing, App::VideoCall, App::VoiceCall, App::Streaming}) {
    const auto t = generate(default_profile(app), 300.0, 4);
    double prev = 0.0;
    for (const auto& p : t.packets) {
      EXPECT_GE(p.timestamp, prev);
      EXPECT_LE(p.timestamp, 300.0);
      EXPECT_GE(p.length, kMinPacketLength);
      EXPECT_TRUE((p.src_addr == kSynthUserAddr && p.dst_addr == kSynthTowerAddr) ||
                  (p.src_addr == kSynthTowerAddr && p.dst_addr == kSynthUserAddr));
      EXPECT_EQ(p.timestamp, std::round(p.timestamp * 1e6) / 1e6);
      prev = p.timestamp;
    }
  }
}

// Law of large numbers: uplink packets counted inside ON periods over the
// total ON time should be close to the configured rate.
TEST(Generate, VoiceCallUplinkRateDuringOn) {
  const auto& prof = default_profile(App::VoiceCall);
  ASSERT_EQ(prof.uplink_rate, 50.0);
  ASSERT_EQ(prof.mean_on, 30.0);
  ASSERT_EQ(prof.mean_off, 5.0);
  const auto t = generate(prof, 3600.0, 1);
  double on_time = 0.0;
  for (const auto& [s, e] : t.on_periods) on_time += e - s;
  std::size_t uplink = 0;
  for (const auto& p : t.packets) uplink += p.src_addr == kSynthUserAddr;
  EXPECT_NEAR(static_cast<double>(uplink) / on_time, 50.0, 0.05 * 50.0);
}

TEST(Generate, MeanLengthsNearProfile) {
  const auto& prof = default_profile(App::VideoCall);
  const auto t = generate(prof, 600.0, 2);
  double ul = 0, dl = 0;
  std::size_t nu = 0, nd = 0;
  for (const auto& p : t.packets) {
    if (p.src_addr == kSynthUserAddr) {
      ul += static_cast<double>(p.length);
      ++nu;
    } else {
      dl += static_cast<double>(p.length);
      ++nd;
    }
  }
  EXPECT_NEAR(ul / nu, prof.uplink_len_mean, 0.05 * prof.uplink_len_mean);
  EXPECT_NEAR(dl / nd, prof.downlink_len_mean, 0.05 * prof.downlink_len_mean);
}

TEST(GenerateMixed, SingleProfileLabelsEverySession) {
  const std::vector<WeightedProfile> one{{default_profile(App::VideoCall), 3.5}};
  const auto t = generate_mixed(one, 1000.0, 60.0, 8);
  ASSERT_EQ(t.sessions.size(), 17u);
  for (const auto& s : t.sessions) EXPECT_EQ(s.app, App::VideoCall);
  EXPECT_EQ(t.sessions.back().end, 1000.0);
  EXPECT_THROW(generate_mixed(std::vector<WeightedProfile>{}, 10.0, 1.0, 1), Error);
  const std::vector<WeightedProfile> bad{{default_profile(App::VideoCall), 0.0}};
  EXPECT_THROW(generate_mixed(bad, 10.0, 1.0, 1), Error);
}

// 400 equal-weight sessions: each count is Binomial(400, 1/4), sd = sqrt(75).
TEST(GenerateMixed, EqualWeightsWithinThreeSigma) {
  std::vector<WeightedProfile> four;
  for (App app : {App::Surfing, App::VideoCall, App::VoiceCall, App::Streaming}) {
    four.push_back({default_profile(app), 1.0});
  }
  const auto t = generate_mixed(four, 400.0, 1.0, 31);
  ASSERT_EQ(t.sessions.size(), 400u);
  std::array<int, 4> counts{};
  for (const auto& s : t.sessions) ++counts[static_cast<std::size_t>(s.app)];
  const double sigma = std::sqrt(400.0 * 0.25 * 0.75);
  for (int c : counts) EXPECT_LE(std::abs(c - 100.0), 3.0 * sigma);
  for (std::size_t i = 1; i < t.packets.size(); ++i) {
    EXPECT_LE(t.packets[i - 1].timestamp, t.packets[i].timestamp);
  }
}

TEST(GenerateMixed, SessionsFileRoundTripAndSplit) {
  std::vector<WeightedProfile> two{{default_profile(App::VoiceCall), 1.0},
                                   {default_profile(App::Streaming), 1.0}};
  const auto t = generate_mixed(two, 300.0, 50.0, 2);
  std::stringstream io;
  write_sessions(io, t.sessions);
  EXPECT_EQ(read_sessions(io), t.sessions);
  const auto parts = split_by_session(t.packets, t.sessions);
  ASSERT_EQ(parts.size(), t.sessions.size());
  std::size_t total = 0;
  for (std::size_t s = 0; s < parts.size(); ++s) {
    for (const auto& p : parts[s]) {
      EXPECT_GE(p.timestamp, t.sessions[s].start);
      EXPECT_LE(p.timestamp, t.sessions[s].end);
    }
    total += parts[s].size();
  }
  EXPECT_EQ(total, t.packets.size());
}

TEST(Synth, CaptureRoundTrip) {
  const auto t = generate(default_profile(App::Surfing), 900.0, 6);
  std::stringstream io;
  write_capture(io, t.packets);
  EXPECT_TRUE(same_packets(parse_capture(io).records, t.packets));
}

TEST(Synth, LongOffPeriodsLeavePaddingBins) {
  const auto& prof = default_profile(App::Surfing);
  ASSERT_GE(prof.mean_off, 5.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto t = generate(prof, 600.0, seed);
    const EndpointMap eps{std::string(kSynthTowerAddr), {std::string(kSynthUserAddr)}};
    const auto bins = zero_pad(bin_packets(label_direction(t.packets, eps).packets, 1.0), 1.0);
    EXPECT_TRUE(std::ranges::any_of(bins, [](const BinnedSample& b) { return b.is_padding; }))
        << "seed " << seed;
  }
}

TEST(Synth, AppNames) {
  EXPECT_EQ(parse_app("video"), App::VideoCall);
  EXPECT_EQ(parse_app("streaming"), App::Streaming);
  EXPECT_EQ(app_name(App::VoiceCall), "voice_call");
  EXPECT_THROW(parse_app("gaming"), Error);
}

}  // namespace
}  // namespace cellflow
