#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "cellflow/error.hpp"
#include "cellflow/ingest.hpp"
#include "cellflow/synth.hpp"

namespace cellflow {
namespace {

const char* kHeader = "frame.time_epoch,ip.src,ip.dst,frame.len,protocol\n";

PacketRecord rec(double t, std::string src, std::string dst, std::int64_t len = 100) {
  return {t, std::move(src), std::move(dst), len, "TCP"};
}

TEST(ParseCapture, HeaderOnlyGivesEmptyList) {
  std::istringstream in(kHeader);
  EXPECT_TRUE(parse_capture(in).records.empty());
}

TEST(ParseCapture, MapsFieldsDirectly) {
  std::istringstream in(std::string(kHeader) + "1.000000,10.0.0.2,172.16.0.1,120,TCP\n");
  const auto recs = parse_capture(in).records;
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0], (PacketRecord{1.0, "10.0.0.2", "172.16.0.1", 120, "TCP"}));
}

TEST(ParseCapture, NegativeLengthIsParseErrorAtItsLine) {
  std::istringstream in(std::string(kHeader) + "1.0,a,b,10,TCP\n2.0,a,b,-5,TCP\n");
  try {
    parse_capture(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(ParseCapture, MissingColumnNamesIt) {
  std::istringstream in("frame.time_epoch,ip.src,ip.dst,protocol\n");
  try {
    parse_capture(in);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("frame.len"), std::string::npos);
  }
}

TEST(ParseCapture, CustomSchemaQuotedFieldsAndColumnOrder) {
  CaptureSchema schema{"Time", "Source", "Destination", "Length", "Protocol"};
  std::istringstream in(
      "\"No.\",\"Protocol\",\"Time\",\"Source\",\"Destination\",\"Length\"\r\n"
      "\"1\",\"UDP\",\"0.5\",\"10.0.0.2\",\"172.16.0.1\",\"60\"\r\n");
  const auto recs = parse_capture(in, schema).records;
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0], (PacketRecord{0.5, "10.0.0.2", "172.16.0.1", 60, "UDP"}));
}

TEST(ParseCapture, RejectsBadTimestampsAndSelfLoops) {
  for (const char* row : {"nan,a,b,1,TCP\n", "-1,a,b,1,TCP\n", "x,a,b,1,TCP\n", "1,a,a,1,TCP\n",
                          "1,a,b,1.5,TCP\n", "1,a,b\n"}) {
    std::istringstream in(std::string(kHeader) + row);
    EXPECT_THROW(parse_capture(in), ParseError) << row;
  }
}

TEST(ParseCapture, DropBadRowsCountsThem) {
  std::istringstream in(std::string(kHeader) + "1,a,b,1,TCP\nbad,a,b,1,TCP\n2,a,b,-1,TCP\n3,b,a,5,TCP\n");
  const auto parsed = parse_capture(in, {}, true);
  EXPECT_EQ(parsed.records.size(), 2u);
  EXPECT_EQ(parsed.dropped_rows, 2u);
}

TEST(ParseCapture, EmptyStreamIsSchemaError) {
  std::istringstream in("");
  EXPECT_THROW(parse_capture(in), SchemaError);
}

// parse -> write -> parse reproduces identical records.
TEST(ParseCapture, RoundTripsBitExactly) {
  const auto trace = generate(default_profile(App::Streaming), 120.0, 5);
  std::ostringstream first;
  write_capture(first, trace.packets);
  std::istringstream in1(first.str());
  const auto parsed = parse_capture(in1).records;
  EXPECT_EQ(parsed, trace.packets);
  std::ostringstream second;
  write_capture(second, parsed);
  EXPECT_EQ(first.str(), second.str());

  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> ts(0.0, 2e9);
  std::vector<PacketRecord> odd;
  for (int i = 0; i < 200; ++i) odd.push_back(rec(ts(gen), "x" + std::to_string(i), "y", i));
  std::ostringstream out;
  write_capture(out, odd);
  std::istringstream in2(out.str());
  EXPECT_EQ(parse_capture(in2).records, odd);
}

// Tower = address with most distinct peers (brute-force count here).
TEST(InferEndpoints, StarTopology) {
  const std::vector<PacketRecord> recs{rec(0, "A", "B"), rec(1, "C", "A"), rec(2, "A", "D"),
                                       rec(3, "B", "A")};
  const EndpointMap map = infer_endpoints(recs);
  EXPECT_EQ(map.tower_addr, "A");
  EXPECT_EQ(map.user_addrs, (std::set<std::string>{"B", "C", "D"}));
}

TEST(InferEndpoints, SingleFlowIsAmbiguous) {
  const std::vector<PacketRecord> recs{rec(0, "A", "B"), rec(1, "B", "A")};
  EXPECT_THROW(infer_endpoints(recs), AmbiguityError);
}

TEST(InferEndpoints, EmptyInputIsError) {
  EXPECT_THROW(infer_endpoints(std::vector<PacketRecord>{}), Error);
}

TEST(InferEndpoints, TieBrokenLexicographically) {
  // Triangle: every address has two peers.
  const std::vector<PacketRecord> recs{rec(0, "C", "B"), rec(1, "B", "A"), rec(2, "A", "C")};
  EXPECT_EQ(infer_endpoints(recs).tower_addr, "A");
}

TEST(InferEndpoints, PermutationInvariant) {
  std::vector<PacketRecord> recs;
  std::mt19937_64 gen(11);
  for (int i = 0; i < 300; ++i) {
    const std::string user = "10.0.0." + std::to_string(gen() % 7);
    recs.push_back(i % 2 ? rec(i, user, "tower") : rec(i, "tower", user));
    if (i % 13 == 0) recs.push_back(rec(i, user, "10.9.9.9"));
  }
  const EndpointMap expected = infer_endpoints(recs);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(recs.begin(), recs.end(), gen);
    EXPECT_EQ(infer_endpoints(recs), expected);
  }
}

TEST(LabelDirection, DefinitionsAndSkips) {
  const EndpointMap map{"T", {"U"}};
  const std::vector<PacketRecord> recs{rec(0, "U", "T"), rec(1, "T", "U"), rec(2, "X", "Y")};
  const LabelResult r = label_direction(recs, map);
  ASSERT_EQ(r.packets.size(), 2u);
  EXPECT_EQ(r.packets[0].direction, Direction::Uplink);
  EXPECT_EQ(r.packets[1].direction, Direction::Downlink);
  EXPECT_EQ(r.skipped, 1u);
}

TEST(LabelDirection, PartitionsTheInput) {
  std::mt19937_64 gen(2);
  const std::vector<std::string> addrs{"T", "U1", "U2", "X", "Y"};
  std::vector<PacketRecord> recs;
  for (int i = 0; i < 500; ++i) {
    const auto& a = addrs[gen() % addrs.size()];
    auto b = addrs[gen() % addrs.size()];
    if (a == b) continue;
    recs.push_back(rec(i, a, b));
  }
  const LabelResult r = label_direction(recs, {"T", {"U1", "U2"}});
  const auto up = std::count_if(r.packets.begin(), r.packets.end(),
                                [](const LabeledPacket& p) { return p.direction == Direction::Uplink; });
  EXPECT_EQ(static_cast<std::size_t>(up) + (r.packets.size() - static_cast<std::size_t>(up)) + r.skipped,
            recs.size());
  for (const LabeledPacket& p : r.packets) {
    EXPECT_EQ(p.direction == Direction::Uplink,
              p.record.src_addr == "U1" || p.record.src_addr == "U2");
  }
}

TEST(LabelDirection, InvalidEndpointsRejected) {
  const std::vector<PacketRecord> recs{rec(0, "U", "T")};
  EXPECT_THROW(label_direction(recs, {"T", {}}), Error);
  EXPECT_THROW(label_direction(recs, {"T", {"T", "U"}}), Error);
}

}  // namespace
}  // namespace cellflow
