#pragma once

// Packet-record ingestion: delimited-text capture exports, tower/user
// endpoint inference and uplink/downlink labeling.

#include <cstdint>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace cellflow {

struct PacketRecord {
  double timestamp = 0.0;  ///< seconds since epoch
  std::string src_addr;
  std::string dst_addr;
  std::int64_t length = 0;  ///< bytes
  std::string protocol;

  friend bool operator==(const PacketRecord&, const PacketRecord&) = default;
};

enum class Direction { Uplink, Downlink };

struct LabeledPacket {
  PacketRecord record;
  Direction direction = Direction::Uplink;

  friend bool operator==(const LabeledPacket&, const LabeledPacket&) = default;
};

struct EndpointMap {
  std::string tower_addr;
  std::set<std::string> user_addrs;

  friend bool operator==(const EndpointMap&, const EndpointMap&) = default;
};

/// Column names for the logical fields of a capture export.
struct CaptureSchema {
  std::string time = "frame.time_epoch";
  std::string src = "ip.src";
  std::string dst = "ip.dst";
  std::string length = "frame.len";
  std::string protocol = "protocol";
};

struct ParsedCapture {
  std::vector<PacketRecord> records;
  std::size_t dropped_rows = 0;  ///< only non-zero when bad rows are dropped
};

/// Reads a header row followed by data rows. Throws SchemaError for a
/// missing column and ParseError (1-based line) for a malformed row unless
/// `drop_bad_rows` is set, in which case such rows are counted and skipped.
ParsedCapture parse_capture(std::istream& in, const CaptureSchema& schema = {},
                            bool drop_bad_rows = false);

/// Writes records in the layout `parse_capture` reads, header included.
void write_capture(std::ostream& out, std::span<const PacketRecord> records,
                   const CaptureSchema& schema = {});

/// Picks the address with the most distinct peers as the tower.
EndpointMap infer_endpoints(std::span<const PacketRecord> records);

/// Checks tower/user disjointness and a non-empty user set.
void validate(const EndpointMap& endpoints);

struct LabelResult {
  std::vector<LabeledPacket> packets;
  std::size_t skipped = 0;
};

LabelResult label_direction(std::span<const PacketRecord> records, const EndpointMap& endpoints);

}  // namespace cellflow
