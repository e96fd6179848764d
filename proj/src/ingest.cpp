#include "cellflow/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <utility>

#include "cellflow/error.hpp"
#include "cellflow/textio.hpp"

namespace cellflow {
namespace {

struct ColumnIndex {
  std::size_t time, src, dst, length, protocol;
  std::size_t width;
};

ColumnIndex resolve_columns(const std::vector<std::string>& header, const CaptureSchema& schema) {
  auto find = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (textio::trim(header[i]) == name) return i;
    }
    throw SchemaError("missing required column '" + name + "'");
  };
  return {find(schema.time),   find(schema.src),      find(schema.dst),
          find(schema.length), find(schema.protocol), header.size()};
}

PacketRecord parse_row(const std::vector<std::string>& fields, const ColumnIndex& cols,
                       std::size_t line) {
  if (fields.size() < cols.width) {
    throw ParseError(line, "expected " + std::to_string(cols.width) + " fields, found " +
                               std::to_string(fields.size()));
  }
  PacketRecord rec;
  const auto ts = textio::parse_double(fields[cols.time]);
  if (!ts || !std::isfinite(*ts) || *ts < 0.0) {
    throw ParseError(line, "invalid timestamp '" + fields[cols.time] + "'");
  }
  rec.timestamp = *ts;
  rec.src_addr = std::string(textio::trim(fields[cols.src]));
  rec.dst_addr = std::string(textio::trim(fields[cols.dst]));
  if (rec.src_addr.empty() || rec.dst_addr.empty()) throw ParseError(line, "empty address");
  if (rec.src_addr == rec.dst_addr) {
    throw ParseError(line, "source equals destination (" + rec.src_addr + ")");
  }
  const auto len = textio::parse_int(fields[cols.length]);
  if (!len || *len < 0) throw ParseError(line, "invalid length '" + fields[cols.length] + "'");
  rec.length = *len;
  rec.protocol = std::string(textio::trim(fields[cols.protocol]));
  return rec;
}

}  // namespace

ParsedCapture parse_capture(std::istream& in, const CaptureSchema& schema, bool drop_bad_rows) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty input: missing header row");
  const ColumnIndex cols = resolve_columns(textio::split_csv(line), schema);

  ParsedCapture out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (textio::trim(line).empty()) continue;
    try {
      out.records.push_back(parse_row(textio::split_csv(line), cols, line_no));
    } catch (const ParseError&) {
      if (!drop_bad_rows) throw;
      ++out.dropped_rows;
    }
  }
  return out;
}

void write_capture(std::ostream& out, std::span<const PacketRecord> records,
                   const CaptureSchema& schema) {
  out << schema.time << ',' << schema.src << ',' << schema.dst << ',' << schema.length << ','
      << schema.protocol << '\n';
  for (const PacketRecord& r : records) {
    out << textio::format_double(r.timestamp) << ',' << r.src_addr << ',' << r.dst_addr << ','
        << r.length << ',' << r.protocol << '\n';
  }
}

EndpointMap infer_endpoints(std::span<const PacketRecord> records) {
  if (records.empty()) throw Error("cannot infer endpoints from an empty capture");

  std::map<std::string, std::set<std::string>> peers;
  for (const PacketRecord& r : records) {
    if (r.src_addr == r.dst_addr) continue;
    peers[r.src_addr].insert(r.dst_addr);
    peers[r.dst_addr].insert(r.src_addr);
  }
  if (peers.empty()) throw Error("capture contains no address pairs");

  // std::map iterates in lexicographic order, so the first maximum wins ties.
  std::size_t best = 0;
  std::size_t candidates = 0;
  const std::string* tower = nullptr;
  for (const auto& [addr, set] : peers) {
    if (set.size() > best) {
      best = set.size();
      tower = &addr;
      candidates = 1;
    } else if (set.size() == best) {
      ++candidates;
    }
  }
  if (best < 2 && candidates > 1) {
    throw AmbiguityError(
        "cannot tell the tower address from the user addresses (no address talks to two or more "
        "peers); pass the endpoints explicitly");
  }
  EndpointMap map{*tower, peers.at(*tower)};
  return map;
}

void validate(const EndpointMap& endpoints) {
  if (endpoints.tower_addr.empty()) throw Error("endpoint map has no tower address");
  if (endpoints.user_addrs.empty()) throw Error("endpoint map has no user addresses");
  if (endpoints.user_addrs.contains(endpoints.tower_addr)) {
    throw Error("tower address " + endpoints.tower_addr + " is also listed as a user address");
  }
}

LabelResult label_direction(std::span<const PacketRecord> records, const EndpointMap& endpoints) {
  validate(endpoints);
  LabelResult out;
  out.packets.reserve(records.size());
  for (const PacketRecord& r : records) {
    if (endpoints.user_addrs.contains(r.src_addr)) {
      out.packets.push_back({r, Direction::Uplink});
    } else if (endpoints.user_addrs.contains(r.dst_addr)) {
      out.packets.push_back({r, Direction::Downlink});
    } else {
      ++out.skipped;
    }
  }
  return out;
}

}  // namespace cellflow
