#include "trackcull/event_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "trackcull/error.hpp"

namespace trackcull {

using ordered_json = nlohmann::ordered_json;

std::string serialize_event(const Event& event) {
  ordered_json doc;
  doc["event_id"] = event.id();
  ordered_json clusters = ordered_json::array();
  for (const auto& list : event.clusters()) {
    for (const auto& c : list) clusters.push_back({{"sl", c.superlayer}, {"avg_wire", c.avg_wire}});
  }
  doc["clusters"] = std::move(clusters);
  ordered_json truth = ordered_json::array();
  for (const auto& t : event.truth()) {
    truth.push_back({{"indices", t.cluster_indices}, {"momentum", t.momentum}, {"charge", t.charge}});
  }
  doc["truth"] = std::move(truth);
  return doc.dump();
}

namespace {

const nlohmann::json& require(const nlohmann::json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing field \"") + key + "\"", line);
  return *it;
}

double require_number(const nlohmann::json& obj, const char* key, std::size_t line) {
  const auto& v = require(obj, key, line);
  if (!v.is_number()) throw ParseError(std::string("field \"") + key + "\" is not a number", line);
  return v.get<double>();
}

std::int64_t require_integer(const nlohmann::json& obj, const char* key, std::size_t line) {
  const auto& v = require(obj, key, line);
  if (!v.is_number_integer()) throw ParseError(std::string("field \"") + key + "\" is not an integer", line);
  return v.get<std::int64_t>();
}

}  // namespace

Event parse_event(std::string_view line, std::size_t line_number) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line_number);
  }
  if (!doc.is_object()) throw ParseError("event is not a JSON object", line_number);

  const EventId id = require_integer(doc, "event_id", line_number);
  const auto& clusters = require(doc, "clusters", line_number);
  if (!clusters.is_array()) throw ParseError("\"clusters\" is not an array", line_number);

  SuperlayerClusters lists;
  for (const auto& c : clusters) {
    if (!c.is_object()) throw ParseError("cluster is not an object", line_number);
    const auto sl = require_integer(c, "sl", line_number);
    const double wire = require_number(c, "avg_wire", line_number);
    if (sl < 1 || sl > Geometry::n_superlayers) {
      throw ParseError("cluster super-layer " + std::to_string(sl) + " outside 1..6", line_number);
    }
    lists[static_cast<std::size_t>(sl - 1)].push_back(Cluster{static_cast<int>(sl), wire});
  }

  std::vector<TruthTrack> truth;
  if (auto it = doc.find("truth"); it != doc.end() && !it->is_null()) {
    if (!it->is_array()) throw ParseError("\"truth\" is not an array", line_number);
    for (const auto& t : *it) {
      if (!t.is_object()) throw ParseError("truth entry is not an object", line_number);
      const auto& indices = require(t, "indices", line_number);
      if (!indices.is_array() || indices.size() != kSuperlayers) {
        throw ParseError("truth \"indices\" must hold 6 integers", line_number);
      }
      TruthTrack track;
      for (std::size_t sl = 0; sl < kSuperlayers; ++sl) {
        if (!indices[sl].is_number_unsigned()) {
          throw ParseError("truth index is not a non-negative integer", line_number);
        }
        track.cluster_indices[sl] = indices[sl].get<std::uint32_t>();
      }
      track.momentum = require_number(t, "momentum", line_number);
      track.charge = static_cast<int>(require_integer(t, "charge", line_number));
      truth.push_back(track);
    }
  }

  try {
    return Event(id, std::move(lists), std::move(truth));
  } catch (const ValidationError& e) {
    throw ParseError(e.what(), line_number);
  }
}

std::vector<Event> read_events(std::istream& in) {
  std::vector<Event> events;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    events.push_back(parse_event(line, line_number));
  }
  return events;
}

std::vector<Event> read_events(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open event file " + path.string());
  try {
    return read_events(in);
  } catch (const ParseError& e) {
    throw ParseError(e.detail(), e.line(), path.string());
  }
}

void write_events(std::ostream& out, const std::vector<Event>& events) {
  for (const auto& e : events) out << serialize_event(e) << '\n';
}

void write_events(const std::filesystem::path& path, const std::vector<Event>& events) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_events(out, events);
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace trackcull
