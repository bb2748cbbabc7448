#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "trackcull/event.hpp"

namespace trackcull {

/// One event as a single JSON line (no trailing newline):
///   {"event_id":N,"clusters":[{"sl":S,"avg_wire":W},...],"truth":[{"indices":[...],"momentum":P,"charge":Q},...]}
/// Clusters are written super-layer by super-layer, so file order within a
/// super-layer matches the truth indices.
std::string serialize_event(const Event& event);

/// Parses one JSONL line. `line_number` is only used in error messages.
Event parse_event(std::string_view line, std::size_t line_number = 0);

std::vector<Event> read_events(const std::filesystem::path& path);
std::vector<Event> read_events(std::istream& in);
void write_events(const std::filesystem::path& path, const std::vector<Event>& events);
void write_events(std::ostream& out, const std::vector<Event>& events);

}  // namespace trackcull
