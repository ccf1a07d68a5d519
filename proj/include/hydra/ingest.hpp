#pragma once

#include "hydra/types.hpp"

#include <string>

namespace hydra {

// Trace file format (version 1), LF line endings, no quoting:
//
//   line 1: <sample_id>,<label>,<timestamp_tag>,<interval_ms>
//   line 2: comma-separated event names (must match the event table)
//   line 3+: one sampling interval per line, ASCII decimal counts
//
// serialize/parse round-trip bit-exactly on valid inputs.
struct TraceFileHeader {
    int version = 1;
    int interval_ms = 0;
    std::vector<std::string> event_names;
};

std::string serialize_trace_csv(const EventTrace& trace, const EventTable& table);

// Throws ParseError with the offending line number on malformed input
// (unknown event name, non-integer or negative count, ragged rows).
EventTrace parse_trace_csv(const std::string& text, const EventTable& table);

void save_trace_csv(const EventTrace& trace, const EventTable& table, const std::string& path);
EventTrace load_trace_csv(const std::string& path, const EventTable& table);

} // namespace hydra
