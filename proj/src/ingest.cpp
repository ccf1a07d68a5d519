#include "hydra/ingest.hpp"

#include "hydra/error.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace hydra {

static ParseError at_line(int line, const std::string& msg) {
    return ParseError("trace line " + std::to_string(line) + ": " + msg);
}

std::string serialize_trace_csv(const EventTrace& trace, const EventTable& table) {
    trace.validate();
    if (static_cast<int>(trace.num_events) != table.size())
        throw DataError("trace '" + trace.sample_id + "' has " + std::to_string(trace.num_events) +
                        " events, table has " + std::to_string(table.size()));
    if (trace.sample_id.empty() || trace.sample_id.find(',') != std::string::npos ||
        trace.sample_id.find('\n') != std::string::npos)
        throw DataError("sample_id must be non-empty and free of commas/newlines");

    std::string out;
    out.reserve(trace.counts.size() * 6 + 256);
    out += trace.sample_id;
    out += ',';
    out += std::to_string(trace.label);
    out += ',';
    out += std::to_string(trace.timestamp_tag);
    out += ',';
    out += std::to_string(trace.interval_ms);
    out += '\n';
    for (int e = 0; e < table.size(); ++e) {
        if (e > 0) out += ',';
        out += table.names[static_cast<std::size_t>(e)];
    }
    out += '\n';
    for (std::size_t t = 0; t < trace.num_intervals; ++t) {
        for (std::size_t e = 0; e < trace.num_events; ++e) {
            if (e > 0) out += ',';
            out += std::to_string(trace.count(t, e));
        }
        out += '\n';
    }
    return out;
}

static std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

static std::int64_t parse_count(const std::string& raw, int line, const std::string& col_name) {
    if (raw.empty()) throw at_line(line, "empty count in column '" + col_name + "'");
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(raw.c_str(), &end, 10);
    if (errno != 0 || end == raw.c_str() || *end != '\0')
        throw at_line(line, "non-integer count '" + raw + "' in column '" + col_name + "'");
    if (v < 0) throw at_line(line, "negative count in column '" + col_name + "'");
    return v;
}

EventTrace parse_trace_csv(const std::string& text, const EventTable& table) {
    std::istringstream in(text);
    std::string line;

    if (!std::getline(in, line)) throw at_line(1, "missing header");
    const auto head = split_fields(line);
    if (head.size() != 4)
        throw at_line(1, "expected 4 header fields sample_id,label,timestamp_tag,interval_ms");
    EventTrace trace;
    trace.sample_id = head[0];
    if (trace.sample_id.empty()) throw at_line(1, "empty sample_id");
    if (head[1] != "0" && head[1] != "1") throw at_line(1, "label must be 0 or 1");
    trace.label = head[1] == "1" ? 1 : 0;
    {
        errno = 0;
        char* end = nullptr;
        trace.timestamp_tag = std::strtoll(head[2].c_str(), &end, 10);
        if (errno != 0 || end == head[2].c_str() || *end != '\0')
            throw at_line(1, "timestamp_tag is not an integer");
    }
    trace.interval_ms = static_cast<int>(parse_count(head[3], 1, "interval_ms"));
    if (trace.interval_ms <= 0) throw at_line(1, "interval_ms must be positive");

    if (!std::getline(in, line)) throw at_line(2, "missing event-name row");
    const auto names = split_fields(line);
    if (static_cast<int>(names.size()) != table.size())
        throw at_line(2, "expected " + std::to_string(table.size()) + " event names, got " +
                             std::to_string(names.size()));
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] != table.names[i])
            throw at_line(2, "unknown or misplaced event name '" + names[i] + "' in column " +
                                 std::to_string(i + 1) + " (expected '" + table.names[i] + "')");
    }

    trace.num_events = static_cast<std::size_t>(table.size());
    int lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() && in.eof()) break; // tolerate final newline
        const auto fields = split_fields(line);
        if (fields.size() != trace.num_events)
            throw at_line(lineno, "ragged row: expected " + std::to_string(trace.num_events) +
                                      " counts, got " + std::to_string(fields.size()));
        for (std::size_t e = 0; e < fields.size(); ++e)
            trace.counts.push_back(parse_count(fields[e], lineno, table.names[e]));
        ++trace.num_intervals;
    }
    if (trace.num_intervals == 0) throw at_line(lineno + 1, "trace has no count rows");
    trace.validate();
    return trace;
}

void save_trace_csv(const EventTrace& trace, const EventTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << serialize_trace_csv(trace, table);
    if (!out) throw DataError("failed writing '" + path + "'");
}

EventTrace load_trace_csv(const std::string& path, const EventTable& table) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open trace file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_trace_csv(buf.str(), table);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

} // namespace hydra
