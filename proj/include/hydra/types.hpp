#pragma once

#include "hydra/config.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hydra {

// Names of the tracked microarchitectural events. Event ids are 1-based and
// stable for a run; names map 1:1 to ids.
struct EventTable {
    std::vector<std::string> names; // names[i] is event i+1

    int size() const { return static_cast<int>(names.size()); }
    const std::string& name(int event_id) const;      // 1-based, throws ConfigError if out of range
    int id_of(const std::string& name) const;         // 1-based, 0 if unknown

    static EventTable defaults();                     // built-in 21-event table
    static EventTable from_config(const ConfigFile&); // [events] section, falls back to defaults
};

// A subset of events monitored together under the counter budget.
struct FeatureSet {
    int id = 0;
    std::vector<int> events;  // distinct 1-based event ids, ordered
    std::string description;
};

struct FeatureSetRegistry {
    std::vector<FeatureSet> sets;
    int counter_budget = 6;   // max concurrently monitored events

    const FeatureSet& get(int id) const;              // throws ConfigError if unknown
    const FeatureSet* find(int id) const;
    std::size_t size() const { return sets.size(); }

    // Checks budget, distinct events, unique ids, ids within the table.
    void validate(const EventTable& table) const;

    static FeatureSetRegistry defaults();             // built-in 11 reference sets
    static FeatureSetRegistry from_config(const ConfigFile&, const EventTable& table);
};

// One sample's multivariate event-count time series at a fixed cadence.
struct EventTrace {
    std::string sample_id;
    int label = 0;                   // 0 benign, 1 malware
    std::int64_t timestamp_tag = 0;  // discovery-date ordinal for temporal splits
    int interval_ms = 10;
    std::size_t num_intervals = 0;   // T
    std::size_t num_events = 0;      // E
    std::vector<std::int64_t> counts; // row-major T x E, non-negative

    std::int64_t count(std::size_t t, std::size_t e) const { return counts[t * num_events + e]; }
    std::int64_t& count(std::size_t t, std::size_t e) { return counts[t * num_events + e]; }

    void validate() const; // throws DataError on negative counts / bad label / shape mismatch
};

// Aggregated event counts over one non-overlapping window of a trace.
struct WindowVector {
    std::string sample_id;
    int window_index = 0;
    int slice_index = -1;            // assigned by a SlicePartition, -1 until then
    std::vector<std::int64_t> features; // size E, column sums over the window's intervals
};

// Contiguous assignment of window indices to L slices, sizes differing by
// at most one window.
struct SlicePartition {
    int num_slices = 0;
    std::vector<int> assignment;     // assignment[window_index] = slice index

    std::size_t num_windows() const { return assignment.size(); }
    int slice_of(std::size_t window_index) const { return assignment[window_index]; }
};

// Returns a copy of `w` with every event outside `fs` zeroed. Idempotent.
WindowVector mask_to(const WindowVector& w, const FeatureSet& fs);

} // namespace hydra
