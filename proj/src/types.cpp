#include "hydra/types.hpp"

#include "hydra/error.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

namespace hydra {

static int parse_section_id(const std::string& arg, const std::string& what) {
    char* end = nullptr;
    const long v = std::strtol(arg.c_str(), &end, 10);
    if (end == arg.c_str() || *end != '\0')
        throw ConfigError("[" + what + " " + arg + "]: id is not an integer");
    return static_cast<int>(v);
}

const std::string& EventTable::name(int event_id) const {
    if (event_id < 1 || event_id > size())
        throw ConfigError("event id " + std::to_string(event_id) + " outside [1, " +
                          std::to_string(size()) + "]");
    return names[static_cast<std::size_t>(event_id - 1)];
}

int EventTable::id_of(const std::string& n) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == n) return static_cast<int>(i + 1);
    return 0;
}

EventTable EventTable::defaults() {
    return EventTable{{
        "all-dc-accesses",   // 1
        "l1-dc-ld",          // 2
        "ls-dc-accesses",    // 3
        "ld-dispatch",       // 4
        "branches",          // 5
        "st-dispatch",       // 6
        "cache-accesses",    // 7
        "l1-dc-ld-misses",   // 8
        "l2-dc-accesses",    // 9
        "l2-ic-accesses",    // 10
        "branch-misses",     // 11
        "cache-misses",      // 12
        "l1-dtlb-misses",    // 13
        "ls-l1-dtlb-misses", // 14
        "l1-ic-ld-misses",   // 15
        "ls-mab-alloc-st",   // 16
        "dtlb-ld-misses",    // 17
        "l2-dtlb-misses",    // 18
        "itlb-ld",           // 19
        "l2-itlb-misses",    // 20
        "itlb-ld-misses",    // 21
    }};
}

EventTable EventTable::from_config(const ConfigFile& cfg) {
    const ConfigSection* sec = cfg.find("events");
    if (sec == nullptr) return defaults();
    // Keys are the 1-based ids; require a dense 1..E numbering.
    EventTable table;
    table.names.resize(sec->values.size());
    std::set<std::string> seen;
    for (const auto& [key, value] : sec->values) {
        std::int64_t id = 0;
        std::size_t used = 0;
        try {
            id = std::stoll(key, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != key.size())
            throw ConfigError("[events]: key '" + key + "' is not an event id");
        if (id < 1 || id > static_cast<std::int64_t>(table.names.size()))
            throw ConfigError("[events]: ids must be dense 1..E, got " + key);
        if (value.empty()) throw ConfigError("[events]: empty name for id " + key);
        if (!seen.insert(value).second)
            throw ConfigError("[events]: duplicate event name '" + value + "'");
        table.names[static_cast<std::size_t>(id - 1)] = value;
    }
    return table;
}

const FeatureSet& FeatureSetRegistry::get(int id) const {
    const FeatureSet* fs = find(id);
    if (fs == nullptr) throw ConfigError("unknown feature set id " + std::to_string(id));
    return *fs;
}

const FeatureSet* FeatureSetRegistry::find(int id) const {
    for (const auto& fs : sets)
        if (fs.id == id) return &fs;
    return nullptr;
}

void FeatureSetRegistry::validate(const EventTable& table) const {
    std::set<int> ids;
    for (const auto& fs : sets) {
        if (!ids.insert(fs.id).second)
            throw ConfigError("feature set id " + std::to_string(fs.id) + " is not unique");
        if (fs.events.empty())
            throw ConfigError("feature set " + std::to_string(fs.id) + " has no events");
        if (static_cast<int>(fs.events.size()) > counter_budget)
            throw ConfigError("feature set " + std::to_string(fs.id) + " exceeds counter budget of " +
                              std::to_string(counter_budget));
        std::set<int> evs;
        for (int e : fs.events) {
            if (e < 1 || e > table.size())
                throw ConfigError("feature set " + std::to_string(fs.id) + ": event id " +
                                  std::to_string(e) + " outside table");
            if (!evs.insert(e).second)
                throw ConfigError("feature set " + std::to_string(fs.id) + ": duplicate event " +
                                  std::to_string(e));
        }
    }
}

FeatureSetRegistry FeatureSetRegistry::defaults() {
    FeatureSetRegistry reg;
    reg.counter_budget = 6;
    reg.sets = {
        {1, {1, 2, 3, 4}, "Top 4 events from prototype ranking"},
        {2, {1, 2, 3, 4, 5, 6}, "Top 6 events from prototype ranking"},
        {3, {5, 11}, "Branch-based events"},
        {4, {5, 6, 7, 11}, "Branch, store, and cache events"},
        {5, {5, 14, 17, 21}, "Branch and TLB-miss events"},
        {6, {1, 2, 5, 19}, "Data cache, branch, and ITLB events"},
        {7, {2, 8, 13, 14}, "Data cache and TLB events"},
        {8, {5, 10, 11, 15}, "Branch and instruction cache events"},
        {9, {5, 7, 11, 12}, "Branch and cache events"},
        {10, {1, 3, 4, 5}, "Memory and branch events"},
        {11, {4, 5, 6, 11}, "Dispatch and branch events"},
    };
    return reg;
}

FeatureSetRegistry FeatureSetRegistry::from_config(const ConfigFile& cfg, const EventTable& table) {
    auto secs = cfg.find_all("feature-set");
    FeatureSetRegistry reg;
    if (const ConfigSection* exp = cfg.find("experiment"))
        reg.counter_budget = static_cast<int>(exp->get_int_or("counter-budget", 6));
    if (secs.empty()) {
        FeatureSetRegistry def = defaults();
        def.counter_budget = reg.counter_budget;
        def.validate(table);
        return def;
    }
    for (const ConfigSection* sec : secs) {
        FeatureSet fs;
        if (sec->arg.empty())
            throw ConfigError("[feature-set] needs an id, e.g. [feature-set 3]");
        fs.id = parse_section_id(sec->arg, "feature-set");
        for (std::int64_t e : sec->get_int_list("events"))
            fs.events.push_back(static_cast<int>(e));
        fs.description = sec->get_or("description", "");
        reg.sets.push_back(std::move(fs));
    }
    reg.validate(table);
    return reg;
}

void EventTrace::validate() const {
    if (label != 0 && label != 1)
        throw DataError("trace '" + sample_id + "': label must be 0 or 1");
    if (interval_ms <= 0)
        throw DataError("trace '" + sample_id + "': interval_ms must be positive");
    if (counts.size() != num_intervals * num_events)
        throw DataError("trace '" + sample_id + "': counts shape mismatch");
    for (std::int64_t c : counts)
        if (c < 0) throw DataError("trace '" + sample_id + "': negative count");
}

WindowVector mask_to(const WindowVector& w, const FeatureSet& fs) {
    WindowVector out = w;
    std::vector<bool> keep(w.features.size(), false);
    for (int e : fs.events)
        if (e >= 1 && static_cast<std::size_t>(e) <= keep.size()) keep[static_cast<std::size_t>(e - 1)] = true;
    for (std::size_t i = 0; i < out.features.size(); ++i)
        if (!keep[i]) out.features[i] = 0;
    return out;
}

} // namespace hydra
