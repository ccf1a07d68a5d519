#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hydra {

// Minimal INI-style config: `[section]` or `[section arg]` headers,
// `key = value` entries, `#`/`;` comments, blank lines ignored. Sections
// may repeat; order is preserved. All modules share this format.
struct ConfigSection {
    std::string name;               // e.g. "feature-set"
    std::string arg;                // e.g. "3" in "[feature-set 3]"
    std::map<std::string, std::string> values;
    int line = 0;                   // header line, for diagnostics

    bool has(const std::string& key) const;
    std::string get(const std::string& key) const;                       // throws ConfigError if absent
    std::string get_or(const std::string& key, const std::string& def) const;
    std::int64_t get_int(const std::string& key) const;
    std::int64_t get_int_or(const std::string& key, std::int64_t def) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double def) const;
    bool get_bool_or(const std::string& key, bool def) const;
    std::vector<std::int64_t> get_int_list(const std::string& key) const; // comma-separated
    std::vector<double> get_double_list(const std::string& key) const;
    std::vector<std::string> get_string_list(const std::string& key) const;
};

struct ConfigFile {
    std::vector<ConfigSection> sections;

    static ConfigFile parse(const std::string& text);
    static ConfigFile load(const std::string& path);

    const ConfigSection* find(const std::string& name) const;            // first match or nullptr
    const ConfigSection* find(const std::string& name, const std::string& arg) const;
    std::vector<const ConfigSection*> find_all(const std::string& name) const;
};

std::string trim(const std::string& s);

// Split on ',' with no quoting; strips a trailing '\r'. Shared by the model
// and matrix file formats.
std::vector<std::string> split_csv(const std::string& line);

} // namespace hydra
