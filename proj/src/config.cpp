#include "hydra/config.hpp"

#include "hydra/error.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace hydra {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
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

static std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(s);
    while (std::getline(ss, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

bool ConfigSection::has(const std::string& key) const {
    return values.count(key) != 0;
}

std::string ConfigSection::get(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end())
        throw ConfigError("config: missing key '" + key + "' in section [" + name +
                          (arg.empty() ? "" : " " + arg) + "]");
    return it->second;
}

std::string ConfigSection::get_or(const std::string& key, const std::string& def) const {
    auto it = values.find(key);
    return it == values.end() ? def : it->second;
}

static std::int64_t parse_int(const std::string& raw, const std::string& key) {
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(raw.c_str(), &end, 10);
    if (errno != 0 || end == raw.c_str() || *end != '\0')
        throw ConfigError("config: key '" + key + "' is not an integer: '" + raw + "'");
    return v;
}

static double parse_double(const std::string& raw, const std::string& key) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(raw.c_str(), &end);
    if (errno != 0 || end == raw.c_str() || *end != '\0')
        throw ConfigError("config: key '" + key + "' is not a number: '" + raw + "'");
    return v;
}

std::int64_t ConfigSection::get_int(const std::string& key) const {
    return parse_int(get(key), key);
}

std::int64_t ConfigSection::get_int_or(const std::string& key, std::int64_t def) const {
    auto it = values.find(key);
    return it == values.end() ? def : parse_int(it->second, key);
}

double ConfigSection::get_double(const std::string& key) const {
    return parse_double(get(key), key);
}

double ConfigSection::get_double_or(const std::string& key, double def) const {
    auto it = values.find(key);
    return it == values.end() ? def : parse_double(it->second, key);
}

bool ConfigSection::get_bool_or(const std::string& key, bool def) const {
    auto it = values.find(key);
    if (it == values.end()) return def;
    const std::string& v = it->second;
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ConfigError("config: key '" + key + "' is not a boolean: '" + v + "'");
}

std::vector<std::int64_t> ConfigSection::get_int_list(const std::string& key) const {
    std::vector<std::int64_t> out;
    for (const auto& tok : split_list(get(key))) out.push_back(parse_int(tok, key));
    return out;
}

std::vector<double> ConfigSection::get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& tok : split_list(get(key))) out.push_back(parse_double(tok, key));
    return out;
}

std::vector<std::string> ConfigSection::get_string_list(const std::string& key) const {
    return split_list(get(key));
}

ConfigFile ConfigFile::parse(const std::string& text) {
    ConfigFile cfg;
    ConfigSection* cur = nullptr;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ParseError("config line " + std::to_string(lineno) + ": unterminated section header");
            const std::string inner = trim(t.substr(1, t.size() - 2));
            if (inner.empty())
                throw ParseError("config line " + std::to_string(lineno) + ": empty section name");
            ConfigSection sec;
            sec.line = lineno;
            const std::size_t sp = inner.find_first_of(" \t");
            if (sp == std::string::npos) {
                sec.name = inner;
            } else {
                sec.name = inner.substr(0, sp);
                sec.arg = trim(inner.substr(sp + 1));
            }
            cfg.sections.push_back(std::move(sec));
            cur = &cfg.sections.back();
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        if (cur == nullptr)
            throw ParseError("config line " + std::to_string(lineno) + ": entry before any [section]");
        const std::string key = trim(t.substr(0, eq));
        const std::string val = trim(t.substr(eq + 1));
        if (key.empty())
            throw ParseError("config line " + std::to_string(lineno) + ": empty key");
        cur->values[key] = val;
    }
    return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

const ConfigSection* ConfigFile::find(const std::string& name) const {
    for (const auto& s : sections)
        if (s.name == name) return &s;
    return nullptr;
}

const ConfigSection* ConfigFile::find(const std::string& name, const std::string& arg) const {
    for (const auto& s : sections)
        if (s.name == name && s.arg == arg) return &s;
    return nullptr;
}

std::vector<const ConfigSection*> ConfigFile::find_all(const std::string& name) const {
    std::vector<const ConfigSection*> out;
    for (const auto& s : sections)
        if (s.name == name) out.push_back(&s);
    return out;
}

} // namespace hydra
