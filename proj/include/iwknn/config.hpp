#pragma once

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace iwknn {

/// Parsed `key = value` configuration; '#' starts a comment, blank lines
/// are ignored. Keys are kept in sorted order so dumps are deterministic.
using ConfigMap = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

} // namespace detail

inline ConfigMap parse_config_text(std::string_view text, std::string_view origin = "<config>") {
    ConfigMap out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto eol = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        const auto hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        const std::string stripped = detail::trim(line);
        if (stripped.empty()) continue;

        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error(std::string(origin) + ":" + std::to_string(line_no) +
                                     ": expected 'key = value'");
        }
        std::string key = detail::trim(std::string_view(stripped).substr(0, eq));
        std::string value = detail::trim(std::string_view(stripped).substr(eq + 1));
        if (key.empty()) {
            throw std::runtime_error(std::string(origin) + ":" + std::to_string(line_no) +
                                     ": empty key");
        }
        out[key] = value;
    }
    return out;
}

inline ConfigMap parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

inline double config_double(const ConfigMap& cfg, const std::string& key, double fallback) {
    auto it = cfg.find(key);
    if (it == cfg.end()) return fallback;
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    if (end == it->second.c_str() || *end != '\0') {
        throw std::runtime_error("config key '" + key + "': not a number: " + it->second);
    }
    return v;
}

inline long config_long(const ConfigMap& cfg, const std::string& key, long fallback) {
    auto it = cfg.find(key);
    if (it == cfg.end()) return fallback;
    char* end = nullptr;
    const long v = std::strtol(it->second.c_str(), &end, 10);
    if (end == it->second.c_str() || *end != '\0') {
        throw std::runtime_error("config key '" + key + "': not an integer: " + it->second);
    }
    return v;
}

} // namespace iwknn
