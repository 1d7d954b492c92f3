#pragma once

#include <string>
#include <utility>
#include <vector>

#include "drift/common.hpp"

namespace drift {

// Plain-text `key=value` file: one pair per line, '#' starts a comment,
// insertion order preserved so serialisation is stable.
class KvFile {
public:
    KvFile() = default;

    static KvFile parse_text(const std::string& text, const std::string& origin);
    static KvFile load(const std::string& path);

    void set(const std::string& key, const std::string& value);
    void set_double(const std::string& key, double v) { set(key, format_double(v)); }
    void set_long(const std::string& key, long v) { set(key, std::to_string(v)); }

    bool has(const std::string& key) const;
    const std::string& get(const std::string& key) const;               // throws if absent
    std::string get_or(const std::string& key, std::string fallback) const;
    double get_double(const std::string& key) const;
    long get_long(const std::string& key) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
    std::vector<std::string> keys() const;

    std::string serialize() const;
    void save(const std::string& path) const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
    std::string origin_ = "<memory>";
};

}  // namespace drift
