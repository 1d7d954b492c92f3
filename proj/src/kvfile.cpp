#include "drift/kvfile.hpp"

#include <fstream>
#include <sstream>

namespace drift {

KvFile KvFile::parse_text(const std::string& text, const std::string& origin) {
    KvFile kv;
    kv.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::size_t begin = line.find_first_not_of(" \t");
        if (begin == std::string::npos) continue;
        std::size_t end = line.find_last_not_of(" \t");
        std::string body = line.substr(begin, end - begin + 1);
        std::size_t eq = body.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected key=value, got '" + body + "'");
        std::string key = body.substr(0, eq);
        std::string value = body.substr(eq + 1);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        std::size_t vb = value.find_first_not_of(" \t");
        value = vb == std::string::npos ? std::string() : value.substr(vb);
        if (key.empty())
            throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty key");
        kv.set(key, value);
    }
    return kv;
}

KvFile KvFile::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str(), path);
}

void KvFile::set(const std::string& key, const std::string& value) {
    for (auto& e : entries_) {
        if (e.first == key) {
            e.second = value;
            return;
        }
    }
    entries_.emplace_back(key, value);
}

bool KvFile::has(const std::string& key) const {
    for (const auto& e : entries_)
        if (e.first == key) return true;
    return false;
}

const std::string& KvFile::get(const std::string& key) const {
    for (const auto& e : entries_)
        if (e.first == key) return e.second;
    throw std::runtime_error(origin_ + ": missing key '" + key + "'");
}

std::string KvFile::get_or(const std::string& key, std::string fallback) const {
    for (const auto& e : entries_)
        if (e.first == key) return e.second;
    return fallback;
}

double KvFile::get_double(const std::string& key) const {
    return parse_double(get(key), key.c_str());
}

long KvFile::get_long(const std::string& key) const {
    return parse_long(get(key), key.c_str());
}

std::vector<std::string> KvFile::keys() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.first);
    return out;
}

std::string KvFile::serialize() const {
    std::string out;
    for (const auto& e : entries_) {
        out += e.first;
        out += '=';
        out += e.second;
        out += '\n';
    }
    return out;
}

void KvFile::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << serialize();
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace drift
