#include "mpo/config.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "mpo/csv.hpp"
#include "mpo/error.hpp"

namespace mpo {

Config Config::parse(std::string_view text, const std::string& origin) {
    Config cfg;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const auto line = csv::trim(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
        const auto key = csv::trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
        cfg.set(std::string(key), std::string(csv::trim(line.substr(eq + 1))));
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

void Config::set(const std::string& key, std::string value) { values_[key] = std::move(value); }

void Config::merge(const Config& other) {
    for (const auto& [k, v] : other.values_) values_[k] = v;
}

bool Config::has(std::string_view key) const { return values_.find(key) != values_.end(); }

std::optional<std::string> Config::get(std::string_view key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::string Config::get_string(std::string_view key, const std::string& fallback) const {
    return get(key).value_or(fallback);
}

double Config::get_double(std::string_view key, double fallback) const {
    const auto raw = get(key);
    if (!raw) return fallback;
    const auto v = csv::parse_double(*raw);
    if (!v) throw ConfigError("'" + std::string(key) + "' expects a number, got '" + *raw + "'");
    return *v;
}

std::int64_t Config::get_int(std::string_view key, std::int64_t fallback) const {
    const auto raw = get(key);
    if (!raw) return fallback;
    const auto v = csv::parse_int(*raw);
    if (!v) throw ConfigError("'" + std::string(key) + "' expects an integer, got '" + *raw + "'");
    return *v;
}

std::uint64_t Config::get_uint(std::string_view key, std::uint64_t fallback) const {
    const auto raw = get(key);
    if (!raw) return fallback;
    const auto v = csv::parse_uint(*raw);
    if (!v) throw ConfigError("'" + std::string(key) + "' expects a non-negative integer, got '" + *raw + "'");
    return *v;
}

bool Config::get_bool(std::string_view key, bool fallback) const {
    const auto raw = get(key);
    if (!raw) return fallback;
    if (*raw == "true" || *raw == "1" || *raw == "yes") return true;
    if (*raw == "false" || *raw == "0" || *raw == "no") return false;
    throw ConfigError("'" + std::string(key) + "' expects true or false, got '" + *raw + "'");
}

std::vector<double> Config::get_doubles(std::string_view key, std::vector<double> fallback) const {
    const auto raw = get(key);
    if (!raw) return fallback;
    std::vector<double> out;
    for (auto field : csv::split(*raw)) {
        const auto v = csv::parse_double(field);
        if (!v) throw ConfigError("'" + std::string(key) + "' expects comma-separated numbers, got '" + *raw + "'");
        out.push_back(*v);
    }
    return out;
}

std::vector<std::string> Config::keys_with_prefix(std::string_view prefix) const {
    std::vector<std::string> out;
    const std::string p = std::string(prefix) + ".";
    for (auto it = values_.lower_bound(p); it != values_.end() && it->first.starts_with(p); ++it) out.push_back(it->first);
    return out;
}

std::string Config::serialize() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
}

void Config::save(const std::filesystem::path& path) const {
    auto out = csv::open_output(path);
    out << serialize();
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state) {
    for (unsigned char c : bytes) {
        state ^= c;
        state *= 0x100000001b3ULL;
    }
    return state;
}

std::string hex64(std::uint64_t value) { return fmt::format("{:016x}", value); }

}  // namespace mpo
