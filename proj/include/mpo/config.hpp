#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mpo {

/// Flat `section.key = value` settings. Lines starting with '#' are comments.
/// Later assignments override earlier ones.
class Config {
public:
    static Config parse(std::string_view text, const std::string& origin = "<config>");
    static Config load(const std::filesystem::path& path);

    void set(const std::string& key, std::string value);
    void merge(const Config& other);
    bool has(std::string_view key) const;
    std::optional<std::string> get(std::string_view key) const;

    std::string get_string(std::string_view key, const std::string& fallback) const;
    double get_double(std::string_view key, double fallback) const;
    std::int64_t get_int(std::string_view key, std::int64_t fallback) const;
    std::uint64_t get_uint(std::string_view key, std::uint64_t fallback) const;
    bool get_bool(std::string_view key, bool fallback) const;
    /// Comma-separated reals.
    std::vector<double> get_doubles(std::string_view key, std::vector<double> fallback) const;

    /// Keys below `prefix.` in sorted order.
    std::vector<std::string> keys_with_prefix(std::string_view prefix) const;

    /// Canonical text: one `key = value` line per entry, keys sorted.
    std::string serialize() const;
    void save(const std::filesystem::path& path) const;

    const std::map<std::string, std::string, std::less<>>& entries() const noexcept { return values_; }

private:
    std::map<std::string, std::string, std::less<>> values_;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

}  // namespace mpo
