#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mpo::csv {

/// Splits one line on delimiter and trims surrounding whitespace of each field.
/// No quoting support: addresses in transaction data never contain delimiters.
std::vector<std::string_view> split(std::string_view line, char delimiter = ',');

std::string_view trim(std::string_view s);

std::optional<double> parse_double(std::string_view s);
std::optional<std::int64_t> parse_int(std::string_view s);
std::optional<std::uint64_t> parse_uint(std::string_view s);

/// Line-oriented reader that tracks 1-based line numbers and skips blank lines.
class Reader {
public:
    explicit Reader(const std::filesystem::path& path);

    /// Next non-blank line, with trailing '\r' removed.
    bool next(std::string& line);
    std::size_t line_number() const noexcept { return line_no_; }
    const std::string& file() const noexcept { return name_; }

private:
    std::ifstream in_;
    std::string name_;
    std::size_t line_no_ = 0;
};

/// Opens path for writing; throws mpo::Error when the file cannot be created.
std::ofstream open_output(const std::filesystem::path& path);

/// Shortest round-trippable decimal representation of a double.
std::string format_double(double v);

/// Column lookup by header name; throws AdapterError naming the missing column.
std::size_t column_index(const std::vector<std::string_view>& header, std::string_view name,
                         const std::string& file);

}  // namespace mpo::csv
