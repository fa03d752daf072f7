#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tristage::csv {

/// A parsed CSV file: header plus rows of raw string fields.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header column, if present.
    std::optional<std::size_t> column(std::string_view name) const;
};

/// Reads a comma-separated file with a header line. Double-quoted fields may
/// contain commas and doubled quotes.
Table read(const std::filesystem::path& path);

std::vector<std::string> split_line(std::string_view line);

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

/// Quotes a field when it contains a separator, quote or newline.
std::string quote(std::string_view field);

} // namespace tristage::csv
