#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace geotweet::io {

std::string read_file(const std::filesystem::path& path);
// Writes atomically enough for our purposes: truncate + write, throws on failure.
void write_file(const std::filesystem::path& path, std::string_view contents);

std::string_view trim(std::string_view s) noexcept;
std::vector<std::string_view> split(std::string_view s, char sep);

std::optional<double> parse_double(std::string_view s) noexcept;
std::optional<long long> parse_int(std::string_view s) noexcept;

// Shortest representation that round-trips.
std::string format_double(double v);

// Visits each line (without terminator, trailing '\r' stripped) with its 1-based number.
template <typename F>
void for_each_line(std::string_view text, F&& f) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    f(++line_no, line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
}

}  // namespace geotweet::io
