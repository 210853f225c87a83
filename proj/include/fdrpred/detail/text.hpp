#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace fdr::detail {

inline std::string_view trim(std::string_view s) noexcept
{
  constexpr std::string_view blanks = " \t\r\n";
  auto const first = s.find_first_not_of(blanks);
  if (first == std::string_view::npos)
    return {};
  auto const last = s.find_last_not_of(blanks);
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto const pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

/// Shortest decimal rendering that parses back to the identical double.
inline std::string format_double(double v)
{
  char buf[64];
  auto const res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view s)
{
  s = trim(s);
  if (!s.empty() && s.front() == '+')
    s.remove_prefix(1);
  double v = 0;
  auto const res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || s.empty())
    return std::nullopt;
  return v;
}

template <class Int>
std::optional<Int> parse_integer(std::string_view s)
{
  s = trim(s);
  Int v{};
  auto const res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || s.empty())
    return std::nullopt;
  return v;
}

inline std::string read_file(std::string const& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

inline void write_file(std::string const& path, std::string_view contents)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot open '" + path + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out)
    throw std::runtime_error("write to '" + path + "' failed");
}

/// Splits text into lines, accepting LF and CRLF endings. A trailing
/// terminator does not produce an extra empty line.
inline std::vector<std::string_view> lines(std::string_view text)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos)
      pos = text.size();
    auto line = text.substr(start, pos - start);
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);
    out.push_back(line);
    start = pos + 1;
  }
  return out;
}

} // namespace fdr::detail
