#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stens::text {

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

/// Strict full-field parse. Surrounding blanks are ignored.
std::optional<double> parse_double(std::string_view field);

std::string_view trim(std::string_view s);
std::string lower(std::string_view s);
std::vector<std::string_view> split(std::string_view line, char delimiter);

/// Iterates lines of an in-memory buffer, stripping a trailing '\r'.
class LineReader {
public:
    explicit LineReader(std::string_view buffer) : buffer_(buffer) {}
    bool next(std::string_view& line);
    std::size_t line_number() const { return line_no_; }

private:
    std::string_view buffer_;
    std::size_t pos_ = 0;
    std::size_t line_no_ = 0;
};

std::string read_file(const std::string& path);

} // namespace stens::text
