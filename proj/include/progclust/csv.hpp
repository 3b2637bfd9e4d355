#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace progclust::csv {

/// Splits one comma-separated line. No quoting: fields never contain commas.
std::vector<std::string> split(std::string_view line);

/// Line-oriented reader that tracks the 1-based line number, skips blank
/// lines and strips a trailing '\r' and a leading UTF-8 BOM.
class Reader {
  public:
    explicit Reader(const std::filesystem::path& path);

    /// Reads the next non-blank row; false at end of file.
    bool next(std::vector<std::string>& fields);
    std::size_t line() const { return line_; }
    const std::string& file() const { return name_; }

  private:
    std::ifstream in_;
    std::string name_;
    std::size_t line_ = 0;
};

/// Parses a base-10 integer occupying the whole field.
bool parse_int(std::string_view s, int& out);
/// Parses a floating-point value occupying the whole field.
bool parse_double(std::string_view s, double& out);

/// Shortest round-trip representation of a double ("%.17g" trimmed).
std::string format_double(double v);

/// Opens `path` for writing, throwing on failure.
std::ofstream open_out(const std::filesystem::path& path);

}  // namespace progclust::csv
