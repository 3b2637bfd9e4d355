#pragma once

#include <stdexcept>
#include <string>

namespace progclust {

/// Raised for malformed input files. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& file, std::size_t line, const std::string& what)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

/// Raised when an operation's preconditions do not hold (k > n, empty input, ...).
class InvalidArgument : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a computation cannot proceed on otherwise valid input
/// (all-abstain label matrix, single-class training set, missing subscores).
class ComputeError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace progclust
