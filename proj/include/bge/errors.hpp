#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bge {

// Input violates a documented precondition (bad sizes, ranges, config).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A text input could not be parsed; carries the 1-based line number.
struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, std::size_t line_no)
      : std::runtime_error(msg + " (line " + std::to_string(line_no) + ")"),
        line(line_no) {}
  std::size_t line;
};

// A computation produced a non-finite value. `detail` holds the offending
// quantity (e.g. an inner product) and, when known, the pair it came from.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg, double offending = 0.0,
                        long long i = -1, long long j = -1)
      : std::runtime_error(msg), detail(offending), pair_i(i), pair_j(j) {}
  double detail;
  long long pair_i;
  long long pair_j;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bge
