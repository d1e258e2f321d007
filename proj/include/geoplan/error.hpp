#pragma once

#include <stdexcept>
#include <string>

namespace geoplan {

struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NotPositiveDefinite : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BaseMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Inverse retraction queried outside its injectivity neighborhood
// (antipodal angular coordinates).
struct OutOfNeighborhood : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegeneratePath : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SamplingExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, int line_, int column_)
      : std::runtime_error(what + " (line " + std::to_string(line_) +
                           ", column " + std::to_string(column_) + ")"),
        line(line_),
        column(column_) {}
  int line = 0;
  int column = 0;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace geoplan
