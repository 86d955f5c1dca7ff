#pragma once

#include <stdexcept>
#include <string>

namespace crawler {

/// Malformed input text (world or scenario file). Carries a location such as
/// "line 12" or "obstacles[3].vertices".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& location, const std::string& what)
      : std::runtime_error(location + ": " + what), location_(location) {}
  const std::string& location() const { return location_; }

 private:
  std::string location_;
};

/// Well-formed input that violates a model invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad scenario/CLI configuration (unknown suite, missing file, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sonar reading older than the mapping tick window.
class StaleReadingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Metric inputs that cannot be compared (grid dimension mismatch).
class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CRAWLER_EXPECTS(cond, msg)                                   \
  do {                                                               \
    if (!(cond)) throw std::invalid_argument(std::string(msg));      \
  } while (0)

}  // namespace crawler
