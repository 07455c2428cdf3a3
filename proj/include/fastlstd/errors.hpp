#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fastlstd {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or malformed inputs (bad beta/c/alpha, dimension mismatch, ...).
struct ConfigError : Error {
  using Error::Error;
};

/// An operation that needs samples was given none.
struct EmptyPoolError : Error {
  using Error::Error;
};

/// A data file fails to parse; carries the 1-based offending line.
struct FormatError : Error {
  long line;
  FormatError(const std::string& msg, long line_no)
      : Error(msg + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
};

/// I/O failure (missing file, write error).
struct IoError : Error {
  using Error::Error;
};

/// A linear system is numerically singular; carries the condition estimate.
struct SingularityError : Error {
  double condition_estimate;
  SingularityError(const std::string& msg, double cond)
      : Error(msg + " (condition estimate " + std::to_string(cond) + ")"),
        condition_estimate(cond) {}
};

/// A Sherman-Morrison rank-1 update denominator collapsed; carries the 1-based sample.
struct UpdateBreakdownError : Error {
  std::ptrdiff_t sample;
  UpdateBreakdownError(const std::string& msg, std::ptrdiff_t k)
      : Error(msg + " (sample " + std::to_string(k) + ")"), sample(k) {}
};

/// Bound parameters fall outside the regime where a closed form is valid.
struct RegimeError : Error {
  using Error::Error;
};

/// An operation was called on a state that cannot serve it yet.
struct StateError : Error {
  using Error::Error;
};

/// A request exceeds the supported desk scale.
struct ScaleError : Error {
  using Error::Error;
};

/// Too few Monte-Carlo runs for a statistical check.
struct SampleSizeError : Error {
  using Error::Error;
};

}  // namespace fastlstd
