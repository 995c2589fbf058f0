#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hicom {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file (bad line, bad JSON, bad header). Carries a line
// number when one is known.
class FormatError : public Error {
 public:
  FormatError(const std::string& msg, long line = -1)
      : Error(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

// A record references a node id outside the graph.
class ReferenceError : public Error {
 public:
  using Error::Error;
};

// Caller-supplied argument violates an operation precondition
// (zero fanout, empty corpus, empty split, ...).
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

// Inconsistent configuration: dimension mismatches, unknown modes,
// bad config files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Broken internal invariant; indicates a bug, not bad input.
class InternalError : public Error {
 public:
  using Error::Error;
};

// Training diverged (non-finite loss). Carries the optimizer step index.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& msg, std::int64_t step)
      : Error(msg + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::int64_t step() const { return step_; }

 private:
  std::int64_t step_;
};

}  // namespace hicom
