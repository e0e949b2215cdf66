#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gpro {

// Configuration / CLI problems (mapped to exit code 2 by the CLI).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed files (datasets, checkpoints, configs read from disk).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training aborts (non-finite losses and similar).
class TrainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Process-wide warning sink. Training owns one thread by contract, so a
// plain vector is enough; tests inspect it to confirm degenerate cases
// (batch of 1, rank clamp) are flagged rather than silently handled.
inline std::vector<std::string>& warning_log() {
  static std::vector<std::string> log;
  return log;
}

inline void record_warning(std::string msg) { warning_log().push_back(std::move(msg)); }

inline void clear_warnings() { warning_log().clear(); }

}  // namespace gpro
