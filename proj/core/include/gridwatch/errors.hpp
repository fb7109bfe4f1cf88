#pragma once

#include <stdexcept>
#include <string>

namespace gridwatch {

// Error taxonomy used across the library. The CLI maps these onto exit
// codes, so keep the hierarchy stable: ConfigError -> 1, DataError -> 2,
// TrainError -> 3, EvalError -> 4.

class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Frame columns do not resolve against the grid (wrong ids, wrong order).
class FrameStructureError : public DataError {
public:
  explicit FrameStructureError(const std::string& msg) : DataError(msg) {}
};

/// Malformed or truncated file content.
class CorruptFileError : public DataError {
public:
  CorruptFileError(const std::string& msg, std::size_t byte_offset)
      : DataError(msg), offset(byte_offset) {}
  std::size_t offset = 0;
};

class TrainError : public std::runtime_error {
public:
  explicit TrainError(const std::string& msg) : std::runtime_error(msg) {}
};

class EvalError : public std::runtime_error {
public:
  explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gridwatch
