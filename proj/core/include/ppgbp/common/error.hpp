#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ppgbp {

/// Error categories. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
  configuration = 1,
  data_format = 2,
  divergence = 3,
  io = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Invalid parameters, unknown names, violated preconditions on user input.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::configuration, what) {}
};

/// Malformed file contents. Carries the byte offset where decoding failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(ErrorKind::data_format, what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Shape or topology mismatch between tensors, layers, heads and schemes.
/// Reported with the data-format exit code.
class StructuralError : public Error {
 public:
  explicit StructuralError(const std::string& what) : Error(ErrorKind::data_format, what) {}
};

/// A signal or sample set that cannot be processed (too short, too few samples, ...).
class RejectionError : public Error {
 public:
  explicit RejectionError(const std::string& what) : Error(ErrorKind::configuration, what) {}
};

class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& what) : Error(ErrorKind::divergence, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

}  // namespace ppgbp
