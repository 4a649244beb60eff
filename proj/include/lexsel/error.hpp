#pragma once

#include <stdexcept>
#include <string>

namespace lexsel {

/// Broad classes of domain failure. The CLI maps every kind to exit code 1;
/// `usage` is reserved for argument validation that surfaces as exit code 2.
enum class ErrorKind {
  io,
  format,
  precondition,
  mismatch,
  transport,
  generation,
  usage,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::format: return "format";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::mismatch: return "mismatch";
    case ErrorKind::transport: return "transport";
    case ErrorKind::generation: return "generation";
    case ErrorKind::usage: return "usage";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when two parallel inputs disagree on a count (lines, blocks, tokens).
class CountMismatchError : public Error {
 public:
  CountMismatchError(const std::string& what, std::size_t expected, std::size_t actual)
      : Error(ErrorKind::mismatch,
              what + " count mismatch: " + std::to_string(expected) + " vs " +
                  std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  std::size_t expected() const noexcept { return expected_; }
  std::size_t actual() const noexcept { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

class TransportError : public Error {
 public:
  explicit TransportError(const std::string& message)
      : Error(ErrorKind::transport, message) {}
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorKind::precondition, message);
}

}  // namespace lexsel
