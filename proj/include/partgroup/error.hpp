#pragma once

#include <stdexcept>
#include <string>

namespace partgroup {

/// Failure categories surfaced to callers and mapped to CLI exit codes.
enum class ErrorKind {
  validation,  // semantic violation (bad value, dimension mismatch, bad config)
  format,      // malformed byte stream: bad magic, header, or truncation
  capacity,    // value does not fit the serialized representation
  io,          // filesystem failure
  generation,  // synthetic scene generation could not satisfy its constraints
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_validation(const std::string& msg) {
  throw Error(ErrorKind::validation, msg);
}
[[noreturn]] inline void throw_format(const std::string& msg) {
  throw Error(ErrorKind::format, msg);
}
[[noreturn]] inline void throw_capacity(const std::string& msg) {
  throw Error(ErrorKind::capacity, msg);
}
[[noreturn]] inline void throw_io(const std::string& msg) {
  throw Error(ErrorKind::io, msg);
}
[[noreturn]] inline void throw_generation(const std::string& msg) {
  throw Error(ErrorKind::generation, msg);
}

}  // namespace partgroup
