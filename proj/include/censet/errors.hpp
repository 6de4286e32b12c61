#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace censet {

enum class ErrorCode {
  Parse,
  Validation,
  Domain,
  Mode,
  Coverage,
  Degenerate,
  Structural,
  Infeasible,
  InsufficientData,
  Io,
  Usage,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised while reading line-delimited input; `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, std::size_t line, const std::string& message)
      : Error(code, "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace censet
