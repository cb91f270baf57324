#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gazequiz {

enum class ErrorCode {
  NotFound,
  DegenerateGeometry,
  DegenerateConfiguration,
  InsufficientData,
  PointAtInfinity,
  InvalidIntrinsics,
  ParseError,
  DictionaryExhausted,
  ConfigError,
  ProtocolViolation,
  ReplayError,
  DriverTimeout,
  StorageError,
  ValidationError,
  EmptyExport,
  InsufficientParticipants,
  DegenerateInput,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. Every failure the library reports carries one of
/// the codes above so callers (the server, the CLI) can map it without
/// string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by load_dictionary and the text-format readers; line is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Illegal (phase, input) pair. Non-fatal: the session is left untouched.
class ProtocolViolation : public Error {
 public:
  ProtocolViolation(std::string actor, std::string phase, std::string input, const std::string& why)
      : Error(ErrorCode::ProtocolViolation,
              "actor '" + actor + "' sent '" + input + "' in phase " + phase + ": " + why),
        actor_(std::move(actor)), phase_(std::move(phase)), input_(std::move(input)) {}

  const std::string& actor() const noexcept { return actor_; }
  const std::string& phase() const noexcept { return phase_; }
  const std::string& input() const noexcept { return input_; }

 private:
  std::string actor_;
  std::string phase_;
  std::string input_;
};

class ReplayError : public Error {
 public:
  ReplayError(std::size_t index, const std::string& message)
      : Error(ErrorCode::ReplayError, "event " + std::to_string(index) + ": " + message), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

}  // namespace gazequiz
