#pragma once

#include <stdexcept>
#include <string>

namespace dbpark {

enum class ErrorCode {
  kDomain,
  kDegenerateOrigin,
  kGuardTripped,
  kMismatchedLaw,
  kParse,
  kInvalidArgument,
  kIo,
};

/// Base for every error raised by the library. The code survives the trip
/// through the C API.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what)
      : Error(ErrorCode::kDomain, what) {}
};

class DegenerateOrigin : public Error {
 public:
  explicit DegenerateOrigin(const std::string& what)
      : Error(ErrorCode::kDegenerateOrigin, what) {}
};

class MismatchedLaw : public Error {
 public:
  explicit MismatchedLaw(const std::string& what)
      : Error(ErrorCode::kMismatchedLaw, what) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what)
      : Error(ErrorCode::kParse, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::kIo, what) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorCode::kInvalidArgument, what) {}
};

}  // namespace dbpark
