#pragma once

#include <stdexcept>
#include <string>

namespace snnlab {

enum class ErrorCode {
  InvalidArgument = 1,
  ShapeMismatch = 2,
  Geometry = 3,
  Io = 4,
  Parse = 5,
  Numeric = 6,
  Infeasible = 7,
  Unknown = 99,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& w) : Error(ErrorCode::ShapeMismatch, w) {}
};

struct GeometryError : Error {
  explicit GeometryError(const std::string& w) : Error(ErrorCode::Geometry, w) {}
};

struct InvalidArgumentError : Error {
  explicit InvalidArgumentError(const std::string& w) : Error(ErrorCode::InvalidArgument, w) {}
};

struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorCode::Io, w) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& w) : Error(ErrorCode::Parse, w) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error(ErrorCode::Numeric, w) {}
};

struct InfeasibleError : Error {
  explicit InfeasibleError(const std::string& w) : Error(ErrorCode::Infeasible, w) {}
};

}  // namespace snnlab
