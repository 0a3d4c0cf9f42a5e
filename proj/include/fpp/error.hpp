#pragma once

#include <stdexcept>
#include <string>

namespace fpp {

enum class ErrorKind {
  Shape,
  Config,
  Io,
  Format,
  Numerical,
  Domain,
  State,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
    case ErrorKind::Format: return "format";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::State: return "state";
  }
  return "unknown";
}

/// Base exception for every library failure. `kind()` lets callers (the CLI in
/// particular) map failures onto exit codes without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Shape mismatch that names the offending axis (-1 when not axis specific).
class ShapeError : public Error {
 public:
  ShapeError(const std::string& op, int axis, const std::string& detail)
      : Error(ErrorKind::Shape, op + (axis >= 0 ? " axis " + std::to_string(axis) : std::string()) +
                                    ": " + detail),
        axis_(axis) {}

  int axis() const noexcept { return axis_; }

 private:
  int axis_;
};

}  // namespace fpp
