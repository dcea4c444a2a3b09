#pragma once

#include <stdexcept>
#include <string>

namespace spectra {

enum class ErrorKind {
  InvalidInput,
  Parse,
  Io,
  GridMismatch,
  Degenerate,
  Geometry,
  Resolution,
  OutsideCone,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid input";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Io: return "i/o error";
    case ErrorKind::GridMismatch: return "grid mismatch";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Geometry: return "geometry precondition";
    case ErrorKind::Resolution: return "resolution exceeded";
    case ErrorKind::OutsideCone: return "outside color cone";
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

}  // namespace spectra
