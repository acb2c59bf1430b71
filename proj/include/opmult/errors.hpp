#pragma once

#include <stdexcept>
#include <string>

namespace opmult {

enum class ErrorKind {
  NonHermitian,
  NonSquare,
  DimensionMismatch,
  NotProjection,
  BlockOutOfRange,
  NonFinite,
  InvalidArgument,
  SolverFailed,
  ParseError,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonHermitian: return "NonHermitian";
    case ErrorKind::NonSquare: return "NonSquare";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotProjection: return "NotProjection";
    case ErrorKind::BlockOutOfRange: return "BlockOutOfRange";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::SolverFailed: return "SolverFailed";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

}  // namespace opmult
