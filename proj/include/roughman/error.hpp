#pragma once

#include <stdexcept>
#include <string>

namespace roughman {

enum class ErrorKind {
  RankDeficient,
  DimMismatch,
  IndexOrder,
  BadHurst,
  NotSymmetric,
  BaseMismatch,
  ShapeMismatch,
  NonFinite,
  ChartDomain,
  ChartExit,
  OutOfDomain,
  LambdaMismatch,
  Mismatch,
  Precondition,
  Config,
  Io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::IndexOrder: return "IndexOrder";
    case ErrorKind::BadHurst: return "BadHurst";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::BaseMismatch: return "BaseMismatch";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::ChartDomain: return "ChartDomain";
    case ErrorKind::ChartExit: return "ChartExit";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::LambdaMismatch: return "LambdaMismatch";
    case ErrorKind::Mismatch: return "Mismatch";
    case ErrorKind::Precondition: return "Precondition";
    case ErrorKind::Config: return "Config";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a kind so callers can branch
/// on it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

/// Raised by the RDE solver when the state leaves the divergence bound.
class NonFiniteState : public Error {
 public:
  NonFiniteState(double time, const std::string& what)
      : Error(ErrorKind::NonFinite, what), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace roughman
