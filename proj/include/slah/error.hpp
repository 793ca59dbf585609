#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace slah {

enum class ErrorCategory {
  InvalidArgument,
  TooFewSamples,
  DegenerateX,
  ZeroMaxCoupling,
  ZeroRow,
  EmptyFeasible,
  Config,
  Io,
};

inline std::string_view category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::InvalidArgument: return "invalid_argument";
    case ErrorCategory::TooFewSamples: return "too_few_samples";
    case ErrorCategory::DegenerateX: return "degenerate_x";
    case ErrorCategory::ZeroMaxCoupling: return "zero_max_coupling";
    case ErrorCategory::ZeroRow: return "zero_row";
    case ErrorCategory::EmptyFeasible: return "empty_feasible";
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable category.
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace slah
