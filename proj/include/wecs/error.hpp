#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wecs {

// Coarse failure classes. The CLI prints the category name as the first token
// of its single-line error message so scripts can branch on it.
enum class ErrorCategory {
  invalid_argument,
  dimension_mismatch,
  non_finite,
  infeasible_level,
  degenerate,
  format,
  io,
};

inline std::string_view category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::invalid_argument: return "invalid_argument";
    case ErrorCategory::dimension_mismatch: return "dimension_mismatch";
    case ErrorCategory::non_finite: return "non_finite";
    case ErrorCategory::infeasible_level: return "infeasible_level";
    case ErrorCategory::degenerate: return "degenerate";
    case ErrorCategory::format: return "format";
    case ErrorCategory::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& what) {
  throw Error(category, what);
}

}  // namespace wecs
