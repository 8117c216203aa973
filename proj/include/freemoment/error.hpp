#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace freemoment {

enum class ErrorCode {
  invalid_input,
  out_of_domain,
  degenerate_target,
  no_admissible_radius,
  one_cut_violated,
  not_converged,
  regime_violation,
  internal,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input: return "invalid_input";
    case ErrorCode::out_of_domain: return "out_of_domain";
    case ErrorCode::degenerate_target: return "degenerate_target";
    case ErrorCode::no_admissible_radius: return "no_admissible_radius";
    case ErrorCode::one_cut_violated: return "one_cut_violated";
    case ErrorCode::not_converged: return "not_converged";
    case ErrorCode::regime_violation: return "regime_violation";
    case ErrorCode::internal: return "internal";
  }
  return "internal";
}

/// Exception carrying a machine-readable code and the module that raised it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string module, const std::string& message)
      : std::runtime_error(message), code_(code), module_(std::move(module)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorCode code_;
  std::string module_;
};

}  // namespace freemoment
