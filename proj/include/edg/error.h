#pragma once

#include <stdexcept>
#include <string>

namespace edg {

enum class ErrorKind {
  domain,
  zero_rate,
  divergent,
  supercritical,
  inconclusive,
  non_convergent,
  boundary_state,
  step_underflow,
  not_integrable,
  rho_c_unavailable,
  insufficient_samples,
  config,
};

const char* to_string(ErrorKind kind);

// Every failure the library reports carries a kind so callers (the CLI in
// particular) can map it onto an exit code without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace edg
