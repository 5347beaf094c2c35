#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace conflab {

// Machine-readable failure categories. The CLI maps each one to its own exit code.
enum class Reason {
  invalid_matrix,
  argument,
  unsupported,
  hypothesis_violation,
  internal_contradiction,
  domination_detected,
  drop_failure,
  continuation_failure,
  non_convergence,
  invalid_frame,
  budget,
  config,
  internal,
};

std::string_view reason_code(Reason r);
int exit_code(Reason r);

class Error : public std::runtime_error {
 public:
  Error(Reason reason, const std::string& what) : std::runtime_error(what), reason_(reason) {}
  Reason reason() const { return reason_; }
  std::string_view code() const { return reason_code(reason_); }

 private:
  Reason reason_;
};

[[noreturn]] inline void fail(Reason r, const std::string& msg) { throw Error(r, msg); }

inline void require(bool ok, Reason r, const std::string& msg) {
  if (!ok) fail(r, msg);
}

}  // namespace conflab
