#pragma once

#include <stdexcept>
#include <string>

namespace kac {

/// Raised when a caller breaks a documented precondition (wrong order,
/// repeated index, dimension mismatch, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid run configuration. `where` is a JSON-pointer style path and,
/// when known, the 1-based line in the configuration text.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg, std::string where = {}, int line = 0)
      : std::runtime_error(msg), where_(std::move(where)), line_(line) {}

  const std::string& where() const noexcept { return where_; }
  int line() const noexcept { return line_; }

 private:
  std::string where_;
  int line_ = 0;
};

/// A numerical diagnostic tripped (mass drift, unstable horizon, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const char* what) {
  if (!ok) throw ContractViolation(what);
}
inline void require(bool ok, const std::string& what) {
  if (!ok) throw ContractViolation(what);
}

}  // namespace kac
