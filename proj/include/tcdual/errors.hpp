#pragma once

#include <stdexcept>
#include <string>

namespace tcdual {

/// A caller-supplied argument violates an operation's precondition.
class PreconditionError : public std::invalid_argument {
 public:
  explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

/// A computed object broke a structural invariant (concavity, monotonicity,
/// band membership). Indicates a numerical or logic defect, never bad input.
class InvariantError : public std::logic_error {
 public:
  explicit InvariantError(const std::string& what) : std::logic_error(what) {}
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw PreconditionError(msg);
}

inline void ensure(bool ok, const std::string& msg) {
  if (!ok) throw InvariantError(msg);
}

}  // namespace detail
}  // namespace tcdual
