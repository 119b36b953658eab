#pragma once

#include <stdexcept>
#include <string>

namespace mmw {

// Precondition violation on a public operation (bad power, bad index, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Runtime failure outside the caller's control (I/O, broken invariant mid-run).
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

}  // namespace mmw
