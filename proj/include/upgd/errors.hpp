#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace upgd {

// Violated precondition on shapes, roles or argument structure.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Non-finite value produced during evaluation or differentiation.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, std::size_t node = npos)
      : std::runtime_error(what), node_(node) {}

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t node_;
};

// Target not reachable (e.g. rate constraint cannot be met).
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace upgd
