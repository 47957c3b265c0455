#pragma once

#include <stdexcept>
#include <string>

namespace rswarm {

/// Argument outside the mathematical domain of an operation (singular kernel,
/// coincident atoms, non-positive dilation factor, ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Two particles came closer than the kernel's minimum radius during a run.
class CollisionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace rswarm
