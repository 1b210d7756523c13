#pragma once

#include <stdexcept>
#include <string>

namespace btw {

// Input outside an operation's mathematical domain (CLI exit status 2).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Enumeration budget or memory cap exceeded (CLI exit status 3).
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Quadrature failed to converge or a realness assertion tripped.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace btw
