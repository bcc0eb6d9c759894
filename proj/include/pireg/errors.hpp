#pragma once

#include <stdexcept>
#include <string>

namespace pireg {

// An argument left the state/parameter domain of an operation.
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// An operation that is only defined for a single-member uncertainty set was
// called with several members.
struct AmbiguityError : std::logic_error {
  using std::logic_error::logic_error;
};

// An analysis refused to run because its preconditions do not hold.
struct RefusalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// bisect() was called on an interval whose endpoint values do not straddle zero.
struct BracketingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A certificate failed one of its own cross-checks; carries the offending
// value and the admissible interval.
struct CertificateError : std::runtime_error {
  CertificateError(const std::string& msg, double value_, double lo_, double hi_)
      : std::runtime_error(msg), value(value_), lo(lo_), hi(hi_) {}
  double value;
  double lo;
  double hi;
};

}  // namespace pireg
