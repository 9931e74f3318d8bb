#pragma once

#include <stdexcept>
#include <string>

namespace wdt {

// Numerical failures that callers may want to distinguish from bad input
// (std::invalid_argument is used for precondition violations).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonTermination : public Error {
 public:
  using Error::Error;
};

class StepFailure : public Error {
 public:
  using Error::Error;
};

class CurveNotMaximal : public Error {
 public:
  using Error::Error;
};

class ZeroWeight : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class TooLarge : public Error {
 public:
  using Error::Error;
};

class Degenerate : public Error {
 public:
  using Error::Error;
};

class NotMeasurePreserving : public Error {
 public:
  using Error::Error;
};

}  // namespace wdt
