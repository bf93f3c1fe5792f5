#pragma once

#include <stdexcept>
#include <string>

namespace bamc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Matrix rows fail nonnegativity or do not sum to one within tolerance.
class NotStochastic : public Error {
 public:
  using Error::Error;
};

// Chain is reducible or periodic and strict validation was requested.
class NotErgodic : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

// Some chain has zero total Gini index, so no allocation target exists.
class DegenerateInstance : public Error {
 public:
  using Error::Error;
};

class NoSamples : public Error {
 public:
  using Error::Error;
};

class NotSampled : public Error {
 public:
  using Error::Error;
};

class BudgetTooSmall : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class GenerationFailed : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace bamc
