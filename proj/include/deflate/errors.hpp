#pragma once

#include <stdexcept>
#include <string>

namespace deflate {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments: dimension mismatches, unknown names, malformed ranges.
class UsageError : public Error {
 public:
  using Error::Error;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

class Ilu0Breakdown : public Error {
 public:
  using Error::Error;
};

/// Raised when a deflation factor is evaluated exactly at a deflated root.
class AtDeflatedRoot : public Error {
 public:
  using Error::Error;
};

/// The Sherman-Morrison denominator 1 + d^T A^{-1} F vanished.
class ShermanMorrisonBreakdown : public Error {
 public:
  using Error::Error;
};

}  // namespace deflate
