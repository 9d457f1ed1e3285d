#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace narrowlab {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A computation would exceed a memory or enumeration cap.
class ResourceError : public std::runtime_error {
 public:
  ResourceError(const std::string& what, std::uint64_t required = 0)
      : std::runtime_error(what), required_(required) {}

  /// Estimated requirement (bytes or items, depending on the raiser); 0 if unknown.
  std::uint64_t required() const noexcept { return required_; }

 private:
  std::uint64_t required_;
};

/// A numerical procedure could not reach its tolerance.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Request outside the supported numerical scope (e.g. sieve factors with m > 3).
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Corrupt or mismatched binary cache file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace narrowlab
