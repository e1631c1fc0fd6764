#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bosecone {

inline constexpr const char* kVersion = "0.1.0";

/// Thrown when inputs violate a documented precondition (bad config, malformed
/// region, inconsistent marginals, ...).  Maps to process exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when a numerical guarantee is lost (norm drift, solver breakdown,
/// non-convergent quadrature).  Maps to process exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Exact binomial coefficient in unsigned 64-bit arithmetic.  Throws on
/// overflow instead of wrapping; callers that need larger values use the
/// big-integer routines in kac.hpp.
std::uint64_t binomial(int n, int k);

/// Floor of sqrt(v) computed without floating point.
std::uint64_t isqrt(std::uint64_t v);

}  // namespace bosecone
