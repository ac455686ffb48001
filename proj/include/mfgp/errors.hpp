#ifndef MFGP_ERRORS_HPP
#define MFGP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mfgp {

/// Bad input from the caller: mismatched dimensions, malformed configuration,
/// unknown names, out-of-range parameters. Maps to CLI exit code 1.
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

/// Numerical breakdown: factorization failure after the jitter ladder is
/// exhausted, non-finite intermediates. Maps to CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mfgp

#endif
