#pragma once

#include <stdexcept>
#include <string>

namespace ghho {

/// Raised when a caller breaks a documented precondition (dimension mismatch,
/// empty input, out-of-range parameter).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised by Otsu thresholding when the histogram has a single occupied bin.
class DegenerateHistogram : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or unreadable input data (files, labels, model containers).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& what) {
  if (!condition) throw ContractViolation(what);
}

}  // namespace ghho
