#pragma once

#include <chrono>
#include <cstdint>

namespace ghho {

/// Peak resident set size of this process (VmHWM), 0 if unavailable.
std::uint64_t peak_memory_bytes();

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace ghho
