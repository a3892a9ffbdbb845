#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace qbbgky {

using Complex = std::complex<double>;

// Formats a double for diagnostics with scientific notation when small,
// unlike std::to_string which renders 1e-11 as "0.000000".
std::string format_value(double v);

// Number of flat entries of a rank-k tensor with M values per axis.
inline std::size_t tensor_size(int mode_count, int rank) {
  std::size_t s = 1;
  for (int i = 0; i < rank; ++i) s *= static_cast<std::size_t>(mode_count);
  return s;
}

// Row-major flattening of a mode tuple.
inline std::size_t flat_index(const int* modes, int rank, int mode_count) {
  std::size_t idx = 0;
  for (int i = 0; i < rank; ++i)
    idx = idx * static_cast<std::size_t>(mode_count) + static_cast<std::size_t>(modes[i]);
  return idx;
}

inline void unflatten_index(std::size_t idx, int rank, int mode_count, int* modes) {
  for (int i = rank - 1; i >= 0; --i) {
    modes[i] = static_cast<int>(idx % static_cast<std::size_t>(mode_count));
    idx /= static_cast<std::size_t>(mode_count);
  }
}

// Odometer step over [0, mode_count)^rank; returns false after the last tuple.
inline bool next_tuple(int* modes, int rank, int mode_count) {
  for (int i = rank - 1; i >= 0; --i) {
    if (++modes[i] < mode_count) return true;
    modes[i] = 0;
  }
  return false;
}

int thread_budget();

// Runs fn(begin, end) over disjoint chunks of [0, n) on the thread budget.
// Falls back to a single inline call when n is small or the budget is 1.
void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace qbbgky
