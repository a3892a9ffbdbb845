#include "qbbgky/util.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>
#include <string>

namespace qbbgky {

std::string format_value(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

int thread_budget() {
  if (const char* env = std::getenv("QBBGKY_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
  int budget = thread_budget();
  if (n == 0) return;
  std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(budget), n);
  // Small batches run inline: thread spawn overhead dwarfs the work.
  if (workers <= 1 || n < 256) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t begin = w * chunk;
    std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(fn, begin, end);
  }
  for (auto& t : pool) t.join();
}

}  // namespace qbbgky
