#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <thread>
#include <vector>

#include "cpmp/errors.hpp"

namespace cpmp {

// Worker cap: CONTACT_PMP_THREADS when set (clamped to [1, 256]), otherwise
// the hardware concurrency.
inline int thread_budget() {
  if (const char* env = std::getenv("CONTACT_PMP_THREADS")) {
    const int v = std::atoi(env);
    return v >= 1 ? std::min(v, 256) : 1;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(std::min(hc, 64u));
}

// Smallest index attaining the minimum of key over [0, count).  Workers scan
// contiguous chunks and the chunk results are folded in index order with a
// strict comparison, so the answer never depends on the worker count.
inline std::size_t parallel_argmin(std::size_t count,
                                   const std::function<double(std::size_t)>& key) {
  if (count == 0) throw InvalidInput("argmin over an empty index range");
  const auto workers =
      std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(thread_budget()),
                                                     count));
  std::vector<double> best_key(workers, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> best_idx(workers, count);
  std::vector<std::exception_ptr> errors(workers);
  auto scan = [&](std::size_t w, std::size_t lo, std::size_t hi) {
    try {
      for (std::size_t i = lo; i < hi; ++i) {
        const double v = key(i);
        if (v < best_key[w]) {
          best_key[w] = v;
          best_idx[w] = i;
        }
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  const std::size_t chunk = (count + workers - 1) / workers;
  if (workers == 1) {
    scan(0, 0, count);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back(scan, w, w * chunk, std::min(count, (w + 1) * chunk));
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::size_t arg = count;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t w = 0; w < workers; ++w) {
    if (best_idx[w] < count && best_key[w] < best) {
      best = best_key[w];
      arg = best_idx[w];
    }
  }
  if (arg == count) throw EvaluationFailure("argmin objective was non-finite everywhere");
  return arg;
}

}  // namespace cpmp
