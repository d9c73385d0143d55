#pragma once

#include <functional>
#include <vector>

namespace geocon {

/// Name of the environment variable that sets the worker count.
inline constexpr const char* kThreadCountEnv = "GEOCON_NUM_THREADS";

/// Current number of threads used by parallel_for (>= 1).
int thread_count();

/// Sets the number of threads. 0 restores the default: the value of
/// GEOCON_NUM_THREADS if set, otherwise the hardware concurrency.
void set_thread_count(int threads);

/// Runs body(i) for every i in [0, count). Each index runs exactly once; the
/// call returns after all of them finished. The first exception thrown by a
/// body is rethrown here. Calls made from inside a body run serially.
void parallel_for(int count, const std::function<void(int)>& body);

/// Sum of row_value(r) over rows, evaluated in parallel but reduced in row
/// order, so the result does not depend on the thread count.
template <typename F>
double ordered_row_sum(int rows, F&& row_value) {
  std::vector<double> partial(static_cast<std::size_t>(rows), 0.0);
  parallel_for(rows, [&](int r) { partial[static_cast<std::size_t>(r)] = row_value(r); });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace geocon
