#include "ebridge/stats.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "ebridge/error.hpp"

namespace ebridge {

double mean(const std::vector<double>& xs) {
  if (xs.empty()) fail(ErrorCode::invalid_input, "mean of empty sample");
  KahanSum sum;
  for (double x : xs) sum.add(x);
  return sum.value() / static_cast<double>(xs.size());
}

double standard_error(const std::vector<double>& xs) {
  const size_t n = xs.size();
  if (n < 2) return 0.0;
  const double mu = mean(xs);
  KahanSum sq;
  for (double x : xs) sq.add((x - mu) * (x - mu));
  return std::sqrt(sq.value() / (static_cast<double>(n - 1) * static_cast<double>(n)));
}

double quantile(std::vector<double> xs, double p) {
  if (xs.empty()) fail(ErrorCode::invalid_input, "quantile of empty sample");
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::invalid_input, "quantile: p must be in [0,1]");
  std::sort(xs.begin(), xs.end());
  const double pos = p * static_cast<double>(xs.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  if (lo + 1 >= xs.size()) return xs.back();
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] * (1.0 - frac) + xs[lo + 1] * frac;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, std::min(n, 64));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int lo = w * chunk;
    const int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (int i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace ebridge
