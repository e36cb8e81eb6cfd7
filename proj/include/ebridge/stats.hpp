#pragma once

#include <functional>
#include <vector>

namespace ebridge {

// Compensated accumulator; aggregation results must not depend on how work was
// chunked across threads, so reductions happen single-threaded through this.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

double mean(const std::vector<double>& xs);
// Standard error of the mean (unbiased variance / n, then sqrt).
double standard_error(const std::vector<double>& xs);
// Linear-interpolation quantile on a copy of xs; p in [0,1].
double quantile(std::vector<double> xs, double p);

// Runs fn(0..n-1) on up to `threads` workers (0 = hardware concurrency) in
// contiguous blocks; rethrows the first exception. Callers write results into
// per-index slots so the outcome is independent of the thread count.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace ebridge
