#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace sphereflow {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

// Neumaier compensated summation over a fixed index order.  All reductions
// in the library go through this so that results are bit-identical across
// runs and independent of worker count.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(const std::vector<double>& xs) {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

// binomial(n, k) as double; exact for the small arguments used here.
inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 0; i < k; ++i) r = r * double(n - i) / double(i + 1);
  return r;
}

// xorshift64* sequence.  Documented generator for reproducible random
// initial data and test draws: identical seeds give identical streams on
// every platform.
class XorShift64Star {
 public:
  explicit XorShift64Star(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  std::uint64_t next_u64() {
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 2685821657736338717ULL;
  }

  // uniform in [0, 1)
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

 private:
  std::uint64_t state_;
};

namespace detail {
inline int& worker_count_ref() {
  static int n = 0;  // 0 = not set yet
  return n;
}
}  // namespace detail

// Global worker cap, set once by the CLI --threads flag.
inline void set_worker_count(int n) { detail::worker_count_ref() = n < 1 ? 1 : n; }

inline int worker_count() {
  int n = detail::worker_count_ref();
  if (n == 0) {
    unsigned hw = std::thread::hardware_concurrency();
    n = hw == 0 ? 1 : int(hw > 8 ? 8 : hw);
    detail::worker_count_ref() = n;
  }
  return n;
}

// Parallel loop over [0, count).  Each worker owns a contiguous index range
// and writes only its own nodes, so results do not depend on the worker
// count.  Reductions must stay outside.
template <class F>
void parallel_for(int count, F&& body) {
  const int workers = worker_count();
  if (workers <= 1 || count < 256) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  const int chunk = (count + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    const int lo = w * chunk;
    const int hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (int i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace sphereflow
