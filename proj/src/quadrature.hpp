#pragma once

#include <array>

namespace oscdrift::detail {

/// 8-point Gauss-Legendre rule on [-1, 1].
inline constexpr std::array<double, 8> kGaussX = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
inline constexpr std::array<double, 8> kGaussW = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

template <class F>
double gauss8(F&& f, double lo, double hi) {
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  double sum = 0.0;
  for (int q = 0; q < 8; ++q) sum += kGaussW[q] * f(mid + half * kGaussX[q]);
  return sum * half;
}

/// Root of a monotone function g on [lo, hi] with g(lo) <= target <= g(hi)
/// (or reversed); plain bisection, `iters` halvings.
template <class G>
double bisect_level(G&& g, double target, double lo, double hi, bool increasing, int iters = 42) {
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    const bool below = increasing ? g(mid) < target : g(mid) > target;
    if (below) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace oscdrift::detail
