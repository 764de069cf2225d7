#ifndef OTPQKD_MINIMIZE_HPP
#define OTPQKD_MINIMIZE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace otpqkd {

struct ScalarMinimum {
  double arg = 0.0;
  double value = 0.0;
};

struct MinimizeOptions {
  double coarse_step = 1e-3;
  std::size_t min_coarse_intervals = 16;
  double width = 1e-9;
  int max_iterations = 200;
};

/// Golden-section search on [lo, hi] to an interval of `width`.
/// Assumes f is unimodal on the bracket.
template <typename F>
ScalarMinimum golden_section(F&& f, double lo, double hi, double width = 1e-9, int max_iterations = 200) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < max_iterations && (hi - lo) > width; ++i) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
  }
  const double x = 0.5 * (lo + hi);
  return {x, f(x)};
}

/// Global-ish minimum of a smooth objective on [lo, hi]: a coarse grid picks
/// the best cell, golden-section refines inside its two neighbouring cells.
/// Grid points and the refined point compete; the lowest value wins.
template <typename F>
ScalarMinimum minimize_on_interval(F&& f, double lo, double hi, const MinimizeOptions& opt = {}) {
  if (!(hi > lo)) return {lo, f(lo)};
  const auto intervals =
      std::max(opt.min_coarse_intervals, static_cast<std::size_t>(std::ceil((hi - lo) / opt.coarse_step)));
  const double step = (hi - lo) / static_cast<double>(intervals);
  ScalarMinimum best{lo, f(lo)};
  std::size_t best_index = 0;
  for (std::size_t i = 1; i <= intervals; ++i) {
    const double x = i == intervals ? hi : lo + step * static_cast<double>(i);
    const double v = f(x);
    if (v < best.value) {
      best = {x, v};
      best_index = i;
    }
  }
  const double a = best_index == 0 ? lo : lo + step * static_cast<double>(best_index - 1);
  const double b = best_index == intervals ? hi : lo + step * static_cast<double>(best_index + 1);
  const ScalarMinimum refined = golden_section(f, a, std::min(b, hi), opt.width, opt.max_iterations);
  return refined.value < best.value ? refined : best;
}

}  // namespace otpqkd

#endif
