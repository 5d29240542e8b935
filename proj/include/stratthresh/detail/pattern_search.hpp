#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace stratthresh::detail {

struct PatternSearchResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluations = 0;
};

// Hooke-Jeeves: exploratory coordinate moves with a halving step, plus a
// pattern move along the last successful direction. Derivative free.
template <class Objective>
PatternSearchResult pattern_search(Objective&& f, std::vector<double> x0, double initial_step,
                                   double min_step = 1e-11, std::size_t max_evaluations = 200000) {
  PatternSearchResult out;
  auto eval = [&](const std::vector<double>& x) {
    ++out.evaluations;
    double v = f(x);
    return std::isfinite(v) ? v : HUGE_VAL;
  };

  auto explore = [&](std::vector<double> base, double base_value, double step) {
    for (std::size_t i = 0; i < base.size(); ++i) {
      const double orig = base[i];
      base[i] = orig + step;
      double v = eval(base);
      if (v < base_value) {
        base_value = v;
        continue;
      }
      base[i] = orig - step;
      v = eval(base);
      if (v < base_value) {
        base_value = v;
        continue;
      }
      base[i] = orig;
    }
    return std::pair{base, base_value};
  };

  std::vector<double> x = std::move(x0);
  double fx = eval(x);
  double step = initial_step;
  while (step > min_step && out.evaluations < max_evaluations) {
    auto [trial, ft] = explore(x, fx, step);
    if (ft < fx) {
      // Keep jumping along the improving direction while it pays off.
      while (out.evaluations < max_evaluations) {
        std::vector<double> pattern(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) pattern[i] = 2.0 * trial[i] - x[i];
        x = trial;
        fx = ft;
        auto [next, fn] = explore(pattern, eval(pattern), step);
        if (fn < fx) {
          trial = next;
          ft = fn;
        } else {
          break;
        }
      }
    } else {
      step *= 0.5;
    }
  }
  out.x = x;
  out.value = fx;
  return out;
}

}  // namespace stratthresh::detail
