#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace hardmc {

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuadratureOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  int max_depth = 20;
  int min_depth = 4;
};

namespace detail {

template <typename F>
double simpson_step(F& f, double a, double fa, double b, double fb, double m,
                    double fm, double whole, double tol, int depth,
                    const QuadratureOptions& opt) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  const double floor_tol =
      64.0 * std::numeric_limits<double>::epsilon() * std::abs(left + right);
  if (depth >= opt.min_depth &&
      std::abs(delta) <= 15.0 * std::max(tol, floor_tol)) {
    return left + right + delta / 15.0;
  }
  if (depth >= opt.max_depth) {
    throw QuadratureError("adaptive Simpson did not converge on [" +
                          std::to_string(a) + ", " + std::to_string(b) +
                          "] after " + std::to_string(opt.max_depth) +
                          " refinement levels");
  }
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth + 1,
                      opt) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth + 1,
                      opt);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b].
/// Throws QuadratureError if any branch needs more than max_depth levels.
template <typename F>
double integrate(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
  if (a == b) return 0.0;
  if (b < a) return -integrate(f, b, a, opt);
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double tol = std::max(opt.abs_tol, opt.rel_tol * std::abs(whole));
  return detail::simpson_step(f, a, fa, b, fb, m, fm, whole, tol, 0, opt);
}

}  // namespace hardmc
