#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "pmtlink/errors.hpp"

namespace pmtlink {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int segments = 0;
  bool converged = false;
};

namespace detail {

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1].
inline constexpr double kKronrodX[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0};
inline constexpr double kKronrodW[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
inline constexpr double kGaussW[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

template <class F>
void gk15(F&& f, double a, double b, double& value, double& error) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double fc = f(c);
  double kron = kKronrodW[7] * fc;
  double gauss = kGaussW[3] * fc;
  for (int i = 0; i < 7; ++i) {
    double x = h * kKronrodX[i];
    double fs = f(c - x) + f(c + x);
    kron += kKronrodW[i] * fs;
    if (i % 2 == 1) gauss += kGaussW[i / 2] * fs;
  }
  value = kron * h;
  error = std::abs((kron - gauss) * h);
}

}  // namespace detail

// Adaptive bisection driven by the Gauss-Kronrod error estimate.
// Pure function of (f, limits, tolerance); no global state.
template <class F>
QuadratureResult integrate_adaptive(F&& f, double lo, double hi,
                                    double abs_tol, int max_segments = 4096) {
  struct Segment {
    double a, b, value, error;
  };
  std::vector<Segment> segs;
  segs.reserve(64);
  Segment s{lo, hi, 0.0, 0.0};
  detail::gk15(f, lo, hi, s.value, s.error);
  segs.push_back(s);
  double total_err = s.error;
  while (total_err > abs_tol && int(segs.size()) < max_segments) {
    std::size_t worst = 0;
    for (std::size_t i = 1; i < segs.size(); ++i)
      if (segs[i].error > segs[worst].error) worst = i;
    Segment cur = segs[worst];
    double mid = 0.5 * (cur.a + cur.b);
    if (mid <= cur.a || mid >= cur.b) break;  // interval exhausted in doubles
    Segment left{cur.a, mid, 0.0, 0.0}, right{mid, cur.b, 0.0, 0.0};
    detail::gk15(f, left.a, left.b, left.value, left.error);
    detail::gk15(f, right.a, right.b, right.value, right.error);
    segs[worst] = left;
    segs.push_back(right);
    total_err += left.error + right.error - cur.error;
  }
  QuadratureResult out;
  // Sum smallest magnitudes first to limit cancellation.
  std::sort(segs.begin(), segs.end(), [](const Segment& x, const Segment& y) {
    return std::abs(x.value) < std::abs(y.value);
  });
  for (const auto& g : segs) out.value += g.value;
  out.error_estimate = total_err;
  out.segments = int(segs.size());
  out.converged = total_err <= abs_tol;
  return out;
}

template <class F>
double integrate_or_throw(F&& f, double lo, double hi, double abs_tol,
                          int max_segments = 4096) {
  auto r = integrate_adaptive(f, lo, hi, abs_tol, max_segments);
  if (!r.converged)
    throw NumericError("quadrature did not converge: error estimate " +
                       std::to_string(r.error_estimate) + " > tol " +
                       std::to_string(abs_tol) + " after " +
                       std::to_string(r.segments) + " segments");
  return r.value;
}

}  // namespace pmtlink
