#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

namespace speclab {

/// 16-node Gauss-Legendre rule on one panel.
inline double gauss16(const std::function<double(double)>& f, double a, double b) {
  if (!(b > a)) return 0.0;
  return boost::math::quadrature::gauss<double, 16>::integrate(f, a, b);
}

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int panels = 0;
};

/// Gauss-Legendre (16 nodes/panel) on [breaks[i], breaks[i+1]], each panel
/// bisected until halves agree with the whole to `tolerance * width / total`.
/// Integrand discontinuities must sit on break points.
inline QuadratureResult panel_quadrature(const std::function<double(double)>& f,
                                         std::vector<double> breaks, double tolerance,
                                         int max_depth = 12) {
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  QuadratureResult out;
  if (breaks.size() < 2) return out;
  const double total = breaks.back() - breaks.front();

  std::function<void(double, double, double, int)> refine = [&](double a, double b, double whole, int depth) {
    const double mid = 0.5 * (a + b);
    const double left = gauss16(f, a, mid);
    const double right = gauss16(f, mid, b);
    const double err = std::abs(left + right - whole);
    if (err <= tolerance * (b - a) / total || depth >= max_depth) {
      out.value += left + right;
      out.error_estimate += err;
      out.panels += 2;
      return;
    }
    refine(a, mid, left, depth + 1);
    refine(mid, b, right, depth + 1);
  };

  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i];
    const double b = breaks[i + 1];
    if (!(b > a)) continue;
    refine(a, b, gauss16(f, a, b), 0);
  }
  return out;
}

}  // namespace speclab
