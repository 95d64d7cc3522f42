#pragma once

// Seeded generation of antipodally even, strictly pinched conformal
// factors, for experiment drivers and stress tests.

#include <random>

#include "roundflow/conformal_metric.hpp"

namespace roundflow {

// Even-l Gaussian coefficients with an l^{-2} taper, rescaled so the grid
// sup norm of u equals `amplitude`, then shrunk until strictly pinched.
inline ConformalMetricS2 random_even_pinched(const SphereGrid& grid,
                                             std::mt19937& rng,
                                             double amplitude = 0.1) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  HarmonicField u(grid.degree());
  for (int l = 2; l <= grid.degree(); l += 2)
    for (int m = -l; m <= l; ++m) u.at(l, m) = gauss(rng) / double(l * l);
  double sup = 0.0;
  for (double v : synthesis(grid, u)) sup = std::max(sup, std::abs(v));
  u *= amplitude / sup;
  for (int shrink = 0; shrink < 60; ++shrink) {
    const ConformalMetricS2 m(u, true);
    if (pinching_report_s2(grid, m).verdict ==
        PinchingVerdict::StrictlyQuarterPinched)
      return m;
    u *= 0.8;
  }
  throw std::runtime_error("random_even_pinched: could not reach pinching");
}

}  // namespace roundflow
