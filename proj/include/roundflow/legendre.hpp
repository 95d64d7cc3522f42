#pragma once

// Fully normalized associated Legendre functions for real spherical
// harmonics, evaluated through the pole-regular scaled functions
//
//   A_lm(x) = Pbar_lm(x) / sin^m(theta),  x = cos(theta),
//
// which are polynomials in x. Carrying A and dA/dx through the standard
// three-term recurrence gives Pbar, dPbar/dtheta and m*Pbar/sin(theta)
// without any singularity at the poles.

#include <cassert>
#include <cmath>
#include <vector>

namespace roundflow {

inline constexpr double kFourPi = 4.0 * 3.14159265358979323846;
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

// Index into a flat (l,m) table, 0 <= m <= l <= L.
inline int plm_index(int l, int m) { return l * (l + 1) / 2 + m; }
inline int plm_count(int max_degree) {
  return (max_degree + 1) * (max_degree + 2) / 2;
}

struct LegendreTable {
  int max_degree = 0;
  std::vector<double> a;       // A_lm(x)
  std::vector<double> da_dx;   // dA_lm/dx
  double x = 0.0;              // cos(theta)
  double s = 0.0;              // sin(theta), >= 0

  double pbar(int l, int m) const {
    return a[plm_index(l, m)] * pow_s(m);
  }
  // d Pbar_lm / d theta
  double dpbar_dtheta(int l, int m) const {
    const int k = plm_index(l, m);
    double v = -pow_s(m + 1) * da_dx[k];
    if (m > 0) v += m * pow_s(m - 1) * x * a[k];
    return v;
  }
  // m * Pbar_lm / sin(theta), regular at the poles
  double m_pbar_over_s(int l, int m) const {
    if (m == 0) return 0.0;
    return m * pow_s(m - 1) * a[plm_index(l, m)];
  }

 private:
  double pow_s(int k) const {
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= s;
    return r;
  }
};

// Evaluate all A_lm, dA_lm/dx at x = cos(theta), reusing t's storage.
inline void legendre_table_into(LegendreTable& t, int max_degree,
                                double cos_theta, double sin_theta) {
  t.max_degree = max_degree;
  t.x = cos_theta;
  t.s = sin_theta;
  t.a.assign(plm_count(max_degree), 0.0);
  t.da_dx.assign(plm_count(max_degree), 0.0);
  const double x = cos_theta;

  t.a[plm_index(0, 0)] = 1.0 / std::sqrt(kFourPi);
  for (int m = 1; m <= max_degree; ++m) {
    t.a[plm_index(m, m)] =
        t.a[plm_index(m - 1, m - 1)] * std::sqrt((2.0 * m + 1.0) / (2.0 * m));
    // A_mm is constant in x, derivative stays zero.
  }
  for (int m = 0; m < max_degree; ++m) {
    const int k = plm_index(m + 1, m);
    const int kmm = plm_index(m, m);
    const double f = std::sqrt(2.0 * m + 3.0);
    t.a[k] = f * x * t.a[kmm];
    t.da_dx[k] = f * t.a[kmm];
  }
  for (int m = 0; m <= max_degree; ++m) {
    for (int l = m + 2; l <= max_degree; ++l) {
      const double alm = std::sqrt((4.0 * l * l - 1.0) /
                                   (double(l) * l - double(m) * m));
      const double blm = std::sqrt(
          ((double(l - 1) * (l - 1)) - double(m) * m) /
          (4.0 * double(l - 1) * (l - 1) - 1.0));
      const int k = plm_index(l, m);
      const int k1 = plm_index(l - 1, m);
      const int k2 = plm_index(l - 2, m);
      t.a[k] = alm * (x * t.a[k1] - blm * t.a[k2]);
      t.da_dx[k] = alm * (t.a[k1] + x * t.da_dx[k1] - blm * t.da_dx[k2]);
    }
  }
}

inline LegendreTable legendre_table(int max_degree, double cos_theta,
                                    double sin_theta) {
  LegendreTable t;
  legendre_table_into(t, max_degree, cos_theta, sin_theta);
  return t;
}

// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<double>& nodes,
                           std::vector<double>& weights) {
  assert(n >= 1);
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    // Tricomi-style initial guess.
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

}  // namespace roundflow
