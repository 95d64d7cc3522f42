#pragma once

// Left-invariant metrics on S^3 = SU(2), diagonal in a Milnor frame e_i
// with [e_i, e_j] = 2 eps_ijk e_k. With this structure-constant
// normalization the metric (1,1,1) is the unit round sphere: sectional
// curvature 1 and volume 2 pi^2.
//
// Curvature is computed by a direct Koszul evaluation on the frame; the
// closed forms are cross-checked against a finite-difference oracle in
// the tests.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "roundflow/legendre.hpp"
#include "roundflow/pinching.hpp"

namespace roundflow {

struct MilnorMetricS3 {
  double lambda1 = 1.0, lambda2 = 1.0, lambda3 = 1.0;

  MilnorMetricS3() = default;
  MilnorMetricS3(double l1, double l2, double l3)
      : lambda1(l1), lambda2(l2), lambda3(l3) {
    if (!(l1 > 0.0 && l2 > 0.0 && l3 > 0.0))
      throw std::invalid_argument("MilnorMetricS3: eigenvalues must be > 0");
  }
  double operator[](int i) const {
    return i == 0 ? lambda1 : (i == 1 ? lambda2 : lambda3);
  }
  bool round(double tol = 1e-12) const {
    return std::abs(lambda1 - lambda2) <= tol * lambda1 &&
           std::abs(lambda2 - lambda3) <= tol * lambda2;
  }
};

namespace detail {
// Levi-Civita connection on the frame: nabla_{e_i} e_j = G(i,j,k) e_k.
// Koszul with the bracket [e_i,e_j] = 2 eps_ijk e_k.
inline double milnor_gamma(const MilnorMetricS3& m, int i, int j, int k) {
  if (i == j || j == k || i == k) return 0.0;
  // permutation sign of (i,j,k) relative to (0,1,2)
  const int sgn = ((j - i + 3) % 3 == 1) ? 1 : -1;
  return sgn * (m[k] + m[j] - m[i]) / m[k];
}
}  // namespace detail

// Curvature operator on the frame bivectors: sectional curvature of the
// coordinate plane span(e_j, e_k), i.e. the plane with frame-normal e_i.
inline std::array<double, 3> milnor_plane_curvatures(const MilnorMetricS3& m) {
  using detail::milnor_gamma;
  std::array<double, 3> k{};
  for (int a = 0; a < 3; ++a) {
    const int i = (a + 1) % 3, j = (a + 2) % 3;
    // R(e_i,e_j)e_j = nabla_i nabla_j e_j - nabla_j nabla_i e_j
    //                 - nabla_{[e_i,e_j]} e_j; nabla_j e_j = 0.
    // nabla_i e_j = g_ij e_a with g_ij = milnor_gamma(m,i,j,a).
    const double g_ij = milnor_gamma(m, i, j, a);
    const double g_ja = milnor_gamma(m, j, a, i);
    const double g_aj = milnor_gamma(m, a, j, i);
    // [e_i, e_j] = 2 sgn e_a
    const int sgn = ((j - i + 3) % 3 == 1) ? 1 : -1;
    const double r_comp = -g_ij * g_ja - 2.0 * sgn * g_aj;  // coeff of e_i
    k[a] = r_comp / m[j];
  }
  return k;
}

// Ricci tensor components on the frame (diagonal) and scalar curvature.
inline std::array<double, 3> milnor_ricci(const MilnorMetricS3& m) {
  const std::array<double, 3> k = milnor_plane_curvatures(m);
  // Ric(e_i, e_i) = lambda_i * sum_{j != i} K(e_i, e_j); the coordinate
  // plane span(e_i, e_j) is the one with normal index a != i, j.
  std::array<double, 3> ric{};
  for (int i = 0; i < 3; ++i) {
    double s = 0.0;
    for (int j = 0; j < 3; ++j)
      if (j != i) s += k[3 - i - j];
    ric[i] = m[i] * s;
  }
  return ric;
}

inline double milnor_scalar(const MilnorMetricS3& m) {
  const std::array<double, 3> ric = milnor_ricci(m);
  return ric[0] / m.lambda1 + ric[1] / m.lambda2 + ric[2] / m.lambda3;
}

inline double total_volume(const MilnorMetricS3& m) {
  return 2.0 * kPi * kPi * std::sqrt(m.lambda1 * m.lambda2 * m.lambda3);
}

// Sectional curvature of the plane with unit frame-bivector normal n
// (components w.r.t. the *orthonormal* frame f_i = e_i / sqrt(lambda_i)).
// For diagonal Milnor metrics the curvature operator is diagonal on the
// frame bivectors, so K(n) = sum K_a n_a^2.
inline double milnor_sectional(const std::array<double, 3>& plane_k,
                               const Eigen::Vector3d& n) {
  return plane_k[0] * n.x() * n.x() + plane_k[1] * n.y() * n.y() +
         plane_k[2] * n.z() * n.z();
}

// Extremes over the three coordinate planes plus n_samples quasi-random
// 2-planes in the Grassmannian (golden-spiral normals).
inline PinchingReport sectional_extremes_milnor(const MilnorMetricS3& m,
                                                int n_samples,
                                                double epsilon = 1e-9) {
  if (n_samples < 1)
    throw std::invalid_argument("sectional_extremes_milnor: n_samples < 1");
  const std::array<double, 3> pk = milnor_plane_curvatures(m);
  PinchingReport r;
  r.k_min = std::min({pk[0], pk[1], pk[2]});
  r.k_max = std::max({pk[0], pk[1], pk[2]});
  const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
  for (int s = 0; s < n_samples; ++s) {
    const double z = 1.0 - 2.0 * (s + 0.5) / n_samples;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double ang = kTwoPi * s / golden;
    const Eigen::Vector3d n(rho * std::cos(ang), rho * std::sin(ang), z);
    const double k = milnor_sectional(pk, n);
    r.k_min = std::min(r.k_min, k);
    r.k_max = std::max(r.k_max, k);
  }
  r.sampling_planes = n_samples + 3;
  r.ratio = r.k_min > 0.0 ? r.k_max / r.k_min
                          : std::numeric_limits<double>::infinity();
  if (r.k_min <= 0.0) {
    r.verdict = PinchingVerdict::NotPinched;
  } else if (r.ratio < 4.0 - epsilon) {
    r.verdict = PinchingVerdict::StrictlyQuarterPinched;
  } else if (r.ratio > 4.0 + epsilon) {
    r.verdict = PinchingVerdict::NotPinched;
  } else {
    r.verdict = PinchingVerdict::Indeterminate;
  }
  return r;
}

}  // namespace roundflow
