#pragma once

// Gauss-Legendre x equiangular product grid on S^2. Quadrature is exact
// for spherical polynomials of degree <= 2L, which makes analysis of a
// band-limited field exact.

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "roundflow/legendre.hpp"

namespace roundflow {

using Vec3 = Eigen::Vector3d;

inline Vec3 sph_to_cart(double theta, double phi) {
  const double s = std::sin(theta);
  return Vec3(s * std::cos(phi), s * std::sin(phi), std::cos(theta));
}

class SphereGrid {
 public:
  explicit SphereGrid(int degree)
      // Even n_phi keeps the node set antipodally symmetric, so aliasing of
      // non-bandlimited integrands cannot leak across parity classes.
      : degree_(degree), n_theta_(degree + 1), n_phi_(2 * degree + 2) {
    if (degree < 1) throw std::invalid_argument("SphereGrid: degree < 1");
    std::vector<double> x, w;
    gauss_legendre(n_theta_, x, w);
    cos_theta_ = x;
    gl_weight_ = w;
    theta_.resize(n_theta_);
    sin_theta_.resize(n_theta_);
    for (int i = 0; i < n_theta_; ++i) {
      theta_[i] = std::acos(x[i]);
      sin_theta_[i] = std::sqrt(std::max(0.0, 1.0 - x[i] * x[i]));
    }
    phi_.resize(n_phi_);
    for (int j = 0; j < n_phi_; ++j) phi_[j] = kTwoPi * j / n_phi_;

    plm_.reserve(n_theta_);
    for (int i = 0; i < n_theta_; ++i)
      plm_.push_back(legendre_table(degree_, cos_theta_[i], sin_theta_[i]));

    cos_m_.assign(n_phi_, std::vector<double>(degree_ + 1));
    sin_m_.assign(n_phi_, std::vector<double>(degree_ + 1));
    for (int j = 0; j < n_phi_; ++j)
      for (int m = 0; m <= degree_; ++m) {
        cos_m_[j][m] = std::cos(m * phi_[j]);
        sin_m_[j][m] = std::sin(m * phi_[j]);
      }
  }

  int degree() const { return degree_; }
  int n_theta() const { return n_theta_; }
  int n_phi() const { return n_phi_; }
  int n_nodes() const { return n_theta_ * n_phi_; }
  int node_index(int i_theta, int j_phi) const {
    return i_theta * n_phi_ + j_phi;
  }
  double theta(int i) const { return theta_[i]; }
  double phi(int j) const { return phi_[j]; }
  double cos_theta(int i) const { return cos_theta_[i]; }
  double sin_theta(int i) const { return sin_theta_[i]; }
  // Quadrature weight of node (i, j); weights sum to 4*pi.
  double weight(int i) const { return gl_weight_[i] * kTwoPi / n_phi_; }
  Vec3 node(int i, int j) const { return sph_to_cart(theta_[i], phi_[j]); }
  Vec3 node(int k) const { return node(k / n_phi_, k % n_phi_); }
  const LegendreTable& plm(int i) const { return plm_[i]; }
  double cos_m(int j, int m) const { return cos_m_[j][m]; }
  double sin_m(int j, int m) const { return sin_m_[j][m]; }

  double integrate(const std::vector<double>& values) const {
    double sum = 0.0;
    for (int i = 0; i < n_theta_; ++i) {
      double row = 0.0;
      for (int j = 0; j < n_phi_; ++j) row += values[node_index(i, j)];
      sum += row * weight(i);
    }
    return sum;
  }

 private:
  int degree_, n_theta_, n_phi_;
  std::vector<double> theta_, phi_, cos_theta_, sin_theta_, gl_weight_;
  std::vector<LegendreTable> plm_;
  std::vector<std::vector<double>> cos_m_, sin_m_;
};

// Grids are immutable and expensive to build; share them by degree.
inline std::shared_ptr<const SphereGrid> shared_grid(int degree) {
  static std::vector<std::shared_ptr<const SphereGrid>> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  if (int(cache.size()) <= degree) cache.resize(degree + 1);
  if (!cache[degree]) cache[degree] = std::make_shared<SphereGrid>(degree);
  return cache[degree];
}

}  // namespace roundflow
