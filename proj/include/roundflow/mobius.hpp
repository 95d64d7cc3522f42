#pragma once

// Conformal diffeomorphisms of S^2 as 2x2 complex matrices acting on
// spinor (homogeneous) coordinates, with an optional conjugation flag for
// the antiholomorphic (orientation-reversing) half. Covers O(3) and all
// Moebius maps; pullbacks of the round metric stay conformal, with the
// log-factor available in closed form.
//
// Point <-> spinor correspondence: p = (psi^dagger sigma psi) / |psi|^2
// with the Pauli matrices, so SU(2) acts by rotations and the antipodal
// map is psi -> (-conj(psi_2), conj(psi_1)).

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "roundflow/conformal_metric.hpp"
#include "roundflow/harmonic_field.hpp"
#include "roundflow/sphere_grid.hpp"

namespace roundflow {

using Mat2c = Eigen::Matrix2cd;
using Vec2c = Eigen::Vector2cd;
using Cplx = std::complex<double>;

inline Vec2c point_to_spinor(const Vec3& p) {
  // Two charts for conditioning near the poles; same projective point.
  if (p.z() <= 0.0) return Vec2c(Cplx(p.x(), -p.y()), Cplx(1.0 - p.z(), 0.0));
  return Vec2c(Cplx(1.0 + p.z(), 0.0), Cplx(p.x(), p.y()));
}

inline Vec3 spinor_to_point(const Vec2c& psi) {
  const double n2 = std::norm(psi(0)) + std::norm(psi(1));
  const Cplx cross = std::conj(psi(0)) * psi(1);
  return Vec3(2.0 * cross.real() / n2, 2.0 * cross.imag() / n2,
              (std::norm(psi(0)) - std::norm(psi(1))) / n2);
}

class MoebiusMap {
 public:
  MoebiusMap() : a_(Mat2c::Identity()), conj_(false) {}
  MoebiusMap(const Mat2c& a, bool conjugate_first = false)
      : a_(a), conj_(conjugate_first) {
    const double d = std::abs(a_.determinant());
    if (!(d > 0.0) || !std::isfinite(d))
      throw std::invalid_argument("MoebiusMap: singular matrix");
    a_ /= std::sqrt(d);  // |det| = 1
  }

  static MoebiusMap identity() { return MoebiusMap(); }

  // Rotation by angle about a unit axis (right-handed).
  static MoebiusMap rotation(const Vec3& axis, double angle) {
    const Vec3 k = axis.normalized();
    const double c = std::cos(angle / 2.0), s = std::sin(angle / 2.0);
    Mat2c u;
    u << Cplx(c, -s * k.z()), Cplx(-s * k.y(), -s * k.x()),
        Cplx(s * k.y(), -s * k.x()), Cplx(c, s * k.z());
    return MoebiusMap(u);
  }

  // Pure conformal dilation toward direction n = w/|w| with rapidity |w|;
  // pullback log-factor is -log(cosh|w| - sinh|w| <x, n>).
  static MoebiusMap boost(const Vec3& w) {
    const double s = w.norm();
    if (s < 1e-300) return MoebiusMap();
    const Vec3 n = w / s;
    Mat2c d = Mat2c::Zero();
    d(0, 0) = std::exp(s / 2.0);
    d(1, 1) = std::exp(-s / 2.0);
    // Rotation taking the south pole (spinor (0,1)) to n.
    const Vec3 south(0.0, 0.0, -1.0);
    Vec3 axis = south.cross(n);
    MoebiusMap u;
    if (axis.norm() < 1e-14) {
      u = (n.z() < 0.0) ? MoebiusMap()
                        : rotation(Vec3(1, 0, 0), kPi);
    } else {
      u = rotation(axis, std::acos(std::clamp(south.dot(n), -1.0, 1.0)));
    }
    return u * MoebiusMap(d) * u.inverse();
  }

  static MoebiusMap antipodal() {
    Mat2c a;
    a << Cplx(0, 0), Cplx(-1, 0), Cplx(1, 0), Cplx(0, 0);
    return MoebiusMap(a, true);
  }

  const Mat2c& matrix() const { return a_; }
  bool conjugate_first() const { return conj_; }
  bool orientation_preserving() const { return !conj_; }

  Vec3 operator()(const Vec3& p) const {
    Vec2c psi = point_to_spinor(p);
    if (conj_) psi = psi.conjugate();
    return spinor_to_point((a_ * psi).eval());
  }

  MoebiusMap inverse() const {
    const Mat2c inv = a_.inverse();
    return MoebiusMap(conj_ ? inv.conjugate() : inv, conj_);
  }

  friend MoebiusMap operator*(const MoebiusMap& f, const MoebiusMap& g) {
    // (f * g)(p) = f(g(p))
    const Mat2c m = f.a_ * (f.conj_ ? g.a_.conjugate() : g.a_);
    return MoebiusMap(m, f.conj_ != g.conj_);
  }

  // Log conformal factor of the pullback of the round metric: this map
  // satisfies m* sigma~ = e^{2 u_m} sigma~ with u_m given here.
  double log_factor(const Vec3& p) const {
    Vec2c psi = point_to_spinor(p);
    if (conj_) psi = psi.conjugate();
    const double n2 = std::norm(psi(0)) + std::norm(psi(1));
    const Vec2c ap = a_ * psi;
    const double m2 = std::norm(ap(0)) + std::norm(ap(1));
    return std::log(n2 / m2);  // |det| = 1
  }

  // Differential at p applied to tangent vector v (5-point stencil along
  // the projected line, then projected back to the image tangent plane).
  Vec3 differential(const Vec3& p, const Vec3& v) const {
    const double h = 1e-3 / std::max(1.0, v.norm());
    auto curve = [&](double t) { return (*this)((p + t * v).normalized()); };
    const Vec3 d = (8.0 * (curve(h) - curve(-h)) -
                    (curve(2.0 * h) - curve(-2.0 * h))) /
                   (12.0 * h);
    const Vec3 q = (*this)(p);
    return d - d.dot(q) * q;
  }

 private:
  Mat2c a_;
  bool conj_;
};

// Pullback of e^{2u} sigma~ along m: log factor u o m + u_m.
inline HarmonicField pullback_log_factor(const SphereGrid& grid,
                                         const HarmonicField& u,
                                         const MoebiusMap& m) {
  std::vector<double> values(grid.n_nodes());
  for (int k = 0; k < grid.n_nodes(); ++k) {
    const Vec3 p = grid.node(k);
    values[k] = u.eval(m(p)) + m.log_factor(p);
  }
  return analysis(grid, values);
}

inline ConformalMetricS2 pullback(const SphereGrid& grid,
                                  const ConformalMetricS2& g,
                                  const MoebiusMap& m) {
  return ConformalMetricS2(pullback_log_factor(grid, g.u, m));
}

// Pushforward m_* g = (m^{-1})* g.
inline ConformalMetricS2 pushforward(const SphereGrid& grid,
                                     const ConformalMetricS2& g,
                                     const MoebiusMap& m) {
  return pullback(grid, g, m.inverse());
}

struct MobiusExtractResult {
  Vec3 w = Vec3::Zero();        // boost parameter
  MoebiusMap map;               // boost(w)
  double residual_sup = 0.0;    // sup_nodes |u_model - u_input|
};

// Validation oracle: curvature-1 metrics in the conformal class of the
// round metric are exactly Moebius pullbacks, and the conformal factor
// determines the boost part uniquely. Gauss-Newton on the 3-parameter
// boost family (the rotation part drops out of the conformal factor).
inline MobiusExtractResult mobius_extract(const SphereGrid& grid,
                                          const ConformalMetricS2& g,
                                          double curvature_tol = 1e-6,
                                          int max_iter = 60) {
  const std::vector<double> k = gauss_curvature(grid, g);
  for (double v : k)
    if (std::abs(v - 1.0) > curvature_tol)
      throw std::invalid_argument(
          "mobius_extract: input is not constant curvature 1 (|K-1| = " +
          std::to_string(std::abs(v - 1.0)) + ")");

  const std::vector<double> u_in = synthesis(grid, g.u);
  const int n = grid.n_nodes();

  auto model = [&](const Vec3& w, std::vector<double>& out) {
    const double s = w.norm();
    const double ch = std::cosh(s);
    const double shs = s > 1e-12 ? std::sinh(s) / s : 1.0;  // sinh(s)/s
    for (int i = 0; i < n; ++i)
      out[i] = -std::log(ch - shs * grid.node(i).dot(w));
  };

  // Conformal-barycenter initial guess.
  Vec3 mu = Vec3::Zero();
  {
    std::vector<double> e2u(n);
    for (int i = 0; i < n; ++i) e2u[i] = std::exp(2.0 * u_in[i]);
    for (int it = 0; it < grid.n_theta(); ++it)
      for (int jp = 0; jp < grid.n_phi(); ++jp) {
        const int idx = grid.node_index(it, jp);
        mu += grid.weight(it) * e2u[idx] * grid.node(it, jp);
      }
    mu /= kFourPi;
  }
  Vec3 w = 1.5 * mu;

  std::vector<double> um(n), up(n);
  Eigen::MatrixXd jac(n, 3);
  Eigen::VectorXd res(n);
  double res_sup = 0.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    model(w, um);
    res_sup = 0.0;
    for (int i = 0; i < n; ++i) {
      res(i) = um[i] - u_in[i];
      res_sup = std::max(res_sup, std::abs(res(i)));
    }
    if (res_sup < 1e-12) break;
    const double h = 1e-6;
    for (int c = 0; c < 3; ++c) {
      Vec3 wp = w, wm = w;
      wp[c] += h;
      wm[c] -= h;
      model(wp, up);
      model(wm, um);
      for (int i = 0; i < n; ++i) jac(i, c) = (up[i] - um[i]) / (2.0 * h);
    }
    const Vec3 step = jac.colPivHouseholderQr().solve(-res);
    // Backtracking on the sup-residual.
    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 30; ++bt) {
      model(w + alpha * step, um);
      double s2 = 0.0;
      for (int i = 0; i < n; ++i)
        s2 = std::max(s2, std::abs(um[i] - u_in[i]));
      if (s2 < res_sup) {
        w += alpha * step;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }
  model(w, um);
  res_sup = 0.0;
  for (int i = 0; i < n; ++i)
    res_sup = std::max(res_sup, std::abs(um[i] - u_in[i]));
  if (res_sup > 1e-6)
    throw std::runtime_error("mobius_extract: Newton did not converge, "
                             "residual " + std::to_string(res_sup));
  MobiusExtractResult r;
  r.w = w;
  r.map = MoebiusMap::boost(w);
  r.residual_sup = res_sup;
  return r;
}

}  // namespace roundflow
