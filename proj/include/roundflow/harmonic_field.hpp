#pragma once

// Real spherical-harmonic expansions. Convention: orthonormal real basis
//   Y_{l,0}  = Pbar_l0,
//   Y_{l,m}  = sqrt(2) Pbar_lm cos(m phi),   m > 0,
//   Y_{l,-m} = sqrt(2) Pbar_lm sin(m phi),   m > 0,
// so a constant field 1 has c_{0,0} = sqrt(4 pi).

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "roundflow/sphere_grid.hpp"

namespace roundflow {

class HarmonicField {
 public:
  HarmonicField() : degree_(0), c_(1, 0.0) {}
  explicit HarmonicField(int degree)
      : degree_(degree), c_((degree + 1) * (degree + 1), 0.0) {}

  int degree() const { return degree_; }
  static int index(int l, int m) { return l * l + l + m; }
  double operator()(int l, int m) const { return c_[index(l, m)]; }
  double& at(int l, int m) { return c_[index(l, m)]; }
  const std::vector<double>& coefficients() const { return c_; }
  std::vector<double>& coefficients() { return c_; }

  HarmonicField& operator+=(const HarmonicField& o) {
    check_same(o);
    for (size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
    return *this;
  }
  HarmonicField& operator-=(const HarmonicField& o) {
    check_same(o);
    for (size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
    return *this;
  }
  HarmonicField& operator*=(double s) {
    for (double& v : c_) v *= s;
    return *this;
  }
  friend HarmonicField operator+(HarmonicField a, const HarmonicField& b) {
    return a += b;
  }
  friend HarmonicField operator-(HarmonicField a, const HarmonicField& b) {
    return a -= b;
  }
  friend HarmonicField operator*(double s, HarmonicField a) { return a *= s; }

  // Round-Laplacian, diagonal with eigenvalue -l(l+1).
  HarmonicField laplacian() const {
    HarmonicField r(degree_);
    for (int l = 0; l <= degree_; ++l)
      for (int m = -l; m <= l; ++m)
        r.at(l, m) = -double(l) * (l + 1) * (*this)(l, m);
    return r;
  }

  HarmonicField truncated(int new_degree) const {
    HarmonicField r(new_degree);
    const int lmax = std::min(new_degree, degree_);
    for (int l = 0; l <= lmax; ++l)
      for (int m = -l; m <= l; ++m) r.at(l, m) = (*this)(l, m);
    return r;
  }

  double coefficient_sup_norm() const {
    double s = 0.0;
    for (double v : c_) s = std::max(s, std::abs(v));
    return s;
  }
  double odd_l_mass() const {
    double s = 0.0;
    for (int l = 1; l <= degree_; l += 2)
      for (int m = -l; m <= l; ++m) s += (*this)(l, m) * (*this)(l, m);
    return std::sqrt(s);
  }

  // Keep only even-l coefficients (the antipodally even part).
  HarmonicField even_part() const {
    HarmonicField r = *this;
    for (int l = 1; l <= degree_; l += 2)
      for (int m = -l; m <= l; ++m) r.at(l, m) = 0.0;
    return r;
  }

  double eval(const Vec3& p) const {
    double th, ph;
    point_angles(p, th, ph);
    const LegendreTable& t = scratch_table(degree_, std::cos(th),
                                           std::sin(th));
    const double sqrt2 = std::sqrt(2.0);
    double sum = 0.0;
    double s_pow = 1.0;  // s^m
    for (int m = 0; m <= degree_; ++m) {
      const double cm = std::cos(m * ph), sm = std::sin(m * ph);
      for (int l = m; l <= degree_; ++l) {
        const double p_lm = t.a[plm_index(l, m)] * s_pow;
        if (m == 0) {
          sum += (*this)(l, 0) * p_lm;
        } else {
          sum += sqrt2 * p_lm * ((*this)(l, m) * cm + (*this)(l, -m) * sm);
        }
      }
      s_pow *= t.s;
    }
    return sum;
  }

  // Tangential gradient in ambient R^3 coordinates at |p| = 1.
  Vec3 gradient(const Vec3& p) const {
    double th, ph;
    point_angles(p, th, ph);
    const double ct = std::cos(th), st = std::sin(th);
    const LegendreTable& t = scratch_table(degree_, ct, st);
    const double sqrt2 = std::sqrt(2.0);
    double du_dth = 0.0;
    double du_dph_over_s = 0.0;  // (1/sin theta) du/dphi
    double s_prev = 0.0;         // s^{m-1}
    double s_pow = 1.0;          // s^m
    for (int m = 0; m <= degree_; ++m) {
      const double cm = std::cos(m * ph), sm = std::sin(m * ph);
      const double s_next = s_pow * st;  // s^{m+1}
      for (int l = m; l <= degree_; ++l) {
        const int k = plm_index(l, m);
        if (m == 0) {
          du_dth -= s_next * t.da_dx[k] * (*this)(l, 0);
        } else {
          const double trig = (*this)(l, m) * cm + (*this)(l, -m) * sm;
          const double dpbar =
              m * s_prev * ct * t.a[k] - s_next * t.da_dx[k];
          du_dth += sqrt2 * dpbar * trig;
          const double dtrig = -(*this)(l, m) * sm + (*this)(l, -m) * cm;
          du_dph_over_s += sqrt2 * (m * s_prev * t.a[k]) * dtrig;
        }
      }
      s_prev = s_pow;
      s_pow = s_next;
    }
    const Vec3 theta_hat(ct * std::cos(ph), ct * std::sin(ph), -st);
    const Vec3 phi_hat(-std::sin(ph), std::cos(ph), 0.0);
    return du_dth * theta_hat + du_dph_over_s * phi_hat;
  }

  void write(std::ostream& os) const {
    os << "harmonicfield v1 L " << degree_ << "\n";
    os.precision(17);
    for (int l = 0; l <= degree_; ++l)
      for (int m = -l; m <= l; ++m)
        os << l << " " << m << " " << (*this)(l, m) << "\n";
  }
  static HarmonicField read(std::istream& is) {
    std::string tag, ver, ltag;
    int degree = 0;
    is >> tag >> ver >> ltag >> degree;
    if (tag != "harmonicfield" || ver != "v1" || ltag != "L" || degree < 0)
      throw std::runtime_error("HarmonicField::read: bad header");
    HarmonicField f(degree);
    int l, m;
    double v;
    while (is >> l >> m >> v) f.at(l, m) = v;
    return f;
  }

  // Per-thread scratch table so point evaluation does not allocate.
  static const LegendreTable& scratch_table(int degree, double ct,
                                            double st) {
    thread_local LegendreTable t;
    legendre_table_into(t, degree, ct, st);
    return t;
  }

  static void point_angles(const Vec3& p, double& theta, double& phi) {
    theta = std::atan2(std::hypot(p.x(), p.y()), p.z());
    phi = (p.x() == 0.0 && p.y() == 0.0) ? 0.0 : std::atan2(p.y(), p.x());
  }

 private:
  void check_same(const HarmonicField& o) const {
    if (o.degree_ != degree_)
      throw std::invalid_argument("HarmonicField: degree mismatch");
  }
  int degree_;
  std::vector<double> c_;
};

// Forward transform: least-squares harmonic fit of nodal values, exact for
// fields band-limited to the grid degree.
inline HarmonicField analysis(const SphereGrid& grid,
                              const std::vector<double>& values,
                              int out_degree = -1) {
  if (int(values.size()) != grid.n_nodes())
    throw std::invalid_argument("analysis: value count != node count");
  for (double v : values)
    if (!std::isfinite(v))
      throw std::invalid_argument("analysis: non-finite input value");
  const int L = out_degree < 0 ? grid.degree() : out_degree;
  if (L > grid.degree())
    throw std::invalid_argument("analysis: requested degree above grid");
  const int nt = grid.n_theta(), np = grid.n_phi();
  const double sqrt2 = std::sqrt(2.0);

  // phi integrals per theta row and azimuthal order.
  std::vector<std::vector<double>> fc(nt, std::vector<double>(L + 1, 0.0));
  std::vector<std::vector<double>> fs(nt, std::vector<double>(L + 1, 0.0));
  const double dphi_w = kTwoPi / np;
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < np; ++j) {
      const double v = values[grid.node_index(i, j)] * dphi_w;
      for (int m = 0; m <= L; ++m) {
        fc[i][m] += v * grid.cos_m(j, m);
        fs[i][m] += v * grid.sin_m(j, m);
      }
    }

  HarmonicField out(L);
  for (int i = 0; i < nt; ++i) {
    const double w = grid.weight(i) * np / kTwoPi;  // Gauss-Legendre part
    const LegendreTable& t = grid.plm(i);
    for (int m = 0; m <= L; ++m)
      for (int l = m; l <= L; ++l) {
        const double p_lm = t.pbar(l, m);
        if (m == 0) {
          out.at(l, 0) += w * p_lm * fc[i][0];
        } else {
          out.at(l, m) += w * sqrt2 * p_lm * fc[i][m];
          out.at(l, -m) += w * sqrt2 * p_lm * fs[i][m];
        }
      }
  }
  return out;
}

// Inverse transform onto the grid nodes.
inline std::vector<double> synthesis(const SphereGrid& grid,
                                     const HarmonicField& f) {
  const int L = f.degree();
  if (L > grid.degree())
    throw std::invalid_argument("synthesis: field degree above grid");
  const int nt = grid.n_theta(), np = grid.n_phi();
  const double sqrt2 = std::sqrt(2.0);
  std::vector<double> values(grid.n_nodes(), 0.0);
  for (int i = 0; i < nt; ++i) {
    const LegendreTable& t = grid.plm(i);
    std::vector<double> gc(L + 1, 0.0), gs(L + 1, 0.0);
    for (int m = 0; m <= L; ++m)
      for (int l = m; l <= L; ++l) {
        const double p_lm = t.pbar(l, m);
        if (m == 0) {
          gc[0] += f(l, 0) * p_lm;
        } else {
          gc[m] += sqrt2 * f(l, m) * p_lm;
          gs[m] += sqrt2 * f(l, -m) * p_lm;
        }
      }
    for (int j = 0; j < np; ++j) {
      double v = gc[0];
      for (int m = 1; m <= L; ++m)
        v += gc[m] * grid.cos_m(j, m) + gs[m] * grid.sin_m(j, m);
      values[grid.node_index(i, j)] = v;
    }
  }
  return values;
}

}  // namespace roundflow
