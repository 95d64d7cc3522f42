#pragma once

// Exponential and logarithm maps for conformal metrics g = e^{2u} sigma~
// on S^2.  Geodesics are integrated in ambient coordinates:
//
//   gamma'' = -|gamma'|^2 gamma - 2 (grad u . gamma') gamma'
//             + |gamma'|^2 grad u,
//
// where grad u is the tangential (round) gradient evaluated spectrally.
// The first term keeps the curve on the sphere, the other two are the
// conformal Christoffel corrections.

#include <cmath>
#include <stdexcept>
#include <string>

#include "roundflow/conformal_metric.hpp"

namespace roundflow {

struct CutLocusProximity : std::runtime_error {
  explicit CutLocusProximity(const std::string& what)
      : std::runtime_error(what) {}
};

struct ShootingFailure : std::runtime_error {
  double residual;
  ShootingFailure(const std::string& what, double r)
      : std::runtime_error(what + " (residual " + std::to_string(r) + ")"),
        residual(r) {}
};

// Closed forms for the round metric.
inline Vec3 exp_round(const Vec3& p, const Vec3& v) {
  const double s = v.norm();
  if (s < 1e-300) return p;
  return std::cos(s) * p + (std::sin(s) / s) * v;
}

inline Vec3 log_round(const Vec3& p, const Vec3& q) {
  const Vec3 t = q - q.dot(p) * p;
  const double tn = t.norm();
  const double theta = std::atan2(tn, q.dot(p));
  if (tn < 1e-300) return Vec3::Zero();
  return (theta / tn) * t;
}

namespace detail {

struct GeoState {
  Vec3 x, v;
};

inline GeoState geo_rhs(const HarmonicField& u, const GeoState& s) {
  const Vec3 p = s.x.normalized();
  const Vec3 grad = u.gradient(p);
  const double v2 = s.v.squaredNorm();
  return GeoState{s.v,
                  -v2 * s.x - 2.0 * grad.dot(s.v) * s.v + v2 * grad};
}

// Adaptive Dormand-Prince 5(4) from t = 0 to t = 1.
inline GeoState geo_integrate(const HarmonicField& u, GeoState s,
                              double local_tol) {
  using V6 = Eigen::Matrix<double, 6, 1>;
  auto pack = [](const GeoState& g) {
    V6 y;
    y << g.x, g.v;
    return y;
  };
  auto rhs = [&u](const V6& y) {
    const GeoState d = geo_rhs(u, {y.head<3>(), y.tail<3>()});
    V6 f;
    f << d.x, d.v;
    return f;
  };
  V6 y = pack(s);
  double t = 0.0;
  const double speed = s.v.norm();
  double h = std::min(0.5, 0.3 / std::max(speed, 1e-3));
  V6 k1 = rhs(y);
  for (int n_steps = 0; t < 1.0; ++n_steps) {
    if (n_steps > 20000 || !y.allFinite())
      throw std::runtime_error(
          "exp_map: geodesic integration failed to advance");
    h = std::min(h, 1.0 - t);
    const V6 k2 = rhs(y + h * (k1 / 5.0));
    const V6 k3 = rhs(y + h * (3.0 / 40 * k1 + 9.0 / 40 * k2));
    const V6 k4 =
        rhs(y + h * (44.0 / 45 * k1 - 56.0 / 15 * k2 + 32.0 / 9 * k3));
    const V6 k5 = rhs(y + h * (19372.0 / 6561 * k1 - 25360.0 / 2187 * k2 +
                               64448.0 / 6561 * k3 - 212.0 / 729 * k4));
    const V6 k6 = rhs(y + h * (9017.0 / 3168 * k1 - 355.0 / 33 * k2 +
                               46732.0 / 5247 * k3 + 49.0 / 176 * k4 -
                               5103.0 / 18656 * k5));
    const V6 y5 = y + h * (35.0 / 384 * k1 + 500.0 / 1113 * k3 +
                           125.0 / 192 * k4 - 2187.0 / 6784 * k5 +
                           11.0 / 84 * k6);
    const V6 k7 = rhs(y5);
    const V6 y4 = y + h * (5179.0 / 57600 * k1 + 7571.0 / 16695 * k3 +
                           393.0 / 640 * k4 - 92097.0 / 339200 * k5 +
                           187.0 / 2100 * k6 + 1.0 / 40 * k7);
    if (!y5.allFinite()) {
      h *= 0.2;
      continue;
    }
    const double err = (y5 - y4).norm();
    if (err < local_tol || h < 1e-8) {
      y = y5;
      k1 = k7;  // first-same-as-last
      t += h;
    }
    const double grow =
        err > 0.0 ? 0.9 * std::pow(local_tol / err, 0.2) : 5.0;
    h *= std::min(5.0, std::max(0.2, grow));
  }
  GeoState out{y.head<3>(), y.tail<3>()};
  out.x.normalize();
  return out;
}

}  // namespace detail

// |v|_g at p for tangent v.
inline double g_norm(const ConformalMetricS2& g, const Vec3& p,
                     const Vec3& v) {
  return std::exp(g.u.eval(p)) * v.norm();
}

inline Vec3 exp_map(const ConformalMetricS2& g, const Vec3& p, const Vec3& v,
                    double local_tol = 1e-10) {
  if (std::abs(p.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("exp_map: base point not on the sphere");
  if (std::abs(p.dot(v)) > 1e-8 * std::max(1.0, v.norm()))
    throw std::invalid_argument("exp_map: v not tangent at p");
  if (g_norm(g, p, v) > kTwoPi + 0.5)
    throw std::invalid_argument("exp_map: |v|_g beyond the supported range");
  if (v.norm() < 1e-300) return p;
  return detail::geo_integrate(g.u, {p, v}, local_tol).x;
}

// Optional warm start for repeated log_map calls from the same base point
// with nearby targets (map building, finite differencing).  The caller is
// responsible for not sharing one cache across different metrics.
struct LogShootCache {
  const void* key = nullptr;
  Vec3 p, q;
  Eigen::Vector2d c;
  Eigen::Matrix<double, 3, 2> J;
  bool valid = false;
};

// Solve exp_map(g, p, v) = q for v by Gauss-Newton shooting, seeded with
// the round logarithm.  delta_cut keeps q away from the cut locus of p.
inline Vec3 log_map(const ConformalMetricS2& g, const Vec3& p, const Vec3& q,
                    double delta_cut = 0.05, int max_iter = 50,
                    LogShootCache* cache = nullptr) {
  // fixed tangent basis at p
  Vec3 e1 = std::abs(p.z()) < 0.9 ? Vec3(0, 0, 1).cross(p)
                                  : Vec3(1, 0, 0).cross(p);
  e1.normalize();
  const Vec3 e2 = p.cross(e1);

  const Vec3 v_round = log_round(p, q);
  Eigen::Vector2d c(v_round.dot(e1), v_round.dot(e2));

  // Candidates are clamped strictly inside the injectivity radius: beyond
  // |v|_g = pi the shooting Jacobian is singular (conjugate point) and the
  // "wrong way around" branch creates false minima for the line search.
  const double speed = std::exp(g.u.eval(p));
  const double cap = (kPi - 0.02) / speed;
  // integrate loosely while far from the solution, tightly for the endgame
  double shoot_tol = 1e-8;
  auto clamp = [cap](Eigen::Vector2d a) {
    const double n = a.norm();
    if (n > cap) a *= cap / n;
    return a;
  };
  auto shoot = [&](Eigen::Vector2d a) {
    a = clamp(a);
    return exp_map(g, p, a[0] * e1 + a[1] * e2, shoot_tol);
  };
  c = clamp(c);

  Eigen::Matrix<double, 3, 2> J;
  bool have_jacobian = false;
  if (cache && cache->valid && (cache->p - p).norm() < 1e-14 &&
      (cache->q - q).norm() < 0.3) {
    J = cache->J;
    have_jacobian = true;
    c = cache->c + J.colPivHouseholderQr().solve(
                       Eigen::Vector3d(q - cache->q));
  }

  Eigen::Vector3d r = shoot(c) - q;
  double resid = r.norm();
  bool reseeded = false;
  for (int it = 0; it < max_iter && (resid > 1e-11 || shoot_tol > 1e-10);
       ++it) {
    if (resid < 1e-6 && shoot_tol > 1e-10) {
      shoot_tol = 1e-10;
      r = shoot(c) - q;
      resid = r.norm();
      continue;
    }
    if (!have_jacobian) {
      const double h = 1e-5;
      J.col(0) = (shoot(c + Eigen::Vector2d(h, 0)) - q - r) / h;
      J.col(1) = (shoot(c + Eigen::Vector2d(0, h)) - q - r) / h;
      have_jacobian = true;
    }
    const Eigen::Vector2d step = J.colPivHouseholderQr().solve(-r);
    double alpha = 1.0;
    Eigen::Vector2d c_new = clamp(c + step);
    bool stalled = !step.allFinite();
    Eigen::Vector3d r_new = stalled ? r : Eigen::Vector3d(shoot(c_new) - q);
    while (!stalled && r_new.norm() > resid && alpha > 1e-4) {
      alpha /= 2.0;
      c_new = clamp(c + alpha * step);
      r_new = shoot(c_new) - q;
    }
    if (stalled || (r_new.norm() >= resid && resid > 1e-6)) {
      // wrong basin (the round-log seed can point far from the true
      // direction); reseed from a coarse polar scan and refresh J
      if (reseeded) break;
      reseeded = true;
      for (int ia = 0; ia < 24; ++ia)
        for (double f : {0.15, 0.35, 0.55, 0.75, 0.92}) {
          const double rho = f * cap;
          const double th = kTwoPi * ia / 24.0;
          const Eigen::Vector2d cand(rho * std::cos(th), rho * std::sin(th));
          const Eigen::Vector3d rc = shoot(cand) - q;
          if (rc.norm() < resid) {
            c = cand;
            r = rc;
            resid = rc.norm();
          }
        }
      have_jacobian = false;
      continue;
    }
    if (alpha < 1.0) {
      have_jacobian = false;  // stale Jacobian, refresh next pass
    } else {
      // Broyden update keeps the Jacobian current without extra shots
      const Eigen::Vector2d s2 = c_new - c;
      J += (r_new - r - J * s2) * s2.transpose() / s2.squaredNorm();
    }
    c = c_new;
    r = r_new;
    resid = r.norm();
  }
  if (cache) {
    cache->valid = resid <= 1e-9 && have_jacobian;
    if (cache->valid) {
      cache->p = p;
      cache->q = q;
      cache->c = c;
      cache->J = J;
    }
  }
  const Vec3 v = c[0] * e1 + c[1] * e2;
  if (resid > 1e-9) {
    if (log_round(p, q).norm() > kPi - delta_cut)
      throw CutLocusProximity("log_map: target too close to the cut locus");
    throw ShootingFailure("log_map: shooting did not converge", resid);
  }
  if (g_norm(g, p, v) > kPi - delta_cut)
    throw CutLocusProximity("log_map: d_g(p, q) = " +
                            std::to_string(g_norm(g, p, v)) +
                            " is within delta_cut of the cut locus");
  return v;
}

}  // namespace roundflow
