#pragma once

// The isometry-to-the-round-sphere construction: for g with constant
// curvature 1 in the conformal class of sigma~, phi(q) = exp_{sigma~,N}
// (L log_{g,N}(q)), where L carries a g-orthonormal frame at the north
// pole to the standard frame.  At the cut point of N the exp/log
// composition breaks down and phi is extended through the antipodal
// identity phi(a_g(q)) = -phi(q).

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <vector>

#include "roundflow/geodesic.hpp"
#include "roundflow/sphere_map.hpp"

namespace roundflow {

struct TangentFrame {
  Vec3 p, e1, e2;
};

inline TangentFrame gram_schmidt_frame(const ConformalMetricS2& g,
                                       const Vec3& p = Vec3(0, 0, 1)) {
  const double u = g.u.eval(p);
  if (!std::isfinite(u))
    throw std::invalid_argument("gram_schmidt_frame: metric degenerate at p");
  // the standard round frame at p: project the two coordinate axes most
  // transverse to p
  Vec3 f1, f2;
  if (std::abs(p.z()) >= std::abs(p.x()) && std::abs(p.z()) >= std::abs(p.y())) {
    f1 = Vec3(1, 0, 0);
    f2 = Vec3(0, 1, 0);
  } else if (std::abs(p.x()) >= std::abs(p.y())) {
    f1 = Vec3(0, 1, 0);
    f2 = Vec3(0, 0, 1);
  } else {
    f1 = Vec3(0, 0, 1);
    f2 = Vec3(1, 0, 0);
  }
  f1 -= f1.dot(p) * p;
  f2 -= f2.dot(p) * p;
  const double scale = std::exp(u);  // <a,b>_g = e^{2u} a.b
  TangentFrame fr;
  fr.p = p;
  fr.e1 = f1 / (scale * f1.norm());
  fr.e2 = f2 - (scale * scale * f2.dot(fr.e1)) * fr.e1;
  fr.e2 /= scale * fr.e2.norm();
  return fr;
}

namespace detail {

// Evaluate fn at every icosphere node, chunked over worker threads.
inline std::vector<Vec3> map_nodes(const Icosphere& ico,
                                   const std::function<Vec3(const Vec3&)>& fn,
                                   int n_workers) {
  std::vector<Vec3> out(ico.vertices.size());
  if (n_workers <= 1) {
    for (size_t i = 0; i < ico.vertices.size(); ++i)
      out[i] = fn(ico.vertices[i]);
    return out;
  }
  std::atomic<size_t> next(0);
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= ico.vertices.size()) return;
      try {
        out[i] = fn(ico.vertices[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace detail

struct CartanOptions {
  int depth = 4;           // icosphere subdivision of the sampled map
  double curvature_tol = 1e-6;
  int n_workers = 0;       // 0 = hardware concurrency, 1 = sequential
};

inline SphereMap cartan_isometry(const SphereGrid& grid,
                                 const ConformalMetricS2& g,
                                 const CartanOptions& opt = {}) {
  for (double k : gauss_curvature(grid, g))
    if (std::abs(k - 1.0) > opt.curvature_tol)
      throw std::invalid_argument(
          "cartan_isometry: metric is not constant curvature 1 (|K-1| = " +
          std::to_string(std::abs(k - 1.0)) + ")");

  const Vec3 n(0, 0, 1);
  const TangentFrame fr = gram_schmidt_frame(g, n);
  const double e2un = std::exp(2.0 * g.u.eval(n));

  // phi for q away from the cut point of N; the shoot cache is shared by
  // consecutive calls on a thread and keyed so that distinct maps (and the
  // two call sites below) never reuse each other's Jacobians
  auto direct = [=](const Vec3& q) -> Vec3 {
    if ((q - n).norm() < 1e-13) return n;
    thread_local LogShootCache tc;
    if (tc.key != static_cast<const void*>(&e2un)) {
      tc = LogShootCache{};
      tc.key = &e2un;
    }
    const Vec3 v = log_map(g, n, q, 0.05, 50, &tc);
    const double a = e2un * v.dot(fr.e1);
    const double b = e2un * v.dot(fr.e2);
    return exp_round(n, Vec3(a, b, 0.0));
  };

  // g-antipode of q: all geodesics from q refocus at distance pi
  auto g_antipode = [g](const Vec3& q) -> Vec3 {
    Vec3 w = std::abs(q.z()) < 0.9 ? Vec3(0, 0, 1).cross(q)
                                   : Vec3(1, 0, 0).cross(q);
    w.normalize();
    const double speed = std::exp(g.u.eval(q));
    return exp_map(g, q, (kPi / speed) * w);
  };

  // points near the cut point of N go through the antipodal identity
  // phi(q) = -phi(a_g(q)) instead of a doomed direct shot
  const Vec3 cut = g_antipode(n);
  auto phi = [=](const Vec3& q) -> Vec3 {
    if (sphere_distance(q, cut) > 0.2) {
      try {
        return direct(q);
      } catch (const std::runtime_error&) {
        // near-boundary shot failed; fall through to the antipode route
      }
    }
    return -direct(g_antipode(q));
  };

  const Icosphere& ico = detail::shared_icosphere(opt.depth);
  int workers = opt.n_workers;
  if (workers <= 0)
    workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<Vec3> images = detail::map_nodes(ico, phi, workers);
  return SphereMap(opt.depth, std::move(images), "cartan", phi);
}

// Sup over sampled point/direction pairs of |h(Dphi v, Dphi w) - g(v, w)|,
// with Dphi by centered differences along round geodesics.
inline double check_isometry(const SphereMap& phi, const ConformalMetricS2& g,
                             const ConformalMetricS2& h, int n_samples = 400,
                             double fd_step = 1e-4) {
  double worst = 0.0;
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n_samples; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n_samples;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double a = golden * i;
    const Vec3 p(r * std::cos(a), r * std::sin(a), z);
    Vec3 v = std::abs(p.z()) < 0.9 ? Vec3(0, 0, 1).cross(p)
                                   : Vec3(1, 0, 0).cross(p);
    v.normalize();
    const Vec3 w = p.cross(v);
    auto dphi = [&](const Vec3& dir) {
      return (phi(exp_round(p, fd_step * dir)) -
              phi(exp_round(p, -fd_step * dir))) /
             (2.0 * fd_step);
    };
    const Vec3 dv = dphi(v), dw = dphi(w);
    const double cg = std::exp(2.0 * g.u.eval(p));
    const double ch = std::exp(2.0 * h.u.eval(phi(p)));
    worst = std::max(worst, std::abs(ch * dv.dot(dv) - cg));
    worst = std::max(worst, std::abs(ch * dw.dot(dw) - cg));
    worst = std::max(worst, std::abs(ch * dv.dot(dw)));
  }
  return worst;
}

// Max over nodes of d(phi(-p), -phi(p)).
inline double check_equivariance(const SphereMap& phi) {
  double worst = 0.0;
  for (const Vec3& p : phi.nodes().vertices)
    worst = std::max(worst, sphere_distance(phi(-p), -phi(p)));
  return worst;
}

// Canonical representative of an antipodal pair: nonnegative z,
// tie-broken by nonnegative x, then y.
inline Vec3 antipodal_representative(const Vec3& p) {
  if (p.z() > 0.0) return p;
  if (p.z() < 0.0) return -p;
  if (p.x() > 0.0) return p;
  if (p.x() < 0.0) return -p;
  return p.y() >= 0.0 ? p : Vec3(-p);
}

inline SphereMap descend_to_rp2(const SphereMap& phi,
                                double equivariance_tol = 1e-6) {
  const double dev = check_equivariance(phi);
  if (dev > equivariance_tol)
    throw std::invalid_argument(
        "descend_to_rp2: map is not antipodally equivariant (deviation " +
        std::to_string(dev) + ")");
  auto quotient = [phi](const Vec3& q) {
    return antipodal_representative(phi(antipodal_representative(q)));
  };
  std::vector<Vec3> images(phi.nodes().vertices.size());
  for (size_t i = 0; i < images.size(); ++i)
    images[i] = quotient(phi.nodes().vertices[i]);
  return SphereMap(phi.depth(), std::move(images),
                   phi.source_metric_id() + "/rp2", quotient);
}

}  // namespace roundflow
