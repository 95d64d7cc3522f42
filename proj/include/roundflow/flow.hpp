#pragma once

// Normalized Ricci flow on the two computable slices.
//
// S^2, conformal: the displayed n-dimensional flow equation reduces on
// surfaces to d/dt u = Kbar - K for g = e^{2u} sigma~ (Ric = K g and the
// average scalar curvature is 2 Kbar with Kbar = 4 pi / area). Stepping
// is IMEX with the round Laplacian implicit (diagonal in harmonic space)
// and the nonlinearity evaluated pseudospectrally on a 3/2-dealiased
// grid.
//
// S^3, Milnor diagonal: d/dt lambda_i = -2 Ric_ii + (2/3) Scal lambda_i
// (pointwise scalar curvature equals its average on homogeneous
// metrics), integrated with adaptive RK4.

#include <cmath>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "roundflow/conformal_metric.hpp"
#include "roundflow/milnor.hpp"

namespace roundflow {

enum class Stepper { ImexEuler, ImexRk2, Rk4Ode };

inline const char* to_string(Stepper s) {
  switch (s) {
    case Stepper::ImexEuler: return "imex-euler";
    case Stepper::ImexRk2: return "imex-rk2";
    default: return "rk4-ode";
  }
}

struct FlowConfig {
  double dt_max = 0.05;
  double convergence_tol = 1e-8;
  double max_time = 200.0;
  Stepper stepper = Stepper::ImexRk2;
  int dwell_steps = 10;  // consecutive in-tolerance steps before accepting

  void validate() const {
    if (!(dt_max > 0.0)) throw std::invalid_argument("FlowConfig: dt_max <= 0");
    if (!(convergence_tol > 0.0))
      throw std::invalid_argument("FlowConfig: convergence_tol <= 0");
  }
};

struct FlowSample {
  double time = 0.0;
  double area_or_volume = 0.0;
  double k_min = 0.0;
  double k_max = 0.0;
  double ratio = 0.0;
  double residual = 0.0;  // sup |K - Kbar|
};

struct FlowTrace {
  std::vector<FlowSample> samples;
  bool pinching_lost = false;

  void write_csv(std::ostream& os) const {
    os << "time,area_or_volume,k_min,k_max,ratio,residual\n";
    os.precision(17);
    for (const FlowSample& s : samples)
      os << s.time << "," << s.area_or_volume << "," << s.k_min << ","
         << s.k_max << "," << s.ratio << "," << s.residual << "\n";
  }
};

namespace detail {

struct S2FlowWorkspace {
  std::shared_ptr<const SphereGrid> base;
  std::shared_ptr<const SphereGrid> padded;  // 3/2-rule dealiasing
  explicit S2FlowWorkspace(int degree)
      : base(shared_grid(degree)), padded(shared_grid((3 * degree) / 2 + 1)) {}
};

struct S2Rhs {
  HarmonicField rhs;    // Kbar - K, truncated to the field degree
  double area = 0.0;
  double k_min = 0.0, k_max = 0.0, residual = 0.0;
};

inline S2Rhs s2_rhs(const S2FlowWorkspace& ws, const HarmonicField& u) {
  const SphereGrid& g = *ws.padded;
  const std::vector<double> uv = synthesis(g, u);
  const std::vector<double> lap = synthesis(g, u.laplacian());
  std::vector<double> k(g.n_nodes()), e2u(g.n_nodes());
  for (int i = 0; i < g.n_nodes(); ++i) {
    e2u[i] = std::exp(2.0 * uv[i]);
    k[i] = (1.0 - lap[i]) / e2u[i];
  }
  S2Rhs out;
  out.area = g.integrate(e2u);
  const double kbar = kFourPi / out.area;
  out.k_min = k[0];
  out.k_max = k[0];
  out.residual = 0.0;
  for (double v : k) {
    out.k_min = std::min(out.k_min, v);
    out.k_max = std::max(out.k_max, v);
    out.residual = std::max(out.residual, std::abs(v - kbar));
  }
  for (double& v : k) v = kbar - v;
  out.rhs = analysis(g, k, u.degree());
  return out;
}

// Solve (I - c Lap) x = b, diagonal in harmonic space.
inline HarmonicField implicit_solve(const HarmonicField& b, double c) {
  HarmonicField x(b.degree());
  for (int l = 0; l <= b.degree(); ++l)
    for (int m = -l; m <= l; ++m)
      x.at(l, m) = b(l, m) / (1.0 + c * l * (l + 1));
  return x;
}

// Explicit part N(u) = rhs(u) - Lap u.
inline HarmonicField s2_explicit_part(const HarmonicField& u,
                                      const HarmonicField& rhs) {
  return rhs - u.laplacian();
}

}  // namespace detail

// One IMEX step of the S^2 flow; returns the new u.
inline HarmonicField imex_step_s2(const detail::S2FlowWorkspace& ws,
                                  const HarmonicField& u, double dt,
                                  Stepper stepper) {
  using namespace detail;
  const S2Rhs r0 = s2_rhs(ws, u);
  const HarmonicField n0 = s2_explicit_part(u, r0.rhs);
  if (stepper == Stepper::ImexEuler) {
    return implicit_solve(u + dt * n0, dt);
  }
  // ARS(2,2,2)
  const double gamma = 1.0 - std::sqrt(2.0) / 2.0;
  const double delta = 1.0 - 1.0 / (2.0 * gamma);
  const HarmonicField u1 = implicit_solve(u + (dt * gamma) * n0, dt * gamma);
  const HarmonicField n1 =
      s2_explicit_part(u1, s2_rhs(ws, u1).rhs);
  const HarmonicField b = u + (dt * delta) * n0 + (dt * (1.0 - delta)) * n1 +
                          (dt * (1.0 - gamma)) * u1.laplacian();
  return implicit_solve(b, dt * gamma);
}

// Time-derivative field of u for g = e^{2u} sigma~.
inline HarmonicField flow_rhs_s2(const ConformalMetricS2& m) {
  detail::S2FlowWorkspace ws(m.degree());
  return detail::s2_rhs(ws, m.u).rhs;
}

struct FlowResultS2 {
  bool converged = false;
  ConformalMetricS2 metric;
  FlowTrace trace;
  std::string message;
  int steps = 0;
};

inline FlowResultS2 run_flow_to_round(const ConformalMetricS2& m0,
                                      const FlowConfig& cfg) {
  cfg.validate();
  detail::S2FlowWorkspace ws(m0.degree());
  {
    const PinchingReport pre = pinching_report_s2(*ws.base, m0);
    if (pre.verdict != PinchingVerdict::StrictlyQuarterPinched)
      throw std::invalid_argument(
          "run_flow_to_round: initial metric is not pinched (K_min = " +
          std::to_string(pre.k_min) + ")");
  }
  const bool even = m0.antipodal_even;
  HarmonicField u = m0.u;
  FlowResultS2 out;
  double t = 0.0;
  const double area0 = [&] {
    return detail::s2_rhs(ws, u).area;
  }();
  int dwell = 0;
  while (true) {
    const detail::S2Rhs r = detail::s2_rhs(ws, u);
    FlowSample s;
    s.time = t;
    s.area_or_volume = r.area;
    s.k_min = r.k_min;
    s.k_max = r.k_max;
    s.ratio = r.k_min > 0.0 ? r.k_max / r.k_min
                            : std::numeric_limits<double>::infinity();
    s.residual = r.residual;
    out.trace.samples.push_back(s);
    if (r.k_min <= 0.0) out.trace.pinching_lost = true;

    if (r.residual < cfg.convergence_tol) {
      ++dwell;
      if (out.steps == 0 || dwell >= cfg.dwell_steps) {
        out.converged = true;
        break;
      }
    } else {
      dwell = 0;
    }
    if (t >= cfg.max_time) {
      out.message = "max_time exceeded without convergence";
      break;
    }
    const double dt = std::min(cfg.dt_max, cfg.max_time - t);
    u = imex_step_s2(ws, u, dt, cfg.stepper);
    // Reproject the area: the continuous flow preserves it exactly, the
    // discrete step only to O(dt^2). Shifts the l=0 mode only.
    const double area = detail::s2_rhs(ws, u).area;
    u.at(0, 0) -= 0.5 * std::log(area / area0) * std::sqrt(kFourPi);
    t += dt;
    ++out.steps;
  }
  out.metric = ConformalMetricS2(even ? u.even_part() : u, even);
  return out;
}

// Rescale a constant-curvature metric to curvature exactly one.
inline ConformalMetricS2 normalize_to_curvature_one(const SphereGrid& grid,
                                                    const ConformalMetricS2& m,
                                                    double tol = 1e-6) {
  const std::vector<double> k = gauss_curvature(grid, m);
  double kmin = k[0], kmax = k[0];
  for (double v : k) {
    kmin = std::min(kmin, v);
    kmax = std::max(kmax, v);
  }
  const double kstar = 0.5 * (kmin + kmax);
  if (!(kstar > 0.0) || kmax - kmin > tol * std::max(1.0, std::abs(kstar)))
    throw std::invalid_argument(
        "normalize_to_curvature_one: curvature not constant (spread " +
        std::to_string(kmax - kmin) + ")");
  HarmonicField u = m.u;
  // g -> K* g, i.e. u -> u + log(K*)/2.
  u.at(0, 0) += 0.5 * std::log(kstar) * std::sqrt(kFourPi);
  return ConformalMetricS2(m.antipodal_even ? u.even_part() : u,
                           m.antipodal_even);
}

// ---------------------------------------------------------------------------
// Homogeneous S^3 flow.

struct MilnorRhs {
  double d1, d2, d3;
};

inline MilnorRhs flow_rhs_milnor(const MilnorMetricS3& m) {
  const std::array<double, 3> ric = milnor_ricci(m);
  const double scal = milnor_scalar(m);
  return MilnorRhs{-2.0 * ric[0] + (2.0 / 3.0) * scal * m.lambda1,
                   -2.0 * ric[1] + (2.0 / 3.0) * scal * m.lambda2,
                   -2.0 * ric[2] + (2.0 / 3.0) * scal * m.lambda3};
}

struct FlowResultS3 {
  bool converged = false;
  MilnorMetricS3 metric;
  FlowTrace trace;
  std::string message;
  int steps = 0;
};

namespace detail {

inline MilnorMetricS3 rk4_step_milnor(const MilnorMetricS3& m, double dt) {
  auto f = [](const MilnorMetricS3& x) { return flow_rhs_milnor(x); };
  auto advance = [](const MilnorMetricS3& x, const MilnorRhs& k, double h) {
    return MilnorMetricS3(x.lambda1 + h * k.d1, x.lambda2 + h * k.d2,
                          x.lambda3 + h * k.d3);
  };
  const MilnorRhs k1 = f(m);
  const MilnorRhs k2 = f(advance(m, k1, dt / 2));
  const MilnorRhs k3 = f(advance(m, k2, dt / 2));
  const MilnorRhs k4 = f(advance(m, k3, dt));
  return MilnorMetricS3(
      m.lambda1 + dt / 6.0 * (k1.d1 + 2 * k2.d1 + 2 * k3.d1 + k4.d1),
      m.lambda2 + dt / 6.0 * (k1.d2 + 2 * k2.d2 + 2 * k3.d2 + k4.d2),
      m.lambda3 + dt / 6.0 * (k1.d3 + 2 * k2.d3 + 2 * k3.d3 + k4.d3));
}

inline double milnor_residual(const MilnorMetricS3& m, double& kmin,
                              double& kmax) {
  const std::array<double, 3> k = milnor_plane_curvatures(m);
  kmin = std::min({k[0], k[1], k[2]});
  kmax = std::max({k[0], k[1], k[2]});
  const double kbar = (k[0] + k[1] + k[2]) / 3.0;
  return std::max({std::abs(k[0] - kbar), std::abs(k[1] - kbar),
                   std::abs(k[2] - kbar)});
}

}  // namespace detail

inline FlowResultS3 run_flow_to_round(const MilnorMetricS3& m0,
                                      const FlowConfig& cfg,
                                      int pinching_samples = 10000) {
  cfg.validate();
  {
    const PinchingReport pre = sectional_extremes_milnor(m0, pinching_samples);
    if (pre.verdict != PinchingVerdict::StrictlyQuarterPinched)
      throw std::invalid_argument(
          "run_flow_to_round: initial metric is not strictly quarter "
          "pinched (ratio " + std::to_string(pre.ratio) + ")");
  }
  MilnorMetricS3 m = m0;
  const double vol0 = total_volume(m0);
  FlowResultS3 out;
  double t = 0.0, dt = cfg.dt_max;
  int dwell = 0;
  const double step_tol = 1e-12;
  while (true) {
    double kmin, kmax;
    const double resid = detail::milnor_residual(m, kmin, kmax);
    FlowSample s;
    s.time = t;
    s.area_or_volume = total_volume(m);
    s.k_min = kmin;
    s.k_max = kmax;
    s.ratio = kmin > 0.0 ? kmax / kmin
                         : std::numeric_limits<double>::infinity();
    s.residual = resid;
    out.trace.samples.push_back(s);
    if (kmin <= 0.0) out.trace.pinching_lost = true;

    if (resid < cfg.convergence_tol) {
      ++dwell;
      if (out.steps == 0 || dwell >= cfg.dwell_steps) {
        out.converged = true;
        break;
      }
    } else {
      dwell = 0;
    }
    if (t >= cfg.max_time) {
      out.message = "max_time exceeded without convergence";
      break;
    }
    // Step-doubling adaptive RK4.
    while (true) {
      const MilnorMetricS3 full = detail::rk4_step_milnor(m, dt);
      const MilnorMetricS3 half =
          detail::rk4_step_milnor(detail::rk4_step_milnor(m, dt / 2), dt / 2);
      const double err = std::max(
          {std::abs(full.lambda1 - half.lambda1),
           std::abs(full.lambda2 - half.lambda2),
           std::abs(full.lambda3 - half.lambda3)});
      if (err < step_tol || dt < 1e-8) {
        m = half;
        t += dt;
        ++out.steps;
        if (err < step_tol / 32.0) dt = std::min(2.0 * dt, cfg.dt_max);
        break;
      }
      dt /= 2.0;
    }
    // Volume reprojection; the ODE conserves it exactly.
    const double scale = std::cbrt(vol0 / total_volume(m));
    m = MilnorMetricS3(m.lambda1 * scale * scale, m.lambda2 * scale * scale,
                       m.lambda3 * scale * scale);
  }
  out.metric = m;
  return out;
}

inline MilnorMetricS3 normalize_to_curvature_one(const MilnorMetricS3& m,
                                                 double tol = 1e-6) {
  const std::array<double, 3> k = milnor_plane_curvatures(m);
  const double kmin = std::min({k[0], k[1], k[2]});
  const double kmax = std::max({k[0], k[1], k[2]});
  const double kstar = 0.5 * (kmin + kmax);
  if (!(kstar > 0.0) || kmax - kmin > tol * std::max(1.0, std::abs(kstar)))
    throw std::invalid_argument(
        "normalize_to_curvature_one: curvature not constant");
  return MilnorMetricS3(m.lambda1 * kstar, m.lambda2 * kstar,
                        m.lambda3 * kstar);
}

}  // namespace roundflow
