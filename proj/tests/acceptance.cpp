// Acceptance gate: one pass/fail line per criterion, exit code = #failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "roundflow/atlas_io.hpp"
#include "roundflow/bundle.hpp"
#include "roundflow/cartan.hpp"
#include "roundflow/flow.hpp"
#include "roundflow/geodesic.hpp"
#include "roundflow/mobius.hpp"
#include "roundflow/obstruction.hpp"
#include "roundflow/procrustes.hpp"
#include "roundflow/random_metric.hpp"
#include "roundflow/snf.hpp"

using namespace roundflow;

namespace {

int failures = 0;

void report(int idx, const char* title, bool ok, const std::string& detail) {
  std::printf("criterion %d [%s] %s: %s\n", idx, ok ? "PASS" : "FAIL", title,
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// --------------------------------------------------------------------------
// 1-3. Twenty seeded even pinched surface flows (L = 24, ||u0||_inf <= 0.1):
//   1. sup|K - 1| < 1e-6 after rescaling, relative area drift < 1e-8 per
//      unit flow time, < 60 s total;
//   2. |int K dA - 4 pi| / 4 pi < 1e-10 at every step;
//   3. odd-l coefficient mass < 1e-10 along every run.
// The same trajectories also feed the (a,a,c) symmetry half of criterion 3.

struct SurfaceFlowStats {
  bool converged_all = true;
  double worst_k = 0.0;           // sup|K - 1| after rescaling
  double worst_area_rate = 0.0;   // relative area drift per unit flow time
  double worst_gauss_bonnet = 0.0;
  double worst_odd_mass = 0.0;
  double seconds = 0.0;
};

SurfaceFlowStats run_surface_flows() {
  const int L = 24;
  auto grid = shared_grid(L);
  SurfaceFlowStats st;
  FlowConfig cfg;  // dt_max 0.05, tol 1e-8
  const auto t0 = std::chrono::steady_clock::now();
  for (unsigned seed = 1; seed <= 20; ++seed) {
    std::mt19937 rng(seed);
    const ConformalMetricS2 m0 = random_even_pinched(*grid, rng, 0.1);
    detail::S2FlowWorkspace ws(L);
    HarmonicField u = m0.u;
    const double area0 = detail::s2_rhs(ws, u).area;
    double t = 0.0;
    int dwell = 0, steps = 0;
    bool converged = false;
    while (t < cfg.max_time) {
      const detail::S2Rhs r = detail::s2_rhs(ws, u);
      // Gauss-Bonnet on the dealiased grid: int K dA = int (1 - Lap u) dsigma
      {
        const SphereGrid& g = *ws.padded;
        const std::vector<double> uv = synthesis(g, u);
        const std::vector<double> lap = synthesis(g, u.laplacian());
        std::vector<double> kda(uv.size());
        for (size_t i = 0; i < uv.size(); ++i) kda[i] = 1.0 - lap[i];
        const double gb = std::abs(g.integrate(kda) - kFourPi) / kFourPi;
        st.worst_gauss_bonnet = std::max(st.worst_gauss_bonnet, gb);
      }
      st.worst_odd_mass = std::max(st.worst_odd_mass, u.odd_l_mass());
      if (steps > 0) {
        const double rate = std::abs(r.area - area0) / (area0 * t);
        st.worst_area_rate = std::max(st.worst_area_rate, rate);
      }
      if (r.residual < cfg.convergence_tol) {
        if (steps == 0 || ++dwell >= cfg.dwell_steps) {
          converged = true;
          break;
        }
      } else {
        dwell = 0;
      }
      u = imex_step_s2(ws, u, cfg.dt_max, cfg.stepper);
      const double area = detail::s2_rhs(ws, u).area;
      u.at(0, 0) -= 0.5 * std::log(area / area0) * std::sqrt(kFourPi);
      t += cfg.dt_max;
      ++steps;
    }
    st.converged_all = st.converged_all && converged;
    const ConformalMetricS2 limit =
        normalize_to_curvature_one(*grid, ConformalMetricS2(u.even_part(), true));
    for (double k : gauss_curvature(*grid, limit))
      st.worst_k = std::max(st.worst_k, std::abs(k - 1.0));
  }
  st.seconds = std::chrono::duration<double>(
                   std::chrono::steady_clock::now() - t0).count();
  return st;
}

// (a,a,c) homogeneous runs: |lambda1 - lambda2| < 1e-10 along the flow.
double aac_symmetry_drift() {
  double worst = 0.0;
  for (const MilnorMetricS3 start :
       {MilnorMetricS3(1.0, 1.0, 0.8), MilnorMetricS3(1.3, 1.3, 1.04),
        MilnorMetricS3(1.0, 1.0, 1.2)}) {
    MilnorMetricS3 m = start;
    for (int s = 0; s < 2000; ++s) {
      m = detail::rk4_step_milnor(m, 0.01);
      worst = std::max(worst, std::abs(m.lambda1 - m.lambda2));
    }
  }
  return worst;
}

// --------------------------------------------------------------------------
// 4. (1,1,0.8) converges to 0.8^{1/3}; Berger boundary t^2 = 4/7 by
//    bisection on the pinching verdict.

bool homogeneous_limit(std::string& detail) {
  FlowConfig cfg;
  cfg.convergence_tol = 1e-10;
  const FlowResultS3 r = run_flow_to_round(MilnorMetricS3(1.0, 1.0, 0.8), cfg);
  const double target = std::cbrt(0.8);
  const double err = std::max(
      {std::abs(r.metric.lambda1 - target), std::abs(r.metric.lambda2 - target),
       std::abs(r.metric.lambda3 - target)});

  auto pinched = [](double t2) {
    return sectional_extremes_milnor({1.0, 1.0, t2}, 4000).verdict ==
           PinchingVerdict::StrictlyQuarterPinched;
  };
  double lo = 0.3, hi = 0.9;
  while (hi - lo > 1e-7) {
    const double mid = 0.5 * (lo + hi);
    (pinched(mid) ? hi : lo) = mid;
  }
  const double boundary_err = std::abs(0.5 * (lo + hi) - 4.0 / 7.0);
  detail = "limit err " + fmt(err) + ", boundary err " + fmt(boundary_err);
  return r.converged && err < 1e-6 && boundary_err < 1e-4;
}

// --------------------------------------------------------------------------
// 5. Cartan isometries for 20 random Moebius-round metrics; equivariance on
//    even inputs; continuity ratio 2 +- 0.2 under halved perturbations.

bool cartan_criterion(std::string& detail) {
  const int L = 12;
  auto grid = shared_grid(L);
  const ConformalMetricS2 sigma = ConformalMetricS2::round(L);
  std::mt19937 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> ang(0.0, kTwoPi);
  CartanOptions opt;
  opt.depth = 1;
  double worst_res = 0.0, worst_north = 0.0;
  for (int i = 0; i < 20; ++i) {
    Vec3 axis(gauss(rng), gauss(rng), gauss(rng));
    axis.normalize();
    Vec3 w(gauss(rng), gauss(rng), gauss(rng));
    w *= 0.3 / std::max(1.0, w.norm());
    const MoebiusMap m =
        MoebiusMap::boost(w) * MoebiusMap::rotation(axis, ang(rng));
    const ConformalMetricS2 g = pullback(*grid, sigma, m);
    const SphereMap phi = cartan_isometry(*grid, g, opt);
    worst_res = std::max(worst_res, check_isometry(phi, g, sigma));
    worst_north =
        std::max(worst_north, (phi(Vec3(0, 0, 1)) - Vec3(0, 0, 1)).norm());
  }

  // even inputs: flow a random even pinched metric to round, then check
  // the constructed isometry commutes with the antipodal map
  double worst_equi = 0.0;
  for (unsigned seed = 3; seed <= 5; ++seed) {
    std::mt19937 r2(seed);
    const ConformalMetricS2 m0 = random_even_pinched(*grid, r2, 0.08);
    FlowConfig cfg;
    const FlowResultS2 fr = run_flow_to_round(m0, cfg);
    if (!fr.converged) {
      detail = "even-input flow did not converge";
      return false;
    }
    const ConformalMetricS2 g = normalize_to_curvature_one(*grid, fr.metric);
    const SphereMap phi = cartan_isometry(*grid, g, opt);
    worst_equi = std::max(worst_equi, check_equivariance(phi));
  }

  CartanOptions copt;
  copt.depth = 2;
  const Vec3 dir(0.4, -0.3, 0.2);
  auto phi_at = [&](double eps) {
    return cartan_isometry(
        *grid, pullback(*grid, sigma, MoebiusMap::boost(eps * dir)), copt);
  };
  const SphereMap phi0 = phi_at(0.0);
  const double d1 = sup_distance(phi_at(0.2), phi0);
  const double d2 = sup_distance(phi_at(0.1), phi0);
  const double d3 = sup_distance(phi_at(0.05), phi0);
  const bool ratio_ok =
      std::abs(d1 / d2 - 2.0) <= 0.2 && std::abs(d2 / d3 - 2.0) <= 0.2;

  detail = "residual " + fmt(worst_res) + ", base point " + fmt(worst_north) +
           ", equivariance " + fmt(worst_equi) + ", ratios " + fmt(d1 / d2) +
           "/" + fmt(d2 / d3);
  return worst_res < 1e-4 && worst_north < 1e-10 && worst_equi < 1e-6 &&
         ratio_ok;
}

// --------------------------------------------------------------------------
// 6. Single-mode decay rates from flow traces match l(l+1) - 2 within 1%.

bool decay_rates(std::string& detail) {
  const int L = 12;
  std::ostringstream rates;
  bool ok = true;
  for (int l : {2, 3, 4}) {
    HarmonicField u0(L);
    u0.at(l, 1) = 1e-5;
    FlowConfig cfg;
    cfg.dt_max = 1e-3;
    cfg.convergence_tol = 1e-14;
    cfg.max_time = 0.35;
    const FlowResultS2 r = run_flow_to_round(ConformalMetricS2(u0), cfg);
    const FlowTrace& tr = r.trace;
    auto sample_at = [&](double t) {
      size_t best = 0;
      for (size_t i = 0; i < tr.samples.size(); ++i)
        if (std::abs(tr.samples[i].time - t) <
            std::abs(tr.samples[best].time - t))
          best = i;
      return tr.samples[best];
    };
    const FlowSample s1 = sample_at(0.05), s2 = sample_at(0.30);
    const double rate =
        std::log(s1.residual / s2.residual) / (s2.time - s1.time);
    const double expect = l * (l + 1) - 2.0;
    if (std::abs(rate - expect) / expect >= 1e-2) ok = false;
    rates << (l > 2 ? ", " : "") << "l=" << l << ": " << fmt(rate);
  }
  detail = rates.str();
  return ok;
}

// --------------------------------------------------------------------------
// 7. Demo-atlas cocycle reduction; raw transitions fail orthogonality;
//    rp_mode variant passes modulo +-I with representative independence.

bool cocycle_reduction(std::string& detail) {
  const BundleAtlas atlas =
      load_atlas_file(std::string(ROUNDFLOW_DATA_DIR) + "/demo_atlas.txt");
  const SphereGrid grid(16);

  double worst_raw = 0.0;
  const Icosphere& probe = detail::shared_icosphere(1);
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      for (int s : atlas.overlap(i, j)) {
        const MoebiusMap alpha = atlas.transition(i, j, atlas.base_point(s));
        std::vector<Vec3> lhs, rhs;
        for (const Vec3& p : probe.vertices) {
          lhs.push_back(p);
          rhs.push_back(alpha(p));
        }
        worst_raw = std::max(worst_raw, procrustes_fit(lhs, rhs).residual_sup);
      }

  const FiberwiseMetricFamily fam = generate_family(atlas, grid);
  FlowConfig cfg;
  cfg.convergence_tol = 1e-9;
  const FlowFamilyResult flowed = flow_family(atlas, fam, grid, cfg);
  if (!flowed.converged) {
    detail = "fiber flow: " + flowed.message;
    return false;
  }
  const FiberMaps f = build_f(atlas, flowed.rounded, grid);
  const ReducedCocycle red = reduce_cocycle(atlas, f);
  double worst_orth = 0.0;
  for (const ReducedCocycleEntry& e : red.entries)
    worst_orth = std::max(worst_orth, orthogonality_defect(e.beta));
  const CocycleReport coc = check_cocycle(red, atlas);

  // rp variant at a lighter grid; flip representative signs and recheck
  const BundleAtlas rp =
      load_atlas_file(std::string(ROUNDFLOW_DATA_DIR) + "/demo_atlas_rp.txt");
  const SphereGrid rp_grid(12);
  const FlowFamilyResult rp_flowed =
      flow_family(rp, generate_family(rp, rp_grid), rp_grid, cfg);
  if (!rp_flowed.converged) {
    detail = "rp fiber flow: " + rp_flowed.message;
    return false;
  }
  ReducedCocycle rp_red =
      reduce_cocycle(rp, build_f(rp, rp_flowed.rounded, rp_grid));
  const CocycleReport rp_coc = check_cocycle(rp_red, rp);
  std::mt19937 rng(11);
  for (ReducedCocycleEntry& e : rp_red.entries)
    if (rng() & 1u) e.beta = -e.beta;
  const CocycleReport rp_flipped = check_cocycle(rp_red, rp);

  detail = "raw " + fmt(worst_raw) + ", orth " + fmt(worst_orth) +
           ", identities " + fmt(coc.max_defect) + ", rp " +
           fmt(rp_coc.max_defect) + "/" + fmt(rp_flipped.max_defect);
  return red.pass && worst_orth < 1e-6 && coc.pass && coc.max_defect < 1e-6 &&
         worst_raw > 0.1 && rp_red.pass && rp_coc.pass && rp_flipped.pass;
}

// --------------------------------------------------------------------------
// 8. Obstruction presets both decide NoCovering, for the stated reasons.

bool obstruction_presets(std::string& detail) {
  ObstructionProblem a = obstruction_preset("example-3.3");
  const CoveringVerdict va = a.decide();
  const Tri inj = check_injective(a.fragment.maps[a.i_star]);

  ObstructionProblem b = obstruction_preset("example-3.4");
  const CoveringVerdict vb = b.decide();
  const bool zero = b.fragment.maps[b.i_star].props.zero;

  detail = std::string("3.3: ") + to_string(va) + " (injective " +
           to_string(inj) + "), 3.4: " + to_string(vb) + " (i_star zero " +
           (zero ? "yes" : "no") + ")";
  return va == CoveringVerdict::NoCovering && inj == Tri::No &&
         vb == CoveringVerdict::NoCovering && zero;
}

// --------------------------------------------------------------------------
// 9. Oracle agreement: geodesic conjugation oracle and brute-force
//    nullspace oracle.

int nullity_oracle(const IMat& a) {
  Eigen::MatrixXd d = a.cast<double>();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(d);
  lu.setThreshold(1e-9);
  return static_cast<int>(a.cols() - lu.rank());
}

bool oracle_agreement(std::string& detail) {
  const int L = 20;
  SphereGrid grid(L);
  const MoebiusMap m = MoebiusMap::boost(Vec3(0.3, -0.1, 0.2)) *
                       MoebiusMap::rotation(Vec3(0, 1, 0).normalized(), 0.6);
  const ConformalMetricS2 g =
      pullback(grid, ConformalMetricS2::round(L), m);
  const MoebiusMap minv = m.inverse();
  std::mt19937 rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> len(0.1, 2.2);
  double worst_geo = 0.0;
  int tested = 0;
  while (tested < 20) {
    Vec3 p(gauss(rng), gauss(rng), gauss(rng));
    p.normalize();
    Vec3 v(gauss(rng), gauss(rng), gauss(rng));
    v -= v.dot(p) * p;
    v *= len(rng) / v.norm();
    if (g_norm(g, p, v) > kPi - 0.3) continue;
    const Vec3 q = exp_map(g, p, v);
    const Vec3 q_oracle = minv(exp_round(m(p), m.differential(p, v)));
    worst_geo = std::max(worst_geo, (q - q_oracle).norm());
    const Vec3 v_back = log_map(g, p, q);
    const Vec3 v_oracle = minv.differential(m(p), log_round(m(p), m(q)));
    worst_geo = std::max(worst_geo, (v_back - v_oracle).norm());
    ++tested;
  }

  std::uniform_int_distribution<int> dim(1, 6), entry(-9, 9);
  bool snf_ok = true;
  for (int trial = 0; trial < 200 && snf_ok; ++trial) {
    const int r = dim(rng), c = dim(rng);
    IMat a(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) a(i, j) = entry(rng);
    const SmithForm f = smith_normal_form(a);
    const int nullity = nullity_oracle(a);
    const IMat k = integer_kernel(a);
    snf_ok = snf_ok && f.rank == c - nullity && k.cols() == nullity &&
             (a * k).isZero() &&
             (k.cols() == 0 || smith_normal_form(k).rank == k.cols());
  }

  detail = "geodesic " + fmt(worst_geo) + ", nullspace " +
           (snf_ok ? "agrees on 200 matrices" : "MISMATCH");
  return worst_geo < 1e-8 && snf_ok;
}

}  // namespace

int main() {
  {
    const SurfaceFlowStats st = run_surface_flows();
    report(1, "surface flow convergence",
           st.converged_all && st.worst_k < 1e-6 &&
               st.worst_area_rate < 1e-8 && st.seconds < 60.0,
           "sup|K-1| " + fmt(st.worst_k) + ", area drift " +
               fmt(st.worst_area_rate) + "/unit time, " + fmt(st.seconds) +
               " s for 20 runs");
    report(2, "Gauss-Bonnet at every step", st.worst_gauss_bonnet < 1e-10,
           "max relative defect " + fmt(st.worst_gauss_bonnet));
    const double aac = aac_symmetry_drift();
    report(3, "symmetry preservation",
           st.worst_odd_mass < 1e-10 && aac < 1e-10,
           "odd-l mass " + fmt(st.worst_odd_mass) + ", |l1-l2| " + fmt(aac));
  }
  {
    std::string d;
    const bool ok = homogeneous_limit(d);
    report(4, "homogeneous flow limit and pinching boundary", ok, d);
  }
  {
    std::string d;
    const bool ok = cartan_criterion(d);
    report(5, "Cartan isometry", ok, d);
  }
  {
    std::string d;
    const bool ok = decay_rates(d);
    report(6, "linearized decay rates", ok, d);
  }
  {
    std::string d;
    const bool ok = cocycle_reduction(d);
    report(7, "cocycle reduction", ok, d);
  }
  {
    std::string d;
    const bool ok = obstruction_presets(d);
    report(8, "obstruction verdicts", ok, d);
  }
  {
    std::string d;
    const bool ok = oracle_agreement(d);
    report(9, "oracle agreement", ok, d);
  }
  return failures;
}
