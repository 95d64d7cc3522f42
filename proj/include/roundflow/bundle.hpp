#pragma once

// The bundle pipeline: fiberwise metric families over a sampled circle,
// consistency across charts, per-fiber flow to round, construction of the
// fiber isometries f_i(b), and reduction of the transition cocycle to
// O(3) by orthogonal Procrustes.

#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include "roundflow/atlas_io.hpp"
#include "roundflow/cartan.hpp"
#include "roundflow/flow.hpp"
#include "roundflow/procrustes.hpp"

namespace roundflow {

// metrics[chart][k] is the chart-local metric at atlas.charts[chart].samples[k].
struct FiberwiseMetricFamily {
  int degree = 0;
  bool rp_mode = false;
  std::vector<std::vector<ConformalMetricS2>> metrics;

  const ConformalMetricS2& at(const BundleAtlas& atlas, int chart,
                              int sample) const {
    const std::vector<int>& s = atlas.charts[chart].samples;
    for (size_t k = 0; k < s.size(); ++k)
      if (s[k] == sample) return metrics[chart][k];
    throw std::invalid_argument("FiberwiseMetricFamily: sample not in chart");
  }
};

// G_i(b) = (h_i(b))_* u_b from the atlas's reference-gauge family.
inline FiberwiseMetricFamily generate_family(const BundleAtlas& atlas,
                                             const SphereGrid& grid) {
  FiberwiseMetricFamily fam;
  fam.degree = grid.degree();
  fam.rp_mode = atlas.rp_mode;
  fam.metrics.resize(atlas.charts.size());
  for (size_t i = 0; i < atlas.charts.size(); ++i) {
    for (int s : atlas.charts[i].samples) {
      const double b = atlas.base_point(s);
      const ConformalMetricS2 ref(atlas.family_field(b).truncated(
          grid.degree()));
      ConformalMetricS2 pushed =
          pushforward(grid, ref, atlas.gauge_map(static_cast<int>(i), b));
      if (atlas.rp_mode)
        pushed = ConformalMetricS2(pushed.u.even_part(), true);
      fam.metrics[i].push_back(std::move(pushed));
    }
  }
  return fam;
}

struct FamilyConsistencyIssue {
  int chart_i = 0, chart_j = 0, sample = 0;
  double discrepancy = 0.0;
};

struct FamilyReport {
  bool pass = true;
  double max_discrepancy = 0.0;
  std::vector<FamilyConsistencyIssue> issues;
};

inline FamilyReport validate_family(const BundleAtlas& atlas,
                                    const FiberwiseMetricFamily& fam,
                                    const SphereGrid& grid,
                                    double tol = 1e-10) {
  FamilyReport rep;
  const int nc = static_cast<int>(atlas.charts.size());
  for (int i = 0; i < nc; ++i) {
    for (int j = 0; j < nc; ++j) {
      if (i == j) continue;
      for (int s : atlas.overlap(i, j)) {
        const double b = atlas.base_point(s);
        const ConformalMetricS2 pushed =
            pushforward(grid, fam.at(atlas, i, s), atlas.transition(i, j, b));
        const double d =
            (pushed.u - fam.at(atlas, j, s).u).coefficient_sup_norm();
        rep.max_discrepancy = std::max(rep.max_discrepancy, d);
        if (d >= tol) {
          rep.pass = false;
          rep.issues.push_back({i, j, s, d});
        }
      }
    }
  }
  return rep;
}

struct FlowFamilyResult {
  bool converged = true;
  FiberwiseMetricFamily rounded;  // normalized to curvature 1
  std::map<std::pair<int, int>, FlowTrace> traces;  // (chart, sample)
  double continuity_constant = 0.0;  // max adjacent limit distance / spacing
  std::string message;
};

// Flow every fiber metric to its round limit and rescale to curvature 1.
inline FlowFamilyResult flow_family(const BundleAtlas& atlas,
                                    const FiberwiseMetricFamily& fam,
                                    const SphereGrid& grid,
                                    const FlowConfig& cfg) {
  FlowFamilyResult out;
  out.rounded.degree = fam.degree;
  out.rounded.rp_mode = fam.rp_mode;
  out.rounded.metrics.resize(fam.metrics.size());
  for (size_t i = 0; i < fam.metrics.size(); ++i) {
    for (size_t k = 0; k < fam.metrics[i].size(); ++k) {
      const int s = atlas.charts[i].samples[k];
      // stability cap: the variable-coefficient part of the curvature is
      // stepped explicitly, so large conformal factors need smaller steps
      FlowConfig fiber_cfg = cfg;
      double sup_u = 0.0;
      for (double v : synthesis(grid, fam.metrics[i][k].u))
        sup_u = std::max(sup_u, std::abs(v));
      const double lam = double(fam.degree) * (fam.degree + 1);
      const double wobble = std::expm1(2.0 * sup_u);
      if (wobble > 1e-12)
        fiber_cfg.dt_max = std::min(cfg.dt_max, 0.5 / (lam * wobble));
      const FlowResultS2 r = run_flow_to_round(fam.metrics[i][k], fiber_cfg);
      out.traces[{static_cast<int>(i), s}] = r.trace;
      if (!r.converged) {
        out.converged = false;
        out.message = "fiber flow did not converge at chart " +
                      atlas.charts[i].name + ", sample " + std::to_string(s) +
                      ": " + r.message;
        return out;
      }
      out.rounded.metrics[i].push_back(
          normalize_to_curvature_one(grid, r.metric));
    }
  }
  // continuity proxy: limit distance between adjacent samples per spacing
  const double spacing = kTwoPi / atlas.n_samples;
  for (size_t i = 0; i < atlas.charts.size(); ++i) {
    const std::vector<int>& s = atlas.charts[i].samples;
    for (size_t k = 0; k + 1 < s.size(); ++k) {
      if ((s[k + 1] - s[k]) % atlas.n_samples != 1) continue;
      const double d = (out.rounded.metrics[i][k + 1].u -
                        out.rounded.metrics[i][k].u)
                           .coefficient_sup_norm();
      out.continuity_constant =
          std::max(out.continuity_constant, d / spacing);
    }
  }
  return out;
}

// f_i(b) = cartan_isometry(G_i(b)).
struct FiberMaps {
  std::vector<std::vector<SphereMap>> maps;  // same shape as family metrics

  const SphereMap& at(const BundleAtlas& atlas, int chart, int sample) const {
    const std::vector<int>& s = atlas.charts[chart].samples;
    for (size_t k = 0; k < s.size(); ++k)
      if (s[k] == sample) return maps[chart][k];
    throw std::invalid_argument("FiberMaps: sample not in chart");
  }
};

inline FiberMaps build_f(const BundleAtlas& atlas,
                         const FiberwiseMetricFamily& rounded,
                         const SphereGrid& grid,
                         const CartanOptions& opt = {.depth = 1}) {
  FiberMaps out;
  out.maps.resize(rounded.metrics.size());
  for (size_t i = 0; i < rounded.metrics.size(); ++i) {
    for (size_t k = 0; k < rounded.metrics[i].size(); ++k) {
      try {
        out.maps[i].push_back(
            cartan_isometry(grid, rounded.metrics[i][k], opt));
      } catch (const std::exception& e) {
        throw std::runtime_error(
            "build_f: chart " + atlas.charts[i].name + ", sample " +
            std::to_string(atlas.charts[i].samples[k]) + ": " + e.what());
      }
    }
  }
  return out;
}

struct ReducedCocycleEntry {
  int chart_i = 0, chart_j = 0, sample = 0;
  double b = 0.0;
  Eigen::Matrix3d beta = Eigen::Matrix3d::Identity();
  double residual = 0.0;
};

struct ReducedCocycle {
  bool rp_mode = false;
  bool pass = true;
  std::vector<ReducedCocycleEntry> entries;

  const ReducedCocycleEntry* find(int i, int j, int sample) const {
    for (const ReducedCocycleEntry& e : entries)
      if (e.chart_i == i && e.chart_j == j && e.sample == sample) return &e;
    return nullptr;
  }

  void write_csv(std::ostream& os) const {
    os << "i,j,b,m00,m01,m02,m10,m11,m12,m20,m21,m22,residual\n";
    os.precision(17);
    for (const ReducedCocycleEntry& e : entries) {
      os << e.chart_i << "," << e.chart_j << "," << e.b;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) os << "," << e.beta(r, c);
      os << "," << e.residual << "\n";
    }
  }
};

// Canonical sign for a class {B, -B}: positive trace, tie-broken by the
// first nonzero entry in row-major order being positive.
inline Eigen::Matrix3d canonical_sign(Eigen::Matrix3d b, double tol = 1e-9) {
  if (b.trace() < -tol) return -b;
  if (b.trace() > tol) return b;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      if (b(r, c) > tol) return b;
      if (b(r, c) < -tol) return -b;
    }
  return b;
}

// beta_ij(b) = f_j(b) o alpha_ij(b) o f_i(b)^{-1}, certified orthogonal.
// The inverse is never formed: B is fitted against the relation
// B f_i(p) = f_j(alpha_ij(b) p) over sample nodes.
inline ReducedCocycle reduce_cocycle(const BundleAtlas& atlas,
                                     const FiberMaps& f,
                                     double residual_tol = 1e-6) {
  ReducedCocycle out;
  out.rp_mode = atlas.rp_mode;
  const int nc = static_cast<int>(atlas.charts.size());
  for (int i = 0; i < nc; ++i) {
    for (int j = 0; j < nc; ++j) {
      for (int s : atlas.overlap(i, j)) {
        const double b = atlas.base_point(s);
        const MoebiusMap alpha = atlas.transition(i, j, b);
        const SphereMap& fi = f.at(atlas, i, s);
        const SphereMap& fj = f.at(atlas, j, s);
        // f_i is already tabulated at its own nodes
        const std::vector<Vec3>& lhs = fi.images();
        std::vector<Vec3> rhs;
        rhs.reserve(fi.nodes().vertices.size());
        for (const Vec3& p : fi.nodes().vertices) rhs.push_back(fj(alpha(p)));
        const ProcrustesFit fit = procrustes_fit(lhs, rhs);
        ReducedCocycleEntry e;
        e.chart_i = i;
        e.chart_j = j;
        e.sample = s;
        e.b = b;
        e.beta = out.rp_mode ? canonical_sign(fit.q) : fit.q;
        e.residual = fit.residual_sup;
        if (e.residual >= residual_tol) out.pass = false;
        out.entries.push_back(std::move(e));
      }
    }
  }
  return out;
}

struct CocycleIssue {
  std::string what;
  int chart_i = 0, chart_j = 0, chart_k = -1, sample = 0;
  double defect = 0.0;
};

struct CocycleReport {
  bool pass = true;
  double max_defect = 0.0;
  std::vector<CocycleIssue> issues;
};

namespace detail {

inline double matrix_defect_mod_sign(const Eigen::Matrix3d& a,
                                     const Eigen::Matrix3d& b, bool mod_sign) {
  const double d = (a - b).cwiseAbs().maxCoeff();
  if (!mod_sign) return d;
  return std::min(d, (a + b).cwiseAbs().maxCoeff());
}

}  // namespace detail

inline CocycleReport check_cocycle(const ReducedCocycle& c,
                                   const BundleAtlas& atlas,
                                   double tol = 1e-6) {
  CocycleReport rep;
  auto note = [&rep, tol](CocycleIssue issue) {
    rep.max_defect = std::max(rep.max_defect, issue.defect);
    if (issue.defect >= tol) {
      rep.pass = false;
      rep.issues.push_back(std::move(issue));
    }
  };
  const int nc = static_cast<int>(atlas.charts.size());
  for (const ReducedCocycleEntry& e : c.entries) {
    if (orthogonality_defect(e.beta) >= tol) {
      rep.pass = false;
      rep.issues.push_back({"beta not orthogonal", e.chart_i, e.chart_j, -1,
                            e.sample, orthogonality_defect(e.beta)});
    }
    if (e.chart_i == e.chart_j)
      note({"beta_ii != I", e.chart_i, e.chart_j, -1, e.sample,
            detail::matrix_defect_mod_sign(
                e.beta, Eigen::Matrix3d::Identity(), c.rp_mode)});
  }
  // symmetry beta_ji = beta_ij^T
  for (const ReducedCocycleEntry& e : c.entries) {
    if (e.chart_i >= e.chart_j) continue;
    const ReducedCocycleEntry* back =
        c.find(e.chart_j, e.chart_i, e.sample);
    if (!back) continue;
    note({"beta_ji != beta_ij^T", e.chart_i, e.chart_j, -1, e.sample,
          detail::matrix_defect_mod_sign(back->beta, e.beta.transpose(),
                                         c.rp_mode)});
  }
  // triple overlaps: beta_ik = beta_jk beta_ij
  for (int i = 0; i < nc; ++i)
    for (int j = 0; j < nc; ++j)
      for (int k = 0; k < nc; ++k) {
        if (i == j || j == k || i == k) continue;
        for (int s : atlas.overlap(i, j)) {
          if (!atlas.chart_contains(k, s)) continue;
          const ReducedCocycleEntry* ik = c.find(i, k, s);
          const ReducedCocycleEntry* ij = c.find(i, j, s);
          const ReducedCocycleEntry* jk = c.find(j, k, s);
          if (!ik || !ij || !jk) continue;
          note({"cocycle identity", i, j, k, s,
                detail::matrix_defect_mod_sign(
                    ik->beta, Eigen::Matrix3d(jk->beta * ij->beta),
                    c.rp_mode)});
        }
      }
  return rep;
}

struct OrbitReport {
  bool pass = true;
  double max_deviation = 0.0;
  std::vector<CocycleIssue> issues;
};

// Each f_i(b) must send antipodal pairs to antipodal pairs (the Z_2 orbit
// condition; identical to antipodal equivariance).
inline OrbitReport check_orbit_preservation(const BundleAtlas& atlas,
                                            const FiberMaps& f,
                                            double tol = 1e-6) {
  OrbitReport rep;
  for (size_t i = 0; i < f.maps.size(); ++i) {
    for (size_t k = 0; k < f.maps[i].size(); ++k) {
      const double dev = check_equivariance(f.maps[i][k]);
      rep.max_deviation = std::max(rep.max_deviation, dev);
      if (dev >= tol) {
        rep.pass = false;
        rep.issues.push_back({"orbit not preserved", static_cast<int>(i), -1,
                              -1, atlas.charts[i].samples[k], dev});
      }
    }
  }
  return rep;
}

}  // namespace roundflow
