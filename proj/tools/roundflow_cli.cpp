// Experiment driver: surface and Milnor-frame flows, isometry
// construction, cocycle reduction, and covering obstruction checks, with
// CSV/SVG artifacts for every run.
//
// Exit codes: 0 success, 2 precondition violation, 3 non-convergence,
// 4 reduction failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "CLI11.hpp"
#include "roundflow/atlas_io.hpp"
#include "roundflow/bundle.hpp"
#include "roundflow/cartan.hpp"
#include "roundflow/flow.hpp"
#include "roundflow/mobius.hpp"
#include "roundflow/obstruction.hpp"
#include "roundflow/random_metric.hpp"
#include "roundflow/svg_plot.hpp"

namespace fs = std::filesystem;
using namespace roundflow;

namespace {

struct CommonOpts {
  int L = 16;
  double dt_max = 0.05;
  double tol = 1e-8;
  double max_time = 200.0;
  unsigned seed = 1;
  bool sequential = false;
  std::string out = "out";
  std::string config_doc;  // consumed before parsing; declared for --help
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--L", o.L, "spectral resolution (max degree)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  cmd->add_option("--dt-max", o.dt_max, "largest flow step")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  cmd->add_option("--tol", o.tol, "flow convergence tolerance")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  cmd->add_option("--max-time", o.max_time, "flow time budget")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  cmd->add_option("--seed", o.seed, "random seed")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  cmd->add_flag("--sequential", o.sequential,
                "single-threaded, bit-reproducible output");
  cmd->add_option("--out", o.out, "output directory")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  cmd->add_option("--config", o.config_doc,
                  "key/value file; entries override earlier flags");
}

FlowConfig flow_config(const CommonOpts& o) {
  FlowConfig cfg;
  cfg.dt_max = o.dt_max;
  cfg.convergence_tol = o.tol;
  cfg.max_time = o.max_time;
  return cfg;
}

std::ofstream open_artifact(const CommonOpts& o, const std::string& name) {
  fs::create_directories(o.out);
  std::ofstream f(fs::path(o.out) / name);
  f.precision(17);
  return f;
}

int fail(const CommonOpts& o, int code, const std::string& what) {
  auto f = open_artifact(o, "error.txt");
  f << what << "\n";
  std::cerr << "error: " << what << "\n";
  return code;
}

void write_trace_artifacts(const CommonOpts& o, const FlowTrace& trace,
                           const std::string& title) {
  {
    auto f = open_artifact(o, "trace.csv");
    trace.write_csv(f);
  }
  std::vector<double> t, r;
  for (const FlowSample& s : trace.samples) {
    t.push_back(s.time);
    r.push_back(s.residual);
  }
  auto f = open_artifact(o, "convergence.svg");
  write_svg_line_plot(f, t, r, title);
}

int cmd_flow_s2(const CommonOpts& o, const std::string& input,
                double amplitude) {
  const SphereGrid grid(o.L);
  ConformalMetricS2 m0 = ConformalMetricS2::round(o.L);
  try {
    if (!input.empty()) {
      std::ifstream f(input);
      if (!f) throw std::invalid_argument("cannot open " + input);
      HarmonicField u = HarmonicField::read(f).truncated(o.L);
      m0 = ConformalMetricS2(u, u.odd_l_mass() < 1e-12);
    } else {
      std::mt19937 rng(o.seed);
      m0 = random_even_pinched(grid, rng, amplitude);
    }
  } catch (const std::exception& e) {
    return fail(o, 2, std::string("flow-s2 setup: ") + e.what());
  }

  FlowResultS2 r;
  try {
    r = run_flow_to_round(m0, flow_config(o));
  } catch (const std::invalid_argument& e) {
    return fail(o, 2, std::string("flow-s2: ") + e.what());
  }
  write_trace_artifacts(o, r.trace, "flow-s2 residual sup|K - Kbar|");

  const ConformalMetricS2 unit = normalize_to_curvature_one(grid, r.metric);
  double k_err = 0.0;
  for (double k : gauss_curvature(grid, unit))
    k_err = std::max(k_err, std::abs(k - 1.0));
  {
    auto f = open_artifact(o, "limit_u.txt");
    unit.u.write(f);
  }
  auto f = open_artifact(o, "summary.txt");
  std::ostringstream line;
  line.precision(12);
  line << "flow-s2: " << (r.converged ? "converged" : "did not converge")
       << " in " << r.steps << " steps, sup|K-1| after rescaling = " << k_err
       << ", area = " << total_area(grid, r.metric);
  if (!r.converged) line << " (" << r.message << ")";
  f << line.str() << "\n";
  std::cout << line.str() << "\n";
  return r.converged ? 0 : 3;
}

int cmd_flow_s3(const CommonOpts& o, std::vector<double> lambda) {
  if (lambda.size() != 3) lambda = {1.0, 1.0, 0.8};
  FlowResultS3 r;
  try {
    r = run_flow_to_round(MilnorMetricS3(lambda[0], lambda[1], lambda[2]),
                          flow_config(o));
  } catch (const std::invalid_argument& e) {
    return fail(o, 2, std::string("flow-s3: ") + e.what());
  }
  write_trace_artifacts(o, r.trace, "flow-s3 curvature spread");
  auto f = open_artifact(o, "summary.txt");
  std::ostringstream line;
  line.precision(12);
  line << "flow-s3: " << (r.converged ? "converged" : "did not converge")
       << " in " << r.steps << " steps, limit lambda = (" << r.metric.lambda1
       << ", " << r.metric.lambda2 << ", " << r.metric.lambda3
       << "), volume = " << total_volume(r.metric);
  if (!r.converged) line << " (" << r.message << ")";
  f << line.str() << "\n";
  std::cout << line.str() << "\n";
  return r.converged ? 0 : 3;
}

int cmd_cartan(const CommonOpts& o, const std::string& input,
               std::vector<double> boost, int depth) {
  const SphereGrid grid(o.L);
  ConformalMetricS2 g = ConformalMetricS2::round(o.L);
  try {
    if (!input.empty()) {
      std::ifstream f(input);
      if (!f) throw std::invalid_argument("cannot open " + input);
      g = ConformalMetricS2(HarmonicField::read(f).truncated(o.L));
    } else if (boost.size() == 3) {
      g = pullback(grid, g,
                   MoebiusMap::boost(Vec3(boost[0], boost[1], boost[2])));
    }
  } catch (const std::exception& e) {
    return fail(o, 2, std::string("cartan setup: ") + e.what());
  }

  CartanOptions opt;
  opt.depth = depth;
  if (o.sequential) opt.n_workers = 1;
  SphereMap phi;
  try {
    phi = cartan_isometry(grid, g, opt);
  } catch (const std::invalid_argument& e) {
    return fail(o, 2, std::string("cartan: ") + e.what());
  } catch (const std::exception& e) {
    return fail(o, 3, std::string("cartan: ") + e.what());
  }
  {
    auto f = open_artifact(o, "isometry.spheremap");
    phi.write(f);
  }
  const double resid =
      check_isometry(phi, g, ConformalMetricS2::round(o.L));
  const double equi = check_equivariance(phi);
  auto f = open_artifact(o, "report.txt");
  std::ostringstream line;
  line.precision(12);
  line << "cartan: isometry residual = " << resid
       << ", equivariance deviation = " << equi;
  f << line.str() << "\n";
  std::cout << line.str() << "\n";
  return 0;
}

int cmd_reduce(const CommonOpts& o, const std::string& atlas_path, int depth) {
  BundleAtlas atlas;
  try {
    atlas = load_atlas_file(atlas_path);
  } catch (const std::exception& e) {
    return fail(o, 2, std::string("reduce: ") + e.what());
  }
  const SphereGrid grid(o.L);
  FiberwiseMetricFamily fam = generate_family(atlas, grid);
  const FamilyReport famrep = validate_family(atlas, fam, grid);
  if (!famrep.pass) {
    std::ostringstream msg;
    msg << "reduce: family inconsistent across charts (max discrepancy "
        << famrep.max_discrepancy << "); raise --L";
    return fail(o, 2, msg.str());
  }
  FlowFamilyResult flowed = flow_family(atlas, fam, grid, flow_config(o));
  if (!flowed.converged) return fail(o, 3, "reduce: " + flowed.message);

  FiberMaps f;
  CartanOptions opt;
  opt.depth = depth;
  if (o.sequential) opt.n_workers = 1;
  try {
    f = build_f(atlas, flowed.rounded, grid, opt);
  } catch (const std::exception& e) {
    return fail(o, 3, std::string("reduce: ") + e.what());
  }
  const ReducedCocycle red = reduce_cocycle(atlas, f);
  {
    auto csv = open_artifact(o, "cocycle.csv");
    red.write_csv(csv);
  }
  const CocycleReport coc = check_cocycle(red, atlas);
  bool ok = red.pass && coc.pass;
  auto rep = open_artifact(o, "summary.txt");
  rep << "charts " << atlas.charts.size() << ", samples " << atlas.n_samples
      << ", entries " << red.entries.size() << "\n";
  rep << "residual pass: " << (red.pass ? "yes" : "no") << "\n";
  rep << "cocycle identities pass: " << (coc.pass ? "yes" : "no")
      << " (max defect " << coc.max_defect << ")\n";
  rep << "fiber flow continuity constant: " << flowed.continuity_constant
      << "\n";
  if (atlas.rp_mode) {
    const OrbitReport orbits = check_orbit_preservation(atlas, f);
    rep << "orbit preservation pass: " << (orbits.pass ? "yes" : "no")
        << " (max deviation " << orbits.max_deviation << ")\n";
    ok = ok && orbits.pass;
  }
  for (const CocycleIssue& issue : coc.issues)
    rep << "issue: " << issue.what << " at (" << issue.chart_i << ","
        << issue.chart_j << "), sample " << issue.sample << ", defect "
        << issue.defect << "\n";
  std::cout << "reduce: " << (ok ? "pass" : "FAIL") << ", "
            << red.entries.size() << " cocycle entries, max defect "
            << coc.max_defect << "\n";
  return ok ? 0 : 4;
}

int cmd_obstruction(const CommonOpts& o, const std::string& preset,
                    const std::string& input) {
  ObstructionProblem prob;
  try {
    if (!preset.empty()) {
      prob = obstruction_preset(preset);
    } else {
      std::ifstream f(input);
      if (!f) throw std::invalid_argument("cannot open " + input);
      prob = load_fragment(f);
    }
    if (prob.i_star < 0 || prob.p_star < 0)
      throw std::invalid_argument(
          "fragment must mark i_star and p_star map indices");
  } catch (const std::exception& e) {
    return fail(o, 2, std::string("obstruction: ") + e.what());
  }
  const ExactnessReport chase = propagate_exactness(prob.fragment);
  auto f = open_artifact(o, "verdict.txt");
  for (const std::string& d : chase.derived) f << "derived: " << d << "\n";
  for (const std::string& c : chase.contradictions)
    f << "contradiction: " << c << "\n";
  if (!chase.consistent) {
    f << "inconsistent fragment\n";
    std::cerr << "obstruction: inconsistent fragment\n";
    return 2;
  }
  const CoveringVerdict v = becker_gottlieb_verdict(
      prob.fragment.maps[prob.i_star], prob.fragment.maps[prob.p_star]);
  f << "verdict: " << to_string(v) << "\n";
  std::cout << "verdict: " << to_string(v) << "\n";
  return 0;
}

// the config file (lines of "key value", # comments) overrides flags
std::vector<std::string> apply_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  for (size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] != "--config") continue;
    const std::string path = args[i + 1];
    args.erase(args.begin() + i, args.begin() + i + 2);
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open config " + path);
    std::string line;
    while (std::getline(f, line)) {
      const size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      std::string key, value;
      if (!(ls >> key)) continue;
      args.push_back("--" + key);
      while (ls >> value) args.push_back(value);
    }
    --i;
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"round-metric flows, isometry construction, cocycle "
               "reduction, and covering obstructions"};
  app.require_subcommand(1);

  CommonOpts o;
  std::string input, atlas_path, preset;
  std::vector<double> lambda, boost;
  double amplitude = 0.08;
  int depth = 2;

  CLI::App* s2 = app.add_subcommand("flow-s2", "flow a conformal metric");
  add_common(s2, o);
  s2->add_option("--input", input, "initial log conformal factor file");
  s2->add_option("--amplitude", amplitude, "random initial amplitude");

  CLI::App* s3 = app.add_subcommand("flow-s3", "flow a Milnor-frame metric");
  add_common(s3, o);
  s3->add_option("--lambda", lambda, "initial diagonal coefficients")
      ->expected(3);

  CLI::App* ca = app.add_subcommand("cartan", "construct the isometry");
  add_common(ca, o);
  ca->add_option("--input", input, "log conformal factor file");
  ca->add_option("--boost", boost, "conformal boost parameter")->expected(3);
  ca->add_option("--depth", depth, "icosphere subdivision depth");

  CLI::App* re = app.add_subcommand("reduce", "reduce an atlas cocycle");
  add_common(re, o);
  re->add_option("--atlas", atlas_path, "atlas file")->required();
  re->add_option("--depth", depth, "icosphere subdivision depth");

  CLI::App* ob = app.add_subcommand("obstruction", "covering verdict");
  add_common(ob, o);
  ob->add_option("--preset", preset, "example-3.3 or example-3.4");
  ob->add_option("--input", input, "fragment file");

  std::vector<std::string> args;
  try {
    args = apply_config(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (s2->parsed()) return cmd_flow_s2(o, input, amplitude);
    if (s3->parsed()) return cmd_flow_s3(o, lambda);
    if (ca->parsed()) return cmd_cartan(o, input, boost, depth);
    if (re->parsed()) return cmd_reduce(o, atlas_path, depth);
    if (ob->parsed()) {
      if (preset.empty() && input.empty()) {
        std::cerr << "obstruction: need --preset or --input\n";
        return 2;
      }
      return cmd_obstruction(o, preset, input);
    }
  } catch (const std::exception& e) {
    return fail(o, 2, e.what());
  }
  return 2;
}
