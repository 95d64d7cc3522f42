#pragma once

// Finitely generated abelian groups, declared or matrix-backed
// homomorphisms between them, exact-sequence bookkeeping, and the two
// covering-fibration conditions (injectivity of the fiber inclusion on
// fundamental groups, and a right inverse for the projection).

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "roundflow/snf.hpp"

namespace roundflow {

struct FgAbGroup {
  int rank = 0;
  std::vector<std::int64_t> torsion;  // invariant factors, divisibility order

  FgAbGroup() = default;
  FgAbGroup(int r, std::vector<std::int64_t> t) : rank(r), torsion(std::move(t)) {
    if (rank < 0) throw std::invalid_argument("FgAbGroup: negative rank");
    for (size_t i = 0; i < torsion.size(); ++i) {
      if (torsion[i] < 2)
        throw std::invalid_argument("FgAbGroup: invariant factor < 2");
      if (i > 0 && torsion[i] % torsion[i - 1] != 0)
        throw std::invalid_argument("FgAbGroup: factors must divide in order");
    }
  }

  static FgAbGroup trivial() { return FgAbGroup(); }
  static FgAbGroup free(int r) { return FgAbGroup(r, {}); }
  static FgAbGroup cyclic(std::int64_t n) { return FgAbGroup(0, {n}); }

  bool is_trivial() const { return rank == 0 && torsion.empty(); }
  int n_generators() const { return rank + static_cast<int>(torsion.size()); }

  // columns spanning the relation lattice in generator coordinates
  IMat relation_lattice() const {
    IMat r = IMat::Zero(n_generators(), torsion.size());
    for (size_t i = 0; i < torsion.size(); ++i)
      r(rank + static_cast<int>(i), static_cast<int>(i)) = torsion[i];
    return r;
  }

  bool operator==(const FgAbGroup& o) const {
    return rank == o.rank && torsion == o.torsion;
  }

  std::string to_string() const {
    if (is_trivial()) return "0";
    std::ostringstream os;
    bool first = true;
    auto sep = [&] {
      if (!first) os << " + ";
      first = false;
    };
    if (rank == 1) {
      sep();
      os << "Z";
    } else if (rank > 1) {
      sep();
      os << "Z^" << rank;
    }
    for (std::int64_t n : torsion) {
      sep();
      os << "Z/" << n;
    }
    return os.str();
  }
};

// "Z^r + Z/n1 + Z/n2"; also "Z", "0", "1".  Torsion in any order; it is
// renormalized to invariant factors.
inline FgAbGroup parse_group(const std::string& text) {
  int rank = 0;
  std::vector<std::int64_t> cyclics;
  std::string token;
  std::istringstream is(text);
  while (std::getline(is, token, '+')) {
    std::istringstream ts(token);
    std::string w;
    if (!(ts >> w)) continue;
    std::string extra;
    if (ts >> extra)
      throw std::invalid_argument("parse_group: bad summand '" + token + "'");
    if (w == "0" || w == "1") continue;
    if (w == "Z") {
      ++rank;
    } else if (w.rfind("Z^", 0) == 0) {
      rank += std::stoi(w.substr(2));
    } else if (w.rfind("Z/", 0) == 0) {
      cyclics.push_back(std::stoll(w.substr(2)));
    } else {
      throw std::invalid_argument("parse_group: bad summand '" + w + "'");
    }
  }
  if (cyclics.empty()) return FgAbGroup(rank, {});
  IMat diag = IMat::Zero(cyclics.size(), cyclics.size());
  for (size_t i = 0; i < cyclics.size(); ++i)
    diag(static_cast<int>(i), static_cast<int>(i)) = cyclics[i];
  std::vector<std::int64_t> factors;
  for (std::int64_t d : smith_normal_form(diag).invariant_factors)
    if (d > 1) factors.push_back(d);
  return FgAbGroup(rank, std::move(factors));
}

enum class Tri { Yes, No, Undecided };

inline const char* to_string(Tri t) {
  switch (t) {
    case Tri::Yes: return "yes";
    case Tri::No: return "no";
    default: return "undecided";
  }
}

struct MapProps {
  bool zero = false;
  bool injective = false;
  bool surjective = false;

  bool operator==(const MapProps&) const = default;
};

// A homomorphism between f.g. abelian groups, given either as an integer
// matrix on generators (free generators first) or as declared properties.
struct MapSpec {
  FgAbGroup source, target;
  std::optional<IMat> matrix;
  MapProps props;  // declared, or derived from the matrix
  std::string name;

  MapSpec(FgAbGroup src, FgAbGroup tgt, IMat m, std::string nm = "")
      : source(std::move(src)), target(std::move(tgt)), matrix(std::move(m)),
        name(std::move(nm)) {
    if (matrix->rows() != target.n_generators() ||
        matrix->cols() != source.n_generators())
      throw std::invalid_argument("MapSpec: matrix shape mismatch");
    check_well_defined();
    derive_props_from_matrix();
  }

  MapSpec(FgAbGroup src, FgAbGroup tgt, MapProps declared = {},
          std::string nm = "")
      : source(std::move(src)), target(std::move(tgt)), props(declared),
        name(std::move(nm)) {
    if (props.zero && props.injective && !source.is_trivial())
      throw std::invalid_argument(
          "MapSpec: zero and injective need a trivial source");
    if (props.zero && props.surjective && !target.is_trivial())
      throw std::invalid_argument(
          "MapSpec: zero and surjective need a trivial target");
  }

 private:
  // n * column must die in the target for every order-n generator
  void check_well_defined() const {
    const IMat rel = target.relation_lattice();
    for (size_t j = 0; j < source.torsion.size(); ++j) {
      const IVec img =
          source.torsion[j] *
          matrix->col(source.rank + static_cast<int>(j));
      if (!lattice_contains(rel, img))
        throw std::invalid_argument(
            "MapSpec: matrix is not a homomorphism (torsion order not "
            "respected)");
    }
  }

  void derive_props_from_matrix() {
    const IMat rel_t = target.relation_lattice();
    const IMat rel_s = source.relation_lattice();
    // zero: every generator image is a relation of the target
    props.zero = lattice_subset(*matrix, rel_t);
    // kernel: x with (matrix)x in the target relations; injective when all
    // such x are relations of the source
    IMat sys(target.n_generators(),
             matrix->cols() + rel_t.cols());
    sys << *matrix, rel_t;
    const IMat null_space = integer_kernel(sys);
    props.injective = true;
    for (int j = 0; j < null_space.cols(); ++j) {
      const IVec x = null_space.col(j).head(source.n_generators());
      bool dies = true;
      for (int i = 0; i < source.rank; ++i) dies = dies && x(i) == 0;
      for (size_t i = 0; i < source.torsion.size(); ++i)
        dies = dies &&
               x(source.rank + static_cast<int>(i)) % source.torsion[i] == 0;
      if (!dies) props.injective = false;
    }
    // surjective: image plus target relations spans the generator lattice
    const SmithForm f = smith_normal_form(sys);
    props.surjective = f.rank == target.n_generators();
    for (std::int64_t d : f.invariant_factors)
      if (d != 1) props.surjective = false;
    if (source.is_trivial()) props.injective = true;
    if (target.is_trivial()) props.surjective = true;
  }
};

inline Tri check_injective(const MapSpec& m) {
  if (m.source.is_trivial()) return Tri::Yes;
  if (m.matrix) return m.props.injective ? Tri::Yes : Tri::No;
  if (m.props.injective) return Tri::Yes;
  if (m.props.zero || m.target.is_trivial()) return Tri::No;
  return Tri::Undecided;
}

namespace detail {

// does a section matrix s with (m.matrix) s = id exist over the groups?
inline bool splits(const MapSpec& m) {
  const int ns = m.source.n_generators();
  const int nt = m.target.n_generators();
  const IMat rel_s = m.source.relation_lattice();
  const IMat rel_t = m.target.relation_lattice();
  const int n_rel_s = static_cast<int>(rel_s.cols());
  const int n_rel_t = static_cast<int>(rel_t.cols());

  // unknowns: s (ns*nt, column-major), then one relation multiplier block
  // per constraint column
  // (a) well-defined: order(j) * s.col(j) = rel_s * a_j      for torsion j
  // (b) section:      matrix * s.col(j) - e_j = rel_t * b_j  for all j
  const int n_torsion_t = static_cast<int>(m.target.torsion.size());
  const int rows = ns * n_torsion_t + nt * nt;
  const int cols = ns * nt + n_rel_s * n_torsion_t + n_rel_t * nt;
  IMat sys = IMat::Zero(rows, cols);
  IVec rhs = IVec::Zero(rows);
  int row = 0;
  for (int j = 0; j < n_torsion_t; ++j) {
    const int col_j = m.target.rank + j;
    for (int i = 0; i < ns; ++i)
      sys(row + i, col_j * ns + i) = m.target.torsion[j];
    sys.block(row, ns * nt + j * n_rel_s, ns, n_rel_s) = -rel_s;
    row += ns;
  }
  for (int j = 0; j < nt; ++j) {
    for (int i = 0; i < nt; ++i)
      for (int k = 0; k < ns; ++k) sys(row + i, j * ns + k) = (*m.matrix)(i, k);
    sys.block(row, ns * nt + n_rel_s * n_torsion_t + j * n_rel_t, nt,
              n_rel_t) = -rel_t;
    rhs.segment(row, nt) = IVec::Unit(nt, j);
    row += nt;
  }
  return integer_solve(sys, rhs).has_value();
}

}  // namespace detail

inline Tri check_right_inverse(const MapSpec& m) {
  if (m.target.is_trivial()) return Tri::Yes;
  if (m.props.zero) return Tri::No;  // target nontrivial here
  if (m.matrix) {
    if (!m.props.surjective) return Tri::No;
    return detail::splits(m) ? Tri::Yes : Tri::No;
  }
  if (m.props.injective && m.props.surjective) return Tri::Yes;
  return Tri::Undecided;
}

enum class CoveringVerdict { CoveringExists, NoCovering, Undecided };

inline const char* to_string(CoveringVerdict v) {
  switch (v) {
    case CoveringVerdict::CoveringExists: return "CoveringExists";
    case CoveringVerdict::NoCovering: return "NoCovering";
    default: return "Undecided";
  }
}

inline CoveringVerdict becker_gottlieb_verdict(const MapSpec& i_star,
                                               const MapSpec& p_star) {
  if (!(i_star.target == p_star.source))
    throw std::invalid_argument(
        "becker_gottlieb_verdict: i_star target must equal p_star source");
  const Tri a = check_injective(i_star);
  const Tri b = check_right_inverse(p_star);
  if (a == Tri::No || b == Tri::No) return CoveringVerdict::NoCovering;
  if (a == Tri::Yes && b == Tri::Yes) return CoveringVerdict::CoveringExists;
  return CoveringVerdict::Undecided;
}

struct SequenceFragment {
  std::vector<FgAbGroup> groups;
  std::vector<MapSpec> maps;          // maps[k]: groups[k] -> groups[k+1]
  std::vector<bool> exact_at;         // per interior group, groups[1..n-2]

  void validate() const {
    if (maps.size() + 1 != groups.size())
      throw std::invalid_argument("SequenceFragment: need n-1 maps");
    if (exact_at.size() + 2 != groups.size())
      throw std::invalid_argument("SequenceFragment: need n-2 exactness flags");
    for (size_t k = 0; k < maps.size(); ++k)
      if (!(maps[k].source == groups[k]) || !(maps[k].target == groups[k + 1]))
        throw std::invalid_argument("SequenceFragment: map endpoints off");
    // where both maps at an exact junction carry matrices, image = kernel
    for (size_t j = 0; j < exact_at.size(); ++j) {
      if (!exact_at[j]) continue;
      const MapSpec& in = maps[j];
      const MapSpec& out = maps[j + 1];
      if (!in.matrix || !out.matrix) continue;
      const FgAbGroup& mid = groups[j + 1];
      const IMat rel_mid = mid.relation_lattice();
      IMat image(mid.n_generators(), in.matrix->cols() + rel_mid.cols());
      image << *in.matrix, rel_mid;
      IMat sys(out.target.n_generators(),
               out.matrix->cols() + out.target.relation_lattice().cols());
      sys << *out.matrix, out.target.relation_lattice();
      const IMat null_space = integer_kernel(sys);
      IMat kernel(mid.n_generators(), null_space.cols() + rel_mid.cols());
      kernel << null_space.topRows(mid.n_generators()), rel_mid;
      if (!lattice_subset(image, kernel) || !lattice_subset(kernel, image))
        throw std::invalid_argument(
            "SequenceFragment: matrices violate exactness at junction " +
            std::to_string(j + 1));
    }
  }
};

struct ExactnessReport {
  bool consistent = true;
  std::vector<std::string> derived;        // human-readable derivations
  std::vector<std::string> contradictions;
};

// Fixed-point closure of the standard diagram-chase rules on the declared
// and derived properties.  The fragment is enriched in place.
inline ExactnessReport propagate_exactness(SequenceFragment& frag) {
  frag.validate();
  ExactnessReport rep;
  auto label = [&frag](size_t k) {
    const std::string base = "map " + std::to_string(k) + " (" +
                             frag.groups[k].to_string() + " -> " +
                             frag.groups[k + 1].to_string() + ")";
    return frag.maps[k].name.empty() ? base : frag.maps[k].name;
  };
  auto set_prop = [&](size_t k, bool MapProps::* field, const char* what,
                      const std::string& why, bool& changed) {
    if (frag.maps[k].props.*field) return;
    frag.maps[k].props.*field = true;
    changed = true;
    rep.derived.push_back(label(k) + " is " + what + " (" + why + ")");
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t k = 0; k < frag.maps.size(); ++k) {
      if (frag.maps[k].source.is_trivial()) {
        set_prop(k, &MapProps::zero, "zero", "trivial source", changed);
        set_prop(k, &MapProps::injective, "injective", "trivial source",
                 changed);
      }
      if (frag.maps[k].target.is_trivial()) {
        set_prop(k, &MapProps::zero, "zero", "trivial target", changed);
        set_prop(k, &MapProps::surjective, "surjective", "trivial target",
                 changed);
      }
    }
    for (size_t j = 0; j < frag.exact_at.size(); ++j) {
      if (!frag.exact_at[j]) continue;
      const size_t in = j, out = j + 1;
      if (frag.maps[in].props.surjective)
        set_prop(out, &MapProps::zero, "zero",
                 "previous map surjective at exact junction", changed);
      if (frag.maps[out].props.injective)
        set_prop(in, &MapProps::zero, "zero",
                 "next map injective at exact junction", changed);
      if (frag.maps[in].props.zero)
        set_prop(out, &MapProps::injective, "injective",
                 "previous map zero at exact junction", changed);
      if (frag.maps[out].props.zero)
        set_prop(in, &MapProps::surjective, "surjective",
                 "next map zero at exact junction", changed);
    }
  }

  for (size_t k = 0; k < frag.maps.size(); ++k) {
    const MapProps& p = frag.maps[k].props;
    if (p.zero && p.injective && !frag.maps[k].source.is_trivial()) {
      rep.consistent = false;
      rep.contradictions.push_back(
          label(k) + ": forced zero and injective with nontrivial source");
    }
    if (p.zero && p.surjective && !frag.maps[k].target.is_trivial()) {
      rep.consistent = false;
      rep.contradictions.push_back(
          label(k) + ": forced zero and surjective with nontrivial target");
    }
  }
  return rep;
}

// A fragment long enough to hold both covering-fibration conditions:
// indices of i_star and p_star inside maps.
struct ObstructionProblem {
  SequenceFragment fragment;
  int i_star = 0;
  int p_star = 0;

  CoveringVerdict decide() {
    propagate_exactness(fragment);
    return becker_gottlieb_verdict(fragment.maps[i_star],
                                   fragment.maps[p_star]);
  }
};

// Line-based fragment text:
//
//   fragment v1
//   group Z
//   map delta_2 props surjective
//   group Z/2
//   map i_star props none
//   group Z
//   map p_star matrix 0 1
//   group 0
//   exact 1            # junction at group index 1
//   i_star 1           # map index of the fiber-inclusion candidate
//   p_star 2
//   end
inline ObstructionProblem load_fragment(std::istream& is) {
  ObstructionProblem prob;
  prob.i_star = prob.p_star = -1;
  std::string line;
  if (!std::getline(is, line) || line != "fragment v1")
    throw std::invalid_argument("load_fragment: missing 'fragment v1' header");
  std::vector<int> exact_marks;
  struct PendingMap {
    std::string name, kind, rest;
  };
  std::vector<PendingMap> pending;
  bool ended = false;
  while (std::getline(is, line)) {
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    if (word == "group") {
      std::string rest;
      std::getline(ls, rest);
      prob.fragment.groups.push_back(parse_group(rest));
    } else if (word == "map") {
      PendingMap m;
      ls >> m.name >> m.kind;
      if (!ls || (m.kind != "props" && m.kind != "matrix"))
        throw std::invalid_argument("load_fragment: bad map line '" + line +
                                    "'");
      std::getline(ls, m.rest);
      if (pending.size() + 1 != prob.fragment.groups.size())
        throw std::invalid_argument(
            "load_fragment: maps must sit between consecutive groups");
      pending.push_back(std::move(m));
    } else if (word == "exact") {
      int j;
      ls >> j;
      exact_marks.push_back(j);
    } else if (word == "i_star") {
      ls >> prob.i_star;
    } else if (word == "p_star") {
      ls >> prob.p_star;
    } else if (word == "end") {
      ended = true;
      break;
    } else {
      throw std::invalid_argument("load_fragment: unknown directive '" + word +
                                  "'");
    }
  }
  if (!ended) throw std::invalid_argument("load_fragment: missing 'end'");
  if (pending.size() + 1 != prob.fragment.groups.size())
    throw std::invalid_argument("load_fragment: need a map between each pair");
  for (size_t k = 0; k < pending.size(); ++k) {
    const FgAbGroup& src = prob.fragment.groups[k];
    const FgAbGroup& tgt = prob.fragment.groups[k + 1];
    std::istringstream rs(pending[k].rest);
    if (pending[k].kind == "matrix") {
      IMat m(tgt.n_generators(), src.n_generators());
      for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
          if (!(rs >> m(i, j)))
            throw std::invalid_argument("load_fragment: short matrix for '" +
                                        pending[k].name + "'");
      prob.fragment.maps.push_back(MapSpec(src, tgt, m, pending[k].name));
    } else {
      MapProps props;
      std::string p;
      while (rs >> p) {
        if (p == "zero") props.zero = true;
        else if (p == "injective") props.injective = true;
        else if (p == "surjective") props.surjective = true;
        else if (p == "isomorphism") props.injective = props.surjective = true;
        else if (p != "none")
          throw std::invalid_argument("load_fragment: unknown property '" + p +
                                      "'");
      }
      prob.fragment.maps.push_back(MapSpec(src, tgt, props, pending[k].name));
    }
  }
  prob.fragment.exact_at.assign(
      prob.fragment.groups.size() >= 2 ? prob.fragment.groups.size() - 2 : 0,
      false);
  for (int j : exact_marks) {
    if (j < 1 || j + 1 >= static_cast<int>(prob.fragment.groups.size()))
      throw std::invalid_argument("load_fragment: exact index out of range");
    prob.fragment.exact_at[j - 1] = true;
  }
  prob.fragment.validate();
  return prob;
}

// The two worked examples: the universal SO(3)-bundle, and a principal
// SO(3)-bundle over a simply connected 4-manifold whose connecting map
// delta_2 is forced to be surjective.
inline ObstructionProblem obstruction_preset(const std::string& name) {
  ObstructionProblem prob;
  if (name == "example-3.3") {
    const FgAbGroup z2 = FgAbGroup::cyclic(2);
    const FgAbGroup one = FgAbGroup::trivial();
    prob.fragment.groups = {z2, z2, one, one};
    IMat iso(1, 1);
    iso << 1;
    prob.fragment.maps.push_back(MapSpec(z2, z2, iso, "delta_2"));
    prob.fragment.maps.push_back(
        MapSpec(z2, one, IMat::Zero(0, 1), "i_star"));
    prob.fragment.maps.push_back(
        MapSpec(one, one, IMat::Zero(0, 0), "p_star"));
    prob.fragment.exact_at = {true, true};
    prob.i_star = 1;
    prob.p_star = 2;
  } else if (name == "example-3.4") {
    // pi_2 of the base and pi_1 of the total space enter only through
    // declared properties; rank-1 stand-ins keep the bookkeeping concrete
    const FgAbGroup z = FgAbGroup::free(1);
    const FgAbGroup z2 = FgAbGroup::cyclic(2);
    const FgAbGroup one = FgAbGroup::trivial();
    prob.fragment.groups = {z, z2, z, one};
    prob.fragment.maps.push_back(
        MapSpec(z, z2, MapProps{false, false, true}, "delta_2"));
    prob.fragment.maps.push_back(MapSpec(z2, z, MapProps{}, "i_star"));
    prob.fragment.maps.push_back(MapSpec(z, one, MapProps{}, "p_star"));
    prob.fragment.exact_at = {true, false};
    prob.i_star = 1;
    prob.p_star = 2;
  } else {
    throw std::invalid_argument("obstruction_preset: unknown preset '" +
                                name + "'");
  }
  return prob;
}

}  // namespace roundflow
