#pragma once

// Text description of a sphere bundle over a sampled circle: charts as
// arcs, per-chart gauge maps built from rotation/boost factors whose
// parameters are small expressions in the base coordinate b.  Transitions
// are derived from the gauges, so the cocycle identities hold by
// construction.
//
//   atlas v1
//   base circle 64
//   rp_mode 0
//   chart east  -0.5 2.7        # arc [lo, hi) in radians, wraps mod 2 pi
//   gauge east rotation 0 0 1  0.3*b
//   gauge east boost    1 0 0  0.2*sin(b)
//   family degree 16
//   term 2 0  0.05*cos(b)
//   end
//
// Expression vocabulary: numbers, b, + - *, cos(...), sin(...), parens.

#include <cctype>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "roundflow/mobius.hpp"

namespace roundflow {

using Expr = std::function<double(double)>;

namespace detail {

class ExprParser {
 public:
  explicit ExprParser(std::string text) : text_(std::move(text)) {}

  Expr parse() {
    Expr e = sum();
    skip_ws();
    if (pos_ != text_.size())
      throw std::invalid_argument("expression: trailing input at '" +
                                  text_.substr(pos_) + "'");
    return e;
  }

 private:
  Expr sum() {
    Expr lhs = product();
    for (;;) {
      skip_ws();
      if (consume('+')) {
        Expr rhs = product();
        lhs = [lhs, rhs](double b) { return lhs(b) + rhs(b); };
      } else if (consume('-')) {
        Expr rhs = product();
        lhs = [lhs, rhs](double b) { return lhs(b) - rhs(b); };
      } else {
        return lhs;
      }
    }
  }

  Expr product() {
    Expr lhs = atom();
    for (;;) {
      skip_ws();
      if (consume('*')) {
        Expr rhs = atom();
        lhs = [lhs, rhs](double b) { return lhs(b) * rhs(b); };
      } else {
        return lhs;
      }
    }
  }

  Expr atom() {
    skip_ws();
    if (consume('-')) {
      Expr e = atom();
      return [e](double b) { return -e(b); };
    }
    if (consume('(')) {
      Expr e = sum();
      expect(')');
      return e;
    }
    if (pos_ < text_.size() &&
        (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
         text_[pos_] == '.')) {
      size_t used = 0;
      const double v = std::stod(text_.substr(pos_), &used);
      pos_ += used;
      return [v](double) { return v; };
    }
    const std::string word = identifier();
    if (word == "b") return [](double b) { return b; };
    if (word == "cos" || word == "sin") {
      expect('(');
      Expr e = sum();
      expect(')');
      if (word == "cos") return [e](double b) { return std::cos(e(b)); };
      return [e](double b) { return std::sin(e(b)); };
    }
    throw std::invalid_argument("expression: unknown token '" + word + "'");
  }

  std::string identifier() {
    skip_ws();
    size_t start = pos_;
    while (pos_ < text_.size() &&
           std::isalpha(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    if (pos_ == start)
      throw std::invalid_argument("expression: unexpected character '" +
                                  text_.substr(start, 1) + "'");
    return text_.substr(start, pos_ - start);
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }
  bool consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!consume(c))
      throw std::invalid_argument(std::string("expression: expected '") + c +
                                  "'");
  }

  std::string text_;
  size_t pos_ = 0;
};

}  // namespace detail

inline Expr parse_expr(const std::string& text) {
  return detail::ExprParser(text).parse();
}

struct GaugeFactor {
  enum class Kind { Rotation, Boost };
  Kind kind;
  Vec3 axis;  // unit
  Expr amount;
};

struct AtlasChart {
  std::string name;
  double lo = 0.0, hi = 0.0;  // arc in radians, hi > lo, may exceed 2 pi
  std::vector<int> samples;   // base sample indices covered
  std::vector<GaugeFactor> gauge;
};

struct FamilyTerm {
  int l = 0, m = 0;
  Expr coeff;
};

struct BundleAtlas {
  int n_samples = 0;
  bool rp_mode = false;
  std::vector<AtlasChart> charts;
  int family_degree = 0;
  std::vector<FamilyTerm> family_terms;

  double base_point(int k) const { return kTwoPi * k / n_samples; }

  // h_i(b): composition of the chart's gauge factors
  MoebiusMap gauge_map(int chart, double b) const {
    MoebiusMap m;
    for (const GaugeFactor& f : charts[chart].gauge) {
      const double v = f.amount(b);
      const MoebiusMap step = f.kind == GaugeFactor::Kind::Rotation
                                  ? MoebiusMap::rotation(f.axis, v)
                                  : MoebiusMap::boost(v * f.axis);
      m = step * m;
    }
    return m;
  }

  // alpha_ij(b) = h_j(b) o h_i(b)^{-1}
  MoebiusMap transition(int i, int j, double b) const {
    return gauge_map(j, b) * gauge_map(i, b).inverse();
  }

  std::vector<int> overlap(int i, int j) const {
    std::vector<int> out;
    for (int s : charts[i].samples)
      if (chart_contains(j, s)) out.push_back(s);
    return out;
  }

  bool chart_contains(int chart, int sample) const {
    for (int s : charts[chart].samples)
      if (s == sample) return true;
    return false;
  }

  // The reference-gauge log-conformal factor u_b of the fiber metric.
  HarmonicField family_field(double b) const {
    HarmonicField u(family_degree);
    for (const FamilyTerm& t : family_terms) u.at(t.l, t.m) += t.coeff(b);
    return u;
  }

  void validate() const {
    if (n_samples < 2)
      throw std::invalid_argument("BundleAtlas: base needs >= 2 samples");
    if (charts.empty())
      throw std::invalid_argument("BundleAtlas: no charts");
    for (int s = 0; s < n_samples; ++s) {
      bool covered = false;
      for (size_t i = 0; i < charts.size() && !covered; ++i)
        covered = chart_contains(static_cast<int>(i), s);
      if (!covered)
        throw std::invalid_argument("BundleAtlas: sample " +
                                    std::to_string(s) + " not covered");
    }
    if (rp_mode) {
      for (const AtlasChart& c : charts)
        for (const GaugeFactor& f : c.gauge)
          if (f.kind != GaugeFactor::Kind::Rotation)
            throw std::invalid_argument(
                "BundleAtlas: rp_mode gauges must commute with the "
                "antipodal map (rotations only)");
      for (const FamilyTerm& t : family_terms)
        if (t.l % 2 != 0)
          throw std::invalid_argument(
              "BundleAtlas: rp_mode family must be antipodally even");
    }
  }
};

inline BundleAtlas load_atlas(std::istream& is) {
  BundleAtlas atlas;
  std::string line;
  if (!std::getline(is, line) || line != "atlas v1")
    throw std::invalid_argument("load_atlas: missing 'atlas v1' header");
  auto chart_index = [&atlas](const std::string& name) {
    for (size_t i = 0; i < atlas.charts.size(); ++i)
      if (atlas.charts[i].name == name) return static_cast<int>(i);
    throw std::invalid_argument("load_atlas: unknown chart '" + name + "'");
  };
  bool ended = false;
  while (std::getline(is, line)) {
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    if (word == "base") {
      std::string kind;
      ls >> kind >> atlas.n_samples;
      if (kind != "circle")
        throw std::invalid_argument("load_atlas: unsupported base '" + kind +
                                    "'");
    } else if (word == "rp_mode") {
      ls >> atlas.rp_mode;
    } else if (word == "chart") {
      AtlasChart c;
      ls >> c.name >> c.lo >> c.hi;
      if (!ls || c.hi <= c.lo)
        throw std::invalid_argument("load_atlas: bad chart line '" + line +
                                    "'");
      atlas.charts.push_back(std::move(c));
    } else if (word == "gauge") {
      std::string name, kind;
      GaugeFactor f{GaugeFactor::Kind::Rotation, Vec3::UnitZ(), {}};
      ls >> name >> kind >> f.axis.x() >> f.axis.y() >> f.axis.z();
      if (!ls) throw std::invalid_argument("load_atlas: bad gauge line");
      f.kind = kind == "rotation" ? GaugeFactor::Kind::Rotation
               : kind == "boost"
                   ? GaugeFactor::Kind::Boost
                   : throw std::invalid_argument(
                         "load_atlas: unknown gauge kind '" + kind + "'");
      f.axis.normalize();
      std::string rest;
      std::getline(ls, rest);
      f.amount = parse_expr(rest);
      atlas.charts[chart_index(name)].gauge.push_back(std::move(f));
    } else if (word == "family") {
      std::string kind;
      ls >> kind >> atlas.family_degree;
      if (kind != "degree")
        throw std::invalid_argument("load_atlas: bad family line");
    } else if (word == "term") {
      FamilyTerm t;
      ls >> t.l >> t.m;
      if (!ls) throw std::invalid_argument("load_atlas: bad term line");
      std::string rest;
      std::getline(ls, rest);
      t.coeff = parse_expr(rest);
      atlas.family_terms.push_back(std::move(t));
    } else if (word == "end") {
      ended = true;
      break;
    } else {
      throw std::invalid_argument("load_atlas: unknown directive '" + word +
                                  "'");
    }
  }
  if (!ended) throw std::invalid_argument("load_atlas: missing 'end'");

  // resolve chart arcs to sample sets (arc endpoints wrap mod 2 pi)
  for (AtlasChart& c : atlas.charts) {
    for (int s = 0; s < atlas.n_samples; ++s) {
      const double b = atlas.base_point(s);
      for (int wrap = -1; wrap <= 1; ++wrap) {
        const double bb = b + wrap * kTwoPi;
        if (bb >= c.lo && bb < c.hi) {
          c.samples.push_back(s);
          break;
        }
      }
    }
  }
  atlas.validate();
  return atlas;
}

inline BundleAtlas load_atlas_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("load_atlas: cannot open " + path);
  return load_atlas(f);
}

}  // namespace roundflow
