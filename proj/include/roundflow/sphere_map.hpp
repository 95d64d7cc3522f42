#pragma once

// Maps S^2 -> S^2 sampled on an icosphere, with spherical-barycentric
// interpolation between nodes.  A map may additionally carry the exact
// evaluator it was built from; interpolation is the fallback and the
// serialized form.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "roundflow/sphere_grid.hpp"

namespace roundflow {

struct Icosphere {
  int depth = 0;
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
};

namespace detail {

inline Icosphere build_icosphere(int depth) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  Icosphere ico;
  ico.depth = depth;
  ico.vertices = {{-1, t, 0},  {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
                  {0, -1, t},  {0, 1, t},  {0, -1, -t}, {0, 1, -t},
                  {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& v : ico.vertices) v.normalize();
  ico.triangles = {{0, 11, 5}, {0, 5, 1},   {0, 1, 7},   {0, 7, 10},
                   {0, 10, 11}, {1, 5, 9},  {5, 11, 4},  {11, 10, 2},
                   {10, 7, 6},  {7, 1, 8},  {3, 9, 4},   {3, 4, 2},
                   {3, 2, 6},   {3, 6, 8},  {3, 8, 9},   {4, 9, 5},
                   {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int d = 0; d < depth; ++d) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const int idx = static_cast<int>(ico.vertices.size());
      ico.vertices.push_back(
          (ico.vertices[a] + ico.vertices[b]).normalized());
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(4 * ico.triangles.size());
    for (const auto& tr : ico.triangles) {
      const int ab = mid(tr[0], tr[1]);
      const int bc = mid(tr[1], tr[2]);
      const int ca = mid(tr[2], tr[0]);
      next.push_back({tr[0], ab, ca});
      next.push_back({tr[1], bc, ab});
      next.push_back({tr[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    ico.triangles = std::move(next);
  }
  return ico;
}

inline const Icosphere& shared_icosphere(int depth) {
  static std::map<int, Icosphere> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(depth);
  if (it == cache.end())
    it = cache.emplace(depth, build_icosphere(depth)).first;
  return it->second;
}

}  // namespace detail

class SphereMap {
 public:
  SphereMap() = default;

  SphereMap(int depth, std::function<Vec3(const Vec3&)> exact,
            std::string source_metric_id = {})
      : depth_(depth),
        exact_(std::move(exact)),
        source_metric_id_(std::move(source_metric_id)) {
    const Icosphere& ico = detail::shared_icosphere(depth_);
    images_.resize(ico.vertices.size());
    for (size_t i = 0; i < ico.vertices.size(); ++i) {
      images_[i] = exact_(ico.vertices[i]);
      check_on_sphere(images_[i]);
    }
  }

  SphereMap(int depth, std::vector<Vec3> images,
            std::string source_metric_id = {},
            std::function<Vec3(const Vec3&)> exact = {})
      : depth_(depth),
        images_(std::move(images)),
        exact_(std::move(exact)),
        source_metric_id_(std::move(source_metric_id)) {
    const Icosphere& ico = detail::shared_icosphere(depth_);
    if (images_.size() != ico.vertices.size())
      throw std::invalid_argument("SphereMap: image count does not match "
                                  "the icosphere node count");
    for (const Vec3& p : images_) check_on_sphere(p);
  }

  int depth() const { return depth_; }
  const std::vector<Vec3>& images() const { return images_; }
  const Icosphere& nodes() const { return detail::shared_icosphere(depth_); }
  const std::string& source_metric_id() const { return source_metric_id_; }
  bool has_exact_evaluator() const { return static_cast<bool>(exact_); }

  // Drop the exact evaluator, keeping only the sampled data.
  SphereMap sampled_only() const {
    return SphereMap(depth_, images_, source_metric_id_);
  }

  Vec3 operator()(const Vec3& p) const {
    if (exact_) return exact_(p);
    return interpolate(p);
  }

  Vec3 interpolate(const Vec3& p) const {
    const Icosphere& ico = detail::shared_icosphere(depth_);
    int best = -1;
    double best_min = -1e300;
    Vec3 w = Vec3::Zero();
    for (size_t t = 0; t < ico.triangles.size(); ++t) {
      const auto& tr = ico.triangles[t];
      const Vec3 &a = ico.vertices[tr[0]], &b = ico.vertices[tr[1]],
                 &c = ico.vertices[tr[2]];
      // gnomonic barycentric weights; all nonnegative iff p projects into
      // the triangle
      const double wa = b.cross(c).dot(p);
      const double wb = c.cross(a).dot(p);
      const double wc = a.cross(b).dot(p);
      const double mn = std::min({wa, wb, wc});
      if (mn > best_min) {
        best_min = mn;
        best = static_cast<int>(t);
        w = Vec3(wa, wb, wc);
      }
    }
    const auto& tr = ico.triangles[best];
    const Vec3 img = w[0] * images_[tr[0]] + w[1] * images_[tr[1]] +
                     w[2] * images_[tr[2]];
    const double n = img.norm();
    if (n < 1e-12)
      throw std::runtime_error("SphereMap: interpolation degenerated "
                               "(images of a triangle nearly antipodal)");
    return img / n;
  }

  void write(std::ostream& os) const {
    os << "spheremap v1\n";
    os << "triangulation icosphere " << depth_ << "\n";
    os << "source " << (source_metric_id_.empty() ? "-" : source_metric_id_)
       << "\n";
    os << "nodes " << images_.size() << "\n";
    os.precision(17);
    for (size_t i = 0; i < images_.size(); ++i)
      os << i << " " << images_[i].x() << " " << images_[i].y() << " "
         << images_[i].z() << "\n";
  }

  static SphereMap read(std::istream& is) {
    std::string tag, version;
    is >> tag >> version;
    if (tag != "spheremap" || version != "v1")
      throw std::runtime_error("SphereMap::read: bad header");
    std::string word, kind;
    int depth = 0;
    is >> word >> kind >> depth;
    if (word != "triangulation" || kind != "icosphere")
      throw std::runtime_error("SphereMap::read: unknown triangulation");
    std::string source;
    is >> word >> source;
    if (word != "source") throw std::runtime_error("SphereMap::read: "
                                                   "missing source line");
    size_t n = 0;
    is >> word >> n;
    if (word != "nodes") throw std::runtime_error("SphereMap::read: "
                                                  "missing node count");
    std::vector<Vec3> images(n);
    for (size_t i = 0; i < n; ++i) {
      size_t idx;
      double x, y, z;
      if (!(is >> idx >> x >> y >> z) || idx >= n)
        throw std::runtime_error("SphereMap::read: bad node line");
      images[idx] = Vec3(x, y, z);
    }
    return SphereMap(depth, std::move(images),
                     source == "-" ? std::string() : source);
  }

 private:
  static void check_on_sphere(const Vec3& p) {
    if (std::abs(p.norm() - 1.0) > 1e-10)
      throw std::invalid_argument("SphereMap: image point off the sphere");
  }

  int depth_ = 0;
  std::vector<Vec3> images_;
  std::function<Vec3(const Vec3&)> exact_;
  std::string source_metric_id_;
};

// Great-circle distance.
inline double sphere_distance(const Vec3& p, const Vec3& q) {
  return std::atan2(p.cross(q).norm(), p.dot(q));
}

inline double sup_distance(const SphereMap& a, const SphereMap& b) {
  if (a.depth() != b.depth())
    throw std::invalid_argument("sup_distance: depth mismatch");
  double d = 0.0;
  for (size_t i = 0; i < a.images().size(); ++i)
    d = std::max(d, sphere_distance(a.images()[i], b.images()[i]));
  return d;
}

}  // namespace roundflow
