#pragma once

// Brute-force references used by the tests. Nothing here calls into the code
// under test beyond plain data types.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "scenediff/geom.hpp"

namespace oracle {

using scenediff::Point3;

struct Hit
{
  std::size_t index = 0;
  double distance = 0.0;
};

template <typename Vec, typename Container>
Hit linear_nearest(const Container& pts, const Vec& q)
{
  Hit best{0, std::numeric_limits<double>::infinity()};
  double best2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d2 = (pts[i] - q).squaredNorm();
    if (d2 < best2) {
      best2 = d2;
      best.index = i;
    }
  }
  best.distance = std::sqrt(best2);
  return best;
}

inline std::array<std::int64_t, 3> floor_key(const Point3& p, double cell)
{
  return {static_cast<std::int64_t>(std::floor(p.x() / cell)), static_cast<std::int64_t>(std::floor(p.y() / cell)),
          static_cast<std::int64_t>(std::floor(p.z() / cell))};
}

inline std::set<std::array<std::int64_t, 3>> floor_keys(const std::vector<Point3>& pts, double cell)
{
  std::set<std::array<std::int64_t, 3>> out;
  for (const auto& p : pts)
    out.insert(floor_key(p, cell));
  return out;
}

// Components of an occupied cell set by breadth-first search; each component
// is returned as its sorted cell list, components sorted lexicographically.
inline std::vector<std::vector<std::array<std::int64_t, 3>>> bfs_components(const std::set<std::array<std::int64_t, 3>>& cells)
{
  std::set<std::array<std::int64_t, 3>> seen;
  std::vector<std::vector<std::array<std::int64_t, 3>>> out;
  for (const auto& start : cells) {
    if (seen.count(start))
      continue;
    std::vector<std::array<std::int64_t, 3>> comp;
    std::deque<std::array<std::int64_t, 3>> queue{start};
    seen.insert(start);
    while (!queue.empty()) {
      const auto c = queue.front();
      queue.pop_front();
      comp.push_back(c);
      for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dz = -1; dz <= 1; ++dz) {
            const std::array<std::int64_t, 3> n{c[0] + dx, c[1] + dy, c[2] + dz};
            if (cells.count(n) && !seen.count(n)) {
              seen.insert(n);
              queue.push_back(n);
            }
          }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Pair angles straight from the Darboux-frame definition.
inline bool darboux(const Point3& p1, const Eigen::Vector3d& n1, const Point3& p2, const Eigen::Vector3d& n2,
                    double& theta, double& alpha, double& phi)
{
  Eigen::Vector3d d = p2 - p1;
  const double len = d.norm();
  if (len == 0.0)
    return false;
  const double c1 = std::acos(std::clamp(std::abs(n1.dot(d) / len), 0.0, 1.0));
  const double c2 = std::acos(std::clamp(std::abs(n2.dot(d) / len), 0.0, 1.0));
  Eigen::Vector3d u = n1, nt = n2;
  if (c1 > c2) {
    u = n2;
    nt = n1;
    d = -d;
  }
  phi = u.dot(d / len);
  const Eigen::Vector3d v0 = (d / len).cross(u);
  if (v0.norm() == 0.0)
    return false;
  const Eigen::Vector3d v = v0.normalized();
  const Eigen::Vector3d w = u.cross(v);
  alpha = v.dot(nt);
  theta = std::atan2(w.dot(nt), u.dot(nt));
  return true;
}

inline int bin11(double x, double lo, double hi)
{
  return std::clamp(static_cast<int>(std::floor(11.0 * (x - lo) / (hi - lo))), 0, 10);
}

// FPFH of every point with two nested loops over the cloud.
inline std::vector<Eigen::Matrix<double, 33, 1>> fpfh(const scenediff::PointCloud& cloud, double radius)
{
  const std::size_t n = cloud.size();
  std::vector<std::vector<std::size_t>> nbrs(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double d = (cloud.points[i] - cloud.points[j]).norm();
      if (d > 0.0 && d <= radius)
        nbrs[i].push_back(j);
    }
  std::vector<Eigen::Matrix<double, 33, 1>> spfh(n, Eigen::Matrix<double, 33, 1>::Zero());
  for (std::size_t i = 0; i < n; ++i)
    for (const auto j : nbrs[i]) {
      double theta, alpha, phi;
      if (!darboux(cloud.points[i], cloud.normals[i], cloud.points[j], cloud.normals[j], theta, alpha, phi))
        continue;
      const double inc = 100.0 / static_cast<double>(nbrs[i].size());
      spfh[i](bin11(theta, -std::numbers::pi, std::numbers::pi)) += inc;
      spfh[i](11 + bin11(alpha, -1.0, 1.0)) += inc;
      spfh[i](22 + bin11(phi, -1.0, 1.0)) += inc;
    }
  std::vector<Eigen::Matrix<double, 33, 1>> out(n, Eigen::Matrix<double, 33, 1>::Zero());
  for (std::size_t i = 0; i < n; ++i) {
    if (nbrs[i].size() < 2)
      continue;
    Eigen::Matrix<double, 33, 1> acc = Eigen::Matrix<double, 33, 1>::Zero();
    for (const auto j : nbrs[i])
      acc += spfh[j] / (cloud.points[i] - cloud.points[j]).norm();
    out[i] = spfh[i] + acc / static_cast<double>(nbrs[i].size());
  }
  return out;
}

// Potts energy with -log priors, evaluated directly.
inline double energy(const std::vector<std::array<double, 2>>& prior, const std::vector<std::pair<int, int>>& edges,
                     const std::vector<double>& w, double lambda, std::uint32_t labels)
{
  double e = 0.0;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    const bool l = (labels >> i) & 1u;
    e += -std::log(l ? prior[i][0] : prior[i][1]);
  }
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const bool a = (labels >> edges[k].first) & 1u;
    const bool b = (labels >> edges[k].second) & 1u;
    if (a != b)
      e += lambda * w[k];
  }
  return e;
}

inline double exhaustive_min(const std::vector<std::array<double, 2>>& prior,
                             const std::vector<std::pair<int, int>>& edges, const std::vector<double>& w, double lambda)
{
  double best = std::numeric_limits<double>::infinity();
  const std::uint32_t count = 1u << prior.size();
  for (std::uint32_t l = 0; l < count; ++l)
    best = std::min(best, energy(prior, edges, w, lambda, l));
  return best;
}

// Moller-Trumbore ray/triangle hit distance along a unit ray, or nothing.
inline std::optional<double> ray_triangle(const Eigen::Vector3d& o, const Eigen::Vector3d& dir, const Eigen::Vector3d& a,
                                          const Eigen::Vector3d& b, const Eigen::Vector3d& c)
{
  const Eigen::Vector3d e1 = b - a, e2 = c - a;
  const Eigen::Vector3d p = dir.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-14)
    return std::nullopt;
  const double inv = 1.0 / det;
  const Eigen::Vector3d s = o - a;
  const double u = s.dot(p) * inv;
  if (u < 0.0 || u > 1.0)
    return std::nullopt;
  const Eigen::Vector3d q = s.cross(e1);
  const double v = dir.dot(q) * inv;
  if (v < 0.0 || u + v > 1.0)
    return std::nullopt;
  const double t = e2.dot(q) * inv;
  if (t <= 0.0)
    return std::nullopt;
  return t;
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng)
{
  std::normal_distribution<double> g;
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  q.normalize();
  return q.toRotationMatrix();
}

} // namespace oracle
