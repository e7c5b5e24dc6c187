#include "scenediff/supervoxel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <unordered_map>

namespace scenediff {
namespace {

struct Voxel
{
  VoxelKey key;
  std::vector<std::size_t> members;
  Point3 centroid = Point3::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  Color3 color = Color3::Zero();
};

struct Center
{
  Point3 position;
  Eigen::Vector3d normal;
  Color3 color;
};

Eigen::Vector3d normalized_or(const Eigen::Vector3d& v, const Eigen::Vector3d& fallback)
{
  const double n = v.norm();
  return n > 1e-12 ? Eigen::Vector3d(v / n) : fallback;
}

class Segmenter
{
public:
  Segmenter(const PointCloud& cloud, const SupervoxelParams& params)
    : cloud_(cloud), params_(params), use_color_(cloud.has_colors() && params.w_color > 0.0)
  {}

  SupervoxelGraph run()
  {
    build_voxels();
    std::vector<Center> centers = initial_seeds();
    std::vector<int> owner;
    for (int round = 0; round < std::max(1, params_.refine_rounds); ++round) {
      owner = grow(centers);
      centers = recenter(owner, centers);
    }
    fill_unowned(owner, centers);
    return finish(owner, centers);
  }

private:
  double distance(const Point3& p, const Eigen::Vector3d& n, const Color3* c, const Center& ctr) const
  {
    double d = params_.w_spatial * (p - ctr.position).norm() / params_.seed_spacing +
               params_.w_normal * (1.0 - std::abs(n.dot(ctr.normal)));
    if (use_color_ && c)
      d += params_.w_color * (*c - ctr.color).norm();
    return d;
  }

  double voxel_distance(int v, const Center& ctr) const
  {
    const Voxel& vx = voxels_[static_cast<std::size_t>(v)];
    return distance(vx.centroid, vx.normal, &vx.color, ctr);
  }

  void build_voxels()
  {
    std::unordered_map<VoxelKey, int, VoxelKeyHash> lookup;
    for (std::size_t i = 0; i < cloud_.size(); ++i) {
      const VoxelKey k = voxel_key(cloud_.points[i], params_.voxel_size);
      auto [it, inserted] = lookup.emplace(k, static_cast<int>(voxels_.size()));
      if (inserted)
        voxels_.push_back({k, {}});
      voxels_[static_cast<std::size_t>(it->second)].members.push_back(i);
    }
    for (auto& v : voxels_) {
      Point3 p = Point3::Zero();
      Eigen::Vector3d n = Eigen::Vector3d::Zero();
      Color3 c = Color3::Zero();
      const Eigen::Vector3d& ref = cloud_.normals[v.members.front()];
      for (const auto m : v.members) {
        p += cloud_.points[m];
        const Eigen::Vector3d& nm = cloud_.normals[m];
        n += nm.dot(ref) < 0.0 ? Eigen::Vector3d(-nm) : nm;
        if (use_color_)
          c += cloud_.colors[m];
      }
      const double cnt = static_cast<double>(v.members.size());
      v.centroid = p / cnt;
      v.normal = normalized_or(n, ref);
      v.color = c / cnt;
    }
    neighbors_.resize(voxels_.size());
    for (std::size_t i = 0; i < voxels_.size(); ++i)
      for (const auto& off : neighbor_offsets_26()) {
        auto it = lookup.find(voxels_[i].key + off);
        if (it != lookup.end())
          neighbors_[i].push_back(it->second);
      }
    voxel_lookup_ = std::move(lookup);
  }

  std::vector<Center> initial_seeds()
  {
    // One seed per occupied seed cell: the voxel nearest the cell center.
    std::map<VoxelKey, std::pair<double, int>> best;
    for (std::size_t i = 0; i < voxels_.size(); ++i) {
      const VoxelKey cell = voxel_key(voxels_[i].centroid, params_.seed_spacing);
      const double d = (voxels_[i].centroid - voxel_center(cell, params_.seed_spacing)).squaredNorm();
      auto it = best.find(cell);
      if (it == best.end() || d < it->second.first)
        best[cell] = {d, static_cast<int>(i)};
    }
    std::vector<Center> centers;
    seed_voxels_.clear();
    for (const auto& [cell, entry] : best) {
      const Voxel& v = voxels_[static_cast<std::size_t>(entry.second)];
      centers.push_back({v.centroid, v.normal, v.color});
      seed_voxels_.push_back(entry.second);
    }
    return centers;
  }

  std::vector<int> grow(const std::vector<Center>& centers)
  {
    const std::size_t n = voxels_.size();
    std::vector<int> owner(n, -1);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<std::vector<int>> frontier(centers.size());

    for (std::size_t s = 0; s < centers.size(); ++s) {
      const int v = seed_voxels_[s];
      const double d = voxel_distance(v, centers[s]);
      if (d < best[static_cast<std::size_t>(v)]) {
        best[static_cast<std::size_t>(v)] = d;
        owner[static_cast<std::size_t>(v)] = static_cast<int>(s);
      }
      frontier[s].push_back(v);
    }

    const int depth = static_cast<int>(std::ceil(1.8 * params_.seed_spacing / params_.voxel_size));
    for (int level = 0; level < depth; ++level) {
      bool any = false;
      for (std::size_t s = 0; s < centers.size(); ++s) {
        std::vector<int> next;
        for (const int v : frontier[s]) {
          if (owner[static_cast<std::size_t>(v)] != static_cast<int>(s))
            continue; // taken over by a closer supervoxel
          for (const int nb : neighbors_[static_cast<std::size_t>(v)]) {
            const auto u = static_cast<std::size_t>(nb);
            if (owner[u] == static_cast<int>(s))
              continue;
            const double d = voxel_distance(nb, centers[s]);
            if (d < best[u]) {
              best[u] = d;
              owner[u] = static_cast<int>(s);
              next.push_back(nb);
            }
          }
        }
        any = any || !next.empty();
        frontier[s] = std::move(next);
      }
      if (!any)
        break;
    }
    return owner;
  }

  std::vector<Center> recenter(const std::vector<int>& owner, const std::vector<Center>& centers)
  {
    const std::size_t k = centers.size();
    std::vector<Point3> pos(k, Point3::Zero());
    std::vector<Eigen::Vector3d> nrm(k, Eigen::Vector3d::Zero());
    std::vector<Color3> col(k, Color3::Zero());
    std::vector<double> cnt(k, 0.0);
    for (std::size_t v = 0; v < voxels_.size(); ++v) {
      if (owner[v] < 0)
        continue;
      const auto s = static_cast<std::size_t>(owner[v]);
      const Voxel& vx = voxels_[v];
      pos[s] += vx.centroid;
      nrm[s] += vx.normal.dot(centers[s].normal) < 0.0 ? Eigen::Vector3d(-vx.normal) : vx.normal;
      col[s] += vx.color;
      cnt[s] += 1.0;
    }

    std::vector<Center> next(k);
    for (std::size_t s = 0; s < k; ++s)
      if (cnt[s] > 0.0)
        next[s] = {pos[s] / cnt[s], normalized_or(nrm[s], centers[s].normal), col[s] / cnt[s]};

    // Next round starts from the owned voxel nearest the new centroid.
    std::vector<int> nearest(k, -1);
    std::vector<double> nearest_d(k, std::numeric_limits<double>::infinity());
    for (std::size_t v = 0; v < voxels_.size(); ++v) {
      if (owner[v] < 0)
        continue;
      const auto s = static_cast<std::size_t>(owner[v]);
      const double d = (voxels_[v].centroid - next[s].position).squaredNorm();
      if (d < nearest_d[s]) {
        nearest_d[s] = d;
        nearest[s] = static_cast<int>(v);
      }
    }

    std::vector<Center> out;
    std::vector<int> seeds;
    for (std::size_t s = 0; s < k; ++s) {
      if (cnt[s] == 0.0)
        continue; // lost every voxel: drop
      out.push_back(next[s]);
      seeds.push_back(nearest[s]);
    }
    seed_voxels_ = std::move(seeds);
    return out;
  }

  // recenter() may have dropped supervoxels, so ownership is regrown with the
  // surviving centers before the leftovers are filled in.
  void fill_unowned(std::vector<int>& owner, std::vector<Center>& centers)
  {
    owner = grow(centers);

    // Voxels out of reach of every seed join the owner that reaches them first.
    std::deque<int> queue;
    for (std::size_t v = 0; v < voxels_.size(); ++v)
      if (owner[v] >= 0)
        queue.push_back(static_cast<int>(v));
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      for (const int nb : neighbors_[static_cast<std::size_t>(v)]) {
        const auto u = static_cast<std::size_t>(nb);
        if (owner[u] < 0) {
          owner[u] = owner[static_cast<std::size_t>(v)];
          queue.push_back(nb);
        }
      }
    }

    // Components without any seed become their own supervoxels.
    for (std::size_t v = 0; v < voxels_.size(); ++v) {
      if (owner[v] >= 0)
        continue;
      const int id = static_cast<int>(centers.size());
      Point3 pos = Point3::Zero();
      Eigen::Vector3d nrm = Eigen::Vector3d::Zero();
      Color3 col = Color3::Zero();
      double cnt = 0.0;
      std::deque<int> q{static_cast<int>(v)};
      owner[v] = id;
      while (!q.empty()) {
        const int cur = q.front();
        q.pop_front();
        const Voxel& vx = voxels_[static_cast<std::size_t>(cur)];
        pos += vx.centroid;
        nrm += vx.normal.dot(voxels_[v].normal) < 0.0 ? Eigen::Vector3d(-vx.normal) : vx.normal;
        col += vx.color;
        cnt += 1.0;
        for (const int nb : neighbors_[static_cast<std::size_t>(cur)])
          if (owner[static_cast<std::size_t>(nb)] < 0) {
            owner[static_cast<std::size_t>(nb)] = id;
            q.push_back(nb);
          }
      }
      centers.push_back({pos / cnt, normalized_or(nrm, voxels_[v].normal), col / cnt});
    }
  }

  SupervoxelGraph finish(const std::vector<int>& voxel_owner, const std::vector<Center>& centers)
  {
    // Point-level assignment among the owners of the point's voxel and its neighbors.
    std::vector<int> point_owner(cloud_.size(), -1);
    for (std::size_t v = 0; v < voxels_.size(); ++v) {
      std::vector<int> candidates{voxel_owner[v]};
      for (const int nb : neighbors_[v])
        candidates.push_back(voxel_owner[static_cast<std::size_t>(nb)]);
      std::sort(candidates.begin(), candidates.end());
      candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
      for (const auto m : voxels_[v].members) {
        const Color3* col = use_color_ ? &cloud_.colors[m] : nullptr;
        int best_id = voxel_owner[v];
        double best = std::numeric_limits<double>::infinity();
        for (const int c : candidates) {
          const double d = distance(cloud_.points[m], cloud_.normals[m], col, centers[static_cast<std::size_t>(c)]);
          if (d < best) {
            best = d;
            best_id = c;
          }
        }
        point_owner[m] = best_id;
      }
    }

    // Renumber densely in order of first appearance by center id.
    std::vector<int> remap(centers.size(), -1);
    std::vector<std::vector<std::size_t>> members(centers.size());
    for (std::size_t i = 0; i < point_owner.size(); ++i)
      members[static_cast<std::size_t>(point_owner[i])].push_back(i);

    SupervoxelGraph g;
    g.has_colors = cloud_.has_colors();
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (members[c].empty())
        continue;
      remap[c] = static_cast<int>(g.nodes.size());
      Supervoxel sv;
      sv.id = remap[c];
      sv.members = std::move(members[c]);
      Point3 p = Point3::Zero();
      Eigen::Vector3d n = Eigen::Vector3d::Zero();
      Color3 col = Color3::Zero();
      const Eigen::Vector3d& ref = cloud_.normals[sv.members.front()];
      for (const auto m : sv.members) {
        p += cloud_.points[m];
        n += cloud_.normals[m];
        if (cloud_.has_colors())
          col += cloud_.colors[m];
      }
      const double cnt = static_cast<double>(sv.members.size());
      sv.centroid = p / cnt;
      sv.mean_normal = normalized_or(n, ref);
      sv.mean_color = col / cnt;
      g.nodes.push_back(std::move(sv));
    }
    g.point_to_node.resize(cloud_.size());
    for (std::size_t i = 0; i < point_owner.size(); ++i)
      g.point_to_node[i] = remap[static_cast<std::size_t>(point_owner[i])];

    // Adjacency from point-level voxel occupancy.
    std::vector<std::vector<int>> voxel_nodes(voxels_.size());
    for (std::size_t v = 0; v < voxels_.size(); ++v) {
      auto& owners = voxel_nodes[v];
      for (const auto m : voxels_[v].members)
        owners.push_back(g.point_to_node[m]);
      std::sort(owners.begin(), owners.end());
      owners.erase(std::unique(owners.begin(), owners.end()), owners.end());
    }
    std::set<std::pair<int, int>> pairs;
    auto link = [&](const std::vector<int>& xs, const std::vector<int>& ys) {
      for (const int a : xs)
        for (const int b : ys)
          if (a != b)
            pairs.insert({std::min(a, b), std::max(a, b)});
    };
    for (std::size_t v = 0; v < voxels_.size(); ++v) {
      link(voxel_nodes[v], voxel_nodes[v]);
      for (const int nb : neighbors_[v])
        link(voxel_nodes[v], voxel_nodes[static_cast<std::size_t>(nb)]);
    }

    const double flat_cos = std::cos(params_.flat_angle_deg * std::numbers::pi / 180.0);
    const double slack = 0.5 * params_.voxel_size;
    for (const auto& [a, b] : pairs) {
      const Supervoxel& na = g.nodes[static_cast<std::size_t>(a)];
      const Supervoxel& nb = g.nodes[static_cast<std::size_t>(b)];
      bool convex = true;
      if (na.mean_normal.dot(nb.mean_normal) < flat_cos) {
        // Convex when each centroid lies on or behind the other's tangent plane.
        const Eigen::Vector3d d = na.centroid - nb.centroid;
        convex = na.mean_normal.dot(d) >= -slack && nb.mean_normal.dot(-d) >= -slack;
      }
      g.edges.push_back({a, b, convex});
    }
    g.change_fraction = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.nodes.size()));
    return g;
  }

  const PointCloud& cloud_;
  SupervoxelParams params_;
  bool use_color_;
  std::vector<Voxel> voxels_;
  std::vector<std::vector<int>> neighbors_;
  std::unordered_map<VoxelKey, int, VoxelKeyHash> voxel_lookup_;
  std::vector<int> seed_voxels_;
};

} // namespace

SupervoxelGraph segment(const PointCloud& cloud, const SupervoxelParams& params)
{
  if (cloud.empty())
    throw EmptyScene("segment: empty cloud");
  if (!cloud.has_normals())
    throw MissingNormals("segment: cloud has no normals");
  if (!(params.voxel_size > 0.0) || !(params.seed_spacing > params.voxel_size))
    throw SpecViolation("segment: need seed_spacing > voxel_size > 0");
  return Segmenter(cloud, params).run();
}

void assign_priors(SupervoxelGraph& graph, const PointCloud& cloud, std::span<const Point3> changes, double radius,
                   PriorRule rule, std::span<const std::int64_t> source_points)
{
  if (graph.point_to_node.size() != cloud.size())
    throw GraphMismatch("assign_priors: graph was not segmented from this cloud");
  if (!source_points.empty() && source_points.size() != changes.size())
    throw DimensionMismatch("assign_priors: source_points must parallel changes");

  std::vector<std::size_t> hits(graph.size(), 0);
  std::optional<KdTree3d> index;
  for (std::size_t ci = 0; ci < changes.size(); ++ci) {
    const Point3& c = changes[ci];
    if (!source_points.empty() && source_points[ci] >= 0) {
      const auto src = static_cast<std::size_t>(source_points[ci]);
      if (src >= cloud.size())
        throw GraphMismatch("assign_priors: source point out of range");
      ++hits[static_cast<std::size_t>(graph.point_to_node[src])];
      continue;
    }
    if (!index)
      index = make_index(cloud.points);
    if (rule == PriorRule::NearestMember) {
      const auto nn = index->nearest(c);
      if (nn.distance <= radius)
        ++hits[static_cast<std::size_t>(graph.point_to_node[nn.index])];
    } else {
      std::vector<int> touched;
      for (const auto& nb : index->radius_search(c, radius))
        touched.push_back(graph.point_to_node[nb.index]);
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
      for (const int t : touched)
        ++hits[static_cast<std::size_t>(t)];
    }
  }

  Eigen::Matrix<double, Eigen::Dynamic, 2> priors(static_cast<Eigen::Index>(graph.size()), 2);
  graph.change_fraction.resize(static_cast<Eigen::Index>(graph.size()));
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const bool changed = hits[i] > 0;
    priors(row, 0) = changed ? kPriorChanged : kPriorUnknown;
    priors(row, 1) = changed ? 1.0 - kPriorChanged : kPriorUnknown;
    graph.change_fraction(row) =
        std::min(1.0, static_cast<double>(hits[i]) / static_cast<double>(graph.nodes[i].members.size()));
  }
  graph.priors = std::move(priors);
}

} // namespace scenediff
