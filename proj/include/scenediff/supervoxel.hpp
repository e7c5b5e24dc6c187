#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "scenediff/geom.hpp"
#include "scenediff/kdtree.hpp"

namespace scenediff {

struct SupervoxelParams
{
  double voxel_size = 0.05;
  double seed_spacing = 0.3;
  double w_spatial = 0.4;
  double w_normal = 1.0;
  double w_color = 0.2;
  int refine_rounds = 3;
  /// Normals closer than this (degrees) count as a flat, convex connection.
  double flat_angle_deg = 10.0;
};

struct Supervoxel
{
  int id = 0;
  std::vector<std::size_t> members; // indices into the scene cloud, ascending
  Point3 centroid = Point3::Zero();
  Eigen::Vector3d mean_normal = Eigen::Vector3d::UnitZ();
  Color3 mean_color = Color3::Zero();
};

/// Edge between two supervoxels; a < b always.
struct SupervoxelEdge
{
  int a = 0;
  int b = 0;
  /// False when the shared boundary is a concave crease.
  bool convex = true;

  friend bool operator==(const SupervoxelEdge&, const SupervoxelEdge&) = default;
};

/**
 * Scene partition into supervoxels plus the undirected adjacency graph.
 *
 * priors, when set, hold one row per node: column 0 is the probability of
 * "changed" (label 1), column 1 of "unchanged" (label 0).
 */
struct SupervoxelGraph
{
  std::vector<Supervoxel> nodes;
  std::vector<SupervoxelEdge> edges; // sorted by (a, b), no duplicates
  std::vector<int> point_to_node;    // scene point -> node id
  bool has_colors = false;

  std::optional<Eigen::Matrix<double, Eigen::Dynamic, 2>> priors;
  /// Diagnostics only: change points attributed to each node over its member count.
  Eigen::VectorXd change_fraction;

  std::size_t size() const noexcept { return nodes.size(); }
};

/**
 * VCCS-style over-segmentation.
 *
 * Points are binned into voxel_size cells; seeds are the voxels closest to
 * the centers of a seed_spacing grid. Supervoxels then grow competitively
 * through 26-connected voxels, with
 *   d = w_spatial |p - c| / seed_spacing + w_normal (1 - |n . n_c|) + w_color |rgb - rgb_c|,
 * re-centering between rounds. Each point finally joins the cheapest
 * supervoxel owning its voxel or a neighbor voxel, and two supervoxels are
 * adjacent when their points occupy the same or 26-neighboring voxels.
 * The color term is dropped for colorless clouds.
 */
SupervoxelGraph segment(const PointCloud& cloud, const SupervoxelParams& params = {});

/// How a change point is attributed to supervoxels.
enum class PriorRule
{
  /// The supervoxel owning the change point's nearest scene point, if within radius.
  NearestMember,
  /// Every supervoxel with any member within radius of the change point.
  AnyMemberInRadius,
};

inline constexpr double kPriorChanged = 0.8;
inline constexpr double kPriorUnknown = 0.5;

/**
 * Soft change priors: (0.8, 0.2) for supervoxels that contain change points,
 * (0.5, 0.5) for the rest.
 *
 * source_points, when given, is parallel to changes and names the cloud point
 * each change was lifted from (-1 if unknown). A known source decides the
 * supervoxel directly; the others fall back to rule within radius.
 */
void assign_priors(SupervoxelGraph& graph, const PointCloud& cloud, std::span<const Point3> changes, double radius,
                   PriorRule rule = PriorRule::NearestMember, std::span<const std::int64_t> source_points = {});

} // namespace scenediff
