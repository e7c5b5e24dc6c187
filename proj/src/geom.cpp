#include "scenediff/geom.hpp"

#include <unordered_map>

namespace scenediff {

void validate(const TriangleMesh& mesh)
{
  const auto n = mesh.vertices.size();
  for (const auto& f : mesh.faces)
    for (const auto idx : f)
      if (idx >= n)
        throw SpecViolation("mesh face references vertex " + std::to_string(idx) + " of " + std::to_string(n));
  if (!mesh.vertex_colors.empty() && mesh.vertex_colors.size() != n)
    throw SpecViolation("mesh vertex_colors length differs from vertex count");
  if (!mesh.vertex_normals.empty() && mesh.vertex_normals.size() != n)
    throw SpecViolation("mesh vertex_normals length differs from vertex count");
}

VoxelSet voxelize(std::span<const Point3> points, double cell_size)
{
  if (!(cell_size > 0.0))
    throw SpecViolation("voxelize: cell_size must be positive");
  VoxelSet out;
  out.reserve(points.size());
  for (const auto& p : points)
    out.insert(voxel_key(p, cell_size));
  return out;
}

const std::array<VoxelKey, 26>& neighbor_offsets_26()
{
  static const std::array<VoxelKey, 26> offsets = [] {
    std::array<VoxelKey, 26> o{};
    std::size_t n = 0;
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz)
          if (dx != 0 || dy != 0 || dz != 0)
            o[n++] = {dx, dy, dz};
    return o;
  }();
  return offsets;
}

std::vector<std::size_t> grid_downsample(std::span<const Point3> points, double cell_size)
{
  if (!(cell_size > 0.0))
    throw SpecViolation("grid_downsample: cell_size must be positive");
  std::unordered_map<VoxelKey, std::size_t, VoxelKeyHash> first;
  first.reserve(points.size());
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (first.emplace(voxel_key(points[i], cell_size), i).second)
      kept.push_back(i);
  return kept;
}

PointCloud subset(const PointCloud& cloud, std::span<const std::size_t> indices)
{
  PointCloud out;
  out.points.reserve(indices.size());
  for (const auto i : indices)
    out.points.push_back(cloud.points[i]);
  if (cloud.has_normals()) {
    out.normals.reserve(indices.size());
    for (const auto i : indices)
      out.normals.push_back(cloud.normals[i]);
  }
  if (cloud.has_colors()) {
    out.colors.reserve(indices.size());
    for (const auto i : indices)
      out.colors.push_back(cloud.colors[i]);
  }
  return out;
}

PointCloud mesh_to_cloud(const TriangleMesh& mesh)
{
  validate(mesh);
  PointCloud cloud;
  cloud.points = mesh.vertices;
  if (mesh.has_colors())
    cloud.colors = mesh.vertex_colors;

  if (mesh.has_normals()) {
    cloud.normals.reserve(mesh.vertices.size());
    for (const auto& n : mesh.vertex_normals) {
      const double len = n.norm();
      cloud.normals.push_back(len > 0.0 ? Eigen::Vector3d(n / len) : Eigen::Vector3d::UnitZ());
    }
    return cloud;
  }

  // Cross product magnitude is twice the area, so summing raw cross products
  // gives area weighting for free.
  std::vector<Eigen::Vector3d> acc(mesh.vertices.size(), Eigen::Vector3d::Zero());
  for (const auto& f : mesh.faces) {
    const Eigen::Vector3d n =
        (mesh.vertices[f[1]] - mesh.vertices[f[0]]).cross(mesh.vertices[f[2]] - mesh.vertices[f[0]]);
    for (const auto idx : f)
      acc[idx] += n;
  }
  cloud.normals.reserve(acc.size());
  for (const auto& n : acc) {
    const double len = n.norm();
    cloud.normals.push_back(len > 0.0 ? Eigen::Vector3d(n / len) : Eigen::Vector3d::UnitZ());
  }
  return cloud;
}

} // namespace scenediff
