#pragma once

#include <optional>
#include <span>
#include <vector>

#include "scenediff/geom.hpp"

namespace scenediff {

struct DetectedObject
{
  int id = 0;
  std::vector<VoxelKey> voxels; // ascending
  std::vector<Point3> points;
  std::optional<int> transform_id; // index into the hypothesis list

  Aabb bounds() const
  {
    Aabb box;
    for (const auto& p : points)
      box.extend(p);
    return box;
  }
};

inline constexpr double kComponentCell = 0.1;
inline constexpr std::size_t kMinComponentVoxels = 3;

/**
 * 26-connected components of the occupied cells of a cell_size grid.
 *
 * Components with fewer than min_voxels cells are dropped. Objects are
 * ordered by voxel count, largest first, then by their smallest voxel, and
 * numbered from 0 in that order. Each object carries the input points that
 * fall in its cells, in input order.
 */
std::vector<DetectedObject> connected_components(std::span<const Point3> points, double cell_size,
                                                 std::size_t min_voxels = kMinComponentVoxels);

/// Union of the voxel sets of all objects.
VoxelSet occupied_voxels(std::span<const DetectedObject> objects);

} // namespace scenediff
