#include "scenediff/discover.hpp"

#include <algorithm>
#include <deque>
#include <unordered_map>

namespace scenediff {

std::vector<DetectedObject> connected_components(std::span<const Point3> points, double cell_size,
                                                 std::size_t min_voxels)
{
  if (!(cell_size > 0.0))
    throw SpecViolation("connected_components: cell_size must be positive");

  // Sorted cells make the flood order, and so the output, independent of input order.
  std::vector<VoxelKey> cells;
  cells.reserve(points.size());
  for (const auto& p : points)
    cells.push_back(voxel_key(p, cell_size));
  std::vector<VoxelKey> keys = cells;
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  std::unordered_map<VoxelKey, int, VoxelKeyHash> component;
  component.reserve(keys.size());
  for (const auto& k : keys)
    component.emplace(k, -1);

  std::vector<std::vector<VoxelKey>> groups;
  for (const auto& start : keys) {
    if (component[start] >= 0)
      continue;
    const int label = static_cast<int>(groups.size());
    groups.emplace_back();
    std::deque<VoxelKey> queue{start};
    component[start] = label;
    while (!queue.empty()) {
      const VoxelKey k = queue.front();
      queue.pop_front();
      groups.back().push_back(k);
      for (const auto& off : neighbor_offsets_26()) {
        const auto it = component.find(k + off);
        if (it != component.end() && it->second < 0) {
          it->second = label;
          queue.push_back(it->first);
        }
      }
    }
  }

  std::vector<int> order;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::sort(groups[g].begin(), groups[g].end());
    if (groups[g].size() >= std::max<std::size_t>(min_voxels, 1))
      order.push_back(static_cast<int>(g));
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& ga = groups[static_cast<std::size_t>(a)];
    const auto& gb = groups[static_cast<std::size_t>(b)];
    if (ga.size() != gb.size())
      return ga.size() > gb.size();
    return ga.front() < gb.front();
  });

  std::vector<int> object_of(groups.size(), -1);
  std::vector<DetectedObject> out(order.size());
  for (std::size_t o = 0; o < order.size(); ++o) {
    out[o].id = static_cast<int>(o);
    out[o].voxels = std::move(groups[static_cast<std::size_t>(order[o])]);
    object_of[static_cast<std::size_t>(order[o])] = static_cast<int>(o);
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int o = object_of[static_cast<std::size_t>(component.at(cells[i]))];
    if (o >= 0)
      out[static_cast<std::size_t>(o)].points.push_back(points[i]);
  }
  return out;
}

VoxelSet occupied_voxels(std::span<const DetectedObject> objects)
{
  VoxelSet out;
  for (const auto& o : objects)
    out.insert(o.voxels.begin(), o.voxels.end());
  return out;
}

} // namespace scenediff
