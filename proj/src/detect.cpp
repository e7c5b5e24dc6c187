#include "scenediff/detect.hpp"

#include <future>

namespace scenediff {
namespace {

std::int64_t nearest_corner(const TriangleMesh* mesh, const FaceMap* faces, int x, int y, const Point3& p)
{
  if (!mesh || !faces)
    return -1;
  const std::int32_t f = (*faces)(y, x);
  if (f < 0)
    return -1;
  const auto& tri = mesh->faces[static_cast<std::size_t>(f)];
  std::int64_t best = tri[0];
  double best_d = (mesh->vertices[tri[0]] - p).squaredNorm();
  for (int c = 1; c < 3; ++c) {
    const double d = (mesh->vertices[tri[static_cast<std::size_t>(c)]] - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = tri[static_cast<std::size_t>(c)];
    }
  }
  return best;
}

} // namespace

std::vector<Point3> ChangePoints::from(ScanSide side) const
{
  std::vector<Point3> out;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (origin[i] == side)
      out.push_back(points[i]);
  return out;
}

ChangeMask diff_mask(const DepthMap& d_s, const DepthMap& d_r, double tau)
{
  if (d_s.width != d_r.width || d_s.height != d_r.height)
    throw DimensionMismatch("diff_mask: depth maps differ in size");
  if (!(tau > 0.0))
    throw SpecViolation("diff_mask: tau must be positive");
  ChangeMask mask;
  mask.width = d_s.width;
  mask.height = d_s.height;
  const auto& s = d_s.values.array();
  const auto& r = d_r.values.array();
  mask.bits = (s > 0.0) && (r > 0.0) && ((s - r).abs() > tau);
  return mask;
}

ChangePoints backproject_mask(const ChangeMask& mask, const DepthMap& d_s, const DepthMap& d_r, const CameraPose& pose,
                              int viewpoint)
{
  return backproject_mask(mask, d_s, d_r, pose, viewpoint, FaceSources{});
}

ChangePoints backproject_mask(const ChangeMask& mask, const DepthMap& d_s, const DepthMap& d_r, const CameraPose& pose,
                              int viewpoint, const FaceSources& sources)
{
  const DepthMap combined = combine_depths(d_s, d_r);
  ChangePoints out;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      if (!mask(x, y))
        continue;
      const Point3 p = backproject_pixel(x, y, combined(x, y), pose);
      const bool from_s = d_s(x, y) < d_r(x, y);
      out.points.push_back(p);
      out.origin.push_back(from_s ? ScanSide::Reference : ScanSide::Rescan);
      out.viewpoint.push_back(viewpoint);
      out.source_vertex.push_back(nearest_corner(from_s ? sources.scan_s : sources.scan_r,
                                                 from_s ? sources.faces_s : sources.faces_r, x, y, p));
    }
  return out;
}

ChangePoints detect_changes(const TriangleMesh& scan_s, const TriangleMesh& scan_r, std::span<const CameraPose> poses,
                            double tau, std::vector<ViewDetection>* views)
{
  if (poses.empty())
    throw SpecViolation("detect_changes: at least one pose is required");

  struct PerView
  {
    ViewDetection view;
    ChangePoints points;
  };
  std::vector<std::future<PerView>> jobs;
  jobs.reserve(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i)
    jobs.push_back(std::async(std::launch::async, [&, i] {
      PerView pv;
      FaceMap faces_s, faces_r;
      pv.view.reference = render_depth(scan_s, poses[i], &faces_s);
      pv.view.rescan = render_depth(scan_r, poses[i], &faces_r);
      pv.view.mask = diff_mask(pv.view.reference, pv.view.rescan, tau);
      pv.points = backproject_mask(pv.view.mask, pv.view.reference, pv.view.rescan, poses[i], static_cast<int>(i),
                                   FaceSources{&scan_s, &scan_r, &faces_s, &faces_r});
      return pv;
    }));

  ChangePoints all;
  if (views)
    views->clear();
  for (auto& job : jobs) {
    PerView pv = job.get();
    all.points.insert(all.points.end(), pv.points.points.begin(), pv.points.points.end());
    all.origin.insert(all.origin.end(), pv.points.origin.begin(), pv.points.origin.end());
    all.viewpoint.insert(all.viewpoint.end(), pv.points.viewpoint.begin(), pv.points.viewpoint.end());
    all.source_vertex.insert(all.source_vertex.end(), pv.points.source_vertex.begin(), pv.points.source_vertex.end());
    if (views)
      views->push_back(std::move(pv.view));
  }
  return all;
}

} // namespace scenediff
