#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "scenediff/geom.hpp"
#include "scenediff/render.hpp"

namespace scenediff {

/// Per-pixel change flags of one viewpoint (row-major, true = changed).
struct ChangeMask
{
  using Storage = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  int width = 0;
  int height = 0;
  Storage bits;

  bool operator()(int x, int y) const { return bits(y, x); }
  Eigen::Index count() const { return bits.count(); }
};

/// Which scan supplied the (smaller) depth a change point was lifted from.
enum class ScanSide : std::uint8_t
{
  Reference,
  Rescan,
};

/// Back-projected changed pixels, unioned over viewpoints in pose order.
struct ChangePoints
{
  std::vector<Point3> points;
  std::vector<ScanSide> origin; // parallel to points
  std::vector<int> viewpoint;   // parallel to points; index into the pose list
  /// Parallel to points: the vertex of the source scan's visible face nearest
  /// to the point, or -1 when the face is unknown.
  std::vector<std::int64_t> source_vertex;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }

  /// Points whose depth came from the given scan.
  std::vector<Point3> from(ScanSide side) const;
};

/// true iff both depths are observed and differ by more than tau.
ChangeMask diff_mask(const DepthMap& d_s, const DepthMap& d_r, double tau);

/// Changed pixels of one viewpoint lifted to 3-D at the combined (smaller) depth.
ChangePoints backproject_mask(const ChangeMask& mask, const DepthMap& d_s, const DepthMap& d_r, const CameraPose& pose,
                              int viewpoint = 0);

/// Visible faces of both scans, used to record which vertex each change point came from.
struct FaceSources
{
  const TriangleMesh* scan_s = nullptr;
  const TriangleMesh* scan_r = nullptr;
  const FaceMap* faces_s = nullptr;
  const FaceMap* faces_r = nullptr;
};

ChangePoints backproject_mask(const ChangeMask& mask, const DepthMap& d_s, const DepthMap& d_r, const CameraPose& pose,
                              int viewpoint, const FaceSources& sources);

/// Per-viewpoint intermediate products, kept for debug dumps.
struct ViewDetection
{
  DepthMap reference;
  DepthMap rescan;
  ChangeMask mask;
};

/**
 * Initial change detection: render both scans from every pose, threshold
 * the depth difference at tau, back-project changed pixels at the closer
 * of the two depths, and union the points of all viewpoints.
 */
ChangePoints detect_changes(const TriangleMesh& scan_s, const TriangleMesh& scan_r, std::span<const CameraPose> poses,
                            double tau, std::vector<ViewDetection>* views = nullptr);

} // namespace scenediff
