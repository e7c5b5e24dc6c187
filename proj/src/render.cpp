#include "scenediff/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

namespace scenediff {

Eigen::Matrix<double, 3, 4> CameraPose::projection() const
{
  Eigen::Matrix<double, 3, 4> rt;
  rt.leftCols<3>() = rotation;
  rt.col(3) = translation;
  return intrinsics * rt;
}

Eigen::Matrix3d make_intrinsics(double fx, double fy, double cx, double cy)
{
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

CameraPose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Matrix3d& intrinsics, int width,
                   int height, const Eigen::Vector3d& world_up)
{
  const Eigen::Vector3d forward = (target - eye).normalized();
  Eigen::Vector3d right = forward.cross(world_up);
  if (right.norm() < 1e-9)
    right = forward.cross(Eigen::Vector3d::UnitX());
  right.normalize();
  const Eigen::Vector3d down = forward.cross(right);

  CameraPose pose;
  pose.intrinsics = intrinsics;
  pose.rotation.row(0) = right.transpose();
  pose.rotation.row(1) = down.transpose();
  pose.rotation.row(2) = forward.transpose();
  pose.translation = -pose.rotation * eye;
  pose.width = width;
  pose.height = height;
  return pose;
}

void validate(const CameraPose& pose)
{
  if (pose.width <= 0 || pose.height <= 0)
    throw SpecViolation("camera pose: image size must be positive");
  if (!(pose.fx() > 0.0) || !(pose.fy() > 0.0))
    throw SpecViolation("camera pose: focal lengths must be positive");
  if (!(pose.cx() > 0.0 && pose.cx() < pose.width && pose.cy() > 0.0 && pose.cy() < pose.height))
    throw SpecViolation("camera pose: principal point outside the image");
  if (pose.intrinsics(0, 1) != 0.0 || pose.intrinsics(1, 0) != 0.0 || pose.intrinsics(2, 0) != 0.0 ||
      pose.intrinsics(2, 1) != 0.0 || pose.intrinsics(2, 2) != 1.0)
    throw SpecViolation("camera pose: intrinsics must be upper-triangular with zero skew");
  if (!is_rotation(pose.rotation, 1e-6))
    throw SpecViolation("camera pose: rotation is not orthonormal with det 1");
}

Eigen::Vector3d project(const CameraPose& pose, const Point3& world)
{
  const Eigen::Vector3d c = pose.to_camera(world);
  return {pose.fx() * c.x() / c.z() + pose.cx(), pose.fy() * c.y() / c.z() + pose.cy(), c.z()};
}

Point3 backproject(const Eigen::Vector2d& image_xy, double depth, const CameraPose& pose)
{
  if (!(depth > 0.0) || !std::isfinite(depth))
    throw InvalidDepth("backproject: depth must be positive and finite");
  const Eigen::Vector3d ray = pose.intrinsics.triangularView<Eigen::Upper>().solve(
      Eigen::Vector3d(image_xy.x(), image_xy.y(), 1.0));
  return pose.rotation.transpose() * (ray * depth - pose.translation);
}

Point3 backproject_pixel(int x, int y, double depth, const CameraPose& pose)
{
  return backproject(Eigen::Vector2d(x + 0.5, y + 0.5), depth, pose);
}

namespace {

using Poly = std::vector<Eigen::Vector3d>;

// Sutherland-Hodgman against z >= near.
Poly clip_near(const std::array<Eigen::Vector3d, 3>& tri, double near_plane)
{
  Poly out;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector3d& a = tri[static_cast<std::size_t>(i)];
    const Eigen::Vector3d& b = tri[static_cast<std::size_t>((i + 1) % 3)];
    const bool a_in = a.z() >= near_plane;
    const bool b_in = b.z() >= near_plane;
    if (a_in)
      out.push_back(a);
    if (a_in != b_in) {
      const double s = (near_plane - a.z()) / (b.z() - a.z());
      Eigen::Vector3d p = a + s * (b - a);
      p.z() = near_plane;
      out.push_back(p);
    }
  }
  return out;
}

void raster_triangle(const Eigen::Vector2d& p0, const Eigen::Vector2d& p1, const Eigen::Vector2d& p2,
                     const Eigen::Vector3d& plane_n, double plane_d, const CameraPose& pose, DepthMap& out,
                     FaceMap* faces, std::int32_t face)
{
  const auto edge = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& p) {
    return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
  };
  const double area = edge(p0, p1, p2);
  if (std::abs(area) < 1e-12)
    return;

  const double min_x = std::min({p0.x(), p1.x(), p2.x()});
  const double max_x = std::max({p0.x(), p1.x(), p2.x()});
  const double min_y = std::min({p0.y(), p1.y(), p2.y()});
  const double max_y = std::max({p0.y(), p1.y(), p2.y()});
  // Pixel i covers center i + 0.5.
  const int x0 = std::max(0, static_cast<int>(std::ceil(min_x - 0.5)));
  const int x1 = std::min(out.width - 1, static_cast<int>(std::floor(max_x - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(min_y - 0.5)));
  const int y1 = std::min(out.height - 1, static_cast<int>(std::floor(max_y - 0.5)));
  if (x0 > x1 || y0 > y1)
    return;

  const double sign = area > 0.0 ? 1.0 : -1.0;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const Eigen::Vector2d c(x + 0.5, y + 0.5);
      // Inclusive edges: shared edges never leave gaps; the z-buffer resolves overlap.
      if (sign * edge(p1, p2, c) < 0.0 || sign * edge(p2, p0, c) < 0.0 || sign * edge(p0, p1, c) < 0.0)
        continue;
      const Eigen::Vector3d ray((c.x() - pose.cx()) / pose.fx(), (c.y() - pose.cy()) / pose.fy(), 1.0);
      const double denom = plane_n.dot(ray);
      if (denom == 0.0)
        continue;
      const double z = plane_d / denom;
      if (!(z > 0.0) || !std::isfinite(z))
        continue;
      double& slot = out(x, y);
      if (slot == 0.0 || z < slot) {
        slot = z;
        if (faces)
          (*faces)(y, x) = face;
      }
    }
  }
}

} // namespace

DepthMap render_depth(const TriangleMesh& mesh, const CameraPose& pose, double near_plane)
{
  return render_depth(mesh, pose, nullptr, near_plane);
}

DepthMap render_depth(const TriangleMesh& mesh, const CameraPose& pose, FaceMap* faces, double near_plane)
{
  validate(pose);
  DepthMap out(pose.width, pose.height);
  if (faces)
    *faces = FaceMap::Constant(pose.height, pose.width, -1);

  std::vector<Eigen::Vector3d> cam(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    cam[i] = pose.to_camera(mesh.vertices[i]);

  for (std::size_t fi = 0; fi < mesh.faces.size(); ++fi) {
    const auto& f = mesh.faces[fi];
    const std::array<Eigen::Vector3d, 3> tri{cam[f[0]], cam[f[1]], cam[f[2]]};
    if (tri[0].z() < near_plane && tri[1].z() < near_plane && tri[2].z() < near_plane)
      continue;
    const Eigen::Vector3d n = (tri[1] - tri[0]).cross(tri[2] - tri[0]);
    if (n.squaredNorm() == 0.0)
      continue;
    const double d = n.dot(tri[0]);

    const Poly poly = clip_near(tri, near_plane);
    if (poly.size() < 3)
      continue;
    std::vector<Eigen::Vector2d> img(poly.size());
    for (std::size_t i = 0; i < poly.size(); ++i)
      img[i] = {pose.fx() * poly[i].x() / poly[i].z() + pose.cx(), pose.fy() * poly[i].y() / poly[i].z() + pose.cy()};
    for (std::size_t i = 2; i < img.size(); ++i)
      raster_triangle(img[0], img[i - 1], img[i], n, d, pose, out, faces, static_cast<std::int32_t>(fi));
  }
  return out;
}

DepthMap combine_depths(const DepthMap& d_s, const DepthMap& d_r)
{
  if (d_s.width != d_r.width || d_s.height != d_r.height)
    throw DimensionMismatch("combine_depths: depth maps differ in size");
  DepthMap out(d_s.width, d_s.height);
  const auto both = (d_s.values.array() > 0.0) && (d_r.values.array() > 0.0);
  out.values = both.select(d_s.values.cwiseMin(d_r.values), 0.0);
  return out;
}

void write_depth_pgm(const std::filesystem::path& path, const DepthMap& depth)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << "P5\n" << depth.width << ' ' << depth.height << "\n65535\n";
  for (int y = 0; y < depth.height; ++y)
    for (int x = 0; x < depth.width; ++x) {
      const double mm = std::clamp(std::round(depth(x, y) * 1000.0), 0.0, 65535.0);
      const auto v = static_cast<std::uint16_t>(mm);
      // PGM stores 16-bit samples big-endian.
      const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
      out.write(bytes, 2);
    }
  if (!out)
    throw IoError("write failed for " + path.string());
}

} // namespace scenediff
