#pragma once

#include <Eigen/Dense>

#include <filesystem>

#include "scenediff/geom.hpp"

namespace scenediff {

/**
 * Pinhole viewpoint. A world point X maps to camera coordinates
 * x_c = R X + Tr and to image coordinates K x_c / z_c, so P = K [R | Tr].
 * Image y grows downward; pixel (i, j) has its center at (i + 0.5, j + 0.5).
 */
struct CameraPose
{
  Eigen::Matrix3d intrinsics = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  int width = 0;
  int height = 0;

  double fx() const { return intrinsics(0, 0); }
  double fy() const { return intrinsics(1, 1); }
  double cx() const { return intrinsics(0, 2); }
  double cy() const { return intrinsics(1, 2); }

  Eigen::Matrix<double, 3, 4> projection() const;
  Eigen::Vector3d center() const { return -rotation.transpose() * translation; }
  Eigen::Vector3d to_camera(const Point3& world) const { return rotation * world + translation; }
};

/// Builds K from (fx, fy, cx, cy) with zero skew.
Eigen::Matrix3d make_intrinsics(double fx, double fy, double cx, double cy);

/// Camera at eye looking toward target; image x to the right, y down.
CameraPose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Matrix3d& intrinsics, int width,
                   int height, const Eigen::Vector3d& world_up = Eigen::Vector3d::UnitZ());

/// Throws SpecViolation on non-positive focal lengths, a principal point off
/// the image, or a rotation that is not orthonormal with det 1 (1e-6).
void validate(const CameraPose& pose);

/// Range image in meters, row-major (row = image y). 0 means "no surface".
struct DepthMap
{
  using Storage = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  int width = 0;
  int height = 0;
  Storage values;

  DepthMap() = default;
  DepthMap(int w, int h) : width(w), height(h), values(Storage::Zero(h, w)) {}

  double operator()(int x, int y) const { return values(y, x); }
  double& operator()(int x, int y) { return values(y, x); }
};

/// Image coordinates (continuous) and camera-space depth of a world point.
Eigen::Vector3d project(const CameraPose& pose, const Point3& world);

/// [X,Y,Z] = R^T (K^-1 [x, y, 1]^T depth - Tr) for continuous image coordinates.
Point3 backproject(const Eigen::Vector2d& image_xy, double depth, const CameraPose& pose);

/// Back-projection of the center of integer pixel (x, y).
Point3 backproject_pixel(int x, int y, double depth, const CameraPose& pose);

/**
 * z-buffered depth rendering of a triangle mesh.
 *
 * Each covered pixel center takes the camera-space z of the closest
 * triangle, computed by intersecting the pixel ray with the triangle's
 * plane. Triangles are clipped at a near plane in front of the camera and
 * rendered double-sided.
 */
DepthMap render_depth(const TriangleMesh& mesh, const CameraPose& pose, double near_plane = 1e-3);

/// Index of the face seen at each pixel, -1 where the depth is 0. Row-major like DepthMap.
using FaceMap = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// render_depth that also reports the visible face of every pixel when faces is given.
DepthMap render_depth(const TriangleMesh& mesh, const CameraPose& pose, FaceMap* faces, double near_plane = 1e-3);

/// Per pixel: 0 if either input is 0, otherwise the smaller depth.
DepthMap combine_depths(const DepthMap& d_s, const DepthMap& d_r);

/// 16-bit binary PGM, millimeters, 0 for invalid.
void write_depth_pgm(const std::filesystem::path& path, const DepthMap& depth);

} // namespace scenediff
