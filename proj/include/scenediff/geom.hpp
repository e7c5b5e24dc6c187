#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <unordered_set>
#include <vector>

#include "scenediff/error.hpp"

namespace scenediff {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

using Point3 = Eigen::Vector3d;
using Color3 = Eigen::Vector3d; // RGB in [0,1]

/// Point samples of one scan. normals/colors are either empty or parallel to points.
struct PointCloud
{
  std::vector<Point3> points;
  std::vector<Eigen::Vector3d> normals;
  std::vector<Color3> colors;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  bool has_normals() const noexcept { return !normals.empty() && normals.size() == points.size(); }
  bool has_colors() const noexcept { return !colors.empty() && colors.size() == points.size(); }
};

struct TriangleMesh
{
  std::vector<Point3> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;
  std::vector<Color3> vertex_colors;
  /// Optional per-vertex normals (read from PLY when present).
  std::vector<Eigen::Vector3d> vertex_normals;

  bool has_colors() const noexcept { return !vertex_colors.empty() && vertex_colors.size() == vertices.size(); }
  bool has_normals() const noexcept { return !vertex_normals.empty() && vertex_normals.size() == vertices.size(); }
};

/// Throws SpecViolation when a face references a missing vertex.
void validate(const TriangleMesh& mesh);

/// Rotation followed by translation: x -> R x + t.
template <typename Scalar>
struct RigidTransformT
{
  Matrix3<Scalar> rotation = Matrix3<Scalar>::Identity();
  Vector3<Scalar> translation = Vector3<Scalar>::Zero();

  static RigidTransformT identity() { return {}; }

  Vector3<Scalar> operator()(const Vector3<Scalar>& p) const { return rotation * p + translation; }

  RigidTransformT inverse() const
  {
    RigidTransformT out;
    out.rotation = rotation.transpose();
    out.translation = -(out.rotation * translation);
    return out;
  }

  Eigen::Matrix<Scalar, 4, 4> matrix() const
  {
    Eigen::Matrix<Scalar, 4, 4> m = Eigen::Matrix<Scalar, 4, 4>::Identity();
    m.template topLeftCorner<3, 3>() = rotation;
    m.template topRightCorner<3, 1>() = translation;
    return m;
  }

  template <typename Other>
  RigidTransformT<Other> cast() const
  {
    RigidTransformT<Other> out;
    out.rotation = rotation.template cast<Other>();
    out.translation = translation.template cast<Other>();
    return out;
  }
};

using RigidTransform = RigidTransformT<double>;

/// a ∘ b: apply b first, then a.
template <typename Scalar>
RigidTransformT<Scalar> compose(const RigidTransformT<Scalar>& a, const RigidTransformT<Scalar>& b)
{
  RigidTransformT<Scalar> out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

template <typename Scalar>
Vector3<Scalar> apply_transform(const RigidTransformT<Scalar>& t, const Vector3<Scalar>& p)
{
  return t.rotation * p + t.translation;
}

/// Rotation angle in radians of R, robust near 0 and pi.
template <typename Derived>
typename Derived::Scalar rotation_angle(const Eigen::MatrixBase<Derived>& r)
{
  using Scalar = typename Derived::Scalar;
  const Scalar c = std::clamp((r.trace() - Scalar(1)) / Scalar(2), Scalar(-1), Scalar(1));
  // acos loses precision near 0; use atan2 of the skew part instead.
  const Vector3<Scalar> axis(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const Scalar s = axis.norm() / Scalar(2);
  return std::atan2(s, c);
}

/// True if R is orthonormal with det +1 within tol per entry.
template <typename Derived>
bool is_rotation(const Eigen::MatrixBase<Derived>& r, double tol = 1e-6)
{
  const auto rtr = (r.transpose() * r).eval();
  if (((rtr - Matrix3<typename Derived::Scalar>::Identity()).array().abs() > tol).any())
    return false;
  return std::abs(r.determinant() - 1.0) <= tol;
}

/// Rotation about a unit axis by angle radians.
inline Eigen::Matrix3d axis_angle(const Eigen::Vector3d& axis, double angle)
{
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

/**
 * Least-squares rigid transform mapping source onto target,
 * minimizing sum ||R s_i + t - t_i||^2 (no scale).
 *
 * Closed-form SVD solution of the orthogonal Procrustes problem; the sign of
 * the last singular direction is flipped when the raw solution is a reflection.
 * Throws DegenerateInput for fewer than 3 points or a source set whose
 * centered covariance has rank < 2 (collinear or coincident points).
 */
template <typename Scalar>
RigidTransformT<Scalar> fit_rigid(std::span<const Vector3<Scalar>> source, std::span<const Vector3<Scalar>> target)
{
  if (source.size() != target.size())
    throw DegenerateInput("fit_rigid: source and target lengths differ");
  if (source.size() < 3)
    throw DegenerateInput("fit_rigid: need at least 3 correspondences");

  const auto n = static_cast<Scalar>(source.size());
  Vector3<Scalar> mu_s = Vector3<Scalar>::Zero();
  Vector3<Scalar> mu_t = Vector3<Scalar>::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    mu_s += source[i];
    mu_t += target[i];
  }
  mu_s /= n;
  mu_t /= n;

  Matrix3<Scalar> cov = Matrix3<Scalar>::Zero();
  Matrix3<Scalar> src_cov = Matrix3<Scalar>::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Vector3<Scalar> ds = source[i] - mu_s;
    cov += (target[i] - mu_t) * ds.transpose();
    src_cov += ds * ds.transpose();
  }

  // Rank test on the source spread, relative to its largest direction.
  Eigen::SelfAdjointEigenSolver<Matrix3<Scalar>> spread(src_cov, Eigen::EigenvaluesOnly);
  const Vector3<Scalar> ev = spread.eigenvalues(); // ascending
  const Scalar rank_tol = std::max(ev(2), Scalar(0)) * Scalar(1e-10);
  if (!(ev(2) > Scalar(0)) || ev(1) <= rank_tol)
    throw DegenerateInput("fit_rigid: source points are collinear or coincident");

  Eigen::JacobiSVD<Matrix3<Scalar>> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix3<Scalar>& u = svd.matrixU();
  const Matrix3<Scalar>& v = svd.matrixV();
  Matrix3<Scalar> d = Matrix3<Scalar>::Identity();
  if ((u * v.transpose()).determinant() < Scalar(0))
    d(2, 2) = Scalar(-1);

  RigidTransformT<Scalar> out;
  out.rotation = u * d * v.transpose();
  out.translation = mu_t - out.rotation * mu_s;
  return out;
}

template <typename Scalar>
RigidTransformT<Scalar> fit_rigid(const std::vector<Vector3<Scalar>>& source, const std::vector<Vector3<Scalar>>& target)
{
  return fit_rigid<Scalar>(std::span<const Vector3<Scalar>>(source), std::span<const Vector3<Scalar>>(target));
}

// ---------------------------------------------------------------------------
// Voxel grid, origin at the world origin, floor binning.

struct VoxelKey
{
  std::int64_t ix = 0;
  std::int64_t iy = 0;
  std::int64_t iz = 0;

  friend bool operator==(const VoxelKey&, const VoxelKey&) = default;
  friend auto operator<=>(const VoxelKey&, const VoxelKey&) = default;
};

struct VoxelKeyHash
{
  std::size_t operator()(const VoxelKey& k) const noexcept
  {
    // Large primes from the classic spatial hashing scheme.
    const auto h = static_cast<std::uint64_t>(k.ix) * 73856093ULL ^ static_cast<std::uint64_t>(k.iy) * 19349663ULL ^
                   static_cast<std::uint64_t>(k.iz) * 83492791ULL;
    return static_cast<std::size_t>(h);
  }
};

using VoxelSet = std::unordered_set<VoxelKey, VoxelKeyHash>;

inline VoxelKey voxel_key(const Point3& p, double cell_size)
{
  return {static_cast<std::int64_t>(std::floor(p.x() / cell_size)),
          static_cast<std::int64_t>(std::floor(p.y() / cell_size)),
          static_cast<std::int64_t>(std::floor(p.z() / cell_size))};
}

inline Point3 voxel_center(const VoxelKey& k, double cell_size)
{
  return {(static_cast<double>(k.ix) + 0.5) * cell_size, (static_cast<double>(k.iy) + 0.5) * cell_size,
          (static_cast<double>(k.iz) + 0.5) * cell_size};
}

/// Occupied cells of a cubic grid with edge cell_size (> 0).
VoxelSet voxelize(std::span<const Point3> points, double cell_size);

/// The 26 neighbor offsets of a voxel, in a fixed order.
const std::array<VoxelKey, 26>& neighbor_offsets_26();

inline VoxelKey operator+(const VoxelKey& a, const VoxelKey& b) { return {a.ix + b.ix, a.iy + b.iy, a.iz + b.iz}; }

/// Axis-aligned bounds of a point list; empty input yields min > max.
struct Aabb
{
  Point3 min = Point3::Constant(std::numeric_limits<double>::infinity());
  Point3 max = Point3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Point3& p)
  {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
};

/// First point of each occupied cell, in index order. Returns the kept indices.
std::vector<std::size_t> grid_downsample(std::span<const Point3> points, double cell_size);

/// Gather the listed indices of a cloud into a new cloud (normals/colors follow).
PointCloud subset(const PointCloud& cloud, std::span<const std::size_t> indices);

/// Working cloud of a mesh: its vertices, with PLY normals when present,
/// otherwise area-weighted face normals from the winding order.
PointCloud mesh_to_cloud(const TriangleMesh& mesh);

} // namespace scenediff
