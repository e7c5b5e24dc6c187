#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

#include "scenediff/geom.hpp"
#include "scenediff/kdtree.hpp"

namespace scenediff {

inline constexpr int kFpfhBins = 11;
inline constexpr int kFpfhSize = 3 * kFpfhBins;

/// One descriptor per column.
using FpfhSet = Eigen::Matrix<double, kFpfhSize, Eigen::Dynamic>;
using DescriptorSet = Eigen::MatrixXd;

/// Angular pair features (theta, alpha, phi) of a point pair with normals.
/// Returns false when the pair has no defined Darboux frame.
bool pair_features(const Point3& p1, const Eigen::Vector3d& n1, const Point3& p2, const Eigen::Vector3d& n2, double& theta,
                   double& alpha, double& phi);

/// Simplified point feature histogram of every point (33 bins, each 11-bin block sums to 100).
FpfhSet compute_spfh(const PointCloud& cloud, double radius);

/**
 * Fast point feature histograms.
 *
 * FPFH(p) = SPFH(p) + (1/k) sum_k SPFH(p_k) / |p - p_k| over the k neighbors
 * within radius. Points with fewer than two neighbors get the zero vector.
 * Coincident points are not counted as neighbors.
 */
FpfhSet compute_fpfh(const PointCloud& cloud, double radius);

/// FPFH of the listed points only, with neighborhoods taken from the whole cloud.
FpfhSet compute_fpfh(const PointCloud& cloud, double radius, std::span<const std::size_t> queries);

struct DescriptorParams
{
  double radius = 0.25;
  /// Scale of the appended color block (own RGB, mean neighbor RGB). 0 gives plain FPFH.
  double color_weight = 3000.0;
};

/// FPFH, optionally followed by 6 color rows when the cloud has colors.
DescriptorSet describe(const PointCloud& cloud, const DescriptorParams& params, std::span<const std::size_t> queries);

struct Correspondence
{
  std::size_t index_s = 0; // reference cloud
  std::size_t index_r = 0; // rescan cloud
  double distance_feature = 0.0;

  friend bool operator==(const Correspondence&, const Correspondence&) = default;
};

/// For each rescan descriptor, its nearest reference descriptor (Euclidean).
std::vector<Correspondence> match_features(const DescriptorSet& desc_s, const DescriptorSet& desc_r);

/// Keeps correspondences whose endpoints are at least delta_static apart.
std::vector<Correspondence> filter_static(std::span<const Correspondence> corrs, const PointCloud& cloud_s,
                                          const PointCloud& cloud_r, double delta_static);

/// Indices of points farther than delta from every point of the other scan.
std::vector<std::size_t> unexplained_points(const PointCloud& cloud, const KdTree3d& other, double delta);

} // namespace scenediff
