#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "scenediff/features.hpp"
#include "scenediff/geom.hpp"

namespace scenediff {

/// A rigid motion mapping reference points onto rescan points.
struct MotionHypothesis
{
  RigidTransform transform;
  std::vector<Correspondence> inliers;
  std::size_t inlier_count = 0;
};

struct RansacParams
{
  double threshold = 0.05; // inlier residual bound t, meters
  int max_iters = 2000;
  std::size_t k = 5;
  std::uint64_t seed = 0;
  /// Hypotheses turning less than 2 degrees and moving less than this are static background.
  double delta_static = 0.1;
  /// Smallest inlier set accepted as a model (3 is the minimal sample).
  std::size_t min_inliers = 3;
};

/// ||R p_s + t - p_r|| of one correspondence.
double residual(const RigidTransform& t, const Correspondence& c, const PointCloud& cloud_s, const PointCloud& cloud_r);

/**
 * Single-model RANSAC over 3-point samples drawn from rng.
 *
 * The best sample (most inliers, earliest iteration on ties) is refit on its
 * inliers until the inlier set stops changing. Returns nothing when fewer
 * than 3 correspondences are given or no model reaches min_inliers.
 */
std::optional<MotionHypothesis> ransac_transform(std::span<const Correspondence> corrs, const PointCloud& cloud_s,
                                                 const PointCloud& cloud_r, double threshold, int max_iters,
                                                 std::mt19937_64& rng, std::size_t min_inliers = 3);

/// Same, with a fresh generator seeded by seed.
std::optional<MotionHypothesis> ransac_transform(std::span<const Correspondence> corrs, const PointCloud& cloud_s,
                                                 const PointCloud& cloud_r, double threshold, int max_iters,
                                                 std::uint64_t seed);

/// True for motions the static background could explain.
bool is_near_identity(const RigidTransform& t, double delta_static);

/**
 * Sequential RANSAC: fit, remove the inliers, repeat. Near-identity models
 * are dropped (their inliers still removed). Stops after k models, when
 * fewer than 3 correspondences remain, or when no model is found. The result
 * is sorted by inlier count, largest first.
 */
std::vector<MotionHypothesis> dominant_transforms(std::span<const Correspondence> corrs, const PointCloud& cloud_s,
                                                  const PointCloud& cloud_r, const RansacParams& params);

} // namespace scenediff
