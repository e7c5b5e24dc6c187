#pragma once

#include <span>
#include <utility>
#include <vector>

#include "scenediff/discover.hpp"
#include "scenediff/geom.hpp"

namespace scenediff {

/// |predicted ∩ gt| / |gt|. 1 when both are empty; EmptyGroundTruth when only gt is.
double voxel_recall(const VoxelSet& predicted, const VoxelSet& ground_truth);

/// |A ∩ B| / |A ∪ B| of two ascending voxel lists.
double voxel_iou(std::span<const VoxelKey> a, std::span<const VoxelKey> b);

struct ObjectMatch
{
  int gt_id = 0;
  int predicted_id = -1; // -1 when unmatched
  double iou = 0.0;
};

struct ObjectScore
{
  std::vector<ObjectMatch> matches; // one per gt object, in gt order
  double mean_iou = 0.0;            // over all gt objects, unmatched count as 0
  std::size_t discovered = 0;       // gt objects matched at IoU above the threshold
};

inline constexpr double kDiscoveryIou = 0.2;

/**
 * Greedy one-to-one matching by descending IoU; equal IoUs go to the lower
 * gt id, then the lower predicted id. Pairs with zero overlap never match.
 */
ObjectScore object_iou(std::span<const DetectedObject> predicted, std::span<const DetectedObject> ground_truth,
                       double threshold = kDiscoveryIou);

struct AccuracyCompleteness
{
  double accuracy = 0.0;     // predicted points within dist of some gt point
  double completeness = 0.0; // gt points within dist of some predicted point
};

/// Empty sides score 0 (nothing correct), except that both empty scores 1.
AccuracyCompleteness accuracy_completeness(std::span<const Point3> predicted, std::span<const Point3> ground_truth,
                                           double dist);

struct TransformScore
{
  double recall_10 = 0.0; // < 10 degrees and < 0.10 m
  double recall_20 = 0.0; // < 20 degrees and < 0.20 m
  double mre_deg = 0.0;   // medians over recall_20 matches; NaN when there are none
  double mte_m = 0.0;
  double mean_re_deg = 0.0;
  double mean_te_m = 0.0;
  /// (rotation error in degrees, translation error in meters) per gt transform, NaN if unmatched.
  std::vector<std::pair<double, double>> errors;
};

/// Rotation error in degrees: angle of R_pred R_gt^T.
double rotation_error_deg(const RigidTransform& predicted, const RigidTransform& gt);
/// Translation error: |t_pred - t_gt|.
double translation_error(const RigidTransform& predicted, const RigidTransform& gt);

/// Greedy one-to-one matching of gt transforms to predictions by rotation error.
/// With no gt transforms both recalls are 1 and the errors NaN.
TransformScore transform_metrics(std::span<const RigidTransform> predicted, std::span<const RigidTransform> gt);

struct EvalReport
{
  double voxel_recall = 0.0;
  ObjectScore objects;
  AccuracyCompleteness accuracy;
  TransformScore transforms;
};

} // namespace scenediff
