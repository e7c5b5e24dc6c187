#include "scenediff/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "scenediff/kdtree.hpp"

namespace scenediff {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double median(std::vector<double> v)
{
  if (v.empty())
    return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v)
{
  if (v.empty())
    return kNaN;
  double s = 0.0;
  for (const double x : v)
    s += x;
  return s / static_cast<double>(v.size());
}

double fraction_within(std::span<const Point3> from, std::span<const Point3> to, double dist)
{
  if (from.empty())
    return to.empty() ? 1.0 : 0.0;
  if (to.empty())
    return 0.0;
  const KdTree3d index = make_index(to);
  std::size_t hit = 0;
  for (const auto& p : from)
    if (index.nearest(p).distance <= dist)
      ++hit;
  return static_cast<double>(hit) / static_cast<double>(from.size());
}

} // namespace

double voxel_recall(const VoxelSet& predicted, const VoxelSet& ground_truth)
{
  if (ground_truth.empty()) {
    if (predicted.empty())
      return 1.0;
    throw EmptyGroundTruth("voxel_recall: ground truth is empty");
  }
  std::size_t hit = 0;
  for (const auto& k : ground_truth)
    hit += predicted.count(k);
  return static_cast<double>(hit) / static_cast<double>(ground_truth.size());
}

double voxel_iou(std::span<const VoxelKey> a, std::span<const VoxelKey> b)
{
  std::size_t inter = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j)
      ++i;
    else if (*j < *i)
      ++j;
    else {
      ++inter;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

ObjectScore object_iou(std::span<const DetectedObject> predicted, std::span<const DetectedObject> ground_truth,
                       double threshold)
{
  struct Pair
  {
    double iou;
    std::size_t g;
    std::size_t p;
  };
  std::vector<Pair> pairs;
  for (std::size_t g = 0; g < ground_truth.size(); ++g)
    for (std::size_t p = 0; p < predicted.size(); ++p) {
      const double iou = voxel_iou(ground_truth[g].voxels, predicted[p].voxels);
      if (iou > 0.0)
        pairs.push_back({iou, g, p});
    }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.iou != b.iou)
      return a.iou > b.iou;
    if (a.g != b.g)
      return a.g < b.g;
    return a.p < b.p;
  });

  ObjectScore out;
  out.matches.resize(ground_truth.size());
  for (std::size_t g = 0; g < ground_truth.size(); ++g)
    out.matches[g].gt_id = ground_truth[g].id;
  std::vector<bool> gt_used(ground_truth.size(), false);
  std::vector<bool> pred_used(predicted.size(), false);
  for (const auto& pr : pairs) {
    if (gt_used[pr.g] || pred_used[pr.p])
      continue;
    gt_used[pr.g] = pred_used[pr.p] = true;
    out.matches[pr.g].predicted_id = predicted[pr.p].id;
    out.matches[pr.g].iou = pr.iou;
  }

  double sum = 0.0;
  for (const auto& m : out.matches) {
    sum += m.iou;
    if (m.iou > threshold)
      ++out.discovered;
  }
  out.mean_iou = ground_truth.empty() ? 0.0 : sum / static_cast<double>(ground_truth.size());
  return out;
}

AccuracyCompleteness accuracy_completeness(std::span<const Point3> predicted, std::span<const Point3> ground_truth,
                                           double dist)
{
  if (!(dist > 0.0))
    throw SpecViolation("accuracy_completeness: dist must be positive");
  return {fraction_within(predicted, ground_truth, dist), fraction_within(ground_truth, predicted, dist)};
}

double rotation_error_deg(const RigidTransform& predicted, const RigidTransform& gt)
{
  return rotation_angle((predicted.rotation * gt.rotation.transpose()).eval()) * 180.0 / std::numbers::pi;
}

double translation_error(const RigidTransform& predicted, const RigidTransform& gt)
{
  return (predicted.translation - gt.translation).norm();
}

TransformScore transform_metrics(std::span<const RigidTransform> predicted, std::span<const RigidTransform> gt)
{
  TransformScore out;
  out.errors.assign(gt.size(), {kNaN, kNaN});

  struct Pair
  {
    double rot;
    std::size_t g;
    std::size_t p;
  };
  std::vector<Pair> pairs;
  for (std::size_t g = 0; g < gt.size(); ++g)
    for (std::size_t p = 0; p < predicted.size(); ++p)
      pairs.push_back({rotation_error_deg(predicted[p], gt[g]), g, p});
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.rot != b.rot)
      return a.rot < b.rot;
    if (a.g != b.g)
      return a.g < b.g;
    return a.p < b.p;
  });
  std::vector<bool> gt_used(gt.size(), false);
  std::vector<bool> pred_used(predicted.size(), false);
  for (const auto& pr : pairs) {
    if (gt_used[pr.g] || pred_used[pr.p])
      continue;
    gt_used[pr.g] = pred_used[pr.p] = true;
    out.errors[pr.g] = {pr.rot, translation_error(predicted[pr.p], gt[pr.g])};
  }

  std::size_t ok10 = 0;
  std::vector<double> re, te;
  for (const auto& [r, t] : out.errors) {
    if (std::isnan(r))
      continue;
    if (r < 10.0 && t < 0.10)
      ++ok10;
    if (r < 20.0 && t < 0.20) {
      re.push_back(r);
      te.push_back(t);
    }
  }
  if (gt.empty()) {
    out.recall_10 = out.recall_20 = 1.0;
  } else {
    out.recall_10 = static_cast<double>(ok10) / static_cast<double>(gt.size());
    out.recall_20 = static_cast<double>(re.size()) / static_cast<double>(gt.size());
  }
  out.mre_deg = median(re);
  out.mte_m = median(te);
  out.mean_re_deg = mean(re);
  out.mean_te_m = mean(te);
  return out;
}

} // namespace scenediff
