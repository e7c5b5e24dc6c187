#include "scenediff/motion.hpp"

#include <algorithm>
#include <numbers>

namespace scenediff {
namespace {

std::vector<std::size_t> inliers_of(const RigidTransform& t, std::span<const Correspondence> corrs,
                                    const PointCloud& cloud_s, const PointCloud& cloud_r, double threshold)
{
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < corrs.size(); ++i)
    if (residual(t, corrs[i], cloud_s, cloud_r) <= threshold)
      out.push_back(i);
  return out;
}

std::optional<RigidTransform> fit_subset(std::span<const Correspondence> corrs, std::span<const std::size_t> subset,
                                         const PointCloud& cloud_s, const PointCloud& cloud_r)
{
  std::vector<Point3> src, dst;
  src.reserve(subset.size());
  dst.reserve(subset.size());
  for (const auto i : subset) {
    src.push_back(cloud_s.points[corrs[i].index_s]);
    dst.push_back(cloud_r.points[corrs[i].index_r]);
  }
  try {
    return fit_rigid(src, dst);
  } catch (const DegenerateInput&) {
    return std::nullopt;
  }
}

} // namespace

double residual(const RigidTransform& t, const Correspondence& c, const PointCloud& cloud_s, const PointCloud& cloud_r)
{
  return (t(cloud_s.points[c.index_s]) - cloud_r.points[c.index_r]).norm();
}

std::optional<MotionHypothesis> ransac_transform(std::span<const Correspondence> corrs, const PointCloud& cloud_s,
                                                 const PointCloud& cloud_r, double threshold, int max_iters,
                                                 std::mt19937_64& rng, std::size_t min_inliers)
{
  if (!(threshold > 0.0) || max_iters < 1)
    throw SpecViolation("ransac_transform: need threshold > 0 and max_iters >= 1");
  min_inliers = std::max<std::size_t>(min_inliers, 3);
  if (corrs.size() < 3)
    return std::nullopt;

  std::uniform_int_distribution<std::size_t> pick(0, corrs.size() - 1);
  RigidTransform best_t;
  std::vector<std::size_t> best;
  for (int it = 0; it < max_iters; ++it) {
    std::array<std::size_t, 3> s{pick(rng), pick(rng), pick(rng)};
    if (s[0] == s[1] || s[0] == s[2] || s[1] == s[2])
      continue;
    const auto t = fit_subset(corrs, s, cloud_s, cloud_r);
    if (!t)
      continue;
    auto in = inliers_of(*t, corrs, cloud_s, cloud_r, threshold);
    if (in.size() > best.size()) {
      best = std::move(in);
      best_t = *t;
    }
  }
  if (best.size() < min_inliers)
    return std::nullopt;

  // Refit on the inliers until the set is stable. A refit that would lose the
  // minimal support keeps the previous model.
  for (int round = 0; round < 20; ++round) {
    const auto t = fit_subset(corrs, best, cloud_s, cloud_r);
    if (!t)
      break;
    auto in = inliers_of(*t, corrs, cloud_s, cloud_r, threshold);
    if (in.size() < min_inliers)
      break;
    best_t = *t;
    if (in == best)
      break;
    best = std::move(in);
  }
  best = inliers_of(best_t, corrs, cloud_s, cloud_r, threshold);

  MotionHypothesis h;
  h.transform = best_t;
  h.inliers.reserve(best.size());
  for (const auto i : best)
    h.inliers.push_back(corrs[i]);
  h.inlier_count = h.inliers.size();
  return h;
}

std::optional<MotionHypothesis> ransac_transform(std::span<const Correspondence> corrs, const PointCloud& cloud_s,
                                                 const PointCloud& cloud_r, double threshold, int max_iters,
                                                 std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  return ransac_transform(corrs, cloud_s, cloud_r, threshold, max_iters, rng);
}

bool is_near_identity(const RigidTransform& t, double delta_static)
{
  return rotation_angle(t.rotation) < 2.0 * std::numbers::pi / 180.0 && t.translation.norm() < delta_static;
}

std::vector<MotionHypothesis> dominant_transforms(std::span<const Correspondence> corrs, const PointCloud& cloud_s,
                                                  const PointCloud& cloud_r, const RansacParams& params)
{
  if (params.k < 1)
    throw SpecViolation("dominant_transforms: k must be at least 1");
  std::mt19937_64 rng(params.seed);
  std::vector<Correspondence> remaining(corrs.begin(), corrs.end());
  std::vector<MotionHypothesis> out;
  while (out.size() < params.k && remaining.size() >= 3) {
    auto h = ransac_transform(remaining, cloud_s, cloud_r, params.threshold, params.max_iters, rng, params.min_inliers);
    if (!h)
      break;
    // Inliers are an ordered subsequence of remaining.
    std::vector<Correspondence> rest;
    rest.reserve(remaining.size() - h->inliers.size());
    std::size_t j = 0;
    for (const auto& c : remaining) {
      if (j < h->inliers.size() && h->inliers[j] == c)
        ++j;
      else
        rest.push_back(c);
    }
    remaining = std::move(rest);
    if (!is_near_identity(h->transform, params.delta_static))
      out.push_back(std::move(*h));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const MotionHypothesis& a, const MotionHypothesis& b) { return a.inlier_count > b.inlier_count; });
  return out;
}

} // namespace scenediff
