#include "scenediff/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

namespace scenediff {
namespace {

int bin_of(double value, double lo, double hi)
{
  const int b = static_cast<int>(std::floor(kFpfhBins * (value - lo) / (hi - lo)));
  return std::clamp(b, 0, kFpfhBins - 1);
}

using NeighborList = std::vector<KdTree3d::Neighbor>;

NeighborList neighbors_of(const KdTree3d& index, const PointCloud& cloud, std::size_t i, double radius)
{
  NeighborList out = index.radius_search(cloud.points[i], radius);
  std::erase_if(out, [](const KdTree3d::Neighbor& n) { return n.distance == 0.0; });
  return out;
}

Eigen::Matrix<double, kFpfhSize, 1> spfh_of(const PointCloud& cloud, std::size_t i, const NeighborList& nbrs)
{
  Eigen::Matrix<double, kFpfhSize, 1> h = Eigen::Matrix<double, kFpfhSize, 1>::Zero();
  if (nbrs.empty())
    return h;
  const double inc = 100.0 / static_cast<double>(nbrs.size());
  for (const auto& nb : nbrs) {
    double theta = 0.0, alpha = 0.0, phi = 0.0;
    if (!pair_features(cloud.points[i], cloud.normals[i], cloud.points[nb.index], cloud.normals[nb.index], theta, alpha,
                       phi))
      continue;
    h(bin_of(theta, -std::numbers::pi, std::numbers::pi)) += inc;
    h(kFpfhBins + bin_of(alpha, -1.0, 1.0)) += inc;
    h(2 * kFpfhBins + bin_of(phi, -1.0, 1.0)) += inc;
  }
  return h;
}

class FpfhEngine
{
public:
  FpfhEngine(const PointCloud& cloud, double radius) : cloud_(cloud), radius_(radius), index_(make_index(cloud.points))
  {
    if (!cloud.has_normals())
      throw MissingNormals("fpfh: cloud has no normals");
    if (!(radius > 0.0))
      throw SpecViolation("fpfh: radius must be positive");
    neighbors_.resize(cloud.size());
    spfh_.resize(cloud.size());
  }

  const NeighborList& neighbors(std::size_t i)
  {
    auto& slot = neighbors_[i];
    if (!slot)
      slot = neighbors_of(index_, cloud_, i, radius_);
    return *slot;
  }

  const Eigen::Matrix<double, kFpfhSize, 1>& spfh(std::size_t i)
  {
    auto& slot = spfh_[i];
    if (!slot)
      slot = spfh_of(cloud_, i, neighbors(i));
    return *slot;
  }

  Eigen::Matrix<double, kFpfhSize, 1> fpfh(std::size_t i)
  {
    Eigen::Matrix<double, kFpfhSize, 1> out = Eigen::Matrix<double, kFpfhSize, 1>::Zero();
    const NeighborList nbrs = neighbors(i);
    if (nbrs.size() < 2)
      return out;
    for (const auto& nb : nbrs)
      out += spfh(nb.index) / nb.distance;
    out /= static_cast<double>(nbrs.size());
    out += spfh(i);
    return out;
  }

  Eigen::Vector3d mean_neighbor_color(std::size_t i)
  {
    Eigen::Vector3d c = cloud_.colors[i];
    const NeighborList& nbrs = neighbors(i);
    for (const auto& nb : nbrs)
      c += cloud_.colors[nb.index];
    return c / static_cast<double>(nbrs.size() + 1);
  }

private:
  const PointCloud& cloud_;
  double radius_;
  KdTree3d index_;
  std::vector<std::optional<NeighborList>> neighbors_;
  std::vector<std::optional<Eigen::Matrix<double, kFpfhSize, 1>>> spfh_;
};

} // namespace

bool pair_features(const Point3& p1, const Eigen::Vector3d& n1, const Point3& p2, const Eigen::Vector3d& n2, double& theta,
                   double& alpha, double& phi)
{
  theta = alpha = phi = 0.0;
  Eigen::Vector3d d = p2 - p1;
  const double len = d.norm();
  if (len == 0.0)
    return false;

  // The source of the Darboux frame is the endpoint whose normal makes the
  // smaller angle with the connecting line.
  Eigen::Vector3d ns = n1;
  Eigen::Vector3d nt = n2;
  const double a1 = n1.dot(d) / len;
  const double a2 = n2.dot(d) / len;
  if (std::acos(std::clamp(std::abs(a1), 0.0, 1.0)) > std::acos(std::clamp(std::abs(a2), 0.0, 1.0))) {
    std::swap(ns, nt);
    d = -d;
    phi = -a2;
  } else {
    phi = a1;
  }

  Eigen::Vector3d v = d.cross(ns);
  const double v_norm = v.norm();
  if (v_norm == 0.0)
    return false;
  v /= v_norm;
  const Eigen::Vector3d w = ns.cross(v);
  alpha = v.dot(nt);
  theta = std::atan2(w.dot(nt), ns.dot(nt));
  return true;
}

FpfhSet compute_spfh(const PointCloud& cloud, double radius)
{
  FpfhEngine engine(cloud, radius);
  FpfhSet out(kFpfhSize, static_cast<Eigen::Index>(cloud.size()));
  for (std::size_t i = 0; i < cloud.size(); ++i)
    out.col(static_cast<Eigen::Index>(i)) = engine.spfh(i);
  return out;
}

FpfhSet compute_fpfh(const PointCloud& cloud, double radius, std::span<const std::size_t> queries)
{
  FpfhEngine engine(cloud, radius);
  FpfhSet out(kFpfhSize, static_cast<Eigen::Index>(queries.size()));
  for (std::size_t q = 0; q < queries.size(); ++q)
    out.col(static_cast<Eigen::Index>(q)) = engine.fpfh(queries[q]);
  return out;
}

FpfhSet compute_fpfh(const PointCloud& cloud, double radius)
{
  std::vector<std::size_t> all(cloud.size());
  for (std::size_t i = 0; i < all.size(); ++i)
    all[i] = i;
  return compute_fpfh(cloud, radius, all);
}

DescriptorSet describe(const PointCloud& cloud, const DescriptorParams& params, std::span<const std::size_t> queries)
{
  FpfhEngine engine(cloud, params.radius);
  const bool with_color = params.color_weight > 0.0 && cloud.has_colors();
  const Eigen::Index rows = kFpfhSize + (with_color ? 6 : 0);
  DescriptorSet out(rows, static_cast<Eigen::Index>(queries.size()));
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto col = static_cast<Eigen::Index>(q);
    const std::size_t i = queries[q];
    out.col(col).head<kFpfhSize>() = engine.fpfh(i);
    if (with_color) {
      out.col(col).segment<3>(kFpfhSize) = params.color_weight * cloud.colors[i];
      out.col(col).segment<3>(kFpfhSize + 3) = params.color_weight * engine.mean_neighbor_color(i);
    }
  }
  return out;
}

std::vector<Correspondence> match_features(const DescriptorSet& desc_s, const DescriptorSet& desc_r)
{
  std::vector<Correspondence> out;
  if (desc_s.cols() == 0 || desc_r.cols() == 0)
    return out;
  if (desc_s.rows() != desc_r.rows())
    throw DimensionMismatch("match_features: descriptor lengths differ");
  const KdTreeXd index(desc_s);
  out.reserve(static_cast<std::size_t>(desc_r.cols()));
  for (Eigen::Index r = 0; r < desc_r.cols(); ++r) {
    const auto nn = index.nearest(desc_r.col(r));
    out.push_back({nn.index, static_cast<std::size_t>(r), nn.distance});
  }
  return out;
}

std::vector<Correspondence> filter_static(std::span<const Correspondence> corrs, const PointCloud& cloud_s,
                                          const PointCloud& cloud_r, double delta_static)
{
  if (!(delta_static > 0.0))
    throw SpecViolation("filter_static: delta_static must be positive");
  std::vector<Correspondence> out;
  for (const auto& c : corrs)
    if ((cloud_s.points[c.index_s] - cloud_r.points[c.index_r]).norm() >= delta_static)
      out.push_back(c);
  return out;
}

std::vector<std::size_t> unexplained_points(const PointCloud& cloud, const KdTree3d& other, double delta)
{
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (other.empty() || other.nearest(cloud.points[i]).distance > delta)
      out.push_back(i);
  return out;
}

} // namespace scenediff
