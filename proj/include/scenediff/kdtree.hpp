#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "scenediff/error.hpp"
#include "scenediff/geom.hpp"

namespace scenediff {

/**
 * Exact k-d tree over the columns of a Dim x N matrix.
 *
 * Dim may be Eigen::Dynamic for feature vectors whose length is only known at
 * run time. Queries are exact: nearest() returns the same index as a linear
 * scan, including the lowest-index rule on distance ties. The tree is
 * immutable after construction and safe for concurrent queries.
 */
template <typename Scalar, int Dim>
class KdTree
{
public:
  using Matrix = Eigen::Matrix<Scalar, Dim, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Dim, 1>;

  struct Neighbor
  {
    std::size_t index = 0;
    Scalar distance = Scalar(0);
  };

  KdTree() = default;

  explicit KdTree(Matrix points, int leaf_size = 8)
    : points_(std::move(points)), leaf_size_(std::max(1, leaf_size))
  {
    order_.resize(static_cast<std::size_t>(points_.cols()));
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (!order_.empty())
      build(0, order_.size());
  }

  std::size_t size() const noexcept { return order_.size(); }
  bool empty() const noexcept { return order_.empty(); }
  const Matrix& points() const noexcept { return points_; }

  /// Nearest column to query; ties go to the lowest column index.
  template <typename Derived>
  Neighbor nearest(const Eigen::MatrixBase<Derived>& query) const
  {
    if (empty())
      throw EmptyIndex("KdTree::nearest on an empty index");
    Best best;
    search_nearest(0, query, best);
    return {best.index, std::sqrt(best.dist2)};
  }

  /// All columns within radius (inclusive), sorted by ascending index.
  template <typename Derived>
  std::vector<Neighbor> radius_search(const Eigen::MatrixBase<Derived>& query, Scalar radius) const
  {
    std::vector<Neighbor> out;
    if (empty())
      return out;
    search_radius(0, query, radius * radius, out);
    std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
    for (auto& n : out)
      n.distance = std::sqrt(n.distance);
    return out;
  }

private:
  struct Node
  {
    std::size_t begin = 0;
    std::size_t end = 0;
    int axis = -1; // -1 marks a leaf
    Scalar split = Scalar(0);
    std::size_t left = 0;
    std::size_t right = 0;
  };

  struct Best
  {
    std::size_t index = std::numeric_limits<std::size_t>::max();
    Scalar dist2 = std::numeric_limits<Scalar>::infinity();
  };

  std::size_t build(std::size_t begin, std::size_t end)
  {
    const std::size_t id = nodes_.size();
    nodes_.push_back({begin, end});
    if (end - begin <= static_cast<std::size_t>(leaf_size_))
      return id;

    // Split on the axis of widest spread at the median.
    Vector lo = points_.col(static_cast<Eigen::Index>(order_[begin]));
    Vector hi = lo;
    for (std::size_t i = begin + 1; i < end; ++i) {
      const auto c = points_.col(static_cast<Eigen::Index>(order_[i]));
      lo = lo.cwiseMin(c);
      hi = hi.cwiseMax(c);
    }
    Eigen::Index axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (!(hi(axis) > lo(axis)))
      return id; // all points identical: keep as a leaf

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                       return points_(axis, static_cast<Eigen::Index>(a)) < points_(axis, static_cast<Eigen::Index>(b));
                     });
    const Scalar split = points_(axis, static_cast<Eigen::Index>(order_[mid]));

    nodes_[id].axis = static_cast<int>(axis);
    nodes_[id].split = split;
    const std::size_t left = build(begin, mid);
    const std::size_t right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  template <typename Derived>
  void search_nearest(std::size_t id, const Eigen::MatrixBase<Derived>& q, Best& best) const
  {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t idx = order_[i];
        const Scalar d2 = (points_.col(static_cast<Eigen::Index>(idx)) - q).squaredNorm();
        if (d2 < best.dist2 || (d2 == best.dist2 && idx < best.index)) {
          best.dist2 = d2;
          best.index = idx;
        }
      }
      return;
    }
    // Left holds values <= split, right holds values >= split.
    const Scalar diff = q(node.axis) - node.split;
    const std::size_t first = diff <= Scalar(0) ? node.left : node.right;
    const std::size_t second = diff <= Scalar(0) ? node.right : node.left;
    search_nearest(first, q, best);
    // Non-strict so equal-distance candidates stay reachable for the tie rule.
    if (diff * diff <= best.dist2)
      search_nearest(second, q, best);
  }

  template <typename Derived>
  void search_radius(std::size_t id, const Eigen::MatrixBase<Derived>& q, Scalar r2, std::vector<Neighbor>& out) const
  {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t idx = order_[i];
        const Scalar d2 = (points_.col(static_cast<Eigen::Index>(idx)) - q).squaredNorm();
        if (d2 <= r2)
          out.push_back({idx, d2});
      }
      return;
    }
    const Scalar diff = q(node.axis) - node.split;
    if (diff <= Scalar(0) || diff * diff <= r2)
      search_radius(node.left, q, r2, out);
    if (diff >= Scalar(0) || diff * diff <= r2)
      search_radius(node.right, q, r2, out);
  }

  Matrix points_;
  int leaf_size_ = 8;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

using KdTree3d = KdTree<double, 3>;
using KdTreeXd = KdTree<double, Eigen::Dynamic>;

/// Builds a 3-D tree over a list of points.
inline KdTree3d make_index(std::span<const Point3> points)
{
  Eigen::Matrix3Xd m(3, static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i)
    m.col(static_cast<Eigen::Index>(i)) = points[i];
  return KdTree3d(std::move(m));
}

/// nearest_neighbor(index, query) -> (point index, Euclidean distance).
inline KdTree3d::Neighbor nearest_neighbor(const KdTree3d& index, const Point3& query) { return index.nearest(query); }

} // namespace scenediff
