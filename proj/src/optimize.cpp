#include "scenediff/optimize.hpp"

#include <algorithm>
#include <cmath>

#include "scenediff/maxflow.hpp"

namespace scenediff {
namespace {

const Eigen::Matrix<double, Eigen::Dynamic, 2>& priors_of(const SupervoxelGraph& graph)
{
  if (!graph.priors)
    throw UnsetPriors("graph priors have not been assigned");
  if (graph.priors->rows() != static_cast<Eigen::Index>(graph.size()))
    throw GraphMismatch("prior table does not match the node count");
  return *graph.priors;
}

void check_weights(const SupervoxelGraph& graph, const EdgeWeights& weights, double lambda)
{
  if (weights.size() != static_cast<Eigen::Index>(graph.edges.size()))
    throw GraphMismatch("edge weight count does not match the graph");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw SpecViolation("lambda must be finite and nonnegative");
  if ((weights.array() < 0.0).any() || !weights.allFinite())
    throw SpecViolation("edge weights must be finite and nonnegative");
}

} // namespace

bool consistent_under(const Supervoxel& sv, const PointCloud& scene, const RigidTransform& t, const KdTree3d& target,
                      double epsilon_t)
{
  if (sv.members.empty())
    throw SpecViolation("consistent_under: empty supervoxel");
  if (target.empty())
    return false;
  const std::size_t n = sv.members.size();
  const std::size_t count = std::min(n, kConsistencySamples);
  std::vector<double> dist;
  dist.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t m = sv.members[s * n / count];
    dist.push_back(target.nearest(t(scene.points[m])).distance);
  }
  // Upper median, so a two-sample vote needs both to agree.
  auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
  std::nth_element(dist.begin(), mid, dist.end());
  return *mid <= epsilon_t;
}

Labeling node_consistency(const SupervoxelGraph& graph, const PointCloud& scene, const RigidTransform& t,
                          const KdTree3d& target, double epsilon_t)
{
  Labeling out(static_cast<Eigen::Index>(graph.size()));
  for (std::size_t i = 0; i < graph.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = consistent_under(graph.nodes[i], scene, t, target, epsilon_t);
  return out;
}

EdgeWeights consistency_weights(const SupervoxelGraph& graph, const Labeling& consistent, bool convex_edges_only)
{
  if (consistent.size() != static_cast<Eigen::Index>(graph.size()))
    throw GraphMismatch("consistency flags do not match the node count");
  EdgeWeights w(static_cast<Eigen::Index>(graph.edges.size()));
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const auto& edge = graph.edges[e];
    const bool on = consistent(edge.a) && consistent(edge.b) && (edge.convex || !convex_edges_only);
    w(static_cast<Eigen::Index>(e)) = on ? 1.0 : 0.0;
  }
  return w;
}

EdgeWeights taneja_weights(const SupervoxelGraph& graph, double gamma)
{
  if (!graph.has_colors)
    throw MissingColors("taneja_weights: graph was built without colors");
  EdgeWeights w(static_cast<Eigen::Index>(graph.edges.size()));
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const auto& edge = graph.edges[e];
    const double d2 = (graph.nodes[static_cast<std::size_t>(edge.a)].mean_color -
                       graph.nodes[static_cast<std::size_t>(edge.b)].mean_color)
                          .squaredNorm();
    w(static_cast<Eigen::Index>(e)) = gamma / (d2 + 1.0);
  }
  return w;
}

double unary_cost(const SupervoxelGraph& graph, std::size_t node, bool label)
{
  return -std::log(priors_of(graph)(static_cast<Eigen::Index>(node), label ? 0 : 1));
}

double energy(const SupervoxelGraph& graph, const EdgeWeights& weights, double lambda, const Labeling& labels)
{
  check_weights(graph, weights, lambda);
  if (labels.size() != static_cast<Eigen::Index>(graph.size()))
    throw GraphMismatch("labeling does not match the node count");
  double e = 0.0;
  for (std::size_t i = 0; i < graph.size(); ++i)
    e += unary_cost(graph, i, labels(static_cast<Eigen::Index>(i)));
  for (std::size_t k = 0; k < graph.edges.size(); ++k)
    if (labels(graph.edges[k].a) != labels(graph.edges[k].b))
      e += lambda * weights(static_cast<Eigen::Index>(k));
  return e;
}

Labeling solve_labeling(const SupervoxelGraph& graph, const EdgeWeights& weights, double lambda)
{
  const auto& priors = priors_of(graph);
  check_weights(graph, weights, lambda);

  // Source side = label 1. Cutting s->i pays for label 0, i->t for label 1.
  const std::size_t n = graph.size();
  const std::size_t s = n;
  const std::size_t t = n + 1;
  MaxFlow flow(n + 2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const double u1 = -std::log(priors(row, 0));
    const double u0 = -std::log(priors(row, 1));
    // Only the difference matters; keep one terminal edge per node.
    if (u0 > u1)
      flow.add_edge(s, i, u0 - u1);
    else if (u1 > u0)
      flow.add_edge(i, t, u1 - u0);
  }
  for (std::size_t k = 0; k < graph.edges.size(); ++k) {
    const double c = lambda * weights(static_cast<Eigen::Index>(k));
    if (c > 0.0)
      flow.add_edge(static_cast<std::size_t>(graph.edges[k].a), static_cast<std::size_t>(graph.edges[k].b), c, c);
  }
  flow.solve(s, t);

  Labeling out(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    out(static_cast<Eigen::Index>(i)) = flow.source_side(i);
  return out;
}

Labeling solve_labeling(const SupervoxelGraph& graph, const PointCloud& scene, const RigidTransform& t,
                        const KdTree3d& target, const EnergyParams& params)
{
  priors_of(graph);
  const Labeling consistent = node_consistency(graph, scene, t, target, params.epsilon_t);
  return solve_labeling(graph, consistency_weights(graph, consistent, params.convex_edges_only), params.lambda);
}

Labeling prior_argmax(const SupervoxelGraph& graph)
{
  const auto& priors = priors_of(graph);
  return priors.col(0).array() > priors.col(1).array();
}

Labeling fuse_labelings(std::span<const Labeling> per_transform, const Labeling& base)
{
  Labeling out = base;
  for (const auto& l : per_transform) {
    if (out.size() == 0) {
      out = l; // an empty base stands for "nothing marked"
      continue;
    }
    if (l.size() != out.size())
      throw GraphMismatch("fuse_labelings: labelings cover different graphs");
    out = out || l;
  }
  return out;
}

} // namespace scenediff
