#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

#include "scenediff/geom.hpp"
#include "scenediff/kdtree.hpp"
#include "scenediff/supervoxel.hpp"

namespace scenediff {

/// One label per graph node; true means "changed" (label 1).
using Labeling = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// One nonnegative Potts weight per graph edge, parallel to SupervoxelGraph::edges.
using EdgeWeights = Eigen::VectorXd;

struct EnergyParams
{
  double lambda = 0.5;
  double epsilon_t = 0.05; // meters
  /// Only couple nodes across convex boundaries. Concave creases are where
  /// objects rest on their support, so change does not spread across them.
  bool convex_edges_only = true;
};

inline constexpr std::size_t kConsistencySamples = 50;

/**
 * Whether a supervoxel lands on observed geometry after transform t:
 * up to 50 evenly strided members are mapped by t, and the median distance
 * to their nearest target points must be at most epsilon_t.
 */
bool consistent_under(const Supervoxel& sv, const PointCloud& scene, const RigidTransform& t, const KdTree3d& target,
                      double epsilon_t);

/// consistent_under for every node.
Labeling node_consistency(const SupervoxelGraph& graph, const PointCloud& scene, const RigidTransform& t,
                          const KdTree3d& target, double epsilon_t);

/// w_ij = 1 when both endpoints are consistent (and, optionally, the edge is convex), else 0.
EdgeWeights consistency_weights(const SupervoxelGraph& graph, const Labeling& consistent, bool convex_edges_only);

/// Color baseline: w_ij = gamma / (|c_i - c_j|^2 + 1) over node mean colors.
EdgeWeights taneja_weights(const SupervoxelGraph& graph, double gamma);

/// Unary cost -log rho(v, l) of node i taking label l.
double unary_cost(const SupervoxelGraph& graph, std::size_t node, bool label);

/// E(Q) = sum_i u_i(q_i) + lambda sum_(i,j) w_ij [q_i != q_j].
double energy(const SupervoxelGraph& graph, const EdgeWeights& weights, double lambda, const Labeling& labels);

/**
 * Global minimizer of energy() by s-t min cut. Among several minimizers the
 * one with the fewest changed nodes is returned, so a node whose unaries tie
 * gets label 0 unless coupling pulls it to 1.
 */
Labeling solve_labeling(const SupervoxelGraph& graph, const EdgeWeights& weights, double lambda);

/// solve_labeling with the consistency weights of transform t.
Labeling solve_labeling(const SupervoxelGraph& graph, const PointCloud& scene, const RigidTransform& t,
                        const KdTree3d& target, const EnergyParams& params);

/// Per-node argmax of the priors, ties to 0 (the lambda = 0 solution).
Labeling prior_argmax(const SupervoxelGraph& graph);

/// Pointwise OR of every labeling and the base.
Labeling fuse_labelings(std::span<const Labeling> per_transform, const Labeling& base);

} // namespace scenediff
