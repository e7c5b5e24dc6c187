#pragma once

#include <cstddef>
#include <vector>

namespace scenediff {

/**
 * Dinic max-flow on a directed graph with real capacities.
 *
 * After solve(), source_side(v) tells whether v is reachable from the source
 * in the residual graph, i.e. it lies in the minimal source set of a minimum
 * cut.
 */
class MaxFlow
{
public:
  explicit MaxFlow(std::size_t nodes) : adj_(nodes) {}

  std::size_t size() const noexcept { return adj_.size(); }

  /// Edge u -> v with capacity cap and a reverse edge v -> u with rev_cap.
  void add_edge(std::size_t u, std::size_t v, double cap, double rev_cap = 0.0);

  double solve(std::size_t source, std::size_t sink);

  bool source_side(std::size_t v) const { return reach_[v]; }

private:
  struct Arc
  {
    std::size_t to;
    std::size_t rev;
    double cap;
  };

  bool build_levels(std::size_t s, std::size_t t);
  double augment(std::size_t u, std::size_t t, double pushed);

  std::vector<std::vector<Arc>> adj_;
  std::vector<int> level_;
  std::vector<std::size_t> next_;
  std::vector<bool> reach_;
  double eps_ = 0.0;
};

} // namespace scenediff
