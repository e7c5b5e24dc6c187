#include "scenediff/maxflow.hpp"

#include <algorithm>
#include <limits>
#include <queue>

#include "scenediff/error.hpp"

namespace scenediff {

void MaxFlow::add_edge(std::size_t u, std::size_t v, double cap, double rev_cap)
{
  if (u >= adj_.size() || v >= adj_.size())
    throw SpecViolation("MaxFlow::add_edge: node out of range");
  if (cap < 0.0 || rev_cap < 0.0)
    throw SpecViolation("MaxFlow::add_edge: negative capacity");
  if (u == v)
    return;
  adj_[u].push_back({v, adj_[v].size(), cap});
  adj_[v].push_back({u, adj_[u].size() - 1, rev_cap});
}

bool MaxFlow::build_levels(std::size_t s, std::size_t t)
{
  level_.assign(adj_.size(), -1);
  std::queue<std::size_t> q;
  level_[s] = 0;
  q.push(s);
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    for (const Arc& a : adj_[u])
      if (a.cap > eps_ && level_[a.to] < 0) {
        level_[a.to] = level_[u] + 1;
        q.push(a.to);
      }
  }
  return level_[t] >= 0;
}

double MaxFlow::augment(std::size_t u, std::size_t t, double pushed)
{
  if (u == t)
    return pushed;
  for (std::size_t& i = next_[u]; i < adj_[u].size(); ++i) {
    Arc& a = adj_[u][i];
    if (a.cap <= eps_ || level_[a.to] != level_[u] + 1)
      continue;
    const double got = augment(a.to, t, std::min(pushed, a.cap));
    if (got > 0.0) {
      a.cap -= got;
      adj_[a.to][a.rev].cap += got;
      return got;
    }
  }
  return 0.0;
}

double MaxFlow::solve(std::size_t source, std::size_t sink)
{
  if (source >= adj_.size() || sink >= adj_.size() || source == sink)
    throw SpecViolation("MaxFlow::solve: bad terminals");

  // Residuals below eps_ count as saturated; they are rounding leftovers.
  double largest = 0.0;
  for (const auto& arcs : adj_)
    for (const Arc& a : arcs)
      largest = std::max(largest, a.cap);
  eps_ = largest * 1e-12;

  double flow = 0.0;
  while (build_levels(source, sink)) {
    next_.assign(adj_.size(), 0);
    while (const double f = augment(source, sink, std::numeric_limits<double>::infinity()))
      flow += f;
  }

  reach_.assign(adj_.size(), false);
  std::queue<std::size_t> q;
  reach_[source] = true;
  q.push(source);
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    for (const Arc& a : adj_[u])
      if (a.cap > eps_ && !reach_[a.to]) {
        reach_[a.to] = true;
        q.push(a.to);
      }
  }
  return flow;
}

} // namespace scenediff
