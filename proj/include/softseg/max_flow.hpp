#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <vector>

#include "softseg/error.hpp"

namespace softseg {

// Directed flow network with distinguished source and sink. Every capacity
// must be non-negative and finite; "infinite" terminal links are expressed
// as large finite values by callers.
struct FlowNetwork {
  struct Edge {
    int from = 0;
    int to = 0;
    double capacity = 0.0;
    double reverse_capacity = 0.0;
  };

  int node_count = 0;
  int source = 0;
  int sink = 0;
  std::vector<Edge> edges;

  FlowNetwork(int nodes, int source_node, int sink_node)
      : node_count(nodes), source(source_node), sink(sink_node) {
    if (nodes < 2) throw Error("flow network needs at least two nodes");
    if (source < 0 || source >= nodes || sink < 0 || sink >= nodes)
      throw Error("flow network: terminal out of range");
    if (source == sink) throw Error("flow network: source equals sink");
  }

  void add_edge(int u, int v, double capacity, double reverse_capacity = 0.0) {
    if (u < 0 || u >= node_count || v < 0 || v >= node_count)
      throw Error("flow network: edge endpoint out of range");
    if (!(capacity >= 0.0) || !std::isfinite(capacity) ||
        !(reverse_capacity >= 0.0) || !std::isfinite(reverse_capacity))
      throw Error("flow network: capacities must be non-negative and finite");
    edges.push_back({u, v, capacity, reverse_capacity});
  }
};

struct MaxFlowResult {
  double flow = 0.0;
  // source_side[v] is 1 iff v lies on the source side of the minimum cut.
  std::vector<std::uint8_t> source_side;
};

namespace detail {

// Dinic's algorithm: BFS level graphs and blocking flows with current-arc
// pruning. Arcs are stored in residual form as mutually-reverse pairs
// (a, a^1), so head_[a^1] is the tail of a.
class DinicSolver {
 public:
  explicit DinicSolver(const FlowNetwork& net)
      : n_(net.node_count), source_(net.source), sink_(net.sink) {
    head_.reserve(net.edges.size() * 2);
    res_.reserve(net.edges.size() * 2);
    std::vector<int> degree(n_, 0);
    for (const auto& e : net.edges) {
      head_.push_back(e.to);
      res_.push_back(e.capacity);
      head_.push_back(e.from);
      res_.push_back(e.reverse_capacity);
      ++degree[e.from];
      ++degree[e.to];
    }
    adj_start_.assign(n_ + 1, 0);
    for (int v = 0; v < n_; ++v) adj_start_[v + 1] = adj_start_[v] + degree[v];
    adj_.resize(head_.size());
    std::vector<int> fill(adj_start_.begin(), adj_start_.end() - 1);
    for (int a = 0; a < static_cast<int>(head_.size()); a += 2) {
      adj_[fill[head_[a ^ 1]]++] = a;
      adj_[fill[head_[a]]++] = a ^ 1;
    }
    level_.assign(n_, -1);
    iter_.assign(n_, 0);
  }

  MaxFlowResult run() {
    double flow = 0.0;
    while (bfs()) {
      for (int v = 0; v < n_; ++v) iter_[v] = adj_start_[v];
      for (;;) {
        const double pushed = augment();
        if (pushed <= 0.0) break;
        flow += pushed;
      }
    }
    // The final failed BFS marked exactly the residual source-reachable set.
    MaxFlowResult result;
    result.flow = flow;
    result.source_side.assign(n_, 0);
    for (int v = 0; v < n_; ++v)
      if (level_[v] >= 0) result.source_side[v] = 1;
    return result;
  }

 private:
  int tail(int arc) const { return head_[arc ^ 1]; }

  bool bfs() {
    level_.assign(n_, -1);
    level_[source_] = 0;
    queue_.clear();
    queue_.push_back(source_);
    while (!queue_.empty()) {
      const int u = queue_.front();
      queue_.pop_front();
      for (int idx = adj_start_[u]; idx < adj_start_[u + 1]; ++idx) {
        const int a = adj_[idx];
        const int v = head_[a];
        if (res_[a] > 0.0 && level_[v] < 0) {
          level_[v] = level_[u] + 1;
          queue_.push_back(v);
        }
      }
    }
    return level_[sink_] >= 0;
  }

  // Finds one source->sink path in the level graph and pushes its
  // bottleneck; returns 0 when the level graph is exhausted.
  double augment() {
    path_.clear();
    int u = source_;
    for (;;) {
      if (u == sink_) {
        double bottleneck = std::numeric_limits<double>::infinity();
        for (int a : path_) bottleneck = std::min(bottleneck, res_[a]);
        for (int a : path_) {
          res_[a] -= bottleneck;
          res_[a ^ 1] += bottleneck;
        }
        return bottleneck;
      }
      bool advanced = false;
      for (int& idx = iter_[u]; idx < adj_start_[u + 1]; ++idx) {
        const int a = adj_[idx];
        const int v = head_[a];
        if (res_[a] > 0.0 && level_[v] == level_[u] + 1) {
          path_.push_back(a);
          u = v;
          advanced = true;
          break;
        }
      }
      if (!advanced) {
        level_[u] = -1;  // dead end for this phase
        if (path_.empty()) return 0.0;
        u = tail(path_.back());
        path_.pop_back();
      }
    }
  }

  int n_;
  int source_;
  int sink_;
  std::vector<int> head_;
  std::vector<double> res_;
  std::vector<int> adj_start_;
  std::vector<int> adj_;
  std::vector<int> level_;
  std::vector<int> iter_;
  std::deque<int> queue_;
  std::vector<int> path_;
};

}  // namespace detail

// Exact max-flow / min-cut. The returned flow value equals the capacity of
// the returned cut; a disconnected source yields flow 0 and the
// source-reachable set.
inline MaxFlowResult max_flow(const FlowNetwork& net) {
  return detail::DinicSolver(net).run();
}

}  // namespace softseg
