#pragma once

// Dinic max-flow on long double capacities. Small graphs only (coupling
// feasibility checks); not a general-purpose solver. Instances hold scratch
// state, so use one per thread; they are cheap to create.

#include <limits>
#include <queue>
#include <vector>

namespace convlab {

class MaxFlowSolver {
 public:
  explicit MaxFlowSolver(int node_count)
      : adj_(static_cast<std::size_t>(node_count)),
        level_(static_cast<std::size_t>(node_count)),
        iter_(static_cast<std::size_t>(node_count)) {}

  void add_edge(int from, int to, long double cap) {
    adj_[static_cast<std::size_t>(from)].push_back(static_cast<int>(edges_.size()));
    edges_.push_back({to, cap});
    adj_[static_cast<std::size_t>(to)].push_back(static_cast<int>(edges_.size()));
    edges_.push_back({from, 0.0L});
  }

  long double run(int source, int sink) {
    long double flow = 0.0L;
    while (build_levels(source, sink)) {
      iter_.assign(iter_.size(), 0);
      while (true) {
        long double pushed = augment(source, sink,
                                     std::numeric_limits<long double>::max());
        if (pushed <= kSaturated) break;
        flow += pushed;
      }
    }
    return flow;
  }

  /// Positive flow on the forward edge with the given insertion index.
  long double flow_on_edge(std::size_t edge_index) const {
    return edges_[2 * edge_index + 1].cap;  // residual of the reverse edge
  }

 private:
  static constexpr long double kSaturated = 1e-18L;

  struct Edge {
    int to;
    long double cap;
  };

  bool build_levels(int source, int sink) {
    level_.assign(level_.size(), -1);
    std::queue<int> queue;
    level_[static_cast<std::size_t>(source)] = 0;
    queue.push(source);
    while (!queue.empty()) {
      int v = queue.front();
      queue.pop();
      for (int id : adj_[static_cast<std::size_t>(v)]) {
        const Edge& e = edges_[static_cast<std::size_t>(id)];
        if (e.cap > kSaturated && level_[static_cast<std::size_t>(e.to)] < 0) {
          level_[static_cast<std::size_t>(e.to)] =
              level_[static_cast<std::size_t>(v)] + 1;
          queue.push(e.to);
        }
      }
    }
    return level_[static_cast<std::size_t>(sink)] >= 0;
  }

  long double augment(int v, int sink, long double limit) {
    if (v == sink) return limit;
    auto vi = static_cast<std::size_t>(v);
    for (int& i = iter_[vi]; i < static_cast<int>(adj_[vi].size()); ++i) {
      int id = adj_[vi][static_cast<std::size_t>(i)];
      Edge& e = edges_[static_cast<std::size_t>(id)];
      if (e.cap <= kSaturated) continue;
      if (level_[static_cast<std::size_t>(e.to)] != level_[vi] + 1) continue;
      long double pushed = augment(e.to, sink, std::min(limit, e.cap));
      if (pushed > kSaturated) {
        e.cap -= pushed;
        edges_[static_cast<std::size_t>(id ^ 1)].cap += pushed;
        return pushed;
      }
    }
    return 0.0L;
  }

  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> level_;
  std::vector<int> iter_;
};

}  // namespace convlab
