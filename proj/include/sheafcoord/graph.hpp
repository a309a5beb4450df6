#pragma once

#include <algorithm>
#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sheafcoord {

using VertexId = std::size_t;
using EdgeId = std::size_t;

/// Edge with a fixed orientation. The tail is the endpoint listed first.
struct OrientedEdge {
  EdgeId id;
  VertexId tail;
  VertexId head;

  VertexId other(VertexId v) const { return v == tail ? head : tail; }
  bool touches(VertexId v) const { return v == tail || v == head; }

  friend bool operator==(const OrientedEdge&, const OrientedEdge&) = default;
};

/// Simple undirected graph with oriented edges and dense edge ids.
class Graph {
 public:
  Graph() = default;

  Graph(std::size_t vertex_count, const std::vector<std::pair<VertexId, VertexId>>& pairs)
      : vertex_count_(vertex_count), incident_(vertex_count) {
    if (vertex_count == 0) throw std::invalid_argument("Graph: vertex_count must be positive");
    std::set<std::pair<VertexId, VertexId>> seen;
    edges_.reserve(pairs.size());
    for (const auto& [t, h] : pairs) {
      const EdgeId id = edges_.size();
      if (t >= vertex_count || h >= vertex_count) {
        throw std::invalid_argument("Graph: edge " + std::to_string(id) + " endpoint out of range");
      }
      if (t == h) throw std::invalid_argument("Graph: edge " + std::to_string(id) + " is a self-loop");
      if (!seen.insert(std::minmax(t, h)).second) {
        throw std::invalid_argument("Graph: edge " + std::to_string(id) + " duplicates an earlier edge");
      }
      edges_.push_back({id, t, h});
      incident_[t].push_back(id);
      incident_[h].push_back(id);
    }
  }

  std::size_t vertex_count() const { return vertex_count_; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<OrientedEdge>& edges() const { return edges_; }
  const OrientedEdge& edge(EdgeId e) const { return edges_.at(e); }

  /// Incident edge ids of v in ascending order.
  const std::vector<EdgeId>& incident(VertexId v) const { return incident_.at(v); }
  std::size_t degree(VertexId v) const { return incident_.at(v).size(); }

  /// Same vertex set, every edge reversed. Edge ids are preserved.
  Graph reversed() const {
    std::vector<std::pair<VertexId, VertexId>> pairs;
    pairs.reserve(edges_.size());
    for (const auto& e : edges_) pairs.emplace_back(e.head, e.tail);
    return Graph(vertex_count_, pairs);
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.vertex_count_ == b.vertex_count_ && a.edges_ == b.edges_;
  }

  static Graph path(std::size_t n) {
    std::vector<std::pair<VertexId, VertexId>> p;
    for (std::size_t i = 0; i + 1 < n; ++i) p.emplace_back(i, i + 1);
    return Graph(n, p);
  }

  static Graph cycle(std::size_t n) {
    if (n < 3) throw std::invalid_argument("Graph::cycle: need at least 3 vertices");
    std::vector<std::pair<VertexId, VertexId>> p;
    for (std::size_t i = 0; i + 1 < n; ++i) p.emplace_back(i, i + 1);
    p.emplace_back(0, n - 1);
    return Graph(n, p);
  }

  static Graph complete(std::size_t n) {
    std::vector<std::pair<VertexId, VertexId>> p;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) p.emplace_back(i, j);
    return Graph(n, p);
  }

 private:
  std::size_t vertex_count_ = 0;
  std::vector<OrientedEdge> edges_;
  std::vector<std::vector<EdgeId>> incident_;
};

}  // namespace sheafcoord
