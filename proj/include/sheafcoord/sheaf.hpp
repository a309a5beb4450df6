#pragma once

#include <array>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sheafcoord/cochain.hpp"
#include "sheafcoord/graph.hpp"
#include "sheafcoord/linear_map.hpp"

namespace sheafcoord {

enum class Side { Tail = 0, Head = 1 };

inline const char* to_string(Side s) { return s == Side::Tail ? "tail" : "head"; }

/// Raised when a cochain or vector does not fit the sheaf it is used with.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Raised when an operator is applied to a sheaf whose restriction shapes are inconsistent.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ShapeViolation {
  EdgeId edge;
  Side side;
  std::size_t expected_rows, expected_cols;
  std::size_t actual_rows, actual_cols;

  std::string describe() const {
    std::ostringstream os;
    os << "edge " << edge << " " << to_string(side) << ": expected " << expected_rows << "x" << expected_cols
       << ", got " << actual_rows << "x" << actual_cols;
    return os.str();
  }
};

struct ValidationReport {
  std::vector<ShapeViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// Cellular sheaf on a simple graph: a stalk dimension on every vertex and edge,
/// plus one restriction map per (edge, endpoint side).
///
/// Construction only checks counts. Shape consistency is reported by
/// validate_sheaf() and enforced lazily by the operators (ShapeError).
class CellularSheaf {
 public:
  CellularSheaf() = default;

  CellularSheaf(Graph graph, std::vector<std::size_t> vertex_dims, std::vector<std::size_t> edge_dims,
                std::vector<std::array<LinearMap, 2>> restrictions)
      : graph_(std::move(graph)),
        vertex_dims_(std::move(vertex_dims)),
        edge_dims_(std::move(edge_dims)),
        restrictions_(std::move(restrictions)) {
    if (vertex_dims_.size() != graph_.vertex_count())
      throw std::invalid_argument("CellularSheaf: vertex_dims length must equal vertex count");
    if (edge_dims_.size() != graph_.edge_count())
      throw std::invalid_argument("CellularSheaf: edge_dims length must equal edge count");
    if (restrictions_.size() != graph_.edge_count())
      throw std::invalid_argument("CellularSheaf: need one restriction pair per edge");
    for (auto d : vertex_dims_)
      if (d == 0) throw std::invalid_argument("CellularSheaf: vertex stalk dimensions must be >= 1");
    for (auto d : edge_dims_)
      if (d == 0) throw std::invalid_argument("CellularSheaf: edge stalk dimensions must be >= 1");
    vertex_layout_ = BlockLayout(vertex_dims_);
    edge_layout_ = BlockLayout(edge_dims_);
    valid_ = compute_violations().empty();
  }

  /// Constant sheaf with stalk R^dim everywhere and identity restrictions.
  static CellularSheaf constant(Graph g, std::size_t dim = 1) {
    std::vector<std::array<LinearMap, 2>> r(g.edge_count(), {LinearMap::identity(dim), LinearMap::identity(dim)});
    std::vector<std::size_t> vd(g.vertex_count(), dim), ed(g.edge_count(), dim);
    return CellularSheaf(std::move(g), std::move(vd), std::move(ed), std::move(r));
  }

  /// Scalar sheaf with tail map +1 and head map -1, so (delta x)_e = x_tail + x_head.
  static CellularSheaf sign(Graph g) {
    std::vector<std::array<LinearMap, 2>> r(g.edge_count(), {LinearMap::scalar(1.0), LinearMap::scalar(-1.0)});
    std::vector<std::size_t> vd(g.vertex_count(), 1), ed(g.edge_count(), 1);
    return CellularSheaf(std::move(g), std::move(vd), std::move(ed), std::move(r));
  }

  const Graph& graph() const { return graph_; }
  std::size_t vertex_count() const { return graph_.vertex_count(); }
  std::size_t edge_count() const { return graph_.edge_count(); }
  const std::vector<std::size_t>& vertex_dims() const { return vertex_dims_; }
  const std::vector<std::size_t>& edge_dims() const { return edge_dims_; }
  std::size_t vertex_dim(VertexId v) const { return vertex_dims_.at(v); }
  std::size_t edge_dim(EdgeId e) const { return edge_dims_.at(e); }
  const BlockLayout& vertex_layout() const { return vertex_layout_; }
  const BlockLayout& edge_layout() const { return edge_layout_; }
  std::size_t c0_dim() const { return vertex_layout_.total(); }
  std::size_t c1_dim() const { return edge_layout_.total(); }

  const LinearMap& restriction(EdgeId e, Side s) const { return restrictions_.at(e)[static_cast<int>(s)]; }
  const Matrix& map(EdgeId e, Side s) const { return restriction(e, s).matrix(); }

  /// Restriction from vertex v (an endpoint of e) into the stalk of e.
  const Matrix& map_from(EdgeId e, VertexId v) const {
    return map(e, graph_.edge(e).tail == v ? Side::Tail : Side::Head);
  }

  /// +1 if v is the tail of e, -1 if it is the head.
  double sign_at(EdgeId e, VertexId v) const { return graph_.edge(e).tail == v ? 1.0 : -1.0; }

  bool shapes_valid() const { return valid_; }

  void require_valid() const {
    if (!valid_) {
      auto v = compute_violations();
      throw ShapeError("sheaf has inconsistent restriction shapes: " + v.front().describe());
    }
  }

  Cochain0 zero_cochain0() const { return Cochain0(vertex_layout_); }
  Cochain1 zero_cochain1() const { return Cochain1(edge_layout_); }
  Cochain0 cochain0(Vector flat) const { return Cochain0(vertex_layout_, std::move(flat)); }
  Cochain1 cochain1(Vector flat) const { return Cochain1(edge_layout_, std::move(flat)); }

  void require_conforms(const Cochain0& x) const {
    if (!(x.layout() == vertex_layout_)) throw DimensionError("0-cochain does not match the sheaf's vertex stalks");
  }
  void require_conforms(const Cochain1& y) const {
    if (!(y.layout() == edge_layout_)) throw DimensionError("1-cochain does not match the sheaf's edge stalks");
  }

  /// Same sheaf with every edge orientation flipped (tail and head maps swap).
  CellularSheaf reversed() const {
    std::vector<std::array<LinearMap, 2>> r;
    r.reserve(restrictions_.size());
    for (const auto& pair : restrictions_) r.push_back({pair[1], pair[0]});
    return CellularSheaf(graph_.reversed(), vertex_dims_, edge_dims_, std::move(r));
  }

  std::vector<ShapeViolation> compute_violations() const {
    std::vector<ShapeViolation> out;
    for (const auto& e : graph_.edges()) {
      for (Side s : {Side::Tail, Side::Head}) {
        const auto& m = restriction(e.id, s);
        const VertexId v = s == Side::Tail ? e.tail : e.head;
        const std::size_t er = edge_dims_[e.id], ec = vertex_dims_[v];
        if (m.rows() != er || m.cols() != ec) out.push_back({e.id, s, er, ec, m.rows(), m.cols()});
      }
    }
    return out;
  }

  friend bool operator==(const CellularSheaf& a, const CellularSheaf& b) {
    return a.graph_ == b.graph_ && a.vertex_dims_ == b.vertex_dims_ && a.edge_dims_ == b.edge_dims_ &&
           a.restrictions_ == b.restrictions_;
  }

 private:
  Graph graph_;
  std::vector<std::size_t> vertex_dims_;
  std::vector<std::size_t> edge_dims_;
  std::vector<std::array<LinearMap, 2>> restrictions_;
  BlockLayout vertex_layout_;
  BlockLayout edge_layout_;
  bool valid_ = true;
};

inline ValidationReport validate_sheaf(const CellularSheaf& sheaf) { return {sheaf.compute_violations()}; }

}  // namespace sheafcoord
