#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sheafcoord/convex.hpp"
#include "sheafcoord/dynamics.hpp"
#include "sheafcoord/operators.hpp"

namespace sheafcoord {

enum class ProgramMode { HardConstraint, Soft };

inline const char* to_string(ProgramMode m) { return m == ProgramMode::HardConstraint ? "hard" : "soft"; }

/// minimize  sum_i f_i(x_i) + sum_e U_e((delta x)_e)  over 0-cochains x.
///
/// HardConstraint mode is the special case where every U_e is the indicator of {0},
/// i.e. x is restricted to global sections.
class HomologicalProgram {
 public:
  HomologicalProgram(CellularSheaf sheaf, std::vector<NodeObjective> objectives,
                     std::vector<EdgePotential> potentials, ProgramMode mode)
      : sheaf_(std::move(sheaf)),
        objectives_(std::move(objectives)),
        potentials_(std::move(potentials)),
        mode_(mode) {
    sheaf_.require_valid();
    if (objectives_.size() != sheaf_.vertex_count())
      throw std::invalid_argument("HomologicalProgram: need one objective per vertex");
    if (potentials_.size() != sheaf_.edge_count())
      throw std::invalid_argument("HomologicalProgram: need one potential per edge");
    for (VertexId v = 0; v < objectives_.size(); ++v) check_objective(objectives_[v], sheaf_.vertex_dim(v));
    for (EdgeId e = 0; e < potentials_.size(); ++e) check_potential(potentials_[e], sheaf_.edge_dim(e));
    if (mode_ == ProgramMode::HardConstraint) {
      for (const auto& p : potentials_)
        if (is_smooth(p))
          throw std::invalid_argument("HomologicalProgram: hard-constraint mode requires zero-indicator potentials");
    }
  }

  /// Hard-constraint program: every edge carries the zero indicator.
  static HomologicalProgram hard(CellularSheaf sheaf, std::vector<NodeObjective> objectives) {
    std::vector<EdgePotential> pots(sheaf.edge_count(), potential::ZeroIndicator{});
    return HomologicalProgram(std::move(sheaf), std::move(objectives), std::move(pots), ProgramMode::HardConstraint);
  }

  const CellularSheaf& sheaf() const { return sheaf_; }
  const std::vector<NodeObjective>& objectives() const { return objectives_; }
  const std::vector<EdgePotential>& potentials() const { return potentials_; }
  const NodeObjective& objective(VertexId v) const { return objectives_.at(v); }
  const EdgePotential& potential(EdgeId e) const { return potentials_.at(e); }
  ProgramMode mode() const { return mode_; }

  /// Per-edge minimizers b_e assembled into a 1-cochain.
  Cochain1 targets() const {
    Cochain1 b = sheaf_.zero_cochain1();
    for (EdgeId e = 0; e < potentials_.size(); ++e) b.block(e) = potential_target(potentials_[e], sheaf_.edge_dim(e));
    return b;
  }

  friend bool operator==(const HomologicalProgram&, const HomologicalProgram&) = default;

 private:
  CellularSheaf sheaf_;
  std::vector<NodeObjective> objectives_;
  std::vector<EdgePotential> potentials_;
  ProgramMode mode_;
};

/// sum_i f_i(x_i) + sum_e U_e((delta x)_e). +inf propagates.
inline double program_objective(const HomologicalProgram& prog, const Cochain0& x) {
  const auto& sheaf = prog.sheaf();
  const Cochain1 dx = apply_coboundary(sheaf, x);
  double s = 0.0;
  for (VertexId v = 0; v < sheaf.vertex_count(); ++v) s += objective_value(prog.objective(v), x.block(v));
  for (EdgeId e = 0; e < sheaf.edge_count(); ++e) s += edge_value(prog.potential(e), dx.block(e));
  return s;
}

struct FeasibilityResult {
  bool feasible = false;
  std::optional<Cochain0> witness;
  double residual = 0.0;         // distance from the constraint set of the best point found
  bool targets_in_image = false; // b in im(delta)
};

namespace detail {

// Least-squares point of { delta x = b, x_v = c_v for FixedValue vertices }.
inline Vector pinned_least_squares(const HomologicalProgram& prog, const Vector& b, double* residual) {
  const auto& sheaf = prog.sheaf();
  const auto& vl = sheaf.vertex_layout();
  const Matrix d = coboundary_dense(sheaf);
  std::size_t pinned = 0;
  for (VertexId v = 0; v < sheaf.vertex_count(); ++v)
    if (std::holds_alternative<objective::FixedValue>(prog.objective(v))) pinned += sheaf.vertex_dim(v);
  const auto n = static_cast<Eigen::Index>(sheaf.c0_dim());
  Matrix a = Matrix::Zero(d.rows() + static_cast<Eigen::Index>(pinned), n);
  Vector rhs = Vector::Zero(a.rows());
  a.topRows(d.rows()) = d;
  rhs.head(d.rows()) = b;
  Eigen::Index row = d.rows();
  for (VertexId v = 0; v < sheaf.vertex_count(); ++v) {
    if (const auto* c = std::get_if<objective::FixedValue>(&prog.objective(v))) {
      for (std::size_t k = 0; k < sheaf.vertex_dim(v); ++k, ++row) {
        a(row, static_cast<Eigen::Index>(vl.offset(v) + k)) = 1.0;
        rhs(row) = c->value(static_cast<Eigen::Index>(k));
      }
    }
  }
  Vector x = a.completeOrthogonalDecomposition().solve(rhs);
  if (residual) *residual = (a * x - rhs).norm();
  return x;
}

// Orthonormal basis of { u : delta u = 0, u = 0 on pinned vertices }.
inline Matrix pinned_null_space(const HomologicalProgram& prog) {
  const auto& sheaf = prog.sheaf();
  const auto& vl = sheaf.vertex_layout();
  const Matrix d = coboundary_dense(sheaf);
  const auto n = static_cast<Eigen::Index>(sheaf.c0_dim());
  std::vector<Eigen::Index> pinned;
  for (VertexId v = 0; v < sheaf.vertex_count(); ++v)
    if (std::holds_alternative<objective::FixedValue>(prog.objective(v)))
      for (std::size_t k = 0; k < vl.dim(v); ++k) pinned.push_back(static_cast<Eigen::Index>(vl.offset(v) + k));
  Matrix m = Matrix::Zero(d.rows() + static_cast<Eigen::Index>(pinned.size()), n);
  m.topRows(d.rows()) = d;
  for (std::size_t k = 0; k < pinned.size(); ++k) m(d.rows() + static_cast<Eigen::Index>(k), pinned[k]) = 1.0;
  if (m.rows() == 0) return Matrix::Identity(n, n);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (smax > 0 && s(k) >= kDefaultNullTol * smax) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

inline Vector clamp_to_boxes(const HomologicalProgram& prog, Vector x) {
  const auto& vl = prog.sheaf().vertex_layout();
  for (VertexId v = 0; v < prog.sheaf().vertex_count(); ++v) {
    if (const auto* b = std::get_if<objective::Box>(&prog.objective(v))) {
      auto seg = x.segment(static_cast<Eigen::Index>(vl.offset(v)), static_cast<Eigen::Index>(vl.dim(v)));
      seg = seg.cwiseMax(b->lower).cwiseMin(b->upper);
    }
  }
  return x;
}

inline bool has_box(const HomologicalProgram& prog) {
  for (const auto& f : prog.objectives())
    if (std::holds_alternative<objective::Box>(f)) return true;
  return false;
}

}  // namespace detail

/// Decides whether the program has a point of finite objective.
///
/// Hard mode: looks for x with delta x = 0 that satisfies every FixedValue pin and
/// Box constraint (least squares, then alternating projections when boxes are present).
/// Soft mode is always feasible; the witness is the pinned least-squares solution of
/// delta x = b clamped into the boxes.
inline FeasibilityResult check_feasibility(const HomologicalProgram& prog, double tol = 1e-8) {
  if (!(tol > 0)) throw std::invalid_argument("check_feasibility: tol must be positive");
  const auto& sheaf = prog.sheaf();
  FeasibilityResult out;
  const Cochain1 b = prog.targets();
  out.targets_in_image = coboundary_least_squares(sheaf, b) < std::max(tol, kTargetFeasibilityTol);

  if (prog.mode() == ProgramMode::Soft) {
    double res = 0.0;
    Vector x = detail::clamp_to_boxes(prog, detail::pinned_least_squares(prog, b.flat(), &res));
    out.feasible = true;
    out.residual = 0.0;
    out.witness = sheaf.cochain0(std::move(x));
    return out;
  }

  const Vector zero_b = Vector::Zero(static_cast<Eigen::Index>(sheaf.c1_dim()));
  double res = 0.0;
  Vector x = detail::pinned_least_squares(prog, zero_b, &res);
  if (detail::has_box(prog) && res < tol) {
    // Alternating projections between the affine set {delta x = 0, pins} and the boxes.
    const Matrix free_dirs = detail::pinned_null_space(prog);
    Vector p = x;
    for (int it = 0; it < 100000; ++it) {
      const Vector q = detail::clamp_to_boxes(prog, p);
      if ((q - p).norm() < 0.1 * tol) break;
      p = x + free_dirs * (free_dirs.transpose() * (q - x));
    }
    x = p;
    res = std::max((coboundary_dense(sheaf) * x).norm(), (detail::clamp_to_boxes(prog, x) - x).norm());
  }
  out.residual = res;
  out.feasible = res < tol;
  Cochain0 w = sheaf.cochain0(x);
  if (out.feasible && !std::isfinite(program_objective(prog, w))) {
    // Pins can be met only up to the least-squares tolerance; snap them exactly.
    for (VertexId v = 0; v < sheaf.vertex_count(); ++v)
      if (const auto* c = std::get_if<objective::FixedValue>(&prog.objective(v))) w.block(v) = c->value;
  }
  out.witness = std::move(w);
  return out;
}

}  // namespace sheafcoord
