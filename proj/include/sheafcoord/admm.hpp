#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sheafcoord/homprog.hpp"

// Scaled-dual ADMM for homological programs.
//
//   x^{k+1}_i = argmin f_i(u) + rho/2 sum_{e ni i} ||F_ie u - t_ie||^2 + rho/2 sum_{e ni i} ||F_ie (u - x^k_i)||^2
//   z^{k+1}_e = argmin U_e(w) + rho/2 ||w - ((delta x^{k+1})_e + y^k_e)||^2
//   y^{k+1}_e = y^k_e + (delta x^{k+1})_e - z^{k+1}_e
//
// t_ie is the target edge e sets for endpoint i from the neighbour's previous
// restriction, z^k_e and y^k_e. The x-update is solved per vertex with the
// neighbours frozen at x^k; the second quadratic anchors u to the agent's own
// previous state. Without it the frozen-neighbour sweep diverges on pinned
// consensus. The anchor vanishes at fixed points, so limits are ADMM solutions.

namespace sheafcoord {

struct AdmmConfig {
  double rho = 1.0;
  std::size_t max_iters = 10000;
  double primal_tol = 1e-8;
  double dual_tol = 1e-8;
  std::size_t inner_diffusion_steps = 0;  // 0 selects the closed-form edge prox
  double inner_step = 0.1;
  std::uint64_t seed = 0;
  std::size_t snapshot_every = 0;  // 0 disables iterate snapshots

  void validate() const {
    if (!(rho > 0)) throw std::invalid_argument("AdmmConfig: rho must be > 0");
    if (max_iters < 1) throw std::invalid_argument("AdmmConfig: max_iters must be >= 1");
    if (!(primal_tol > 0) || !(dual_tol > 0)) throw std::invalid_argument("AdmmConfig: tolerances must be > 0");
    if (!(inner_step > 0)) throw std::invalid_argument("AdmmConfig: inner_step must be > 0");
  }

  friend bool operator==(const AdmmConfig&, const AdmmConfig&) = default;
};

/// x, z and the scaled dual y. The unscaled multiplier is lambda = rho * y.
struct IterateState {
  Cochain0 x;
  Cochain1 z;
  Cochain1 y;

  Cochain1 lambda(double rho) const { return rho * y; }
  friend bool operator==(const IterateState&, const IterateState&) = default;
};

struct Residuals {
  double primal = 0.0;  // ||delta x - z||_2
  double dual = 0.0;    // rho ||z_next - z_prev||_2
  double step = 0.0;    // ||x_next - x_prev||_2
};

enum class SolveStatus { Converged, MaxIters, Infeasible };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::MaxIters: return "MaxIters";
    case SolveStatus::Infeasible: return "Infeasible";
  }
  return "?";
}

struct IterationRecord {
  std::size_t iter;
  double primal_residual;
  double dual_residual;
  double step;
  double objective;  // sum_i f_i(x_i) + sum_e U_e(z_e)
  std::optional<IterateState> snapshot;
};

struct SolveTrace {
  std::vector<IterationRecord> records;
  SolveStatus status = SolveStatus::MaxIters;
  std::size_t iterations() const { return records.size(); }
};

struct AdmmResult {
  Cochain0 x;
  SolveTrace trace;
  IterateState final_state;
};

inline Residuals compute_residuals(const HomologicalProgram& prog, const IterateState& prev,
                                   const IterateState& next, double rho) {
  const auto& sheaf = prog.sheaf();
  sheaf.require_conforms(prev.x);
  sheaf.require_conforms(next.x);
  sheaf.require_conforms(prev.z);
  sheaf.require_conforms(next.z);
  Residuals r;
  r.primal = (apply_coboundary(sheaf, next.x) - next.z).norm();
  r.dual = rho * (next.z - prev.z).norm();
  r.step = (next.x - prev.x).norm();
  return r;
}

/// Consecutive stationary iterations with a stuck primal residual before the
/// run is declared infeasible.
inline constexpr std::size_t kInfeasibleWindow = 50;

namespace kernel {

/// Contribution of one incident edge to a vertex update.
struct EdgeTerm {
  const Matrix* map;  // F_{i->e}
  Vector target;      // t_{i,e}
};

/// Target for endpoint `side` of an edge, given the other endpoint's restricted state.
inline Vector edge_target(Side side, const Vector& other_restricted, const Vector& z, const Vector& y) {
  return side == Side::Tail ? Vector(other_restricted + z - y) : Vector(other_restricted - z + y);
}

inline Vector solve_shifted(const Matrix& h, const Vector& g, const Vector& anchor) {
  // Solution of h u = g closest to `anchor` (h is PSD, possibly singular).
  return anchor + h.completeOrthogonalDecomposition().solve(g - h * anchor);
}

inline Vector box_quadratic(const objective::Box& box, const Matrix& h, const Vector& g, const Vector& x_prev) {
  const bool diagonal = (h - Matrix(h.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
  if (diagonal) {
    Vector u(h.rows());
    for (Eigen::Index j = 0; j < h.rows(); ++j)
      u(j) = h(j, j) > 0 ? g(j) / h(j, j) : x_prev(j);
    return u.cwiseMax(box.lower).cwiseMin(box.upper);
  }
  // Projected gradient on 1/2 u^T h u - g^T u: node prox (a clamp) after each gradient step.
  const double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(h, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  const double step = lmax > 0 ? 1.0 / lmax : 1.0;
  Vector u = x_prev.cwiseMax(box.lower).cwiseMin(box.upper);
  for (int it = 0; it < 100000; ++it) {
    Vector next = (u - step * (h * u - g)).cwiseMax(box.lower).cwiseMin(box.upper);
    const double change = (next - u).cwiseAbs().maxCoeff();
    u = std::move(next);
    if (change <= 1e-15 * (1.0 + u.cwiseAbs().maxCoeff())) break;
  }
  return u;
}

/// argmin_u f(u) + rho/2 sum_e (||F_e u - t_e||^2 + ||F_e (u - x_prev)||^2).
inline Vector vertex_update(const NodeObjective& f, const std::vector<EdgeTerm>& terms, const Vector& x_prev,
                            double rho) {
  const auto n = x_prev.size();
  Matrix h = Matrix::Zero(n, n);
  Vector g = Vector::Zero(n);
  for (const auto& t : terms) {
    const Matrix& fm = *t.map;
    const Matrix gram = fm.transpose() * fm;
    h += 2.0 * gram;
    g += fm.transpose() * t.target + gram * x_prev;
  }
  return std::visit(overloaded{
                        [&](const objective::Zero&) -> Vector { return solve_shifted(h, g, x_prev); },
                        [&](const objective::Quadratic& q) -> Vector {
                          if (q.weight == 0.0) return solve_shifted(h, g, x_prev);
                          Matrix a = rho * h;
                          a.diagonal().array() += q.weight;
                          return a.ldlt().solve(q.weight * q.reference + rho * g);
                        },
                        [&](const objective::FixedValue& c) -> Vector { return c.value; },
                        [&](const objective::Box& b) -> Vector { return box_quadratic(b, h, g, x_prev); },
                    },
                    f);
}

/// z-update for one edge: closed-form prox, or explicit Euler steps of
/// w' = -grad U(w) - rho (w - v) started from the previous z.
inline Vector edge_update(const EdgePotential& u, const Vector& v, const Vector& z_prev, double rho,
                          std::size_t diffusion_steps, double inner_step) {
  if (diffusion_steps == 0 || !is_smooth(u)) return edge_prox(u, {v, rho});
  Vector w = z_prev;
  for (std::size_t s = 0; s < diffusion_steps; ++s) w -= inner_step * (edge_gradient(u, w) + rho * (w - v));
  return w;
}

inline double split_objective(const HomologicalProgram& prog, const Cochain0& x, const Cochain1& z) {
  double s = 0.0;
  for (VertexId v = 0; v < prog.sheaf().vertex_count(); ++v) s += objective_value(prog.objective(v), x.block(v));
  for (EdgeId e = 0; e < prog.sheaf().edge_count(); ++e) s += edge_value(prog.potential(e), z.block(e));
  return s;
}

/// Shared termination bookkeeping for the centralized and distributed drivers.
class StopRule {
 public:
  // Soft programs are always feasible, so only hard-constraint runs can stall out as Infeasible.
  StopRule(const AdmmConfig& cfg, ProgramMode mode) : cfg_(cfg), can_be_infeasible_(mode == ProgramMode::HardConstraint) {}

  /// Returns the terminal status if the run should stop after this iteration.
  std::optional<SolveStatus> update(const Residuals& r) {
    if (r.primal < cfg_.primal_tol && r.dual < cfg_.dual_tol && r.step < cfg_.dual_tol) return SolveStatus::Converged;
    const bool stationary = r.dual < cfg_.dual_tol && r.step < cfg_.dual_tol;
    const bool stuck = stationary && std::abs(r.primal - last_primal_) <= 1e-9 * std::max(1.0, r.primal);
    stalled_ = stuck ? stalled_ + 1 : 0;
    last_primal_ = r.primal;
    if (can_be_infeasible_ && stalled_ >= kInfeasibleWindow) return SolveStatus::Infeasible;
    return std::nullopt;
  }

 private:
  AdmmConfig cfg_;
  bool can_be_infeasible_;
  std::size_t stalled_ = 0;
  double last_primal_ = std::numeric_limits<double>::quiet_NaN();
};

}  // namespace kernel

/// x^0 = x0 (or zero), z^0 = delta x^0, y^0 = 0.
inline IterateState initial_state(const HomologicalProgram& prog, const std::optional<Cochain0>& x0) {
  const auto& sheaf = prog.sheaf();
  IterateState s;
  s.x = x0 ? *x0 : sheaf.zero_cochain0();
  sheaf.require_conforms(s.x);
  s.z = apply_coboundary(sheaf, s.x);
  s.y = sheaf.zero_cochain1();
  return s;
}

/// Centralized reference solver.
inline AdmmResult admm_solve(const HomologicalProgram& prog, const AdmmConfig& cfg = {},
                             const std::optional<Cochain0>& x0 = std::nullopt) {
  cfg.validate();
  const auto& sheaf = prog.sheaf();
  const auto& g = sheaf.graph();
  const double rho = cfg.rho;

  IterateState cur = initial_state(prog, x0);
  // Restricted endpoint states F_{tail->e} x_tail and F_{head->e} x_head.
  auto restrict_all = [&](const Cochain0& x) {
    std::vector<std::array<Vector, 2>> r(g.edge_count());
    for (const auto& e : g.edges()) {
      r[e.id][0] = sheaf.map(e.id, Side::Tail) * x.block(e.tail);
      r[e.id][1] = sheaf.map(e.id, Side::Head) * x.block(e.head);
    }
    return r;
  };
  auto restricted = restrict_all(cur.x);

  AdmmResult out;
  kernel::StopRule stop(cfg, prog.mode());
  IterateState best = cur;
  double best_primal = std::numeric_limits<double>::infinity();

  for (std::size_t k = 1; k <= cfg.max_iters; ++k) {
    IterateState next;
    next.x = sheaf.zero_cochain0();
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
      std::vector<kernel::EdgeTerm> terms;
      for (EdgeId eid : g.incident(v)) {
        const auto& e = g.edge(eid);
        const Side side = e.tail == v ? Side::Tail : Side::Head;
        const Vector& other = restricted[eid][side == Side::Tail ? 1 : 0];
        terms.push_back({&sheaf.map(eid, side), kernel::edge_target(side, other, cur.z.block(eid), cur.y.block(eid))});
      }
      next.x.block(v) = kernel::vertex_update(prog.objective(v), terms, cur.x.block(v), rho);
    }
    restricted = restrict_all(next.x);

    next.z = sheaf.zero_cochain1();
    next.y = sheaf.zero_cochain1();
    Cochain1 dx = sheaf.zero_cochain1();
    for (const auto& e : g.edges()) {
      dx.block(e.id) = restricted[e.id][0] - restricted[e.id][1];
      const Vector v = dx.block(e.id) + cur.y.block(e.id);
      next.z.block(e.id) =
          kernel::edge_update(prog.potential(e.id), v, cur.z.block(e.id), rho, cfg.inner_diffusion_steps, cfg.inner_step);
      next.y.block(e.id) = cur.y.block(e.id) + dx.block(e.id) - next.z.block(e.id);
    }

    Residuals r;
    r.primal = (dx - next.z).norm();
    r.dual = rho * (next.z - cur.z).norm();
    r.step = (next.x - cur.x).norm();
    IterationRecord rec{k, r.primal, r.dual, r.step, kernel::split_objective(prog, next.x, next.z), std::nullopt};
    if (cfg.snapshot_every > 0 && k % cfg.snapshot_every == 0) rec.snapshot = next;
    out.trace.records.push_back(std::move(rec));

    cur = std::move(next);
    if (r.primal < best_primal) {
      best_primal = r.primal;
      best = cur;
    }
    if (auto status = stop.update(r)) {
      out.trace.status = *status;
      break;
    }
  }
  out.final_state = out.trace.status == SolveStatus::Infeasible ? best : cur;
  out.x = out.final_state.x;
  return out;
}

}  // namespace sheafcoord
