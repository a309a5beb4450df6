#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sheafcoord/cohomology.hpp"
#include "sheafcoord/convex.hpp"
#include "sheafcoord/operators.hpp"

namespace sheafcoord {

struct FlowConfig {
  double step_size = 0.0;  // 0 selects 1 / lambda_hat (scaled by the potentials' Lipschitz bound)
  std::size_t max_steps = 100000;
  double converge_tol = 1e-10;
  std::size_t record_every = 100;

  void validate() const {
    if (!(step_size >= 0)) throw std::invalid_argument("FlowConfig: step_size must be >= 0");
    if (max_steps < 1) throw std::invalid_argument("FlowConfig: max_steps must be >= 1");
    if (!(converge_tol > 0)) throw std::invalid_argument("FlowConfig: converge_tol must be > 0");
    if (record_every < 1) throw std::invalid_argument("FlowConfig: record_every must be >= 1");
  }

  friend bool operator==(const FlowConfig&, const FlowConfig&) = default;
};

struct FlowSample {
  std::size_t step;
  Cochain0 state;
  double energy;
  double max_change;  // ||x^{k+1} - x^k||_inf of the step that produced this state (0 for step 0)
};

struct FlowTrace {
  std::vector<FlowSample> samples;
  bool converged = false;
  std::size_t steps_taken = 0;
  double step_size = 0.0;
  std::string diagnostic;

  // Filled by nonlinear_heat_flow only.
  std::optional<bool> target_feasible;
  double target_residual = 0.0;  // ||delta x - b||_inf at the final state
  double gradient_norm = 0.0;    // ||L_grad(U) x||_inf at the final state

  const Cochain0& final_state() const { return samples.back().state; }
  double final_energy() const { return samples.back().energy; }
};

inline constexpr std::uint64_t kPowerIterationSeed = 0x5eafc0de2024ULL;
inline constexpr double kSpectralSafety = 1.05;

/// Upper estimate of lambda_max(L) by power iteration, times a 1.05 safety factor.
/// Returns 1 when L vanishes identically.
inline double estimate_spectral_bound(const CellularSheaf& sheaf, std::size_t iters = 200) {
  if (iters < 10) throw std::invalid_argument("estimate_spectral_bound: iters must be >= 10");
  sheaf.require_valid();
  std::mt19937_64 rng(kPowerIterationSeed);
  std::normal_distribution<double> gauss;
  Vector v(static_cast<Eigen::Index>(sheaf.c0_dim()));
  for (auto& c : v) c = gauss(rng);
  v.normalize();
  double lambda = 0.0;
  for (std::size_t k = 0; k < iters; ++k) {
    Vector lv = apply_laplacian(sheaf, sheaf.cochain0(v)).flat();
    lambda = v.dot(lv);
    const double n = lv.norm();
    if (!(n > 0)) break;
    v = lv / n;
  }
  if (!(lambda > 0)) return 1.0;
  return kSpectralSafety * lambda;
}

/// Orthogonal projection of x0 onto the global sections.
inline Cochain0 harmonic_projection(const CellularSheaf& sheaf, const Cochain0& x0,
                                    double null_tol = kDefaultNullTol) {
  sheaf.require_conforms(x0);
  const auto basis = global_section_basis(sheaf, null_tol);
  Cochain0 out = sheaf.zero_cochain0();
  for (const auto& b : basis.basis) out += b.dot(x0) * b;
  return out;
}

inline void require_potentials(const CellularSheaf& sheaf, const std::vector<EdgePotential>& pots) {
  if (pots.size() != sheaf.edge_count()) {
    throw DimensionError("expected " + std::to_string(sheaf.edge_count()) + " edge potentials, got " +
                         std::to_string(pots.size()));
  }
  for (EdgeId e = 0; e < pots.size(); ++e) check_potential(pots[e], sheaf.edge_dim(e));
}

/// Sum over edges of U_e((delta x)_e).
inline double total_potential(const CellularSheaf& sheaf, const std::vector<EdgePotential>& pots,
                              const Cochain0& x) {
  require_potentials(sheaf, pots);
  const Cochain1 dx = apply_coboundary(sheaf, x);
  double s = 0.0;
  for (EdgeId e = 0; e < pots.size(); ++e) s += edge_value(pots[e], dx.block(e));
  return s;
}

/// Nonlinear sheaf Laplacian: (L x)_i = sum_e +/- F_ie^T grad U_e((delta x)_e),
/// plus sign at the tail and minus at the head. This is the gradient of total_potential.
inline Cochain0 nonlinear_laplacian_apply(const CellularSheaf& sheaf, const std::vector<EdgePotential>& pots,
                                          const Cochain0& x) {
  require_potentials(sheaf, pots);
  const Cochain1 dx = apply_coboundary(sheaf, x);
  Cochain0 out = sheaf.zero_cochain0();
  for (const auto& e : sheaf.graph().edges()) {
    const Vector g = edge_gradient(pots[e.id], dx.block(e.id));
    out.block(e.tail) += sheaf.map(e.id, Side::Tail).transpose() * g;
    out.block(e.head) -= sheaf.map(e.id, Side::Head).transpose() * g;
  }
  return out;
}

namespace detail {

// Explicit Euler on x' = -force(x). Energy is tracked for sampling and divergence detection.
template <class Force, class Energy>
FlowTrace euler_flow(const Cochain0& x0, const FlowConfig& cfg, double eta, Force force, Energy energy) {
  FlowTrace tr;
  tr.step_size = eta;
  Cochain0 x = x0;
  const double e0 = energy(x);
  tr.samples.push_back({0, x, e0, 0.0});
  double last_change = 0.0;
  std::size_t k = 0;
  for (; k < cfg.max_steps; ++k) {
    Cochain0 delta = force(x);
    delta *= eta;
    const double change = delta.max_abs();
    if (!std::isfinite(change)) {
      tr.diagnostic = "state became non-finite at step " + std::to_string(k) + "; reduce step_size";
      break;
    }
    if (change < cfg.converge_tol) {
      tr.converged = true;
      break;
    }
    x -= delta;
    last_change = change;
    const double ek = energy(x);
    if (!std::isfinite(ek) || (e0 > 0 && ek > 1e6 * e0)) {
      tr.diagnostic = "energy diverged at step " + std::to_string(k + 1) + " (step_size " +
                      std::to_string(eta) + " exceeds the stability bound)";
      tr.steps_taken = k + 1;
      tr.samples.push_back({k + 1, x, ek, change});
      return tr;
    }
    if ((k + 1) % cfg.record_every == 0) tr.samples.push_back({k + 1, x, ek, change});
  }
  tr.steps_taken = k;
  if (tr.samples.back().step != k) tr.samples.push_back({k, x, energy(x), last_change});
  if (!tr.converged && tr.diagnostic.empty()) tr.diagnostic = "max_steps reached before convergence";
  return tr;
}

}  // namespace detail

/// Euler discretization of x' = -L x. Converges to the harmonic projection of x0.
inline FlowTrace linear_heat_flow(const CellularSheaf& sheaf, const Cochain0& x0, const FlowConfig& cfg = {}) {
  cfg.validate();
  sheaf.require_valid();
  sheaf.require_conforms(x0);
  const double eta = cfg.step_size > 0 ? cfg.step_size : 1.0 / estimate_spectral_bound(sheaf);
  return detail::euler_flow(
      x0, cfg, eta, [&](const Cochain0& x) { return apply_laplacian(sheaf, x); },
      [&](const Cochain0& x) { return dirichlet_energy(sheaf, x); });
}

/// Least-squares solve of delta x = b. Returns the residual ||delta x - b||_2.
inline double coboundary_least_squares(const CellularSheaf& sheaf, const Cochain1& b, Cochain0* solution = nullptr) {
  const Matrix d = coboundary_dense(sheaf);
  if (d.rows() == 0) {
    if (solution) *solution = sheaf.zero_cochain0();
    return 0.0;
  }
  Vector x = d.completeOrthogonalDecomposition().solve(b.flat());
  const double res = (d * x - b.flat()).norm();
  if (solution) *solution = sheaf.cochain0(std::move(x));
  return res;
}

inline constexpr double kTargetFeasibilityTol = 1e-8;

/// Euler discretization of x' = -L_{grad U} x for smooth potentials.
/// With b in im(delta) the flow ends at delta x = b; otherwise at a least-squares stationary point.
inline FlowTrace nonlinear_heat_flow(const CellularSheaf& sheaf, const std::vector<EdgePotential>& pots,
                                     const Cochain0& x0, const FlowConfig& cfg = {}) {
  cfg.validate();
  sheaf.require_valid();
  sheaf.require_conforms(x0);
  require_potentials(sheaf, pots);
  double lip = 0.0;
  for (const auto& p : pots) {
    if (!is_smooth(p)) {
      throw NonSmoothError("nonlinear_heat_flow needs differentiable potentials; use the ADMM solver for indicators");
    }
    lip = std::max(lip, gradient_lipschitz(p));
  }
  if (!(lip > 0)) lip = 1.0;
  const double eta = cfg.step_size > 0 ? cfg.step_size : 1.0 / (lip * estimate_spectral_bound(sheaf));
  FlowTrace tr = detail::euler_flow(
      x0, cfg, eta, [&](const Cochain0& x) { return nonlinear_laplacian_apply(sheaf, pots, x); },
      [&](const Cochain0& x) { return total_potential(sheaf, pots, x); });

  Cochain1 b = sheaf.zero_cochain1();
  for (EdgeId e = 0; e < pots.size(); ++e) b.block(e) = potential_target(pots[e], sheaf.edge_dim(e));
  tr.target_feasible = coboundary_least_squares(sheaf, b) < kTargetFeasibilityTol;
  tr.target_residual = (apply_coboundary(sheaf, tr.final_state()) - b).max_abs();
  tr.gradient_norm = nonlinear_laplacian_apply(sheaf, pots, tr.final_state()).max_abs();
  return tr;
}

}  // namespace sheafcoord
