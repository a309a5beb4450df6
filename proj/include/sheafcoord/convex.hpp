#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>

#include "sheafcoord/linear_map.hpp"
#include "sheafcoord/sheaf.hpp"

// Node objectives f_i and edge potentials U_e.
//
// Prox conventions differ by side:
//   node_prox(f, v, rho) = argmin_x f(x) + (1 / (2 rho)) ||x - v||^2
//   edge_prox(U, v, rho) = argmin_w U(w) + (rho / 2)   ||w - v||^2
// The edge form is the one that appears in the ADMM z-update.

namespace sheafcoord {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kMembershipTol = 1e-12;

/// Raised when a gradient is requested from a non-smooth potential.
struct NonSmoothError : std::domain_error {
  using std::domain_error::domain_error;
};

inline bool same_vector(const Vector& a, const Vector& b) { return a.size() == b.size() && a == b; }

namespace objective {
struct Zero {
  friend bool operator==(const Zero&, const Zero&) = default;
};
struct Quadratic {
  Vector reference;
  double weight = 1.0;
  friend bool operator==(const Quadratic& a, const Quadratic& b) {
    return same_vector(a.reference, b.reference) && a.weight == b.weight;
  }
};
struct FixedValue {
  Vector value;
  friend bool operator==(const FixedValue& a, const FixedValue& b) { return same_vector(a.value, b.value); }
};
struct Box {
  Vector lower;
  Vector upper;
  friend bool operator==(const Box& a, const Box& b) {
    return same_vector(a.lower, b.lower) && same_vector(a.upper, b.upper);
  }
};
}  // namespace objective

using NodeObjective = std::variant<objective::Zero, objective::Quadratic, objective::FixedValue, objective::Box>;

namespace potential {
struct Quadratic {
  Vector target;
  double stiffness = 1.0;
  friend bool operator==(const Quadratic& a, const Quadratic& b) {
    return same_vector(a.target, b.target) && a.stiffness == b.stiffness;
  }
};
struct ZeroIndicator {
  friend bool operator==(const ZeroIndicator&, const ZeroIndicator&) = default;
};
struct Huber {
  Vector target;
  double stiffness = 1.0;
  double threshold = 1.0;
  friend bool operator==(const Huber& a, const Huber& b) {
    return same_vector(a.target, b.target) && a.stiffness == b.stiffness && a.threshold == b.threshold;
  }
};
}  // namespace potential

using EdgePotential = std::variant<potential::Quadratic, potential::ZeroIndicator, potential::Huber>;

struct ProxQuery {
  Vector point;
  double rho = 1.0;
};

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

namespace detail {
inline void require_len(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": length " + std::to_string(got) + " does not match " +
                         std::to_string(want));
  }
}
inline void require_rho(double rho) {
  if (!(rho > 0)) throw std::invalid_argument("prox parameter rho must be positive");
}
}  // namespace detail

/// Checks parameter lengths against a stalk dimension and parameter ranges.
inline void check_objective(const NodeObjective& f, std::size_t dim) {
  std::visit(overloaded{
                 [](const objective::Zero&) {},
                 [&](const objective::Quadratic& q) {
                   detail::require_len(static_cast<std::size_t>(q.reference.size()), dim, "quadratic reference");
                   if (!(q.weight >= 0)) throw std::invalid_argument("quadratic weight must be >= 0");
                 },
                 [&](const objective::FixedValue& c) {
                   detail::require_len(static_cast<std::size_t>(c.value.size()), dim, "fixed value");
                 },
                 [&](const objective::Box& b) {
                   detail::require_len(static_cast<std::size_t>(b.lower.size()), dim, "box lower");
                   detail::require_len(static_cast<std::size_t>(b.upper.size()), dim, "box upper");
                   if ((b.lower.array() > b.upper.array()).any())
                     throw std::invalid_argument("box lower bound exceeds upper bound");
                 },
             },
             f);
}

inline void check_potential(const EdgePotential& u, std::size_t dim) {
  std::visit(overloaded{
                 [&](const potential::Quadratic& q) {
                   detail::require_len(static_cast<std::size_t>(q.target.size()), dim, "quadratic target");
                   if (!(q.stiffness > 0)) throw std::invalid_argument("quadratic stiffness must be > 0");
                 },
                 [](const potential::ZeroIndicator&) {},
                 [&](const potential::Huber& h) {
                   detail::require_len(static_cast<std::size_t>(h.target.size()), dim, "huber target");
                   if (!(h.stiffness > 0)) throw std::invalid_argument("huber stiffness must be > 0");
                   if (!(h.threshold > 0)) throw std::invalid_argument("huber threshold must be > 0");
                 },
             },
             u);
}

template <class V>
double objective_value(const NodeObjective& f, const V& x) {
  return std::visit(overloaded{
                        [](const objective::Zero&) { return 0.0; },
                        [&](const objective::Quadratic& q) {
                          detail::require_len(static_cast<std::size_t>(x.size()),
                                              static_cast<std::size_t>(q.reference.size()), "objective_value");
                          return 0.5 * q.weight * (x - q.reference).squaredNorm();
                        },
                        [&](const objective::FixedValue& c) {
                          detail::require_len(static_cast<std::size_t>(x.size()),
                                              static_cast<std::size_t>(c.value.size()), "objective_value");
                          return (x - c.value).cwiseAbs().maxCoeff() <= kMembershipTol ? 0.0 : kInf;
                        },
                        [&](const objective::Box& b) {
                          detail::require_len(static_cast<std::size_t>(x.size()),
                                              static_cast<std::size_t>(b.lower.size()), "objective_value");
                          const bool inside = ((x.array() >= b.lower.array() - kMembershipTol) &&
                                               (x.array() <= b.upper.array() + kMembershipTol))
                                                  .all();
                          return inside ? 0.0 : kInf;
                        },
                    },
                    f);
}

/// argmin_x f(x) + (1 / (2 rho)) ||x - v||^2.
inline Vector node_prox(const NodeObjective& f, const ProxQuery& q) {
  detail::require_rho(q.rho);
  const Vector& v = q.point;
  return std::visit(overloaded{
                        [&](const objective::Zero&) -> Vector { return v; },
                        [&](const objective::Quadratic& p) -> Vector {
                          const double rw = q.rho * p.weight;
                          return (v + rw * p.reference) / (1.0 + rw);
                        },
                        [&](const objective::FixedValue& c) -> Vector { return c.value; },
                        [&](const objective::Box& b) -> Vector { return v.cwiseMax(b.lower).cwiseMin(b.upper); },
                    },
                    f);
}

template <class V>
double edge_value(const EdgePotential& u, const V& y) {
  return std::visit(overloaded{
                        [&](const potential::Quadratic& p) {
                          detail::require_len(static_cast<std::size_t>(y.size()),
                                              static_cast<std::size_t>(p.target.size()), "edge_value");
                          return 0.5 * p.stiffness * (y - p.target).squaredNorm();
                        },
                        [&](const potential::ZeroIndicator&) {
                          return y.size() == 0 || y.cwiseAbs().maxCoeff() <= kMembershipTol ? 0.0 : kInf;
                        },
                        [&](const potential::Huber& h) {
                          detail::require_len(static_cast<std::size_t>(y.size()),
                                              static_cast<std::size_t>(h.target.size()), "edge_value");
                          const double r = (y - h.target).norm();
                          return r <= h.threshold ? 0.5 * h.stiffness * r * r
                                                  : h.stiffness * h.threshold * (r - 0.5 * h.threshold);
                        },
                    },
                    u);
}

template <class V>
Vector edge_gradient(const EdgePotential& u, const V& y) {
  return std::visit(overloaded{
                        [&](const potential::Quadratic& p) -> Vector {
                          detail::require_len(static_cast<std::size_t>(y.size()),
                                              static_cast<std::size_t>(p.target.size()), "edge_gradient");
                          return p.stiffness * (y - p.target);
                        },
                        [&](const potential::ZeroIndicator&) -> Vector {
                          throw NonSmoothError(
                              "zero-indicator potential has no gradient; use the prox-based ADMM solver");
                        },
                        [&](const potential::Huber& h) -> Vector {
                          detail::require_len(static_cast<std::size_t>(y.size()),
                                              static_cast<std::size_t>(h.target.size()), "edge_gradient");
                          const Vector r = y - h.target;
                          const double n = r.norm();
                          if (n <= h.threshold) return h.stiffness * r;
                          return (h.stiffness * h.threshold / n) * r;
                        },
                    },
                    u);
}

/// argmin_w U(w) + (rho / 2) ||w - v||^2.
inline Vector edge_prox(const EdgePotential& u, const ProxQuery& q) {
  detail::require_rho(q.rho);
  const Vector& v = q.point;
  return std::visit(overloaded{
                        [&](const potential::Quadratic& p) -> Vector {
                          return (p.stiffness * p.target + q.rho * v) / (p.stiffness + q.rho);
                        },
                        [&](const potential::ZeroIndicator&) -> Vector { return Vector::Zero(v.size()); },
                        [&](const potential::Huber& h) -> Vector {
                          const Vector r = v - h.target;
                          const double n = r.norm();
                          // Inside the quadratic zone the shrunk residual rho r / (k + rho) stays below tau.
                          if (n * q.rho <= h.threshold * (h.stiffness + q.rho))
                            return h.target + (q.rho / (h.stiffness + q.rho)) * r;
                          return h.target + (1.0 - h.stiffness * h.threshold / (q.rho * n)) * r;
                        },
                    },
                    u);
}

/// Lipschitz constant of the gradient (infinite for the indicator).
inline double gradient_lipschitz(const EdgePotential& u) {
  return std::visit(overloaded{
                        [](const potential::Quadratic& p) { return p.stiffness; },
                        [](const potential::ZeroIndicator&) { return kInf; },
                        [](const potential::Huber& h) { return h.stiffness; },
                    },
                    u);
}

inline bool is_smooth(const EdgePotential& u) { return !std::holds_alternative<potential::ZeroIndicator>(u); }

/// Unique minimizer b_e of a strongly convex potential (zero for the indicator).
inline Vector potential_target(const EdgePotential& u, std::size_t dim) {
  return std::visit(overloaded{
                        [](const potential::Quadratic& p) -> Vector { return p.target; },
                        [&](const potential::ZeroIndicator&) -> Vector {
                          return Vector::Zero(static_cast<Eigen::Index>(dim));
                        },
                        [](const potential::Huber& h) -> Vector { return h.target; },
                    },
                    u);
}

}  // namespace sheafcoord
