#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sheafcoord/admm.hpp"

// Synchronous message-passing execution of the ADMM iteration.
//
// Each vertex is an agent that owns x_i. The tail agent of an edge owns z_e and
// y_e and mirrors them to the head agent. Agents only touch the mailboxes of
// their incident edges; every mailbox read is logged so runs can be audited.
//
// Round 0 (setup):  exchange F x^0 (2 msgs/edge), tail sends z^0, y^0 to head (1 msg/edge).
// Round k >= 1:     local x-update (no messages)
//                   exchange F x^{k+1}          (2 msgs/edge)
//                   tail runs the edge update, sends z, y to head (1 msg/edge)

namespace sheafcoord {

struct MailMessage {
  enum class Kind { State, Dual } kind = Kind::State;
  Vector state;  // restricted vertex state F_{i->e} x_i
  Vector z;      // Dual only
  Vector y;      // Dual only

  std::size_t bytes() const {
    return sizeof(double) * static_cast<std::size_t>(state.size() + z.size() + y.size());
  }
};

/// Two slots per edge: one addressed to the tail agent, one to the head agent.
struct EdgeMailbox {
  EdgeId edge = 0;
  std::optional<MailMessage> to_tail;
  std::optional<MailMessage> to_head;

  std::optional<MailMessage>& slot_for(Side recipient) { return recipient == Side::Tail ? to_tail : to_head; }
  void clear() {
    to_tail.reset();
    to_head.reset();
  }
};

struct RoundLog {
  std::size_t round = 0;
  std::size_t messages = 0;
  std::size_t bytes = 0;
  std::vector<std::vector<EdgeId>> read_sets;  // indexed by agent
};

struct AgentNode {
  struct EdgeRecord {
    EdgeId edge;
    Side side;
    const Matrix* map;          // F_{i->e}
    Vector own_restricted;      // F_{i->e} x_i
    Vector neighbor_restricted; // last received F_{j->e} x_j
    Vector z;                   // authoritative at the tail, mirror at the head
    Vector y;
    Vector delta;               // tail only: last (delta x)_e
  };

  VertexId id = 0;
  Vector x;
  NodeObjective objective;
  std::vector<EdgeRecord> edges;  // ascending edge id
};

struct LocalityViolation {
  VertexId agent;
  EdgeId edge;
  std::size_t round;
};

struct LocalityAudit {
  std::optional<LocalityViolation> violation;
  bool ok() const { return !violation.has_value(); }
};

/// Every logged read must target an edge incident to the reading agent.
inline LocalityAudit audit_locality(const Graph& graph, const std::vector<RoundLog>& logs) {
  for (const auto& log : logs) {
    for (VertexId a = 0; a < log.read_sets.size(); ++a) {
      for (EdgeId e : log.read_sets[a]) {
        if (a >= graph.vertex_count() || e >= graph.edge_count() || !graph.edge(e).touches(a)) {
          return {LocalityViolation{a, e, log.round}};
        }
      }
    }
  }
  return {};
}

struct DistributedResult {
  Cochain0 x;
  SolveTrace trace;
  std::vector<RoundLog> logs;
  IterateState final_state;
};

/// Messages per round after setup: 2 state messages and 1 dual mirror per edge.
inline std::size_t messages_per_round(const Graph& g) { return 3 * g.edge_count(); }

class DistributedSimulator {
 public:
  DistributedSimulator(const HomologicalProgram& prog, const AdmmConfig& cfg)
      : prog_(prog), cfg_(cfg), rng_(cfg.seed) {
    const auto& g = prog.sheaf().graph();
    mailboxes_.resize(g.edge_count());
    for (EdgeId e = 0; e < g.edge_count(); ++e) mailboxes_[e].edge = e;
    order_.resize(g.vertex_count());
    std::iota(order_.begin(), order_.end(), VertexId{0});
  }

  DistributedResult run(const std::optional<Cochain0>& x0) {
    cfg_.validate();
    const auto& sheaf = prog_.sheaf();
    const auto& g = sheaf.graph();
    const IterateState init = initial_state(prog_, x0);

    agents_.clear();
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
      AgentNode a;
      a.id = v;
      a.x = init.x.block(v);
      a.objective = prog_.objective(v);
      for (EdgeId eid : g.incident(v)) {
        const Side side = g.edge(eid).tail == v ? Side::Tail : Side::Head;
        const auto m = static_cast<Eigen::Index>(sheaf.edge_dim(eid));
        a.edges.push_back({eid, side, &sheaf.map(eid, side), Vector::Zero(m), Vector::Zero(m), Vector::Zero(m),
                           Vector::Zero(m), Vector::Zero(m)});
      }
      agents_.push_back(std::move(a));
    }

    DistributedResult out;
    // Setup round: exchange restrictions, tail initializes z = delta x^0, y = 0.
    begin_round(0);
    exchange_states();
    for_each_agent([&](AgentNode& a) {
      for (auto& r : a.edges) {
        if (r.side != Side::Tail) continue;
        r.delta = r.own_restricted - r.neighbor_restricted;
        r.z = r.delta;
        r.y = Vector::Zero(r.z.size());
      }
    });
    broadcast_duals();
    out.logs.push_back(end_round());

    kernel::StopRule stop(cfg_, prog_.mode());
    IterateState best = gather();
    double best_primal = std::numeric_limits<double>::infinity();

    for (std::size_t k = 1; k <= cfg_.max_iters; ++k) {
      begin_round(k);
      const Cochain0 x_prev = gather_x();
      const Cochain1 z_prev = gather_z();

      // Local primal update: only the agent's own records are used.
      for_each_agent([&](AgentNode& a) {
        std::vector<kernel::EdgeTerm> terms;
        terms.reserve(a.edges.size());
        for (const auto& r : a.edges)
          terms.push_back({r.map, kernel::edge_target(r.side, r.neighbor_restricted, r.z, r.y)});
        a.x = kernel::vertex_update(a.objective, terms, a.x, cfg_.rho);
      });

      exchange_states();

      // Edge update and dual update at the tail agent.
      for_each_agent([&](AgentNode& a) {
        for (auto& r : a.edges) {
          if (r.side != Side::Tail) continue;
          r.delta = r.own_restricted - r.neighbor_restricted;
          const Vector v = r.delta + r.y;
          const Vector z_new = kernel::edge_update(prog_.potential(r.edge), v, r.z, cfg_.rho,
                                                   cfg_.inner_diffusion_steps, cfg_.inner_step);
          r.y = r.y + r.delta - z_new;
          r.z = z_new;
        }
      });
      broadcast_duals();
      out.logs.push_back(end_round());

      // Observer-side residuals (a monitoring reduction, not agent communication).
      const IterateState cur = gather();
      Cochain1 dx = sheaf.zero_cochain1();
      for (const auto& a : agents_)
        for (const auto& r : a.edges)
          if (r.side == Side::Tail) dx.block(r.edge) = r.delta;
      Residuals res;
      res.primal = (dx - cur.z).norm();
      res.dual = cfg_.rho * (cur.z - z_prev).norm();
      res.step = (cur.x - x_prev).norm();
      IterationRecord rec{k, res.primal, res.dual, res.step, kernel::split_objective(prog_, cur.x, cur.z),
                          std::nullopt};
      if (cfg_.snapshot_every > 0 && k % cfg_.snapshot_every == 0) rec.snapshot = cur;
      out.trace.records.push_back(std::move(rec));
      if (res.primal < best_primal) {
        best_primal = res.primal;
        best = cur;
      }
      if (auto status = stop.update(res)) {
        out.trace.status = *status;
        break;
      }
    }
    out.final_state = out.trace.status == SolveStatus::Infeasible ? best : gather();
    out.x = out.final_state.x;
    return out;
  }

  const std::vector<AgentNode>& agents() const { return agents_; }

 private:
  // Agents within a phase run in a seed-dependent order; phase results must not depend on it.
  template <class F>
  void for_each_agent(F&& f) {
    std::shuffle(order_.begin(), order_.end(), rng_);
    for (VertexId v : order_) f(agents_[v]);
  }

  void begin_round(std::size_t round) {
    log_ = RoundLog{};
    log_.round = round;
    log_.read_sets.assign(agents_.size(), {});
  }

  RoundLog end_round() {
    for (auto& mb : mailboxes_) mb.clear();
    for (auto& rs : log_.read_sets) {
      std::sort(rs.begin(), rs.end());
      rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
    }
    return std::move(log_);
  }

  void post(EdgeId e, Side recipient, MailMessage msg) {
    ++log_.messages;
    log_.bytes += msg.bytes();
    mailboxes_[e].slot_for(recipient) = std::move(msg);
  }

  const MailMessage& read(const AgentNode& reader, EdgeId e, Side slot) {
    log_.read_sets[reader.id].push_back(e);
    const auto& m = mailboxes_[e].slot_for(slot);
    if (!m) throw std::logic_error("distributed simulator: empty mailbox slot read");
    return *m;
  }

  void exchange_states() {
    for_each_agent([&](AgentNode& a) {
      for (auto& r : a.edges) {
        r.own_restricted = (*r.map) * a.x;
        post(r.edge, r.side == Side::Tail ? Side::Head : Side::Tail, {MailMessage::Kind::State, r.own_restricted, {}, {}});
      }
    });
    for_each_agent([&](AgentNode& a) {
      for (auto& r : a.edges) r.neighbor_restricted = read(a, r.edge, r.side).state;
    });
  }

  void broadcast_duals() {
    for_each_agent([&](AgentNode& a) {
      for (auto& r : a.edges)
        if (r.side == Side::Tail) post(r.edge, Side::Head, {MailMessage::Kind::Dual, {}, r.z, r.y});
    });
    for_each_agent([&](AgentNode& a) {
      for (auto& r : a.edges) {
        if (r.side != Side::Head) continue;
        const auto& m = read(a, r.edge, Side::Head);
        r.z = m.z;
        r.y = m.y;
      }
    });
  }

  Cochain0 gather_x() const {
    Cochain0 x = prog_.sheaf().zero_cochain0();
    for (const auto& a : agents_) x.block(a.id) = a.x;
    return x;
  }

  Cochain1 gather_z() const {
    Cochain1 z = prog_.sheaf().zero_cochain1();
    for (const auto& a : agents_)
      for (const auto& r : a.edges)
        if (r.side == Side::Tail) z.block(r.edge) = r.z;
    return z;
  }

  IterateState gather() const {
    IterateState s{gather_x(), gather_z(), prog_.sheaf().zero_cochain1()};
    for (const auto& a : agents_)
      for (const auto& r : a.edges)
        if (r.side == Side::Tail) s.y.block(r.edge) = r.y;
    return s;
  }

  const HomologicalProgram& prog_;
  AdmmConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<AgentNode> agents_;
  std::vector<EdgeMailbox> mailboxes_;
  std::vector<VertexId> order_;
  RoundLog log_;
};

inline DistributedResult run_distributed(const HomologicalProgram& prog, const AdmmConfig& cfg = {},
                                         const std::optional<Cochain0>& x0 = std::nullopt) {
  return DistributedSimulator(prog, cfg).run(x0);
}

}  // namespace sheafcoord
