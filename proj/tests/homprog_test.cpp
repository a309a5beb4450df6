#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "sheafcoord/admm.hpp"

using namespace sheafcoord;

namespace {

Vector scalar(double a) { return Vector::Constant(1, a); }

HomologicalProgram pinned_consensus(std::size_t n, double c) {
  std::vector<NodeObjective> f(n, objective::Zero{});
  f[0] = objective::FixedValue{scalar(c)};
  return HomologicalProgram::hard(CellularSheaf::constant(Graph::path(n)), f);
}

HomologicalProgram formation_program() {
  const auto s = CellularSheaf::constant(Graph::cycle(3), 2);
  const std::vector<Vector> p{(Vector(2) << 0, 0).finished(), (Vector(2) << 1, 0).finished(),
                              (Vector(2) << 0.5, std::sqrt(3.0) / 2).finished()};
  std::vector<EdgePotential> u;
  for (const auto& e : s.graph().edges()) u.push_back(potential::Quadratic{p[e.tail] - p[e.head], 1.0});
  return HomologicalProgram(s, std::vector<NodeObjective>(3, objective::Zero{}), u, ProgramMode::Soft);
}

// Strongly convex soft program: quadratic anchors on every vertex, smooth potentials on every edge.
HomologicalProgram random_soft_program(std::mt19937_64& rng, std::size_t max_dim, bool allow_huber = true) {
  const auto s = oracle::random_well_conditioned_sheaf(rng, oracle::random_connected_graph(rng, 5, 0.3), max_dim);
  std::uniform_real_distribution<double> w(0.5, 2.0);
  std::vector<NodeObjective> f;
  for (VertexId v = 0; v < s.vertex_count(); ++v)
    f.push_back(objective::Quadratic{oracle::random_vector(rng, s.vertex_dim(v), 3), w(rng)});
  std::vector<EdgePotential> u;
  for (EdgeId e = 0; e < s.edge_count(); ++e) {
    const Vector b = oracle::random_vector(rng, s.edge_dim(e), 2);
    if (allow_huber && e % 3 == 2) u.push_back(potential::Huber{b, w(rng), 1.0});
    else u.push_back(potential::Quadratic{b, w(rng)});
  }
  return HomologicalProgram(s, f, u, ProgramMode::Soft);
}

// Residual tolerances two orders below the solution accuracy asserted in the tests.
AdmmConfig tight() {
  AdmmConfig cfg;
  cfg.primal_tol = cfg.dual_tol = 1e-10;
  cfg.max_iters = 100000;
  return cfg;
}

}  // namespace

TEST(HomologicalProgram, RejectsInconsistentPrograms) {
  const auto s = CellularSheaf::constant(Graph::path(3));
  EXPECT_THROW(HomologicalProgram(s, {objective::Zero{}}, {potential::ZeroIndicator{}, potential::ZeroIndicator{}},
                                  ProgramMode::HardConstraint),
               std::invalid_argument);
  EXPECT_THROW(HomologicalProgram(s, std::vector<NodeObjective>(3, objective::Zero{}),
                                  {potential::ZeroIndicator{}, potential::Quadratic{scalar(0), 1.0}},
                                  ProgramMode::HardConstraint),
               std::invalid_argument);
  EXPECT_THROW(HomologicalProgram::hard(s, {objective::Zero{}, objective::FixedValue{Vector::Zero(2)},
                                            objective::Zero{}}),
               DimensionError);
}

TEST(ProgramObjective, Examples) {
  const auto s = CellularSheaf::constant(Graph::path(4));
  std::vector<EdgePotential> u(3, potential::Quadratic{scalar(0), 2.0});
  HomologicalProgram consensus(s, std::vector<NodeObjective>(4, objective::Zero{}), u, ProgramMode::Soft);
  EXPECT_EQ(program_objective(consensus, s.cochain0(Vector::Constant(4, 3.5))), 0.0);

  const auto hard = HomologicalProgram::hard(s, std::vector<NodeObjective>(4, objective::Zero{}));
  EXPECT_EQ(program_objective(hard, s.cochain0((Vector(4) << 1, 1, 2, 2).finished())), kInf);
  EXPECT_EQ(program_objective(hard, s.cochain0(Vector::Constant(4, -1))), 0.0);
}

TEST(ProgramObjective, MatchesRawRecomputation) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const auto prog = random_soft_program(rng, 3);
    const auto& s = prog.sheaf();
    const auto x = s.cochain0(oracle::random_vector(rng, s.c0_dim(), 3));
    const Vector y = oracle::coboundary_by_definition(s) * x.flat();
    double expect = 0;
    for (VertexId v = 0; v < s.vertex_count(); ++v) {
      const auto& q = std::get<objective::Quadratic>(prog.objective(v));
      expect += 0.5 * q.weight * (x.block(v) - q.reference).squaredNorm();
    }
    Eigen::Index off = 0;
    for (EdgeId e = 0; e < s.edge_count(); ++e) {
      const auto m = static_cast<Eigen::Index>(s.edge_dim(e));
      const Vector ye = y.segment(off, m);
      off += m;
      if (const auto* q = std::get_if<potential::Quadratic>(&prog.potential(e))) {
        expect += 0.5 * q->stiffness * (ye - q->target).squaredNorm();
      } else {
        const auto& h = std::get<potential::Huber>(prog.potential(e));
        const double r = (ye - h.target).norm();
        expect += r <= h.threshold ? 0.5 * h.stiffness * r * r : h.stiffness * h.threshold * (r - 0.5 * h.threshold);
      }
    }
    EXPECT_NEAR(program_objective(prog, x), expect, 1e-10 * std::max(1.0, expect));
  }
}

TEST(Feasibility, Examples) {
  const auto constant = HomologicalProgram::hard(CellularSheaf::constant(Graph::cycle(4)),
                                                 std::vector<NodeObjective>(4, objective::Zero{}));
  const auto a = check_feasibility(constant);
  ASSERT_TRUE(a.feasible);
  EXPECT_TRUE(is_global_section(constant.sheaf(), *a.witness, 1e-9));

  std::vector<NodeObjective> f(3, objective::Zero{});
  f[0] = objective::FixedValue{scalar(1)};
  const auto sign = HomologicalProgram::hard(CellularSheaf::sign(Graph::cycle(3)), f);
  const auto b = check_feasibility(sign);
  EXPECT_FALSE(b.feasible);
  EXPECT_GT(b.residual, 0.1);

  std::mt19937_64 rng(103);
  const auto s = oracle::random_sheaf(rng, oracle::random_connected_graph(rng, 5, 0.3), 3);
  const Vector target = oracle::coboundary_by_definition(s) * oracle::random_vector(rng, s.c0_dim());
  std::vector<EdgePotential> u;
  const auto tc = s.cochain1(target);
  for (EdgeId e = 0; e < s.edge_count(); ++e) u.push_back(potential::Quadratic{tc.block(e), 1.0});
  HomologicalProgram soft(s, std::vector<NodeObjective>(5, objective::Zero{}), u, ProgramMode::Soft);
  const auto c = check_feasibility(soft);
  EXPECT_TRUE(c.feasible);
  EXPECT_TRUE(c.targets_in_image);
}

TEST(Feasibility, PinnedConsensusWitness) {
  const auto prog = pinned_consensus(5, 7.0);
  const auto r = check_feasibility(prog);
  ASSERT_TRUE(r.feasible);
  EXPECT_LT((r.witness->flat() - Vector::Constant(5, 7.0)).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_EQ(program_objective(prog, *r.witness), 0.0);
}

TEST(Residuals, Examples) {
  const auto prog = pinned_consensus(3, 1.0);
  const auto& s = prog.sheaf();
  IterateState a{s.cochain0((Vector(3) << 1, 2, 4).finished()), s.zero_cochain1(), s.zero_cochain1()};
  a.z = apply_coboundary(s, a.x);
  EXPECT_EQ(compute_residuals(prog, a, a, 1.0).primal, 0.0);
  EXPECT_EQ(compute_residuals(prog, a, a, 1.0).dual, 0.0);

  std::mt19937_64 rng(107);
  IterateState b{s.cochain0(oracle::random_vector(rng, 3)), s.cochain1(oracle::random_vector(rng, 2)),
                 s.cochain1(oracle::random_vector(rng, 2))};
  const auto r = compute_residuals(prog, a, b, 2.5);
  const Vector dx = (Vector(2) << b.x.flat()(0) - b.x.flat()(1), b.x.flat()(1) - b.x.flat()(2)).finished();
  EXPECT_NEAR(r.primal, (dx - b.z.flat()).norm(), 1e-15);
  EXPECT_NEAR(r.dual, 2.5 * (b.z.flat() - a.z.flat()).norm(), 1e-15);
  EXPECT_EQ(b.lambda(2.5).flat(), 2.5 * b.y.flat());
}

TEST(Admm, TwoNodeHardConsensus) {
  const auto s = CellularSheaf::constant(Graph::path(2));
  const auto prog = HomologicalProgram::hard(s, {objective::Quadratic{scalar(1.0), 1.0}, objective::Quadratic{scalar(4.0), 1.0}});
  const auto r = admm_solve(prog, tight());
  ASSERT_EQ(r.trace.status, SolveStatus::Converged);
  EXPECT_NEAR(r.x.flat()(0), 2.5, 1e-8);
  EXPECT_NEAR(r.x.flat()(1), 2.5, 1e-8);
}

TEST(Admm, PinnedConsensus) {
  const auto r = admm_solve(pinned_consensus(5, 7.0), tight());
  ASSERT_EQ(r.trace.status, SolveStatus::Converged);
  EXPECT_LE(r.trace.records.size(), 10000u);
  EXPECT_LT((r.x.flat() - Vector::Constant(5, 7.0)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Admm, FormationTriangle) {
  const auto prog = formation_program();
  const auto r = admm_solve(prog, tight());
  ASSERT_EQ(r.trace.status, SolveStatus::Converged);
  EXPECT_LT((apply_coboundary(prog.sheaf(), r.x) - prog.targets()).max_abs(), 1e-6);
  EXPECT_LT(program_objective(prog, r.x), 1e-10);
}

TEST(Admm, FormationGauge) {
  const auto prog = formation_program();
  const auto& s = prog.sheaf();
  std::mt19937_64 rng(109);
  const auto x0 = s.cochain0(oracle::random_vector(rng, 6));
  Cochain0 shift = s.zero_cochain0();
  for (VertexId v = 0; v < 3; ++v) shift.block(v) << 3.0, -1.5;
  const auto a = admm_solve(prog, tight(), x0);
  const auto b = admm_solve(prog, tight(), x0 + shift);
  EXPECT_LT((b.x - a.x - shift).max_abs(), 1e-6);
}

TEST(Admm, DefaultTolerancesBoundTheResiduals) {
  const auto r = admm_solve(pinned_consensus(5, 7.0));
  ASSERT_EQ(r.trace.status, SolveStatus::Converged);
  EXPECT_LT((r.x.flat() - Vector::Constant(5, 7.0)).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Admm, TraceShape) {
  AdmmConfig cfg;
  cfg.snapshot_every = 10;
  const auto r = admm_solve(pinned_consensus(4, 2.0), cfg);
  ASSERT_FALSE(r.trace.records.empty());
  for (std::size_t k = 0; k < r.trace.records.size(); ++k) {
    EXPECT_EQ(r.trace.records[k].iter, k + 1);
    EXPECT_EQ(r.trace.records[k].snapshot.has_value(), (k + 1) % 10 == 0);
  }
  const auto& last = r.trace.records.back();
  EXPECT_LT(last.primal_residual, cfg.primal_tol);
  EXPECT_LT(last.dual_residual, cfg.dual_tol);
}

TEST(Admm, OptimalityCertificateOnScalarPrograms) {
  std::mt19937_64 rng(113);
  for (int trial = 0; trial < 8; ++trial) {
    const auto prog = random_soft_program(rng, 1);
    AdmmConfig cfg;
    const auto r = admm_solve(prog, cfg);
    ASSERT_EQ(r.trace.status, SolveStatus::Converged) << trial;
    const auto& s = prog.sheaf();
    const Vector g = oracle::fd_gradient([&](const Vector& x) { return program_objective(prog, s.cochain0(x)); },
                                         r.x.flat());
    EXPECT_LT(g.cwiseAbs().maxCoeff(), 50 * cfg.primal_tol) << trial;
  }
}

TEST(Admm, ConvexityProbe) {
  std::mt19937_64 rng(127);
  for (int trial = 0; trial < 5; ++trial) {
    const auto prog = random_soft_program(rng, 3);
    const auto r = admm_solve(prog);
    ASSERT_EQ(r.trace.status, SolveStatus::Converged);
    const double best = program_objective(prog, r.x);
    for (int k = 0; k < 50; ++k) {
      Vector u = oracle::random_vector(rng, prog.sheaf().c0_dim());
      u /= u.norm();
      EXPECT_LE(best, program_objective(prog, prog.sheaf().cochain0(r.x.flat() + 1e-3 * u)) + 1e-9);
    }
  }
}

TEST(Admm, MinimizerIsRhoInvariant) {
  std::mt19937_64 rng(131);
  for (int trial = 0; trial < 5; ++trial) {
    const auto prog = random_soft_program(rng, 3);
    std::vector<Vector> xs;
    for (double rho : {0.5, 1.0, 5.0}) {
      AdmmConfig cfg = tight();
      cfg.rho = rho;
      const auto r = admm_solve(prog, cfg);
      ASSERT_EQ(r.trace.status, SolveStatus::Converged) << rho;
      xs.push_back(r.x.flat());
    }
    EXPECT_LT((xs[0] - xs[1]).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((xs[1] - xs[2]).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Admm, HardRunsEndOnGlobalSections) {
  std::mt19937_64 rng(137);
  for (int trial = 0; trial < 6; ++trial) {
    const auto s = CellularSheaf::constant(oracle::random_connected_graph(rng, 6, 0.3), 2);
    std::vector<NodeObjective> f;
    for (VertexId v = 0; v < 6; ++v) {
      if (v % 2) f.push_back(objective::Quadratic{oracle::random_vector(rng, 2, 4), 1.0});
      else f.push_back(objective::Box{Vector::Constant(2, -1.0), Vector::Constant(2, 1.0)});
    }
    const auto prog = HomologicalProgram::hard(s, f);
    ASSERT_TRUE(check_feasibility(prog).feasible);
    AdmmConfig cfg;
    const auto r = admm_solve(prog, cfg);
    ASSERT_EQ(r.trace.status, SolveStatus::Converged);
    EXPECT_TRUE(is_global_section(s, r.x, 10 * cfg.primal_tol));
  }
}

TEST(Admm, DiffusionEdgeUpdateMatchesClosedForm) {
  std::mt19937_64 rng(139);
  for (int trial = 0; trial < 5; ++trial) {
    const auto prog = random_soft_program(rng, 2, false);
    AdmmConfig closed = tight();
    AdmmConfig diffusion = tight();
    diffusion.inner_diffusion_steps = 200;
    const auto a = admm_solve(prog, closed);
    const auto b = admm_solve(prog, diffusion);
    ASSERT_EQ(a.trace.status, SolveStatus::Converged);
    ASSERT_EQ(b.trace.status, SolveStatus::Converged);
    EXPECT_LT((a.x - b.x).max_abs(), 1e-5);
  }
}

TEST(Admm, InfeasibleHardProgramIsReported) {
  std::vector<NodeObjective> f(3, objective::Zero{});
  f[0] = objective::FixedValue{scalar(1)};
  const auto prog = HomologicalProgram::hard(CellularSheaf::sign(Graph::cycle(3)), f);
  const auto r = admm_solve(prog);
  EXPECT_EQ(r.trace.status, SolveStatus::Infeasible);
  EXPECT_LT(r.trace.records.size(), 10000u);
  EXPECT_TRUE(r.x.flat().allFinite());
}

TEST(Admm, SingleVertexMinimizesItsObjective) {
  const auto prog = HomologicalProgram::hard(CellularSheaf::constant(Graph(1, {}), 2),
                                             {objective::Quadratic{(Vector(2) << 3, -1).finished(), 2.0}});
  const auto r = admm_solve(prog);
  EXPECT_EQ(r.trace.status, SolveStatus::Converged);
  EXPECT_LT((r.x.flat() - (Vector(2) << 3, -1).finished()).norm(), 1e-12);
}

TEST(Admm, RejectsBadConfig) {
  AdmmConfig cfg;
  cfg.rho = 0;
  EXPECT_THROW(admm_solve(pinned_consensus(3, 1), cfg), std::invalid_argument);
}
