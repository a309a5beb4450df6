#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "sheafcoord/cohomology.hpp"
#include "sheafcoord/operators.hpp"

using namespace sheafcoord;

namespace {

CellularSheaf sign_triangle() { return CellularSheaf::sign(Graph::cycle(3)); }

Cochain0 scalars(const CellularSheaf& s, std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) x(i++) = a;
  return s.cochain0(x);
}

}  // namespace

TEST(Graph, RejectsInvalidEdges) {
  EXPECT_THROW(Graph(3, {{0, 3}}), std::invalid_argument);
  EXPECT_THROW(Graph(3, {{1, 1}}), std::invalid_argument);
  EXPECT_THROW(Graph(3, {{0, 1}, {1, 0}}), std::invalid_argument);
  EXPECT_THROW(Graph(0, {}), std::invalid_argument);
  Graph g(3, {{2, 0}, {0, 1}});
  EXPECT_EQ(g.edge(0).tail, 2u);
  EXPECT_EQ(g.edge(0).head, 0u);
  EXPECT_EQ(g.edge(1).id, 1u);
  EXPECT_EQ(g.incident(0), (std::vector<EdgeId>{0, 1}));
}

TEST(ValidateSheaf, ConstantPathIsOk) {
  EXPECT_TRUE(validate_sheaf(CellularSheaf::constant(Graph::path(2))).ok());
}

TEST(ValidateSheaf, ReportsReshapedRestriction) {
  std::vector<std::array<LinearMap, 2>> maps{{LinearMap::scalar(1.0), LinearMap(2, 1, std::vector<double>{1.0, 0.0})}};
  CellularSheaf bad(Graph::path(2), {1, 1}, {1}, maps);
  const auto report = validate_sheaf(bad);
  ASSERT_EQ(report.violations.size(), 1u);
  const auto& v = report.violations[0];
  EXPECT_EQ(v.edge, 0u);
  EXPECT_EQ(v.side, Side::Head);
  EXPECT_EQ(v.expected_rows, 1u);
  EXPECT_EQ(v.actual_rows, 2u);
  EXPECT_NE(v.describe().find("edge 0 head"), std::string::npos);
  EXPECT_FALSE(bad.shapes_valid());
  EXPECT_THROW(apply_coboundary(bad, bad.zero_cochain0()), ShapeError);
}

TEST(ValidateSheaf, SignTriangleIsOk) { EXPECT_TRUE(validate_sheaf(sign_triangle()).ok()); }

TEST(Coboundary, SignTriangleExample) {
  const auto s = sign_triangle();
  const auto y = apply_coboundary(s, scalars(s, {1, -1, 1}));
  EXPECT_EQ(y.flat(), (Vector(3) << 0, 0, 2).finished());
}

TEST(Coboundary, ConstantVectorIsClosed) {
  std::mt19937_64 rng(7);
  const auto s = CellularSheaf::constant(oracle::random_connected_graph(rng, 6, 0.4), 2);
  Cochain0 x = s.zero_cochain0();
  for (VertexId v = 0; v < s.vertex_count(); ++v) x.block(v) << 1.5, -2.0;
  EXPECT_EQ(apply_coboundary(s, x).max_abs(), 0.0);
}

TEST(Coboundary, DenseMatchesDefinition) {
  EXPECT_EQ(coboundary_dense(CellularSheaf::constant(Graph::path(2))), (Matrix(1, 2) << 1, -1).finished());
  EXPECT_EQ(coboundary_dense(sign_triangle()), (Matrix(3, 3) << 1, 1, 0, 0, 1, 1, 1, 0, 1).finished());

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = oracle::random_sheaf(rng, oracle::random_graph(rng, 5, 0.5), 4);
    EXPECT_LT((coboundary_dense(s) - oracle::coboundary_by_definition(s)).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Coboundary, MixedStalkDimsMatchesDenseProduct) {
  std::mt19937_64 rng(3);
  Graph g(3, {{0, 1}, {1, 2}, {0, 2}});
  std::vector<std::size_t> vd{2, 1, 3}, ed{2, 1, 2};
  std::vector<std::array<LinearMap, 2>> maps;
  for (const auto& e : g.edges())
    maps.push_back({LinearMap(oracle::random_matrix(rng, ed[e.id], vd[e.tail])),
                    LinearMap(oracle::random_matrix(rng, ed[e.id], vd[e.head]))});
  CellularSheaf s(g, vd, ed, maps);
  const Matrix d = oracle::coboundary_by_definition(s);
  for (int k = 0; k < 100; ++k) {
    const auto x = s.cochain0(oracle::random_vector(rng, s.c0_dim()));
    EXPECT_LT((apply_coboundary(s, x).flat() - d * x.flat()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Coboundary, RejectsMismatchedCochain) {
  const auto s = sign_triangle();
  const auto other = CellularSheaf::constant(Graph::cycle(3), 2);
  EXPECT_THROW(apply_coboundary(s, other.zero_cochain0()), DimensionError);
  EXPECT_THROW(apply_laplacian(s, other.zero_cochain0()), DimensionError);
}

TEST(Laplacian, PathThreeExample) {
  const auto s = CellularSheaf::constant(Graph::path(3));
  EXPECT_EQ(apply_laplacian(s, scalars(s, {3, 1, 4})).flat(), (Vector(3) << 2, -5, 3).finished());
  EXPECT_EQ(laplacian_dense(s), (Matrix(3, 3) << 1, -1, 0, -1, 2, -1, 0, -1, 1).finished());
}

TEST(Laplacian, SignTriangleDense) {
  EXPECT_EQ(laplacian_dense(sign_triangle()), (Matrix(3, 3) << 2, 1, 1, 1, 2, 1, 1, 1, 2).finished());
}

TEST(Laplacian, BlockFormulaEqualsDeltaTransposeDelta) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const auto s = oracle::random_sheaf(rng, oracle::random_graph(rng, 1 + trial % 6, 0.6), 4);
    const Matrix d = oracle::coboundary_by_definition(s);
    const Matrix lap = laplacian_dense(s);
    EXPECT_LT((lap - d.transpose() * d).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((lap - lap.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    const auto x = s.cochain0(oracle::random_vector(rng, s.c0_dim()));
    EXPECT_LT((apply_laplacian(s, x).flat() - lap * x.flat()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Laplacian, TrivialSheafIsDegreeMinusAdjacency) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Graph g = oracle::random_graph(rng, 8, 0.4);
    Matrix da = Matrix::Zero(8, 8);
    for (const auto& e : g.edges()) {
      da(e.tail, e.tail) += 1;
      da(e.head, e.head) += 1;
      da(e.tail, e.head) -= 1;
      da(e.head, e.tail) -= 1;
    }
    EXPECT_EQ(laplacian_dense(CellularSheaf::constant(g)), da);
  }
}

TEST(Dirichlet, EnergyExamplesAndDualFormula) {
  const auto s = CellularSheaf::constant(Graph::path(2));
  EXPECT_EQ(dirichlet_energy(s, scalars(s, {3, 1})), 4.0);
  EXPECT_EQ(dirichlet_energy(sign_triangle(), sign_triangle().zero_cochain0()), 0.0);

  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto sh = oracle::random_sheaf(rng, oracle::random_graph(rng, 6, 0.5), 4);
    const auto x = sh.cochain0(oracle::random_vector(rng, sh.c0_dim()));
    const double e = dirichlet_energy(sh, x);
    const double q = x.dot(apply_laplacian(sh, x));
    EXPECT_GE(e, 0.0);
    EXPECT_LE(std::abs(e - q), 1e-10 * std::max(1.0, e));
  }
}

TEST(Cohomology, ConstantFourCycle) {
  const auto s = CellularSheaf::constant(Graph::cycle(4));
  const auto b = global_section_basis(s);
  ASSERT_EQ(b.dimension, 1u);
  EXPECT_LT((b.basis[0].flat().cwiseAbs() - Vector::Constant(4, 0.5)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(h1_dimension(s), 1u);
}

TEST(Cohomology, SignTriangleHasNoSections) {
  EXPECT_EQ(global_section_basis(sign_triangle()).dimension, 0u);
  // det of the 3x3 coboundary is 2, so delta is onto and H1 vanishes as well.
  EXPECT_EQ(oracle::rank_by_row_reduction(oracle::coboundary_by_definition(sign_triangle())), 3u);
  EXPECT_EQ(h1_dimension(sign_triangle()), 0u);
}

TEST(Cohomology, SignFourCycleMatchesRowReduction) {
  const auto s = CellularSheaf::sign(Graph::cycle(4));
  const std::size_t oracle_rank = oracle::rank_by_row_reduction(oracle::coboundary_by_definition(s));
  ASSERT_EQ(oracle_rank, 3u);
  EXPECT_EQ(global_section_basis(s).dimension, 4u - oracle_rank);
  EXPECT_EQ(h1_dimension(s), 4u - oracle_rank);
}

TEST(Cohomology, ConstantCycleAndTree) {
  for (std::size_t n = 3; n <= 8; ++n) {
    EXPECT_EQ(h1_dimension(CellularSheaf::constant(Graph::cycle(n))), 1u) << n;
    EXPECT_EQ(h0_dimension(CellularSheaf::constant(Graph::cycle(n))), 1u) << n;
  }
  std::mt19937_64 rng(2);
  const Graph tree = oracle::random_connected_graph(rng, 7, 0.0);
  ASSERT_EQ(tree.edge_count(), 6u);
  EXPECT_EQ(h1_dimension(CellularSheaf::constant(tree)), 0u);
}

TEST(Cohomology, DisconnectedGraphDecomposesPerComponent) {
  Graph g(5, {{0, 1}, {2, 3}, {3, 4}});
  EXPECT_EQ(h0_dimension(CellularSheaf::constant(g, 2)), 4u);
  EXPECT_EQ(global_section_basis(CellularSheaf::constant(g, 2)).dimension, 4u);
  Graph lonely(1, {});
  EXPECT_EQ(global_section_basis(CellularSheaf::constant(lonely, 3)).dimension, 3u);
}

TEST(Cohomology, RankNullityAndBasisProperties) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = oracle::random_sheaf(rng, oracle::random_graph(rng, 1 + trial % 6, 0.5), 4);
    const Matrix d = oracle::coboundary_by_definition(s);
    const std::size_t rank = oracle::rank_by_row_reduction(d, 1e-9);
    const auto basis = global_section_basis(s);
    EXPECT_EQ(basis.dimension + coboundary_rank(s), s.c0_dim());
    EXPECT_EQ(coboundary_rank(s), rank);
    EXPECT_EQ(h1_dimension(s), s.c1_dim() - rank);
    const double op = d.rows() ? Eigen::JacobiSVD<Matrix>(d).singularValues()(0) : 0.0;
    for (std::size_t a = 0; a < basis.dimension; ++a) {
      EXPECT_LE(apply_coboundary(s, basis.basis[a]).norm(), kDefaultNullTol * std::max(op, 1.0));
      EXPECT_LT(apply_laplacian(s, basis.basis[a]).max_abs(), 1e-9);
      for (std::size_t b = 0; b < basis.dimension; ++b)
        EXPECT_NEAR(basis.basis[a].dot(basis.basis[b]), a == b ? 1.0 : 0.0, 1e-10);
    }
  }
}

TEST(Cohomology, IsGlobalSection) {
  const auto c = CellularSheaf::constant(Graph::cycle(5));
  EXPECT_TRUE(is_global_section(c, c.cochain0(Vector::Constant(5, 3.25)), 1e-12));
  const auto edge = CellularSheaf::sign(Graph::path(2));
  EXPECT_TRUE(is_global_section(edge, scalars(edge, {1, -1}), 1e-12));
  EXPECT_FALSE(is_global_section(sign_triangle(), scalars(sign_triangle(), {1, -1, 1}), 1e-9));
  EXPECT_THROW(is_global_section(c, c.zero_cochain0(), 0.0), std::invalid_argument);
}

TEST(Orientation, ReversalFlipsDeltaButNotLaplacian) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = oracle::random_sheaf(rng, oracle::random_graph(rng, 5, 0.6), 3);
    const auto r = s.reversed();
    const auto x = s.cochain0(oracle::random_vector(rng, s.c0_dim()));
    EXPECT_LT((apply_coboundary(s, x) + apply_coboundary(r, x)).max_abs(), 1e-15);
    EXPECT_LT((laplacian_dense(s) - laplacian_dense(r)).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(h0_dimension(s), h0_dimension(r));
    EXPECT_EQ(h1_dimension(s), h1_dimension(r));
  }
}
