#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Eigenvalues>

#include "ginr/error.hpp"
#include "ginr/graph.hpp"
#include "ginr/io.hpp"
#include "ginr/rng.hpp"
#include "test_util.hpp"

namespace ginr {
namespace {

using testing::TempDir;
using testing::random_connected_graph;
using testing::write_file;

void expect_consistent(const Graph& g) {
  EXPECT_NO_THROW(g.validate());
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    double row = 0.0;
    const auto nb = g.neighbors(i);
    const auto w = g.neighbor_weights(i);
    for (std::size_t e = 0; e < nb.size(); ++e) {
      row += w[e];
      const auto back = g.edge_weight(nb[e], i);
      ASSERT_TRUE(back.has_value());
      EXPECT_EQ(*back, w[e]);
    }
    EXPECT_DOUBLE_EQ(g.degree(i), row);
  }
}

TEST(MeshIo, SingleTriangle) {
  const Graph g = parse_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  EXPECT_EQ(g.num_nodes(), 3u);
  EXPECT_EQ(g.num_edges(), 3u);
  EXPECT_EQ(g.faces().size(), 1u);
  expect_consistent(g);
}

TEST(MeshIo, TetrahedronHasSixEdges) {
  const Graph g = parse_mesh(
      "# tetrahedron\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\n"
      "f 1 3 2\nf 1 2 4\nf 2 3 4\nf 3 1 4\n");
  EXPECT_EQ(g.num_nodes(), 4u);
  EXPECT_EQ(g.num_edges(), 6u);
  expect_consistent(g);
}

TEST(MeshIo, FaceSuffixesIgnored) {
  const Graph g = parse_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2/2/2 3//3\n");
  EXPECT_EQ(g.num_edges(), 3u);
}

TEST(MeshIo, RejectsUnknownRecordWithLine) {
  try {
    parse_mesh("v 0 0 0\nv 1 0 0\nvn 0 0 1\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(MeshIo, RejectsQuadAndDanglingIndex) {
  EXPECT_THROW(parse_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3 4\n"), ParseError);
  EXPECT_THROW(parse_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 7\n"), ParseError);
}

TEST(MeshIo, SaveLoadRoundTrip) {
  TempDir dir("mesh");
  const Graph g = generate_icosphere(1);
  save_mesh(g, dir / "m.obj");
  const Graph h = load_mesh(dir / "m.obj");
  EXPECT_EQ(h.hash(), g.hash());
  ASSERT_EQ(h.positions().size(), g.positions().size());
  for (std::size_t i = 0; i < g.positions().size(); ++i) EXPECT_EQ(h.positions()[i], g.positions()[i]);
}

TEST(EdgeList, PathFromTwoLines) {
  const Graph g = parse_edge_list("0 1\n1 2\n");
  EXPECT_EQ(g.num_nodes(), 3u);
  EXPECT_EQ(g.num_edges(), 2u);
  EXPECT_EQ(g.hash(), generate_path(3).hash());
}

TEST(EdgeList, WeightStoredBothWays) {
  const Graph g = parse_edge_list("0 1 2.5\n");
  EXPECT_EQ(g.edge_weight(0, 1), 2.5);
  EXPECT_EQ(g.edge_weight(1, 0), 2.5);
}

TEST(EdgeList, ConflictingDuplicateIsError) {
  EXPECT_THROW(parse_edge_list("1 0 3.0\n0 1 2.0\n"), ParseError);
}

TEST(EdgeList, IdenticalDuplicateCollapses) {
  const Graph g = parse_edge_list("0 1 2.0\n1 0 2.0 # again\n\n");
  EXPECT_EQ(g.num_edges(), 1u);
}

TEST(EdgeList, RejectsSelfLoopAndBadWeight) {
  EXPECT_THROW(parse_edge_list("0 0\n"), ParseError);
  EXPECT_THROW(parse_edge_list("0 1 -1\n"), ParseError);
  EXPECT_THROW(parse_edge_list("0 x\n"), ParseError);
}

TEST(EdgeList, LoadFromFile) {
  TempDir dir("edges");
  write_file(dir / "g.txt", "0 1\n1 2 0.5\n");
  const Graph g = load_edge_list(dir / "g.txt");
  EXPECT_EQ(g.edge_weight(1, 2), 0.5);
}

TEST(Signal, CsvColumn) {
  TempDir dir("sig");
  write_file(dir / "s.csv", "0\n1\n0\n");
  const SignalField f = load_signal(dir / "s.csv", 3);
  ASSERT_EQ(f.rows(), 3u);
  ASSERT_EQ(f.channels(), 1u);
  EXPECT_EQ(f.values(0, 0), 0.0);
  EXPECT_EQ(f.values(1, 0), 1.0);
  EXPECT_EQ(f.values(2, 0), 0.0);
}

TEST(Signal, CsvWithHeader) {
  TempDir dir("sig");
  write_file(dir / "s.csv", "a,b\n1,2\n3,4\n");
  const SignalField f = load_signal(dir / "s.csv", 2);
  EXPECT_EQ(f.channels(), 2u);
  EXPECT_EQ(f.values(1, 1), 4.0);
}

TEST(Signal, RowCountMismatchIsError) {
  TempDir dir("sig");
  write_file(dir / "s.csv", "0\n1\n");
  EXPECT_THROW(load_signal(dir / "s.csv", 3), ContractError);
}

TEST(Signal, BinaryRoundTripBitIdentical) {
  TempDir dir("sig");
  const SignalField f(testing::random_matrix(100, 2, 5, 1e3));
  save_signal(f, dir / "s.gsig");
  const SignalField g = load_signal(dir / "s.gsig", 100);
  ASSERT_EQ(g.values.rows(), 100);
  ASSERT_EQ(g.values.cols(), 2);
  EXPECT_TRUE((g.values.array() == f.values.array()).all());
}

TEST(Signal, CsvRoundTripExact) {
  TempDir dir("sig");
  const SignalField f(testing::random_matrix(50, 3, 6));
  save_signal(f, dir / "s.csv");
  const SignalField g = load_signal(dir / "s.csv", 50);
  EXPECT_TRUE((g.values.array() == f.values.array()).all());
}

TEST(Laplacian, PathThreeCombinatorial) {
  const Eigen::MatrixXd l = laplacian(generate_path(3), LaplacianKind::combinatorial).to_dense();
  Eigen::Matrix3d expected;
  expected << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  EXPECT_EQ(l, Eigen::MatrixXd(expected));
}

TEST(Laplacian, PathThreeSymmetricSpectrum) {
  const Eigen::MatrixXd l = laplacian(generate_path(3), LaplacianKind::symmetric).to_dense();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l);
  EXPECT_NEAR(es.eigenvalues()(0), 0.0, 1e-14);
  EXPECT_NEAR(es.eigenvalues()(1), 1.0, 1e-14);
  EXPECT_NEAR(es.eigenvalues()(2), 2.0, 1e-14);
}

TEST(Laplacian, ConstantVectorInNullspace) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Graph g = random_connected_graph(60, 120, seed, true);
    const CsrMatrix l = laplacian(g, LaplacianKind::combinatorial);
    const Eigen::VectorXd y = l * Eigen::VectorXd(Eigen::VectorXd::Ones(60));
    EXPECT_LE(y.cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Laplacian, CombinatorialIsPositiveSemidefinite) {
  const Graph g = random_connected_graph(200, 600, 11, true);
  const CsrMatrix l = laplacian(g, LaplacianKind::combinatorial);
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd x(200);
    for (auto& v : x) v = rng.normal();
    x.normalize();
    EXPECT_GE(x.dot(l * x), -1e-12);
  }
}

TEST(Laplacian, SymmetricSpectrumInZeroTwo) {
  const Graph g = random_connected_graph(80, 200, 4, true);
  const CsrMatrix l = laplacian(g, LaplacianKind::symmetric);
  EXPECT_TRUE(l.is_symmetric(1e-15));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l.to_dense());
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
  EXPECT_LE(es.eigenvalues().maxCoeff(), 2.0 + 1e-12);
}

TEST(Laplacian, RandomWalkRowsSumToZero) {
  const Graph g = random_connected_graph(30, 40, 8, true);
  const CsrMatrix l = laplacian(g, LaplacianKind::random_walk);
  const Eigen::VectorXd y = l * Eigen::VectorXd(Eigen::VectorXd::Ones(30));
  EXPECT_LE(y.cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(parse_laplacian_kind("rw"), LaplacianKind::random_walk);
  EXPECT_EQ(parse_laplacian_kind("sym"), LaplacianKind::symmetric);
  EXPECT_THROW(parse_laplacian_kind("bogus"), ContractError);
}

TEST(Sbm, ExtremesGiveTwoCliques) {
  const auto [g, labels] = generate_sbm({4, 0.0, 1.0, 0});
  EXPECT_EQ(g.num_edges(), 2u);
  EXPECT_TRUE(g.edge_weight(0, 1).has_value());
  EXPECT_TRUE(g.edge_weight(2, 3).has_value());
  EXPECT_EQ(labels.values.col(0), Eigen::Vector4d(0, 0, 1, 1));
  EXPECT_EQ(count_components(g), 2u);
}

TEST(Sbm, IntraDegreeWithinFiveSigma) {
  const auto [g, labels] = generate_sbm({1000, 0.1, 0.5, 0});
  expect_consistent(g);
  const double mean = 0.5 * 499;
  // Average of 1000 intra-degrees: each edge counted twice, so the variance of the mean is
  // bounded by twice that of independent binomials.
  const double sigma = std::sqrt(2.0 * 499 * 0.25 / 1000.0);
  double total = 0.0;
  for (std::size_t i = 0; i < 1000; ++i) {
    for (std::size_t j : g.neighbors(i))
      if (labels.values(i, 0) == labels.values(j, 0)) total += 1.0;
  }
  EXPECT_NEAR(total / 1000.0, mean, 5 * sigma);
}

TEST(Sbm, DeterministicInSeed) {
  const auto a = generate_sbm({200, 0.1, 0.3, 42}).first;
  const auto b = generate_sbm({200, 0.1, 0.3, 42}).first;
  const auto c = generate_sbm({200, 0.1, 0.3, 43}).first;
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_TRUE(std::equal(a.col_indices().begin(), a.col_indices().end(), b.col_indices().begin(),
                         b.col_indices().end()));
  EXPECT_NE(a.hash(), c.hash());
}

TEST(Sbm, RejectsBadParameters) {
  EXPECT_THROW(generate_sbm({5, 0.1, 0.3, 0}), ContractError);
  EXPECT_THROW(generate_sbm({10, 1.5, 0.3, 0}), ContractError);
}

TEST(Generators, PathTwoIsOneEdge) {
  const Graph g = generate_path(2);
  EXPECT_EQ(g.num_nodes(), 2u);
  EXPECT_EQ(g.num_edges(), 1u);
}

TEST(Generators, IcosahedronCounts) {
  const Graph g = generate_icosphere(0);
  EXPECT_EQ(g.num_nodes(), 12u);
  EXPECT_EQ(g.num_edges(), 30u);
  EXPECT_EQ(g.faces().size(), 20u);
  expect_consistent(g);
}

TEST(Generators, IcosphereVertexCounts) {
  for (std::size_t s = 0; s <= 4; ++s) {
    const Graph g = generate_icosphere(s);
    const std::size_t p = std::size_t{1} << (2 * s);
    EXPECT_EQ(g.num_nodes(), 10 * p + 2);
    EXPECT_EQ(g.num_edges(), 30 * p);
    for (const Vec3& x : g.positions()) EXPECT_NEAR(std::hypot(x[0], x[1], x[2]), 1.0, 1e-14);
  }
  EXPECT_EQ(generate_icosphere(2).num_nodes(), 162u);
}

TEST(Subdivision, SingleTriangle) {
  const Graph g = loop_subdivide(parse_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n"));
  EXPECT_EQ(g.num_nodes(), 6u);
  EXPECT_EQ(g.faces().size(), 4u);
  EXPECT_EQ(g.num_edges(), 9u);
  // Boundary mask keeps corner 0 at 3/4 * p0 + 1/8 * (p1 + p2).
  EXPECT_NEAR(g.positions()[0][0], 0.125, 1e-15);
  EXPECT_NEAR(g.positions()[0][1], 0.125, 1e-15);
}

TEST(Subdivision, MatchesIcosphereCounts) {
  const Graph a = loop_subdivide(generate_icosphere(1));
  const Graph b = generate_icosphere(2);
  EXPECT_EQ(a.num_nodes(), b.num_nodes());
  EXPECT_EQ(a.faces().size(), b.faces().size());
  EXPECT_EQ(a.num_edges(), b.num_edges());
}

TEST(Subdivision, EdgesSplitThroughMidpoints) {
  const Graph g = generate_icosphere(1);
  const Graph h = loop_subdivide(g);
  const auto edges = g.edges();
  ASSERT_EQ(h.num_nodes(), g.num_nodes() + edges.size());
  expect_consistent(h);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const std::size_t m = g.num_nodes() + e;
    EXPECT_TRUE(h.edge_weight(edges[e].u, m).has_value());
    EXPECT_TRUE(h.edge_weight(m, edges[e].v).has_value());
    EXPECT_FALSE(h.edge_weight(edges[e].u, edges[e].v).has_value());
  }
}

TEST(Subdivision, RequiresFaces) {
  EXPECT_THROW(loop_subdivide(generate_path(4)), ContractError);
}

TEST(Components, Counts) {
  const std::vector<Edge> two = {{0, 1, 1.0}, {2, 3, 1.0}};
  EXPECT_EQ(count_components(Graph::from_edges(4, two)), 2u);
  EXPECT_EQ(count_components(generate_path(100)), 1u);
  const auto ids = connected_components(Graph::from_edges(5, two));
  EXPECT_EQ(ids, (std::vector<std::size_t>{0, 0, 1, 1, 2}));
}

TEST(Graph, RandomGraphsConsistent) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) expect_consistent(random_connected_graph(50, 80, seed, true));
}

TEST(Graph, LoadGraphSpecs) {
  EXPECT_EQ(load_graph("path:7").num_nodes(), 7u);
  EXPECT_EQ(load_graph("icosphere:1").num_nodes(), 42u);
  EXPECT_EQ(load_graph("sbm:20:0.1:0.5:3").hash(), generate_sbm({20, 0.1, 0.5, 3}).first.hash());
}

TEST(Ply, WritesVerticesAndFaces) {
  TempDir dir("ply");
  const Graph g = generate_icosphere(2);
  export_ply(g, SignalField(Eigen::MatrixXd::Constant(162, 1, 0.5)), dir / "x.ply");
  const std::string text = testing::read_file(dir / "x.ply");
  EXPECT_EQ(text.rfind("ply\nformat ascii 1.0\n", 0), 0u);
  EXPECT_NE(text.find("element vertex 162\n"), std::string::npos);
  EXPECT_NE(text.find("element face 320\n"), std::string::npos);
  EXPECT_NE(text.find("end_header\n"), std::string::npos);
  const std::size_t body = text.find("end_header\n") + 11;
  EXPECT_EQ(std::count(text.begin() + static_cast<std::ptrdiff_t>(body), text.end(), '\n'), 162 + 320);
}

TEST(Ply, RequiresPositions) {
  TempDir dir("ply");
  EXPECT_THROW(export_ply(generate_path(3), SignalField(Eigen::MatrixXd::Zero(3, 1)), dir / "x.ply"), ContractError);
}

}  // namespace
}  // namespace ginr
