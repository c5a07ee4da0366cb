#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "nbgof/errors.hpp"
#include "nbgof/graph.hpp"
#include "nbgof/rng.hpp"
#include "support.hpp"

using namespace nbgof;
using nbgof::testing::cliques;
using nbgof::testing::complete_graph;

namespace {

void expect_valid(const Graph& g) {
  std::int64_t sum = 0;
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    for (NodeId j : g.neighbors(i)) {
      EXPECT_NE(i, j);
      EXPECT_TRUE(g.has_edge(j, i));
    }
    sum += g.degree(i);
  }
  EXPECT_EQ(sum, 2 * g.num_edges());
}

}  // namespace

TEST(Rng, StreamsArePureFunctionsOfSeed) {
  CounterRng a(RngSeed{7, 3}), b(RngSeed{7, 3}), c(RngSeed{7, 4});
  for (int i = 0; i < 10; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
  }
  CounterRng u(RngSeed{1, 1});
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1.0);
    EXPECT_LT(u.below(7), 7u);
  }
}

TEST(SampleEr, ExtremeProbabilities) {
  const Graph e = sample_er(4, 0.0, RngSeed{1, 0});
  EXPECT_EQ(e.num_edges(), 0);
  const Graph k = sample_er(4, 1.0, RngSeed{1, 0});
  EXPECT_EQ(k.num_edges(), 6);
  EXPECT_THROW(sample_er(4, 1.5, RngSeed{}), ParameterError);
  EXPECT_THROW(sample_er(4, -0.1, RngSeed{}), ParameterError);
}

TEST(SampleEr, EdgeCountWithinFiveSigma) {
  const double mean = 124750 * 0.01;
  const double sd = std::sqrt(124750 * 0.01 * 0.99);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Graph g = sample_er(500, 0.01, RngSeed{s, 0});
    expect_valid(g);
    EXPECT_LT(std::abs(static_cast<double>(g.num_edges()) - mean), 5 * sd);
  }
}

TEST(SampleEr, Deterministic) {
  EXPECT_EQ(sample_er(300, 0.05, RngSeed{9, 2}), sample_er(300, 0.05, RngSeed{9, 2}));
  EXPECT_FALSE(sample_er(300, 0.05, RngSeed{9, 2}) == sample_er(300, 0.05, RngSeed{9, 3}));
}

TEST(SampleSbm, OneBlockMatchesEr) {
  const std::int64_t sizes[] = {200};
  const auto spec = BlockModelSpec::contiguous(sizes, Eigen::MatrixXd::Constant(1, 1, 0.05));
  EXPECT_EQ(sample_sbm(spec, RngSeed{4, 1}), sample_er(200, 0.05, RngSeed{4, 1}));
}

TEST(SampleSbm, DeterministicBlocks) {
  const std::int64_t sizes[] = {3, 3};
  const auto spec = BlockModelSpec::contiguous(sizes, Eigen::Matrix2d::Identity());
  const Graph g = sample_sbm(spec, RngSeed{1, 0});
  EXPECT_EQ(g.num_edges(), 6);
  EXPECT_EQ(g, cliques({3, 3}));
}

TEST(SampleSbm, NullFamilyMatchesErMean) {
  const auto spec = build_q_delta(QDeltaKind::kBalanced, 100, 60, std::nullopt, 0.05, 0.0);
  const double pairs = 160.0 * 159.0 / 2.0;
  double total = 0.0;
  for (std::uint64_t r = 0; r < 200; ++r) {
    const Graph g = sample_sbm(spec, RngSeed{11, r});
    total += static_cast<double>(g.num_edges());
  }
  const double sd = std::sqrt(200 * pairs * 0.05 * 0.95);
  EXPECT_LT(std::abs(total - 200 * pairs * 0.05), 5 * sd);
}

TEST(BuildQDelta, Examples) {
  auto b0 = build_q_delta(QDeltaKind::kBalanced, 250, 250, std::nullopt, 0.01, 0.0);
  EXPECT_DOUBLE_EQ(b0.q(0, 0), 0.01);
  EXPECT_DOUBLE_EQ(b0.q(0, 1), 0.01);
  EXPECT_DOUBLE_EQ(b0.q(1, 1), 0.01);

  auto b = build_q_delta(QDeltaKind::kBalanced, 250, 250, std::nullopt, 0.01, 0.6);
  EXPECT_NEAR(b.q(0, 1), 0.004, 1e-15);
  EXPECT_NEAR(b.q(0, 0), 0.01 * (1 + 125000.0 / 124500.0 * 0.6), 1e-15);
  EXPECT_NEAR(b.q(1, 1), b.q(0, 0), 1e-15);

  auto u = build_q_delta(QDeltaKind::kUnbalanced, 250, 250, std::nullopt, 0.01, 0.6);
  EXPECT_DOUBLE_EQ(u.q(0, 0), 0.01);
  EXPECT_NEAR(u.q(1, 1), 0.01 * (1 + 500.0 / 249.0 * 0.6), 1e-15);
}

TEST(BuildQDelta, EqualDegreeRows) {
  for (double d : {0.0, 0.3, 0.7}) {
    const std::int64_t n1 = 400, n2 = 100;
    auto s = build_q_delta(QDeltaKind::kEqualDegree, n1, n2, std::nullopt, 0.08, d);
    const double deg1 = (n1 - 1) * s.q(0, 0) + n2 * s.q(0, 1);
    const double deg2 = n1 * s.q(0, 1) + (n2 - 1) * s.q(1, 1);
    EXPECT_NEAR(deg1, 499 * 0.08, 1e-10);
    EXPECT_NEAR(deg2, 499 * 0.08, 1e-10);
  }
}

TEST(BuildQDelta, AverageDensityIsP0) {
  for (auto kind : {QDeltaKind::kBalanced, QDeltaKind::kUnbalanced, QDeltaKind::kEqualDegree}) {
    for (double d : {0.0, 0.2, 0.4, 0.6, 0.8}) {
      const std::int64_t n1 = 70, n2 = 30;
      auto s = build_q_delta(kind, n1, n2, std::nullopt, 0.05, d);
      const double n = n1 + n2;
      const double sum = n1 * (n1 - 1) * s.q(0, 0) + n2 * (n2 - 1) * s.q(1, 1) + 2.0 * n1 * n2 * s.q(0, 1);
      EXPECT_NEAR(sum / (n * (n - 1)), 0.05, 1e-12) << to_string(kind) << " delta " << d;
    }
  }
}

TEST(BuildQDelta, ThreeBlockAndErrors) {
  auto t = build_q_delta(QDeltaKind::kThreeBlock, 100, 100, 50, 0.05, 0.5);
  ASSERT_EQ(t.num_blocks(), 3);
  EXPECT_DOUBLE_EQ(t.q(0, 2), 0.3 * 0.05);
  EXPECT_DOUBLE_EQ(t.q(2, 2), 0.05);
  EXPECT_THROW(build_q_delta(QDeltaKind::kThreeBlock, 100, 100, std::nullopt, 0.05, 0.5), ParameterError);
  EXPECT_THROW(build_q_delta(QDeltaKind::kBalanced, 100, 100, 50, 0.05, 0.5), ParameterError);
  EXPECT_THROW(build_q_delta(QDeltaKind::kUnbalanced, 250, 10, std::nullopt, 0.5, 0.9), ParameterError);
  EXPECT_THROW(build_q_delta(QDeltaKind::kBalanced, 10, 10, std::nullopt, 0.1, 1.0), ParameterError);
}

TEST(Degrees, Examples) {
  EXPECT_EQ(degrees(Graph::from_edges(3, {})), (std::vector<std::int64_t>{0, 0, 0}));
  EXPECT_EQ(degrees(complete_graph(4)), (std::vector<std::int64_t>{3, 3, 3, 3}));
  EXPECT_EQ(degrees(cliques({3, 3})), std::vector<std::int64_t>(6, 2));
}

TEST(EdgeList, ParseTriangle) {
  std::istringstream in("0 1\n1 2\n2 0\n");
  const auto r = parse_edge_list(in);
  EXPECT_EQ(r.graph, complete_graph(3));
}

TEST(EdgeList, DropsDuplicatesAndSelfLoops) {
  std::istringstream in("0 1\n1 0\n0 0\n");
  const auto r = parse_edge_list(in);
  EXPECT_EQ(r.graph.num_edges(), 1);
  EXPECT_EQ(r.report.dropped_duplicates, 1u);
  EXPECT_EQ(r.report.dropped_self_loops, 1u);
}

TEST(EdgeList, RelabelsGaps) {
  std::istringstream in("# comment\n10 30\n30 20\n");
  const auto r = parse_edge_list(in);
  EXPECT_EQ(r.graph.num_nodes(), 3);
  EXPECT_TRUE(r.report.relabeled);
  EXPECT_EQ(r.report.original_ids, (std::vector<std::int64_t>{10, 20, 30}));
  EXPECT_TRUE(r.graph.has_edge(0, 2));
  EXPECT_TRUE(r.graph.has_edge(1, 2));
}

TEST(EdgeList, MalformedLineReportsLineNumber) {
  std::istringstream in("0 1\n1 x\n");
  try {
    parse_edge_list(in);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(EdgeList, RoundTrip) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Graph g = sample_er(60, 0.05, RngSeed{s, 0});
    std::ostringstream out;
    write_edge_list(g, out);
    std::istringstream in(out.str());
    EXPECT_EQ(parse_edge_list(in).graph, g);
    std::ostringstream again;
    write_edge_list(parse_edge_list(*std::make_unique<std::istringstream>(out.str())).graph, again);
    EXPECT_EQ(again.str(), out.str());
  }
}

TEST(Components, LargestComponent) {
  const Graph k3 = complete_graph(3);
  EXPECT_EQ(largest_connected_component(k3).graph, k3);

  const Graph g = Graph::from_edges(5, std::vector<Edge>{{0, 1}, {2, 3}, {3, 4}, {2, 4}});
  const auto s = largest_connected_component(g);
  EXPECT_EQ(s.graph, k3);
  EXPECT_EQ(s.to_original, (std::vector<NodeId>{2, 3, 4}));

  const auto tie = largest_connected_component(cliques({3, 3}));
  EXPECT_EQ(tie.to_original, (std::vector<NodeId>{0, 1, 2}));

  EXPECT_EQ(largest_connected_component(Graph{}).graph.num_nodes(), 0);
}
