#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <set>

#include "nbgof/eig.hpp"
#include "nbgof/errors.hpp"
#include "nbgof/estimate.hpp"
#include "support.hpp"

using namespace nbgof;
using nbgof::testing::cliques;
using nbgof::testing::complete_graph;
using nbgof::testing::sym_eigenvalues;

namespace {

double accuracy(const std::vector<int>& labels, const std::vector<int>& truth) {
  std::size_t agree = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) agree += labels[i] == truth[i];
  const double a = static_cast<double>(agree) / static_cast<double>(labels.size());
  return std::max(a, 1.0 - a);
}

BlockModelSpec strong_two_block(std::int64_t half) {
  const std::int64_t sizes[] = {half, half};
  Eigen::Matrix2d q;
  q << 0.1, 0.01, 0.01, 0.1;
  return BlockModelSpec::contiguous(sizes, q);
}

// E[A] with self-loops kept, two blocks of sizes n1 = p n and n - n1.
Eigen::MatrixXd expected_adjacency(double p, double k, double delta, int n, double p0) {
  const double x = 2 * p * (1 - p) / (p * p + k * (1 - p) * (1 - p));
  const int n1 = static_cast<int>(std::lround(p * n));
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const bool a = i < n1, b = j < n1;
      if (a && b) {
        m(i, j) = p0 * (1 + x * delta);
      } else if (!a && !b) {
        m(i, j) = p0 * (1 + k * x * delta);
      } else {
        m(i, j) = p0 * (1 - delta);
      }
    }
  }
  return m;
}

// The two eigenvalues of largest magnitude, descending.
std::pair<double, double> top_two(const Eigen::MatrixXd& m) {
  auto ev = sym_eigenvalues(m);
  std::sort(ev.begin(), ev.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
  return {std::max(ev[0], ev[1]), std::min(ev[0], ev[1])};
}

}  // namespace

TEST(EstimateP, Examples) {
  EXPECT_DOUBLE_EQ(estimate_p(Graph::from_edges(4, {})), 0.0);
  EXPECT_DOUBLE_EQ(estimate_p(complete_graph(4)), 1.0);
  EXPECT_DOUBLE_EQ(estimate_p(Graph::from_edges(4, std::vector<Edge>{{0, 1}, {1, 2}, {0, 2}})), 0.5);
  EXPECT_THROW(estimate_p(Graph::from_edges(1, {})), ParameterError);
}

TEST(KMeans, SeparatedClusters) {
  Eigen::MatrixXd x(6, 1);
  x << 0.0, 0.1, 0.2, 5.0, 5.1, 5.2;
  const auto r = kmeans(x, 2, RngSeed{1, 0});
  EXPECT_EQ(r.labels, (std::vector<int>{0, 0, 0, 1, 1, 1}));
  EXPECT_NEAR(r.inertia, 4 * 0.01, 1e-12);
  EXPECT_THROW(kmeans(x, 7, RngSeed{}), ParameterError);
}

TEST(SpectralLabels, DisjointCliquesRecovered) {
  const Graph g = cliques({10, 10});
  std::vector<int> truth(20, 0);
  for (int i = 10; i < 20; ++i) truth[i] = 1;
  for (auto e : {Embedding::kAdjacencyTopK, Embedding::kCenteredNbHalf, Embedding::kCenteredAdjacency}) {
    EXPECT_EQ(spectral_labels(g, 2, e), truth) << to_string(e);
  }
}

TEST(SpectralLabels, StrongSbmAccuracy) {
  const auto spec = strong_two_block(250);
  int good_adj = 0, good_cnb = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Graph g = sample_sbm(spec, RngSeed{s, 31});
    good_adj += accuracy(spectral_labels(g, 2, Embedding::kAdjacencyTopK), spec.memberships) > 0.95;
    good_cnb += accuracy(spectral_labels(g, 2, Embedding::kCenteredNbHalf), spec.memberships) > 0.95;
  }
  EXPECT_EQ(good_adj, 50);
  EXPECT_EQ(good_cnb, 50);
}

TEST(SpectralLabels, NoSignalAtDeltaZero) {
  const auto spec = build_q_delta(QDeltaKind::kBalanced, 250, 250, std::nullopt, 0.01, 0.0);
  double total = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Graph g = sample_sbm(spec, RngSeed{s, 32});
    total += label_correlation(spectral_labels(g, 2, Embedding::kCenteredNbHalf), spec.memberships);
  }
  EXPECT_LT(total / 10, 0.2);
}

TEST(SpectralLabels, Errors) {
  const Graph g = cliques({5, 5, 5});
  EXPECT_THROW(spectral_labels(g, 3, Embedding::kCenteredNbHalf), ParameterError);
  EXPECT_THROW(spectral_labels(g, 1, Embedding::kAdjacencyTopK), ParameterError);
  EXPECT_EQ(spectral_labels(g, 3, Embedding::kAdjacencyTopK), (std::vector<int>{0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2}));
  EXPECT_EQ(parse_embedding("cnb"), Embedding::kCenteredNbHalf);
  EXPECT_THROW(parse_embedding("x"), ParameterError);
}

TEST(SpectralLabels, PermutationEquivariant) {
  const auto spec = strong_two_block(100);
  const Graph g = sample_sbm(spec, RngSeed{4, 33});
  std::vector<NodeId> perm(200);
  std::iota(perm.rbegin(), perm.rend(), 0);  // reversal
  std::vector<Edge> e;
  for (const auto& [u, v] : g.edges()) e.emplace_back(perm[u], perm[v]);
  const Graph h = Graph::from_edges(200, e);
  const auto a = spectral_labels(g, 2, Embedding::kAdjacencyTopK);
  const auto b = spectral_labels(h, 2, Embedding::kAdjacencyTopK);
  std::vector<int> bp(200);
  for (int i = 0; i < 200; ++i) bp[i] = b[perm[i]];
  EXPECT_EQ(label_correlation(a, bp), 1.0);
}

TEST(EstimateBlocks, Examples) {
  const Graph g = cliques({10, 10});
  const auto one = estimate_blocks(g, std::vector<int>(20, 0));
  EXPECT_DOUBLE_EQ(one.qhat()(0, 0), estimate_p(g));

  std::vector<int> truth(20, 0);
  for (int i = 10; i < 20; ++i) truth[i] = 1;
  const auto two = estimate_blocks(g, truth);
  EXPECT_DOUBLE_EQ(two.qhat()(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(two.qhat()(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(two.p_clamped(0, 15), 1.0 / (20.0 * 19.0));
  EXPECT_DOUBLE_EQ(two.p_clamped(0, 1), 1.0 - 1.0 / (20.0 * 19.0));
  EXPECT_TRUE(two.empty_pairs().empty());

  const Graph h = complete_graph(4);
  const auto gap = estimate_blocks(h, std::vector<int>{0, 2, 0, 2});
  EXPECT_FALSE(gap.empty_pairs().empty());
}

TEST(EstimateBlocks, BinomialAccuracy) {
  const std::int64_t sizes[] = {1000, 1000};
  Eigen::Matrix2d q;
  q << 0.02, 0.005, 0.005, 0.03;
  const auto spec = BlockModelSpec::contiguous(sizes, q);
  const Graph g = sample_sbm(spec, RngSeed{8, 34});
  const auto est = estimate_blocks(g, spec.memberships);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const double pairs = (a == b) ? 1000.0 * 999.0 / 2.0 : 1e6;
      EXPECT_LT(std::abs(est.qhat()(a, b) - q(a, b)), 5 * std::sqrt(q(a, b) * (1 - q(a, b)) / pairs));
    }
  }
}

TEST(Sequential, ErCalibration) {
  KEstimateConfig cfg;
  int ones = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Graph g = sample_er(500, 0.05, RngSeed{s, 35});
    cfg.kmax = 2;  // K0 = 1 only: K-hat = 1 iff the first test accepts.
    ones += estimate_k_sequential(g, cfg).k_hat == 1;
  }
  EXPECT_GE(ones, 90);
}

TEST(Sequential, TwoCliquesAndCap) {
  const Graph g = cliques({50, 50});
  KEstimateConfig cfg;
  cfg.null_reps = 200;
  const auto r = estimate_k_sequential(g, cfg);
  EXPECT_EQ(r.k_hat, 2);
  EXPECT_FALSE(r.truncated);
  ASSERT_EQ(r.trace.size(), 2u);
  EXPECT_TRUE(r.trace[0].reject);
  EXPECT_FALSE(r.trace[1].reject);

  cfg.kmax = 1;
  const auto capped = estimate_k_sequential(sample_er(100, 0.1, RngSeed{1, 1}), cfg);
  EXPECT_EQ(capped.k_hat, 1);
  EXPECT_TRUE(capped.truncated);

  cfg.stat = TestStatKind::parse("nb");
  EXPECT_THROW(estimate_k_sequential(g, cfg), ParameterError);
}

TEST(Recursive, ErSingleLeaf) {
  KEstimateConfig cfg;
  cfg.alpha = 0.001;
  int ones = 0;
  for (std::uint64_t s = 0; s < 40; ++s) {
    const Graph g = sample_er(500, 0.05, RngSeed{s, 36});
    ones += estimate_k_recursive(g, cfg).num_leaves() == 1;
  }
  EXPECT_GE(ones, 38);
}

TEST(Recursive, TwoCliquesAndStopRule) {
  KEstimateConfig cfg;
  const Dendrogram d = estimate_k_recursive(cliques({50, 50}), cfg);
  EXPECT_EQ(d.num_leaves(), 2);
  const auto labels = d.leaf_labels(100);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(labels[i], i < 50 ? 0 : 1);

  // Leaves partition the node set.
  std::set<NodeId> seen;
  for (int leaf : d.leaves()) {
    for (NodeId v : d.nodes[leaf].members) EXPECT_TRUE(seen.insert(v).second);
  }
  EXPECT_EQ(seen.size(), 100u);

  const auto json = nlohmann::json::parse(d.to_json());
  EXPECT_EQ(json["children"].size(), 2u);
  EXPECT_TRUE(json["reject"].get<bool>());

  const Dendrogram small = estimate_k_recursive(complete_graph(10), cfg);
  EXPECT_EQ(small.num_leaves(), 1);
  EXPECT_FALSE(small.nodes[0].tested);

  cfg.min_size = 1;
  EXPECT_THROW(estimate_k_recursive(complete_graph(10), cfg), ParameterError);
}

TEST(Recursive, Deterministic) {
  KEstimateConfig cfg;
  cfg.null = NullSource::kMonteCarlo;
  cfg.null_reps = 100;
  const auto spec = build_q_delta(QDeltaKind::kBalanced, 100, 100, std::nullopt, 0.1, 0.7);
  const Graph g = sample_sbm(spec, RngSeed{2, 37});
  EXPECT_EQ(estimate_k_recursive(g, cfg).to_json(), estimate_k_recursive(g, cfg).to_json());
}

TEST(CountNb, Examples) {
  int ones = 0;
  for (std::uint64_t s = 0; s < 20; ++s) ones += count_nb_informative(sample_er(500, 0.05, RngSeed{s, 38})) == 1;
  EXPECT_GE(ones, 18);

  const auto spec = build_q_delta(QDeltaKind::kBalanced, 250, 250, std::nullopt, 0.01, 0.6);
  int twos = 0;
  for (std::uint64_t s = 0; s < 11; ++s) twos += count_nb_informative(sample_sbm(spec, RngSeed{s, 39})) == 2;
  EXPECT_GE(twos, 6);

  EXPECT_GE(count_nb_informative(cliques({50, 50})), 2);
}

TEST(ExpectationEigs, ClosedFormMatchesDense) {
  const int n = 10;
  const double p0 = 0.08;
  for (double p : {0.5, 0.6, 0.7, 0.8, 0.9}) {
    const double keq = p * p / ((1 - p) * (1 - p));
    for (double k : {0.0, 0.5, 1.0, 2.0, 4.0, keq}) {
      for (double delta = 0.1; delta < 0.95; delta += 0.1) {
        const auto cf = expectation_eigs_closed_form(p, k, delta, n, p0);
        const Eigen::MatrixXd ea = expected_adjacency(p, k, delta, n, p0);
        const auto [a1, a2] = top_two(ea);
        const auto [c1, c2] = top_two(ea - Eigen::MatrixXd::Constant(n, n, p0));
        auto rel = [](double x, double y) { return std::abs(x - y) / std::max(1.0, std::abs(y)); };
        EXPECT_LE(rel(cf.l1_ea, a1), 1e-9);
        EXPECT_LE(rel(cf.l2_ea, a2), 1e-9);
        EXPECT_LE(rel(cf.l1_centered, c1), 1e-9);
        EXPECT_LE(rel(cf.l2_centered, c2), 1e-9);
        EXPECT_GE(cf.l1_centered, cf.l2_ea - 1e-9);
      }
    }
  }
  const auto eq = expectation_eigs_closed_form(0.5, 1.0, 0.4, 100, 0.05);
  EXPECT_NEAR(eq.l2_ea, 100 * 0.05 * 0.4, 1e-12);
  EXPECT_NEAR(eq.l1_centered, 100 * 0.05 * 0.4, 1e-12);
  const auto imb = expectation_eigs_closed_form(0.5, 0.0, 0.5, 100, 0.05);
  EXPECT_GT(imb.l1_centered - imb.l2_ea, 0.0);
  const auto null = expectation_eigs_closed_form(0.7, 2.0, 0.0, 100, 0.05);
  EXPECT_NEAR(null.l2_ea, 0.0, 1e-12);
  EXPECT_NEAR(null.l1_centered, 0.0, 1e-12);
}

TEST(BlockMatrixEigs, Examples) {
  Eigen::Matrix2d b;
  b << 0.7, 0.2, 0.2, 0.7;
  const std::int64_t sizes[] = {4, 4};
  const double ell[] = {1.0, 1.0};
  const auto s = block_matrix_eigs(b, sizes, ell);
  auto r = s.reduced;
  std::sort(r.rbegin(), r.rend());
  EXPECT_NEAR(r[0], 0.7 * 3 + 4 * 0.2, 1e-12);
  EXPECT_NEAR(r[1], 0.7 * 3 - 4 * 0.2, 1e-12);
  std::int64_t mult = 0;
  for (const auto& [v, m] : s.repeated) {
    EXPECT_NEAR(v, -0.7, 1e-12);
    mult += m;
  }
  EXPECT_EQ(mult, 6);

  Eigen::MatrixXd one = Eigen::MatrixXd::Constant(1, 1, 0.3);
  const std::int64_t n1[] = {5};
  const double l0[] = {0.0};
  const auto full = block_matrix_eigs(one, n1, l0).expand();
  EXPECT_NEAR(full[0], 1.5, 1e-12);
  for (std::size_t i = 1; i < 5; ++i) EXPECT_NEAR(full[i], 0.0, 1e-12);
}

TEST(BlockMatrixEigs, RandomInstancesMatchDense) {
  for (std::uint64_t t = 0; t < 30; ++t) {
    CounterRng rng(RngSeed{t, 40});
    Eigen::Matrix3d b;
    for (int i = 0; i < 3; ++i) {
      for (int j = i; j < 3; ++j) b(i, j) = b(j, i) = rng.uniform() * 2 - 1;
    }
    const std::int64_t sizes[] = {1 + static_cast<std::int64_t>(rng.below(6)), 1 + static_cast<std::int64_t>(rng.below(6)),
                                  1 + static_cast<std::int64_t>(rng.below(6))};
    const double ell[] = {rng.uniform() * 3, rng.uniform() * 3, rng.uniform() * 3};
    const auto a = block_matrix_eigs(b, sizes, ell).expand();
    const auto d = sym_eigenvalues(assemble_block_matrix(b, sizes, ell));
    ASSERT_EQ(a.size(), d.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], d[i], 1e-10);
  }
}

TEST(LabelCorrelation, Examples) {
  const std::vector<int> a{0, 0, 1, 1, 0, 1};
  std::vector<int> flipped(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) flipped[i] = 1 - a[i];
  EXPECT_DOUBLE_EQ(label_correlation(a, a), 1.0);
  EXPECT_DOUBLE_EQ(label_correlation(a, flipped), 1.0);
  EXPECT_THROW(label_correlation(std::vector<int>{0, 2}, std::vector<int>{0, 1}), ParameterError);

  CounterRng rng(RngSeed{1, 41});
  std::vector<int> x(1000), y(1000);
  for (int i = 0; i < 1000; ++i) {
    x[i] = static_cast<int>(rng.below(2));
    y[i] = static_cast<int>(rng.below(2));
  }
  EXPECT_LT(label_correlation(x, y), 0.1);
}
