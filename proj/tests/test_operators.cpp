#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "nbgof/eig.hpp"
#include "nbgof/errors.hpp"
#include "nbgof/operators.hpp"
#include "support.hpp"

using namespace nbgof;
using nbgof::testing::complete_graph;
using nbgof::testing::dense_eigenvalues;
using nbgof::testing::same_spectrum_mod_pm1;
using nbgof::testing::sym_eigenvalues;

namespace {

Eigen::MatrixXd explicit_centered(const Graph& g, const ModelEstimate& est) {
  const NodeId n = g.num_nodes();
  Eigen::MatrixXd a = g.dense_adjacency();
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = 0; j < n; ++j) a(i, j) = (i == j) ? 0.0 : a(i, j) - est.p(i, j);
  }
  return a;
}

Eigen::MatrixXd explicit_block(const Eigen::MatrixXd& top_left, const Eigen::VectorXd& diag_top_right) {
  const Eigen::Index n = top_left.rows();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  h.topLeftCorner(n, n) = top_left;
  h.topRightCorner(n, n) = diag_top_right.asDiagonal();
  h.bottomLeftCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
  return h;
}

Eigen::MatrixXd explicit_h(const Graph& g) {
  const Eigen::MatrixXd a = g.dense_adjacency();
  const Eigen::VectorXd d = a.rowwise().sum();
  return explicit_block(a, Eigen::VectorXd::Ones(a.rows()) - d);
}

Eigen::MatrixXd explicit_centered_h(const Graph& g, const ModelEstimate& est) {
  const Eigen::MatrixXd a = explicit_centered(g, est);
  const Eigen::VectorXd d = a.rowwise().sum();
  return explicit_block(a, Eigen::VectorXd::Ones(a.rows()) - d);
}

Eigen::MatrixXd explicit_b(const Graph& g) {
  std::vector<std::pair<NodeId, NodeId>> idx;
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    for (NodeId v : g.neighbors(u)) idx.emplace_back(u, v);
  }
  const auto m = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) {
      const auto [i, j] = idx[r];
      const auto [k, l] = idx[c];
      if (j == k && i != l) b(r, c) = 1.0;
    }
  }
  return b;
}

void expect_matvec_matches(const LinearOperator& op, const Eigen::MatrixXd& oracle, std::uint64_t seed) {
  ASSERT_EQ(op.dim(), oracle.rows());
  CounterRng rng(RngSeed{seed, 99});
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd x(op.dim());
    for (auto& v : x) v = rng.uniform() * 2.0 - 1.0;
    Eigen::VectorXd y(op.dim());
    op.apply(std::span<const double>(x.data(), x.size()), std::span<double>(y.data(), y.size()));
    EXPECT_LE((y - oracle * x).norm(), 1e-10 * x.norm());
  }
  EXPECT_LE((op.dense() - oracle).cwiseAbs().maxCoeff(), 1e-12);
}

ModelEstimate random_two_block(NodeId n, std::uint64_t seed) {
  CounterRng rng(RngSeed{seed, 5});
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (auto& l : labels) l = static_cast<int>(rng.below(2));
  labels[0] = 0;
  labels[1] = 1;
  Eigen::Matrix2d q;
  q << 0.2 + 0.5 * rng.uniform(), 0.1 * rng.uniform(), 0, 0.3 * rng.uniform();
  q(1, 0) = q(0, 1);
  return ModelEstimate::blocks(labels, q);
}

}  // namespace

TEST(CenteredAdjacency, Examples) {
  const Graph empty = Graph::from_edges(4, {});
  EXPECT_LT(centered_adjacency(empty, ModelEstimate::constant(4, 0.0))->dense().cwiseAbs().maxCoeff(), 1e-15);
  const Graph k4 = complete_graph(4);
  EXPECT_LT(centered_adjacency(k4, ModelEstimate::constant(4, 1.0))->dense().cwiseAbs().maxCoeff(), 1e-15);

  const Graph k3 = complete_graph(3);
  const auto c = centered_adjacency(k3, ModelEstimate::constant(3, 0.5));
  const Eigen::MatrixXd m = c->dense();
  EXPECT_DOUBLE_EQ(m(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(m(0, 0), 0.0);
  const auto ev = sym_eigenvalues(m);
  EXPECT_NEAR(ev[0], 1.0, 1e-12);
  EXPECT_NEAR(ev[1], -0.5, 1e-12);
  EXPECT_NEAR(ev[2], -0.5, 1e-12);
}

TEST(NormalizedAdjacency, Examples) {
  const Graph k3 = complete_graph(3);
  const Eigen::MatrixXd m = normalized_adjacency(k3, ModelEstimate::constant(3, 0.5))->dense();
  EXPECT_NEAR(m(0, 1), 0.5 / std::sqrt(2 * 0.25), 1e-14);
  EXPECT_NEAR(m(0, 1), 1.0 / std::sqrt(2.0), 1e-14);
  EXPECT_EQ(m(1, 1), 0.0);

  // sum_j Var(A-tilde_ij) = (n - 1) p (1 - p) / ((n - 1) p (1 - p)) = 1.
  const NodeId n = 50;
  const double p = 0.2;
  const auto op = normalized_adjacency(Graph::from_edges(n, {}), ModelEstimate::constant(n, p));
  const double scale = -op->dense()(0, 1) / p;  // entries -p / sqrt((n-1)p(1-p))
  EXPECT_NEAR((n - 1) * p * (1 - p) * scale * scale, 1.0, 1e-12);
}

TEST(NormalizedAdjacency, SemicircleEdge) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Graph g = sample_er(1000, 0.08, RngSeed{s, 0});
    EigOptions o;
    o.want_vectors = false;
    const double l1 = eig_leading(*normalized_adjacency(g, ModelEstimate::constant(1000, 0.08)), o)[0].real();
    EXPECT_GE(l1, 1.9);
    EXPECT_LE(l1, 2.2);
  }
}

TEST(NbOperator, TriangleSpectrum) {
  const auto ev = eig_dense(nb_operator(complete_graph(3)).dense(), false);
  ASSERT_EQ(ev.size(), 6u);
  EXPECT_NEAR(std::abs(ev[0] - Complex(1, 0)), 0.0, 1e-7);
  EXPECT_NEAR(std::abs(ev[1] - Complex(1, 0)), 0.0, 1e-7);
  const Complex w(-0.5, std::sqrt(3.0) / 2);
  int near_w = 0, near_wbar = 0;
  for (std::size_t i = 2; i < 6; ++i) {
    near_w += std::abs(ev[i] - w) < 1e-6;
    near_wbar += std::abs(ev[i] - std::conj(w)) < 1e-6;
  }
  EXPECT_EQ(near_w, 2);
  EXPECT_EQ(near_wbar, 2);
}

TEST(NbOperator, EmptyGraph) {
  const auto ev = eig_dense(nb_operator(Graph::from_edges(3, {})).dense(), false);
  int plus = 0, minus = 0;
  for (const auto& v : ev.values) {
    plus += std::abs(v - 1.0) < 1e-12;
    minus += std::abs(v + 1.0) < 1e-12;
  }
  EXPECT_EQ(plus, 3);
  EXPECT_EQ(minus, 3);
}

TEST(Operators, MatvecMatchesExplicitMatrices) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    CounterRng rng(RngSeed{s, 1});
    const NodeId n = 5 + static_cast<NodeId>(rng.below(195));
    const double p = 0.02 + 0.2 * rng.uniform();
    const Graph g = sample_er(n, p, RngSeed{s, 2});
    const ModelEstimate est = (s % 2 == 0) ? ModelEstimate::constant(n, p) : random_two_block(n, s);

    expect_matvec_matches(AdjacencyOperator(g), g.dense_adjacency(), s);
    expect_matvec_matches(*centered_adjacency(g, est), explicit_centered(g, est), s);
    expect_matvec_matches(nb_operator(g), explicit_h(g), s);
    expect_matvec_matches(centered_nb_operator(g, est), explicit_centered_h(g, est), s);

    Eigen::MatrixXd norm = explicit_centered(g, est);
    for (NodeId i = 0; i < n; ++i) {
      for (NodeId j = 0; j < n; ++j) {
        const double q = est.p_clamped(i, j);
        norm(i, j) /= std::sqrt((n - 1) * q * (1 - q));
      }
    }
    expect_matvec_matches(*normalized_adjacency(g, est), norm, s);

    const double alpha = est.alphahat();
    const auto split = rescaled_split(centered_nb_operator(g, est), alpha);
    const Eigen::MatrixXd ac = explicit_centered(g, est);
    const Eigen::VectorXd dc = ac.rowwise().sum();
    const Eigen::VectorXd tr = (Eigen::VectorXd::Ones(n) - dc) / alpha;
    expect_matvec_matches(split.full, explicit_block(ac / std::sqrt(alpha), tr), s);
    Eigen::MatrixXd h0 = explicit_block(ac / std::sqrt(alpha), Eigen::VectorXd::Zero(n));
    expect_matvec_matches(split.h0, h0, s);
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    e.topRightCorner(n, n) = tr.asDiagonal();
    expect_matvec_matches(split.e, e, s);
  }
}

TEST(Operators, SpectrumClosedUnderConjugation) {
  const Graph g = sample_er(40, 0.1, RngSeed{3, 0});
  const ModelEstimate est = ModelEstimate::constant(40, 0.1);
  for (const auto& m : {explicit_h(g), explicit_centered_h(g, est)}) {
    const auto ev = dense_eigenvalues(m);
    for (const auto& v : ev) {
      double best = 1e300;
      for (const auto& w : ev) best = std::min(best, std::abs(w - std::conj(v)));
      EXPECT_LT(best, 1e-6);
    }
  }
}

TEST(CenteredNb, ExactFitGivesPlusMinusOne) {
  // P-hat = A: centered adjacency and its row sums vanish.
  const Graph g = sample_er(12, 0.4, RngSeed{2, 0});
  const ModelEstimate est = ModelEstimate::dense(g.dense_adjacency());
  const auto ev = eig_dense(centered_nb_operator(g, est).dense(), false);
  for (const auto& v : ev.values) EXPECT_NEAR(std::abs(v.real()) + std::abs(v.imag()), 1.0, 1e-7);
}

TEST(CenteredNb, TriangleMatchesExplicit) {
  const Graph k3 = complete_graph(3);
  const ModelEstimate est = ModelEstimate::constant(3, 0.5);
  Eigen::MatrixXd m(6, 6);
  // A_c = J/2 - I/2 off-diagonal 1/2; D_c = 1; top right = I - D_c = 0.
  m << 0, .5, .5, 0, 0, 0,  //
      .5, 0, .5, 0, 0, 0,   //
      .5, .5, 0, 0, 0, 0,   //
      1, 0, 0, 0, 0, 0,     //
      0, 1, 0, 0, 0, 0,     //
      0, 0, 1, 0, 0, 0;
  EXPECT_LT((centered_nb_operator(k3, est).dense() - m).cwiseAbs().maxCoeff(), 1e-15);
  const auto a = eig_dense(m, false);
  const auto b = eig_dense(centered_nb_operator(k3, est).dense(), false);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT(std::abs(a[i] - b[i]), 1e-12);
}

TEST(CenteredNb, LeadingEigenvalueNearTwo) {
  for (std::uint64_t s = 0; s < 3; ++s) {
    const NodeId n = 1000;
    const Graph g = sample_er(n, 0.08, RngSeed{s, 7});
    const double p = 2.0 * g.num_edges() / (n * (n - 1.0));
    EigOptions o;
    o.want_vectors = false;
    const double mu = eig_leading(centered_nb_operator(g, ModelEstimate::constant(n, p)), o)[0].real();
    const double v = mu / std::sqrt((n - 1) * p * (1 - p));
    EXPECT_GE(v, 1.9);
    EXPECT_LE(v, 2.15);
  }
}

TEST(RescaledSplit, SimilarityAndH0Spectrum) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const NodeId n = 20 + static_cast<NodeId>(s) * 15;
    const Graph g = sample_er(n, 0.15, RngSeed{s, 3});
    const ModelEstimate est = ModelEstimate::constant(n, 0.15);
    const double alpha = est.alphahat();
    const BlockOperator h = centered_nb_operator(g, est);
    const auto split = rescaled_split(h, alpha);
    auto a = eig_dense(h.dense(), false).values;
    auto b = eig_dense(split.full.dense(), false).values;
    for (auto& v : b) v *= std::sqrt(alpha);
    EXPECT_TRUE(same_spectrum_mod_pm1(a, b, 1e-9)) << "n=" << n;

    // Nonzero spectrum of H0 is the spectrum of A_c / sqrt(alpha).
    const auto h0 = eig_dense(split.h0.dense(), false);
    const auto ac = sym_eigenvalues(explicit_centered(g, est) / std::sqrt(alpha));
    std::vector<double> nonzero;
    for (const auto& v : h0.values) {
      if (std::abs(v) > 1e-9) nonzero.push_back(v.real());
    }
    std::sort(nonzero.rbegin(), nonzero.rend());
    ASSERT_EQ(nonzero.size(), ac.size());
    for (std::size_t i = 0; i < ac.size(); ++i) EXPECT_NEAR(nonzero[i], ac[i], 1e-9);

    // ||E||_2 = max_i |d_i / alpha - 1| for D-under with the constant fit.
    const Eigen::MatrixXd e = split.e.dense();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(e);
    const Eigen::VectorXd dc = explicit_centered(g, est).rowwise().sum();
    const double expected = ((Eigen::VectorXd::Ones(n) - dc) / alpha).cwiseAbs().maxCoeff();
    EXPECT_NEAR(svd.singularValues()(0), expected, 1e-10);
  }
  EXPECT_THROW(rescaled_split(centered_nb_operator(complete_graph(3), ModelEstimate::constant(3, 0.5)), 0.0),
               ParameterError);
}

TEST(BetheHessian, Examples) {
  const Graph g = sample_er(30, 0.2, RngSeed{1, 1});
  const Eigen::MatrixXd h1 = Eigen::MatrixXd(bethe_hessian(g, 1.0));
  const Eigen::MatrixXd lap = Eigen::MatrixXd(g.dense_adjacency().rowwise().sum().asDiagonal()) - g.dense_adjacency();
  EXPECT_LT((h1 - lap).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(sym_eigenvalues(h1).back(), 0.0, 1e-10);

  const Graph k3 = complete_graph(3);
  const auto ev = sym_eigenvalues(Eigen::MatrixXd(bethe_hessian(k3, 2.0)));
  EXPECT_NEAR(ev[0], 7.0, 1e-12);
  EXPECT_NEAR(ev[1], 7.0, 1e-12);
  EXPECT_NEAR(ev[2], 1.0, 1e-12);

  // Three-regular: the cube graph.
  const Graph cube = Graph::from_edges(
      8, std::vector<Edge>{{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6}, {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}});
  EXPECT_NEAR(bethe_hessian_ra(cube), std::sqrt(3.0), 1e-14);
  EXPECT_NEAR(bethe_hessian_rm(cube), std::sqrt(2.0), 1e-14);
}

TEST(EdgeNb, TriangleRowsSumToOne) {
  const auto b = edge_nb_matrix(complete_graph(3));
  ASSERT_EQ(b.matrix.rows(), 6);
  for (Eigen::Index r = 0; r < 6; ++r) EXPECT_DOUBLE_EQ(b.matrix.row(r).sum(), 1.0);
  EXPECT_TRUE(same_spectrum_mod_pm1(eig_dense(b.matrix, false).values,
                                    eig_dense(explicit_h(complete_graph(3)), false).values, 1e-8));
}

TEST(EdgeNb, MatchesDefinition) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Graph g = sample_er(9, 0.4, RngSeed{s, 4});
    EXPECT_EQ(edge_nb_matrix(g).matrix, explicit_b(g));
  }
}

TEST(CenteredEdge, SingleEdgeHandComputed) {
  // n = 2, one edge, p = 1: A_c = 0, so B-under holds only the -1
  // backtracking terms: (0->1, 1->0) and (1->0, 0->1).
  const Graph g = Graph::from_edges(2, std::vector<Edge>{{0, 1}});
  const auto b = centered_edge_matrix(g, ModelEstimate::constant(2, 1.0));
  ASSERT_EQ(b.matrix.rows(), 2);
  Eigen::Matrix2d expected;
  expected << 0, -1, -1, 0;
  EXPECT_LT((b.matrix - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(CenteredEdge, SizeCap) {
  EXPECT_THROW(centered_edge_matrix(Graph::from_edges(41, {}), ModelEstimate::constant(41, 0.1)), ResourceError);
}

TEST(SpectralEquivalence, SmallRandomGraphs) {
  int checked = 0;
  for (std::uint64_t s = 0; s < 40; ++s) {
    CounterRng rng(RngSeed{s, 8});
    const NodeId n = 3 + static_cast<NodeId>(rng.below(6));
    const Graph g = sample_er(n, 0.3 + 0.4 * rng.uniform(), RngSeed{s, 9});
    const double p = (s % 2 == 0) ? 0.3 : 0.7;
    const ModelEstimate est = ModelEstimate::constant(n, p);
    double w = 0.0;
    if (g.num_edges() > 0) {
      EXPECT_TRUE(same_spectrum_mod_pm1(eig_dense(edge_nb_matrix(g).matrix, false).values,
                                        eig_dense(explicit_h(g), false).values, 1e-8, &w))
          << "seed " << s << " worst " << w;
    }
    EXPECT_TRUE(same_spectrum_mod_pm1(eig_dense(centered_edge_matrix(g, est).matrix, false).values,
                                      eig_dense(explicit_centered_h(g, est), false).values, 1e-8, &w))
        << "seed " << s << " worst " << w;
    ++checked;
  }
  EXPECT_EQ(checked, 40);
}
