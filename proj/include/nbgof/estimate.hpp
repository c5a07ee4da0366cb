#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nbgof/graph.hpp"
#include "nbgof/operators.hpp"
#include "nbgof/rng.hpp"
#include "nbgof/stats.hpp"

namespace nbgof {

// 2m / (n(n-1)).
double estimate_p(const Graph& g);

struct KMeansResult {
  std::vector<int> labels;
  double inertia = 0.0;
};

// Lloyd iterations from k-means++ seeds; best of `restarts` runs. A cluster
// that empties is reseeded at the point farthest from its centroid. Rows of
// `points` are observations.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, RngSeed seed, int restarts = 20,
                    int max_iter = 100);

enum class Embedding {
  kAdjacencyTopK,     // leading K eigenvectors of A
  kCenteredNbHalf,    // first half of the leading eigenvector of H-under-hat (K = 2)
  kCenteredAdjacency, // leading eigenvector of A-under-hat (K = 2)
  kNbHalf,            // first half of the eigenvector of mu_2(H) (K = 2)
};

Embedding parse_embedding(const std::string& name);
std::string to_string(Embedding e);

// Embedding matrix (n rows) used by spectral_labels.
Eigen::MatrixXd spectral_embedding(const Graph& g, int k, Embedding embedding);

// k-means on the embedding; labels are 0-based and ordered by first
// appearance so that node 0 is always in block 0.
std::vector<int> spectral_labels(const Graph& g, int k, Embedding embedding,
                                 RngSeed seed = RngSeed{0x6b6d65616e73ULL, 0});

// Q-hat_ab = O_ab / n_ab (clamped); pairs with n_ab = 0 get the clamp floor
// and are recorded in empty_pairs().
ModelEstimate estimate_blocks(const Graph& g, std::span<const int> labels);

enum class NullSource { kTw, kMonteCarlo };
NullSource parse_null_source(const std::string& name);

struct KEstimateConfig {
  TestStatKind stat;
  double alpha = 0.05;
  NullSource null = NullSource::kTw;
  int kmax = 10;
  NodeId min_size = 20;
  std::int64_t null_reps = 2000;
  RngSeed seed{};
  Embedding split = Embedding::kCenteredNbHalf;
};

struct SequentialResult {
  int k_hat = 1;
  bool truncated = false;
  std::vector<TestOutcome> trace;  // one per tested K0
};

// K-hat = first K0 >= 1 whose test does not reject. K0 > 1 fits labels by
// adjacency spectral clustering and uses a bootstrap null.
SequentialResult estimate_k_sequential(const Graph& g, const KEstimateConfig& cfg);

struct DendrogramNode {
  std::vector<NodeId> members;  // original node ids, ascending
  bool tested = false;
  TestOutcome outcome;
  bool degenerate = false;  // split produced an empty side
  int left = -1;
  int right = -1;

  bool is_leaf() const { return left < 0; }
};

struct Dendrogram {
  std::vector<DendrogramNode> nodes;  // nodes[0] is the root

  int num_leaves() const;
  // Leaves in depth-first (left before right) order.
  std::vector<int> leaves() const;
  // Leaf index (in leaves() order) per original node.
  std::vector<int> leaf_labels(NodeId n) const;
  // {members:[...], stat, threshold, reject, children:[...]}
  std::string to_json(int indent = 2) const;
};

// Tests K0 = 1 on each subgraph and splits on rejection; subgraphs smaller
// than min_size, and empty or complete subgraphs, become leaves without testing.
Dendrogram estimate_k_recursive(const Graph& g, const KEstimateConfig& cfg);

// 1 + number of real eigenvalues of H other than mu_1 with real part above
// sqrt(mu_1).
int count_nb_informative(const Graph& g);

struct ExpectationEigs {
  double l1_ea = 0.0;
  double l2_ea = 0.0;
  double l1_centered = 0.0;
  double l2_centered = 0.0;
};

// Two nontrivial eigenvalues of E[A] and of E[A] - p0 11' for the two-block
// model Q = p0 [[1 + x d, 1 - d], [1 - d, 1 + k x d]], x = 2p(1-p)/(p^2 + k(1-p)^2),
// p = n1 / n (self-loops kept).
ExpectationEigs expectation_eigs_closed_form(double p, double k, double delta, std::int64_t n,
                                             double p0);

struct BlockMatrixSpectrum {
  std::vector<double> reduced;                             // K values
  std::vector<std::pair<double, std::int64_t>> repeated;  // (value, multiplicity)

  // All n eigenvalues, descending.
  std::vector<double> expand() const;
};

// Spectrum of the block matrix with diagonal blocks B_ii (J - l_i I) and
// off-diagonal blocks B_ij J.
BlockMatrixSpectrum block_matrix_eigs(const Eigen::MatrixXd& b, std::span<const std::int64_t> sizes,
                                      std::span<const double> ell);

// Dense assembly of the same matrix.
Eigen::MatrixXd assemble_block_matrix(const Eigen::MatrixXd& b, std::span<const std::int64_t> sizes,
                                      std::span<const double> ell);

// |Pearson correlation| of the +-1 encodings of two binary labelings.
double label_correlation(std::span<const int> labels, std::span<const int> truth);

}  // namespace nbgof
