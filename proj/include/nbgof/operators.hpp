#pragma once

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "nbgof/graph.hpp"

namespace nbgof {

// Fitted null model. P-hat is block constant: P(i, j) = qhat(g_i, g_j) for
// i != j. A single block (K0 = 1) is the Erdos-Renyi fit. Giving every node
// its own block expresses an arbitrary P-hat (used for validation).
class ModelEstimate {
 public:
  ModelEstimate() = default;

  // K0 = 1 fit with density p.
  static ModelEstimate constant(NodeId n, double p);
  // Block-constant fit; labels are 0-based block ids in [0, qhat.rows()).
  static ModelEstimate blocks(std::vector<int> labels, Eigen::MatrixXd qhat);
  // Arbitrary symmetric P (diagonal ignored).
  static ModelEstimate dense(const Eigen::MatrixXd& p);

  NodeId num_nodes() const { return n_; }
  int num_blocks() const { return static_cast<int>(qhat_.rows()); }
  const std::vector<int>& labels() const { return labels_; }
  int label(NodeId i) const { return labels_.empty() ? 0 : labels_[i]; }
  const Eigen::MatrixXd& qhat() const { return qhat_; }

  // Average off-diagonal density of P-hat.
  double phat() const { return phat_; }
  double alphahat() const { return (n_ - 1) * phat_ + 1.0; }

  // Raw entry, used for centering.
  double p(NodeId i, NodeId j) const { return qhat_(label(i), label(j)); }
  // Entry clamped to [1/(n(n-1)), 1 - 1/(n(n-1))]; used wherever P-hat
  // appears in a denominator or a logarithm.
  double p_clamped(NodeId i, NodeId j) const { return clamp(p(i, j)); }
  double clamp(double v) const;

  // Block pairs with no node pairs (n_ab = 0); their Q-hat is the clamp floor.
  const std::vector<std::pair<int, int>>& empty_pairs() const { return empty_pairs_; }
  void set_empty_pairs(std::vector<std::pair<int, int>> pairs) { empty_pairs_ = std::move(pairs); }

  std::vector<std::int64_t> block_sizes() const;

 private:
  NodeId n_ = 0;
  std::vector<int> labels_;
  Eigen::MatrixXd qhat_;
  double phat_ = 0.0;
  std::vector<std::pair<int, int>> empty_pairs_;
};

// Real linear operator. `dense()` assembles the matrix from its definition,
// not through `apply`, so the two can be checked against each other.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual Eigen::Index dim() const = 0;
  virtual void apply(std::span<const double> x, std::span<double> y) const = 0;
  virtual Eigen::MatrixXd dense() const = 0;
  virtual bool symmetric() const { return false; }

  Eigen::VectorXd operator*(const Eigen::VectorXd& x) const;
};

class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(Eigen::MatrixXd m, bool symmetric = false)
      : m_(std::move(m)), symmetric_(symmetric) {}
  Eigen::Index dim() const override { return m_.rows(); }
  void apply(std::span<const double> x, std::span<double> y) const override;
  Eigen::MatrixXd dense() const override { return m_; }
  bool symmetric() const override { return symmetric_; }
  const Eigen::MatrixXd& matrix() const { return m_; }

 private:
  Eigen::MatrixXd m_;
  bool symmetric_;
};

class SparseOperator final : public LinearOperator {
 public:
  explicit SparseOperator(Eigen::SparseMatrix<double, Eigen::RowMajor> m, bool symmetric = false)
      : m_(std::move(m)), symmetric_(symmetric) {}
  Eigen::Index dim() const override { return m_.rows(); }
  void apply(std::span<const double> x, std::span<double> y) const override;
  Eigen::MatrixXd dense() const override { return Eigen::MatrixXd(m_); }
  bool symmetric() const override { return symmetric_; }
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& matrix() const { return m_; }

 private:
  Eigen::SparseMatrix<double, Eigen::RowMajor> m_;
  bool symmetric_;
};

// Plain adjacency A.
class AdjacencyOperator final : public LinearOperator {
 public:
  explicit AdjacencyOperator(Graph g) : g_(std::move(g)) {}
  Eigen::Index dim() const override { return g_.num_nodes(); }
  void apply(std::span<const double> x, std::span<double> y) const override {
    g_.adjacency_apply(x, y);
  }
  Eigen::MatrixXd dense() const override { return g_.dense_adjacency(); }
  bool symmetric() const override { return true; }

 private:
  Graph g_;
};

// A - P-hat with zero diagonal. Matvec cost O(m + n K0).
class CenteredAdjacency final : public LinearOperator {
 public:
  CenteredAdjacency(Graph g, ModelEstimate est);
  Eigen::Index dim() const override { return g_.num_nodes(); }
  void apply(std::span<const double> x, std::span<double> y) const override;
  Eigen::MatrixXd dense() const override;
  bool symmetric() const override { return true; }

  // Centered degrees d_i - sum_{j != i} P_ij.
  const Eigen::VectorXd& row_sums() const { return row_sums_; }
  const Graph& graph() const { return g_; }
  const ModelEstimate& estimate() const { return est_; }

 private:
  Graph g_;
  ModelEstimate est_;
  Eigen::VectorXd row_sums_;
};

// (A_ij - P_ij) / sqrt((n-1) P_ij (1 - P_ij)) off the diagonal, P clamped.
class NormalizedAdjacency final : public LinearOperator {
 public:
  NormalizedAdjacency(Graph g, ModelEstimate est);
  Eigen::Index dim() const override { return g_.num_nodes(); }
  void apply(std::span<const double> x, std::span<double> y) const override;
  Eigen::MatrixXd dense() const override;
  bool symmetric() const override { return true; }

 private:
  Graph g_;
  ModelEstimate est_;
  Eigen::MatrixXd scale_;  // 1 / sqrt((n-1) q (1-q)) per block pair
};

enum class BlockRole { kH, kCenteredH, kRescaledH, kRescaledH0, kEPart };

// 2n x 2n operator
//   [ s M   diag(t) ]
//   [ c I   0       ]
// with M symmetric n x n (absent when s = 0) and c in {0, 1}.
class BlockOperator final : public LinearOperator {
 public:
  BlockOperator(BlockRole role, std::shared_ptr<const LinearOperator> top_left, double scale,
                Eigen::VectorXd top_right, bool lower_identity);

  BlockRole role() const { return role_; }
  Eigen::Index dim() const override { return 2 * n_; }
  Eigen::Index half_dim() const { return n_; }
  void apply(std::span<const double> x, std::span<double> y) const override;
  Eigen::MatrixXd dense() const override;

  const std::shared_ptr<const LinearOperator>& top_left() const { return top_left_; }
  double scale() const { return scale_; }
  const Eigen::VectorXd& top_right() const { return top_right_; }

 private:
  BlockRole role_;
  Eigen::Index n_;
  std::shared_ptr<const LinearOperator> top_left_;
  double scale_;
  Eigen::VectorXd top_right_;
  bool lower_identity_;
};

std::shared_ptr<const CenteredAdjacency> centered_adjacency(const Graph& g, const ModelEstimate& est);
std::shared_ptr<const NormalizedAdjacency> normalized_adjacency(const Graph& g,
                                                                const ModelEstimate& est);

// H = [[A, I - D], [I, 0]].
BlockOperator nb_operator(const Graph& g);
// H-under = [[A - P, I - D-under], [I, 0]].
BlockOperator centered_nb_operator(const Graph& g, const ModelEstimate& est);

struct RescaledSplit {
  BlockOperator full;   // [[A_c / sqrt(a), (I - D_c) / a], [I, 0]]
  BlockOperator h0;     // [[A_c / sqrt(a), 0], [I, 0]]
  BlockOperator e;      // [[0, (I - D_c) / a], [0, 0]]
};

// Rescaled conjugation of a centered H: spec(full) = spec(op) / sqrt(alpha).
RescaledSplit rescaled_split(const BlockOperator& op, double alpha);

// (r^2 - 1) I - r A + D.
Eigen::SparseMatrix<double, Eigen::RowMajor> bethe_hessian(const Graph& g, double r);
double bethe_hessian_ra(const Graph& g);
double bethe_hessian_rm(const Graph& g);

// Directed edges indexing an edge operator.
struct DirectedEdge {
  NodeId from;
  NodeId to;
};

// 2m x 2m non-backtracking matrix: B(i->j, k->l) = 1 iff j = k and i != l.
struct EdgeOperator {
  std::vector<DirectedEdge> index;
  Eigen::MatrixXd matrix;
};

// Directed edges are enumerated as (u, v) for u ascending, then v ascending.
EdgeOperator edge_nb_matrix(const Graph& g);

inline constexpr NodeId kCenteredEdgeNodeCap = 40;

// n(n-1) x n(n-1) centered edge matrix over all directed pairs of the
// complete graph: entry (v->u, w->z) is A_c(w, z) - [z = v] when w = u and 0
// otherwise. Throws ResourceError for n > 40 unless `allow_large`.
EdgeOperator centered_edge_matrix(const Graph& g, const ModelEstimate& est,
                                  bool allow_large = false);

}  // namespace nbgof
