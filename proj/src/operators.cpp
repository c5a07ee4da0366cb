#include "nbgof/operators.hpp"

#include <algorithm>
#include <cmath>

#include "nbgof/errors.hpp"

namespace nbgof {

// ---------------------------------------------------------------------------
// ModelEstimate

namespace {

double off_diagonal_density(NodeId n, const std::vector<int>& labels, const Eigen::MatrixXd& q) {
  if (n < 2) return 0.0;
  const int k = static_cast<int>(q.rows());
  std::vector<double> sizes(static_cast<std::size_t>(k), 0.0);
  if (labels.empty()) {
    sizes[0] = n;
  } else {
    for (int b : labels) sizes[b] += 1.0;
  }
  double total = 0.0;
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      const double pairs = (a == b) ? sizes[a] * (sizes[a] - 1.0) : sizes[a] * sizes[b];
      total += pairs * q(a, b);
    }
  }
  return total / (static_cast<double>(n) * (n - 1.0));
}

}  // namespace

ModelEstimate ModelEstimate::constant(NodeId n, double p) {
  if (n < 2) throw ParameterError("model estimate needs at least two nodes");
  ModelEstimate est;
  est.n_ = n;
  est.qhat_ = Eigen::MatrixXd::Constant(1, 1, p);
  est.phat_ = p;
  return est;
}

ModelEstimate ModelEstimate::blocks(std::vector<int> labels, Eigen::MatrixXd qhat) {
  if (labels.size() < 2) throw ParameterError("model estimate needs at least two nodes");
  const int k = static_cast<int>(qhat.rows());
  if (k < 1 || qhat.cols() != k) throw ParameterError("Q-hat must be square");
  for (int b : labels) {
    if (b < 0 || b >= k) throw ParameterError("label outside [0, K0)");
  }
  ModelEstimate est;
  est.n_ = static_cast<NodeId>(labels.size());
  est.phat_ = off_diagonal_density(est.n_, labels, qhat);
  est.labels_ = std::move(labels);
  est.qhat_ = std::move(qhat);
  if (k == 1) est.labels_.clear();
  return est;
}

ModelEstimate ModelEstimate::dense(const Eigen::MatrixXd& p) {
  const auto n = static_cast<NodeId>(p.rows());
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (NodeId i = 0; i < n; ++i) labels[i] = i;
  return blocks(std::move(labels), p);
}

double ModelEstimate::clamp(double v) const {
  const double floor = 1.0 / (static_cast<double>(n_) * (n_ - 1.0));
  return std::clamp(v, floor, 1.0 - floor);
}

std::vector<std::int64_t> ModelEstimate::block_sizes() const {
  std::vector<std::int64_t> sizes(static_cast<std::size_t>(num_blocks()), 0);
  if (labels_.empty()) {
    sizes[0] = n_;
  } else {
    for (int b : labels_) ++sizes[b];
  }
  return sizes;
}

// ---------------------------------------------------------------------------
// Generic operators

Eigen::VectorXd LinearOperator::operator*(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y(dim());
  apply({x.data(), static_cast<std::size_t>(x.size())}, {y.data(), static_cast<std::size_t>(y.size())});
  return y;
}

void DenseOperator::apply(std::span<const double> x, std::span<double> y) const {
  Eigen::Map<const Eigen::VectorXd> xv(x.data(), m_.cols());
  Eigen::Map<Eigen::VectorXd> yv(y.data(), m_.rows());
  yv.noalias() = m_ * xv;
}

void SparseOperator::apply(std::span<const double> x, std::span<double> y) const {
  Eigen::Map<const Eigen::VectorXd> xv(x.data(), m_.cols());
  Eigen::Map<Eigen::VectorXd> yv(y.data(), m_.rows());
  yv.noalias() = m_ * xv;
}

// ---------------------------------------------------------------------------
// Centered and normalized adjacency

namespace {

// Per-block sums of x.
Eigen::VectorXd block_sums(const ModelEstimate& est, std::span<const double> x) {
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(est.num_blocks());
  for (NodeId i = 0; i < est.num_nodes(); ++i) sums[est.label(i)] += x[i];
  return sums;
}

}  // namespace

CenteredAdjacency::CenteredAdjacency(Graph g, ModelEstimate est)
    : g_(std::move(g)), est_(std::move(est)) {
  if (g_.num_nodes() != est_.num_nodes()) {
    throw ParameterError("model estimate and graph have different node counts");
  }
  const Eigen::VectorXd sizes = [&] {
    const auto s = est_.block_sizes();
    Eigen::VectorXd v(static_cast<Eigen::Index>(s.size()));
    for (std::size_t b = 0; b < s.size(); ++b) v[static_cast<Eigen::Index>(b)] = static_cast<double>(s[b]);
    return v;
  }();
  const Eigen::VectorXd expected_by_block = est_.qhat() * sizes;
  row_sums_.resize(g_.num_nodes());
  for (NodeId i = 0; i < g_.num_nodes(); ++i) {
    const int a = est_.label(i);
    row_sums_[i] = g_.degree(i) - (expected_by_block[a] - est_.qhat()(a, a));
  }
}

void CenteredAdjacency::apply(std::span<const double> x, std::span<double> y) const {
  g_.adjacency_apply(x, y);
  const Eigen::VectorXd sums = block_sums(est_, x);
  const Eigen::VectorXd proj = est_.qhat() * sums;
  for (NodeId i = 0; i < g_.num_nodes(); ++i) {
    const int a = est_.label(i);
    y[i] -= proj[a] - est_.qhat()(a, a) * x[i];
  }
}

Eigen::MatrixXd CenteredAdjacency::dense() const {
  const NodeId n = g_.num_nodes();
  Eigen::MatrixXd m = g_.dense_adjacency();
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = 0; j < n; ++j) {
      if (i != j) m(i, j) -= est_.p(i, j);
    }
  }
  return m;
}

NormalizedAdjacency::NormalizedAdjacency(Graph g, ModelEstimate est)
    : g_(std::move(g)), est_(std::move(est)) {
  if (g_.num_nodes() != est_.num_nodes()) {
    throw ParameterError("model estimate and graph have different node counts");
  }
  const int k = est_.num_blocks();
  const double nm1 = g_.num_nodes() - 1.0;
  scale_.resize(k, k);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      const double q = est_.clamp(est_.qhat()(a, b));
      scale_(a, b) = 1.0 / std::sqrt(nm1 * q * (1.0 - q));
    }
  }
}

void NormalizedAdjacency::apply(std::span<const double> x, std::span<double> y) const {
  const NodeId n = g_.num_nodes();
  const int k = est_.num_blocks();
  // Centering uses the clamped P so that entries stay consistent with the
  // variance normalization.
  Eigen::MatrixXd qc(k, k);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) qc(a, b) = est_.clamp(est_.qhat()(a, b)) * scale_(a, b);
  }
  const Eigen::VectorXd sums = block_sums(est_, x);
  const Eigen::VectorXd proj = qc * sums;
  for (NodeId i = 0; i < n; ++i) {
    const int a = est_.label(i);
    double s = 0.0;
    for (NodeId j : g_.neighbors(i)) s += scale_(a, est_.label(j)) * x[j];
    y[i] = s - (proj[a] - qc(a, a) * x[i]);
  }
}

Eigen::MatrixXd NormalizedAdjacency::dense() const {
  const NodeId n = g_.num_nodes();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  const double nm1 = n - 1.0;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = 0; j < n; ++j) {
      if (i == j) continue;
      const double p = est_.p_clamped(i, j);
      m(i, j) = ((g_.has_edge(i, j) ? 1.0 : 0.0) - p) / std::sqrt(nm1 * p * (1.0 - p));
    }
  }
  return m;
}

std::shared_ptr<const CenteredAdjacency> centered_adjacency(const Graph& g, const ModelEstimate& est) {
  return std::make_shared<const CenteredAdjacency>(g, est);
}

std::shared_ptr<const NormalizedAdjacency> normalized_adjacency(const Graph& g,
                                                                const ModelEstimate& est) {
  return std::make_shared<const NormalizedAdjacency>(g, est);
}

// ---------------------------------------------------------------------------
// Block operators

BlockOperator::BlockOperator(BlockRole role, std::shared_ptr<const LinearOperator> top_left,
                             double scale, Eigen::VectorXd top_right, bool lower_identity)
    : role_(role),
      n_(top_right.size()),
      top_left_(std::move(top_left)),
      scale_(scale),
      top_right_(std::move(top_right)),
      lower_identity_(lower_identity) {
  if (top_left_ && top_left_->dim() != n_) throw ContractError("block dimensions disagree");
}

void BlockOperator::apply(std::span<const double> x, std::span<double> y) const {
  const auto n = static_cast<std::size_t>(n_);
  auto top_in = x.subspan(0, n);
  auto bot_in = x.subspan(n, n);
  auto top_out = y.subspan(0, n);
  auto bot_out = y.subspan(n, n);
  if (top_left_ && scale_ != 0.0) {
    top_left_->apply(top_in, top_out);
    for (std::size_t i = 0; i < n; ++i) top_out[i] = scale_ * top_out[i] + top_right_[i] * bot_in[i];
  } else {
    for (std::size_t i = 0; i < n; ++i) top_out[i] = top_right_[i] * bot_in[i];
  }
  for (std::size_t i = 0; i < n; ++i) bot_out[i] = lower_identity_ ? top_in[i] : 0.0;
}

Eigen::MatrixXd BlockOperator::dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n_, 2 * n_);
  if (top_left_ && scale_ != 0.0) m.topLeftCorner(n_, n_) = scale_ * top_left_->dense();
  m.topRightCorner(n_, n_) = top_right_.asDiagonal();
  if (lower_identity_) m.bottomLeftCorner(n_, n_).setIdentity();
  return m;
}

BlockOperator nb_operator(const Graph& g) {
  Eigen::VectorXd t(g.num_nodes());
  for (NodeId i = 0; i < g.num_nodes(); ++i) t[i] = 1.0 - g.degree(i);
  return BlockOperator(BlockRole::kH, std::make_shared<const AdjacencyOperator>(g), 1.0,
                       std::move(t), true);
}

BlockOperator centered_nb_operator(const Graph& g, const ModelEstimate& est) {
  auto centered = centered_adjacency(g, est);
  Eigen::VectorXd t = Eigen::VectorXd::Ones(g.num_nodes()) - centered->row_sums();
  return BlockOperator(BlockRole::kCenteredH, std::move(centered), 1.0, std::move(t), true);
}

RescaledSplit rescaled_split(const BlockOperator& op, double alpha) {
  if (!(alpha > 0.0)) throw ParameterError("alpha must be positive");
  if (op.role() != BlockRole::kCenteredH) {
    throw ParameterError("rescaled split expects a centered non-backtracking operator");
  }
  const double s = 1.0 / std::sqrt(alpha);
  const Eigen::VectorXd t = op.top_right() / alpha;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(op.half_dim());
  return RescaledSplit{
      BlockOperator(BlockRole::kRescaledH, op.top_left(), s * op.scale(), t, true),
      BlockOperator(BlockRole::kRescaledH0, op.top_left(), s * op.scale(), zero, true),
      BlockOperator(BlockRole::kEPart, nullptr, 0.0, t, false),
  };
}

// ---------------------------------------------------------------------------
// Bethe-Hessian

Eigen::SparseMatrix<double, Eigen::RowMajor> bethe_hessian(const Graph& g, double r) {
  const NodeId n = g.num_nodes();
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(n + 2 * g.num_edges()));
  for (NodeId i = 0; i < n; ++i) {
    entries.emplace_back(i, i, r * r - 1.0 + g.degree(i));
    for (NodeId j : g.neighbors(i)) entries.emplace_back(i, j, -r);
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> h(n, n);
  h.setFromTriplets(entries.begin(), entries.end());
  return h;
}

double bethe_hessian_ra(const Graph& g) {
  if (g.num_nodes() == 0) return 0.0;
  return std::sqrt(2.0 * static_cast<double>(g.num_edges()) / g.num_nodes());
}

double bethe_hessian_rm(const Graph& g) {
  double s1 = 0.0;
  double s2 = 0.0;
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    const double d = g.degree(i);
    s1 += d;
    s2 += d * d;
  }
  if (s1 == 0.0) return 0.0;
  return std::sqrt(std::max(0.0, s2 / s1 - 1.0));
}

// ---------------------------------------------------------------------------
// Edge operators

EdgeOperator edge_nb_matrix(const Graph& g) {
  EdgeOperator out;
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    for (NodeId v : g.neighbors(u)) out.index.push_back({u, v});
  }
  const auto size = static_cast<Eigen::Index>(out.index.size());
  out.matrix = Eigen::MatrixXd::Zero(size, size);
  // Row offsets of directed edges leaving each node, for the (j -> l) lookup.
  const auto& offsets = g.offsets();
  for (Eigen::Index e = 0; e < size; ++e) {
    const auto [i, j] = out.index[static_cast<std::size_t>(e)];
    for (std::int64_t f = offsets[j]; f < offsets[j + 1]; ++f) {
      if (out.index[static_cast<std::size_t>(f)].to != i) out.matrix(e, f) = 1.0;
    }
  }
  return out;
}

EdgeOperator centered_edge_matrix(const Graph& g, const ModelEstimate& est, bool allow_large) {
  const NodeId n = g.num_nodes();
  if (n > kCenteredEdgeNodeCap && !allow_large) {
    throw ResourceError("centered edge matrix has n(n-1) rows; n = " + std::to_string(n) +
                        " exceeds the cap of " + std::to_string(kCenteredEdgeNodeCap));
  }
  const Eigen::MatrixXd ac = CenteredAdjacency(g, est).dense();
  EdgeOperator out;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = 0; v < n; ++v) {
      if (u != v) out.index.push_back({u, v});
    }
  }
  // Pair (u, v) sits at u (n - 1) + v - [v > u].
  auto pos = [n](NodeId u, NodeId v) {
    return static_cast<Eigen::Index>(u) * (n - 1) + v - (v > u ? 1 : 0);
  };
  const auto size = static_cast<Eigen::Index>(out.index.size());
  out.matrix = Eigen::MatrixXd::Zero(size, size);
  for (Eigen::Index row = 0; row < size; ++row) {
    const auto [v, u] = out.index[static_cast<std::size_t>(row)];  // row edge v -> u
    for (NodeId z = 0; z < n; ++z) {
      if (z == u) continue;
      out.matrix(row, pos(u, z)) = ac(u, z) - (z == v ? 1.0 : 0.0);
    }
  }
  return out;
}

}  // namespace nbgof
