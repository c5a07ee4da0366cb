#include "nbgof/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "nbgof/eig.hpp"
#include "nbgof/errors.hpp"

namespace nbgof {

double estimate_p(const Graph& g) {
  const double n = g.num_nodes();
  if (g.num_nodes() < 2) throw ParameterError("estimate_p needs at least two nodes");
  return 2.0 * static_cast<double>(g.num_edges()) / (n * (n - 1.0));
}

// ---------------------------------------------------------------------------
// k-means

namespace {

struct LloydRun {
  std::vector<int> labels;
  double inertia = std::numeric_limits<double>::infinity();
};

LloydRun lloyd(const Eigen::MatrixXd& x, int k, CounterRng& rng, int max_iter) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd centers(k, x.cols());

  // k-means++ seeding.
  centers.row(0) = x.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
  Eigen::VectorXd d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        u -= d2[i];
        if (u < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    centers.row(c) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  LloydRun run;
  run.labels.assign(static_cast<std::size_t>(n), -1);
  Eigen::VectorXd dist(n);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (x.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      dist[i] = best_d;
      if (run.labels[i] != best) {
        run.labels[i] = best;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(run.labels[i]) += x.row(i);
      ++counts[run.labels[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[c]);
        continue;
      }
      // Empty cluster: move it to the point farthest from its centroid.
      Eigen::Index far = 0;
      dist.maxCoeff(&far);
      centers.row(c) = x.row(far);
      run.labels[far] = c;
      dist[far] = 0.0;
    }
  }
  run.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) run.inertia += (x.row(i) - centers.row(run.labels[i])).squaredNorm();
  return run;
}

void relabel_by_first_appearance(std::vector<int>& labels, int k) {
  std::vector<int> map(static_cast<std::size_t>(k), -1);
  int next = 0;
  for (int& l : labels) {
    if (map[l] < 0) map[l] = next++;
    l = map[l];
  }
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, RngSeed seed, int restarts, int max_iter) {
  if (k < 1) throw ParameterError("k-means needs k >= 1");
  if (points.rows() < k) throw ParameterError("k-means needs at least k points");
  if (restarts < 1 || max_iter < 1) throw ParameterError("k-means restarts and iterations must be positive");
  LloydRun best;
  for (int r = 0; r < restarts; ++r) {
    CounterRng rng(seed.child(static_cast<std::uint64_t>(r)));
    LloydRun run = lloyd(points, k, rng, max_iter);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  relabel_by_first_appearance(best.labels, k);
  return {std::move(best.labels), best.inertia};
}

// ---------------------------------------------------------------------------
// Spectral labels

Embedding parse_embedding(const std::string& name) {
  if (name == "adjacency" || name == "adjacency_topK") return Embedding::kAdjacencyTopK;
  if (name == "cnb" || name == "centered_nb_half") return Embedding::kCenteredNbHalf;
  if (name == "cadj" || name == "centered_adjacency") return Embedding::kCenteredAdjacency;
  if (name == "nb" || name == "nb_half") return Embedding::kNbHalf;
  throw ParameterError("unknown embedding '" + name + "' (expected adjacency, cnb, cadj, nb)");
}

std::string to_string(Embedding e) {
  switch (e) {
    case Embedding::kAdjacencyTopK:
      return "adjacency";
    case Embedding::kCenteredNbHalf:
      return "cnb";
    case Embedding::kCenteredAdjacency:
      return "cadj";
    case Embedding::kNbHalf:
      return "nb";
  }
  return "?";
}

namespace {

EigOptions embedding_options(int k) {
  EigOptions o;
  o.k = k;
  o.dense_threshold = 64;
  return o;
}

}  // namespace

Eigen::MatrixXd spectral_embedding(const Graph& g, int k, Embedding embedding) {
  const NodeId n = g.num_nodes();
  if (k < 2) throw ParameterError("spectral clustering needs K >= 2");
  if (n < k) throw ParameterError("spectral clustering needs at least K nodes");
  if (embedding != Embedding::kAdjacencyTopK && k != 2) {
    throw ParameterError("embedding '" + to_string(embedding) + "' is defined for K = 2 only");
  }
  switch (embedding) {
    case Embedding::kAdjacencyTopK: {
      const AdjacencyOperator op(g);
      const Spectrum s = eig_leading(op, embedding_options(k));
      return s.vectors->real();
    }
    case Embedding::kCenteredNbHalf: {
      const ModelEstimate est = ModelEstimate::constant(n, estimate_p(g));
      const Spectrum s = eig_leading(centered_nb_operator(g, est), embedding_options(1));
      return leading_halfvector(s, 0);
    }
    case Embedding::kCenteredAdjacency: {
      const ModelEstimate est = ModelEstimate::constant(n, estimate_p(g));
      const Spectrum s = eig_leading(*centered_adjacency(g, est), embedding_options(1));
      return s.vectors->col(0).real();
    }
    case Embedding::kNbHalf: {
      const Spectrum s = eig_leading(nb_operator(g), embedding_options(2));
      return leading_halfvector(s, 1);
    }
  }
  throw ParameterError("unknown embedding");
}

std::vector<int> spectral_labels(const Graph& g, int k, Embedding embedding, RngSeed seed) {
  const Eigen::MatrixXd x = spectral_embedding(g, k, embedding);
  return kmeans(x, k, seed).labels;
}

ModelEstimate estimate_blocks(const Graph& g, std::span<const int> labels) {
  const NodeId n = g.num_nodes();
  if (static_cast<NodeId>(labels.size()) != n) throw ParameterError("label vector length differs from node count");
  if (n < 2) throw ParameterError("estimate_blocks needs at least two nodes");
  int k = 0;
  for (int b : labels) {
    if (b < 0) throw ParameterError("negative label");
    k = std::max(k, b + 1);
  }
  std::vector<double> sizes(static_cast<std::size_t>(k), 0.0);
  for (int b : labels) sizes[b] += 1.0;
  Eigen::MatrixXd o = Eigen::MatrixXd::Zero(k, k);
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v : g.neighbors(u)) o(labels[u], labels[v]) += 1.0;
  }
  const double floor = 1.0 / (static_cast<double>(n) * (n - 1.0));
  Eigen::MatrixXd q(k, k);
  std::vector<std::pair<int, int>> empty;
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      const double pairs = (a == b) ? sizes[a] * (sizes[a] - 1.0) : sizes[a] * sizes[b];
      if (pairs == 0.0) {
        q(a, b) = floor;
        if (a <= b) empty.emplace_back(a, b);
      } else {
        q(a, b) = o(a, b) / pairs;
      }
    }
  }
  ModelEstimate est = ModelEstimate::blocks(std::vector<int>(labels.begin(), labels.end()), q);
  est.set_empty_pairs(std::move(empty));
  return est;
}

// ---------------------------------------------------------------------------
// K estimation

NullSource parse_null_source(const std::string& name) {
  if (name == "tw") return NullSource::kTw;
  if (name == "mc") return NullSource::kMonteCarlo;
  throw ParameterError("unknown null source '" + name + "' (expected tw or mc)");
}

namespace {

NullDistribution k1_null(const KEstimateConfig& cfg, NodeId n, double p, RngSeed seed) {
  if (cfg.null == NullSource::kTw) return NullDistribution::tw1(n, cfg.stat.key());
  return simulate_null(cfg.stat, n, p, 1, cfg.null_reps, seed);
}

void check_config(const KEstimateConfig& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
  if (cfg.null == NullSource::kTw && !cfg.stat.has_tw_limit()) {
    throw ParameterError("statistic '" + cfg.stat.key() + "' has no TW1 limit; use a Monte Carlo null");
  }
  if (cfg.null_reps < 1) throw ParameterError("null reps must be at least 1");
}

std::uint64_t hash_members(std::span<const NodeId> members) {
  std::uint64_t h = mix64(members.size());
  for (NodeId v : members) h = hash_combine(h, static_cast<std::uint64_t>(v));
  return h;
}

}  // namespace

SequentialResult estimate_k_sequential(const Graph& g, const KEstimateConfig& cfg) {
  check_config(cfg);
  if (cfg.kmax < 1) throw ParameterError("Kmax must be at least 1");
  const NodeId n = g.num_nodes();
  SequentialResult result;
  for (int k0 = 1; k0 < cfg.kmax; ++k0) {
    try {
      ModelEstimate est;
      NullDistribution null;
      const RngSeed seed = cfg.seed.child(static_cast<std::uint64_t>(k0));
      if (k0 == 1) {
        est = ModelEstimate::constant(n, estimate_p(g));
        null = k1_null(cfg, n, est.phat(), seed);
      } else {
        est = estimate_blocks(g, spectral_labels(g, k0, Embedding::kAdjacencyTopK));
        null = bootstrap_null(g, est, cfg.stat, cfg.null_reps, seed);
      }
      const double value = compute_statistic(g, est, cfg.stat, k0);
      TestOutcome t = gof_test(value, null, cfg.alpha, n);
      t.k0 = k0;
      result.trace.push_back(t);
      if (!t.reject) {
        result.k_hat = k0;
        return result;
      }
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("K0 = " + std::to_string(k0) + ": " + e.what(), e.best_residual());
    }
  }
  result.k_hat = cfg.kmax;
  result.truncated = true;
  return result;
}

int Dendrogram::num_leaves() const {
  int count = 0;
  for (const auto& node : nodes) count += node.is_leaf() ? 1 : 0;
  return count;
}

std::vector<int> Dendrogram::leaves() const {
  std::vector<int> out;
  if (nodes.empty()) return out;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    if (nodes[i].is_leaf()) {
      out.push_back(i);
    } else {
      stack.push_back(nodes[i].right);
      stack.push_back(nodes[i].left);
    }
  }
  return out;
}

std::vector<int> Dendrogram::leaf_labels(NodeId n) const {
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  const std::vector<int> ls = leaves();
  for (std::size_t j = 0; j < ls.size(); ++j) {
    for (NodeId v : nodes[ls[j]].members) labels[v] = static_cast<int>(j);
  }
  return labels;
}

namespace {

nlohmann::ordered_json node_json(const Dendrogram& d, int i) {
  const DendrogramNode& node = d.nodes[i];
  nlohmann::ordered_json j;
  j["members"] = node.members;
  if (node.tested) {
    j["stat"] = node.outcome.value;
    j["threshold"] = node.outcome.threshold;
    j["reject"] = node.outcome.reject;
  } else {
    j["stat"] = nullptr;
    j["threshold"] = nullptr;
    j["reject"] = nullptr;
  }
  if (node.degenerate) j["degenerate"] = true;
  j["children"] = nlohmann::ordered_json::array();
  if (!node.is_leaf()) {
    j["children"].push_back(node_json(d, node.left));
    j["children"].push_back(node_json(d, node.right));
  }
  return j;
}

}  // namespace

std::string Dendrogram::to_json(int indent) const {
  if (nodes.empty()) return "{}";
  return node_json(*this, 0).dump(indent);
}

Dendrogram estimate_k_recursive(const Graph& g, const KEstimateConfig& cfg) {
  check_config(cfg);
  if (cfg.min_size < 2) throw ParameterError("min_size must be at least 2");
  Dendrogram d;
  DendrogramNode root;
  root.members.resize(static_cast<std::size_t>(g.num_nodes()));
  std::iota(root.members.begin(), root.members.end(), 0);
  d.nodes.push_back(std::move(root));

  for (std::size_t idx = 0; idx < d.nodes.size(); ++idx) {
    const std::vector<NodeId> members = d.nodes[idx].members;
    const auto size = static_cast<NodeId>(members.size());
    if (size < cfg.min_size || size < 3) continue;
    const std::uint64_t h = hash_members(members);
    const RngSeed seed{cfg.seed.master, h};
    const Subgraph sub = induced_subgraph(g, members);
    const double phat = estimate_p(sub.graph);
    // Empty or complete: the one-block fit is exact.
    if (phat == 0.0 || phat == 1.0) continue;
    const ModelEstimate est = ModelEstimate::constant(size, phat);
    TestOutcome t;
    try {
      const double value = compute_statistic(sub.graph, est, cfg.stat, 1);
      t = gof_test(value, k1_null(cfg, size, est.phat(), seed.child(0)), cfg.alpha, size);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("subgraph of " + std::to_string(size) + " nodes: " + e.what(),
                             e.best_residual());
    }
    d.nodes[idx].tested = true;
    d.nodes[idx].outcome = t;
    if (!t.reject) continue;

    const std::vector<int> labels = spectral_labels(sub.graph, 2, cfg.split, seed.child(1));
    std::vector<NodeId> left;
    std::vector<NodeId> right;
    for (NodeId i = 0; i < size; ++i) (labels[i] == 0 ? left : right).push_back(sub.to_original[i]);
    if (left.empty() || right.empty()) {
      d.nodes[idx].degenerate = true;
      d.nodes[idx].outcome.reject = false;
      continue;
    }
    std::sort(left.begin(), left.end());
    std::sort(right.begin(), right.end());
    DendrogramNode a;
    a.members = std::move(left);
    DendrogramNode b;
    b.members = std::move(right);
    d.nodes[idx].left = static_cast<int>(d.nodes.size());
    d.nodes.push_back(std::move(a));
    d.nodes[idx].right = static_cast<int>(d.nodes.size());
    d.nodes.push_back(std::move(b));
  }
  return d;
}

int count_nb_informative(const Graph& g) {
  const BlockOperator op = nb_operator(g);
  const auto dim = static_cast<int>(op.dim());
  if (dim == 0) return 1;
  EigOptions o;
  o.want_vectors = false;
  o.k = std::min(8, dim);
  Spectrum s;
  double radius = 0.0;
  while (true) {
    s = eig_leading(op, o);
    radius = std::sqrt(std::max(s[0].real(), 0.0));
    if (o.k >= dim || s.values.back().real() <= radius) break;
    o.k = std::min(2 * o.k, dim);
  }
  int k_hat = 1;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (is_real_eigenvalue(s[i]) && s[i].real() > radius) ++k_hat;
  }
  return k_hat;
}

// ---------------------------------------------------------------------------
// Closed forms

ExpectationEigs expectation_eigs_closed_form(double p, double k, double delta, std::int64_t n, double p0) {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("p must lie in (0, 1)");
  if (!(k >= 0.0)) throw ParameterError("k must be nonnegative");
  if (!(delta >= 0.0 && delta < 1.0)) throw ParameterError("delta must lie in [0, 1)");
  const double q = 1.0 - p;
  const double x = 2.0 * p * q / (p * p + k * q * q);
  const double scale = 0.5 * static_cast<double>(n) * p0;
  ExpectationEigs out;
  const double a = p - q + (p - k * q) * x * delta;
  const double r1 = std::sqrt(a * a + 4.0 * p * q * (1.0 - delta) * (1.0 - delta));
  out.l1_ea = scale * (1.0 + delta * x * (p + k * q) + r1);
  out.l2_ea = scale * (1.0 + delta * x * (p + k * q) - r1);
  const double b = (p - k * q) * x;
  const double r2 = std::sqrt(b * b + 4.0 * p * q);
  out.l1_centered = scale * delta * (x * (p + k * q) + r2);
  out.l2_centered = scale * delta * (x * (p + k * q) - r2);
  return out;
}

namespace {

void check_block_args(const Eigen::MatrixXd& b, std::span<const std::int64_t> sizes, std::span<const double> ell) {
  const auto k = static_cast<std::size_t>(b.rows());
  if (b.cols() != b.rows() || k == 0) throw ParameterError("B must be a non-empty square matrix");
  if (sizes.size() != k || ell.size() != k) throw ParameterError("sizes and ell must have K entries");
  for (auto s : sizes) {
    if (s < 1) throw ParameterError("block sizes must be at least 1");
  }
  if ((b - b.transpose()).cwiseAbs().maxCoeff() > 0.0) throw ParameterError("B must be symmetric");
}

}  // namespace

BlockMatrixSpectrum block_matrix_eigs(const Eigen::MatrixXd& b, std::span<const std::int64_t> sizes,
                                      std::span<const double> ell) {
  check_block_args(b, sizes, ell);
  const Eigen::Index k = b.rows();
  Eigen::MatrixXd reduced(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      reduced(i, j) = (i == j) ? b(i, i) * (static_cast<double>(sizes[i]) - ell[i])
                               : std::sqrt(static_cast<double>(sizes[i]) * sizes[j]) * b(i, j);
    }
  }
  BlockMatrixSpectrum out;
  const Spectrum s = eig_dense_sym(reduced, false);
  for (const auto& v : s.values) out.reduced.push_back(v.real());
  for (Eigen::Index i = 0; i < k; ++i) {
    if (sizes[i] > 1) out.repeated.emplace_back(-ell[i] * b(i, i), sizes[i] - 1);
  }
  return out;
}

std::vector<double> BlockMatrixSpectrum::expand() const {
  std::vector<double> all(reduced);
  for (const auto& [v, m] : repeated) all.insert(all.end(), static_cast<std::size_t>(m), v);
  std::sort(all.begin(), all.end(), std::greater<>());
  return all;
}

Eigen::MatrixXd assemble_block_matrix(const Eigen::MatrixXd& b, std::span<const std::int64_t> sizes,
                                      std::span<const double> ell) {
  check_block_args(b, sizes, ell);
  const std::int64_t n = std::accumulate(sizes.begin(), sizes.end(), std::int64_t{0});
  Eigen::MatrixXd m(n, n);
  std::int64_t r0 = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    std::int64_t c0 = 0;
    for (std::size_t j = 0; j < sizes.size(); ++j) {
      m.block(r0, c0, sizes[i], sizes[j]).setConstant(b(i, j));
      c0 += sizes[j];
    }
    m.block(r0, r0, sizes[i], sizes[i]).diagonal().array() -= ell[i] * b(i, i);
    r0 += sizes[i];
  }
  return m;
}

double label_correlation(std::span<const int> labels, std::span<const int> truth) {
  if (labels.size() != truth.size()) throw ParameterError("label vectors differ in length");
  const auto n = static_cast<double>(labels.size());
  if (labels.empty()) throw ParameterError("empty label vectors");
  double sa = 0.0, sb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if ((labels[i] != 0 && labels[i] != 1) || (truth[i] != 0 && truth[i] != 1)) {
      throw ParameterError("label_correlation needs binary labels in {0, 1}");
    }
    const double a = labels[i] ? 1.0 : -1.0;
    const double b = truth[i] ? 1.0 : -1.0;
    sa += a;
    sb += b;
    sab += a * b;
  }
  const double cov = sab / n - (sa / n) * (sb / n);
  const double va = 1.0 - (sa / n) * (sa / n);
  const double vb = 1.0 - (sb / n) * (sb / n);
  if (va <= 0.0 || vb <= 0.0) return 0.0;
  return std::min(1.0, std::abs(cov) / std::sqrt(va * vb));
}

}  // namespace nbgof
