#include "nbgof/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>

#include "nbgof/errors.hpp"

namespace nbgof {

Graph Graph::from_edges(NodeId n, std::span<const Edge> edges, std::size_t* dropped_self_loops,
                        std::size_t* dropped_duplicates) {
  if (n < 0) throw ParameterError("node count must be non-negative");
  std::vector<Edge> canon;
  canon.reserve(edges.size());
  std::size_t loops = 0;
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n) {
      throw ParameterError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                           ") out of range for " + std::to_string(n) + " nodes");
    }
    if (u == v) {
      ++loops;
      continue;
    }
    canon.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(canon.begin(), canon.end());
  const auto last = std::unique(canon.begin(), canon.end());
  const std::size_t dups = static_cast<std::size_t>(canon.end() - last);
  canon.erase(last, canon.end());
  if (dropped_self_loops) *dropped_self_loops = loops;
  if (dropped_duplicates) *dropped_duplicates = dups;

  Graph g;
  g.n_ = n;
  g.offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (auto [u, v] : canon) {
    ++g.offsets_[u + 1];
    ++g.offsets_[v + 1];
  }
  std::partial_sum(g.offsets_.begin(), g.offsets_.end(), g.offsets_.begin());
  g.targets_.resize(2 * canon.size());
  std::vector<std::int64_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  // Lexicographic edge order fills each row in ascending target order.
  for (auto [u, v] : canon) g.targets_[cursor[v]++] = u;
  for (auto [u, v] : canon) g.targets_[cursor[u]++] = v;
  for (NodeId i = 0; i < n; ++i) {
    std::sort(g.targets_.begin() + g.offsets_[i], g.targets_.begin() + g.offsets_[i + 1]);
  }
  return g;
}

bool Graph::has_edge(NodeId i, NodeId j) const {
  const auto nb = neighbors(i);
  return std::binary_search(nb.begin(), nb.end(), j);
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(static_cast<std::size_t>(num_edges()));
  for (NodeId u = 0; u < n_; ++u) {
    for (NodeId v : neighbors(u)) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

void Graph::adjacency_apply(std::span<const double> x, std::span<double> y) const {
  for (NodeId i = 0; i < n_; ++i) {
    double s = 0.0;
    for (std::int64_t k = offsets_[i]; k < offsets_[i + 1]; ++k) s += x[targets_[k]];
    y[i] = s;
  }
}

Eigen::MatrixXd Graph::dense_adjacency() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
  for (NodeId i = 0; i < n_; ++i) {
    for (NodeId j : neighbors(i)) a(i, j) = 1.0;
  }
  return a;
}

std::vector<std::int64_t> degrees(const Graph& g) {
  std::vector<std::int64_t> d(static_cast<std::size_t>(g.num_nodes()));
  for (NodeId i = 0; i < g.num_nodes(); ++i) d[i] = g.degree(i);
  return d;
}

// ---------------------------------------------------------------------------
// Block models

std::vector<std::int64_t> BlockModelSpec::block_sizes() const {
  std::vector<std::int64_t> sizes(static_cast<std::size_t>(num_blocks()), 0);
  for (int b : memberships) ++sizes[b];
  return sizes;
}

void BlockModelSpec::validate() const {
  const int k = num_blocks();
  if (k < 1 || q.cols() != k) throw ParameterError("block matrix Q must be square and non-empty");
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      const double v = q(a, b);
      if (!(v >= 0.0 && v <= 1.0)) {
        std::ostringstream msg;
        msg << "Q(" << a + 1 << "," << b + 1 << ") = " << v << " outside [0, 1]";
        throw ParameterError(msg.str());
      }
      if (q(a, b) != q(b, a)) throw ParameterError("block matrix Q must be symmetric");
    }
  }
  std::vector<bool> seen(static_cast<std::size_t>(k), false);
  for (int b : memberships) {
    if (b < 0 || b >= k) throw ParameterError("membership label outside [0, K)");
    seen[b] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw ParameterError("every block must contain at least one node");
  }
}

BlockModelSpec BlockModelSpec::contiguous(std::span<const std::int64_t> sizes, Eigen::MatrixXd q) {
  BlockModelSpec spec;
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    spec.memberships.insert(spec.memberships.end(), static_cast<std::size_t>(sizes[b]),
                            static_cast<int>(b));
  }
  spec.q = std::move(q);
  return spec;
}

QDeltaKind parse_q_delta_kind(const std::string& name) {
  if (name == "balanced") return QDeltaKind::kBalanced;
  if (name == "unbalanced") return QDeltaKind::kUnbalanced;
  if (name == "equal_degree") return QDeltaKind::kEqualDegree;
  if (name == "three_block") return QDeltaKind::kThreeBlock;
  throw ParameterError("unknown model family '" + name + "'");
}

std::string to_string(QDeltaKind kind) {
  switch (kind) {
    case QDeltaKind::kBalanced: return "balanced";
    case QDeltaKind::kUnbalanced: return "unbalanced";
    case QDeltaKind::kEqualDegree: return "equal_degree";
    case QDeltaKind::kThreeBlock: return "three_block";
  }
  return "?";
}

BlockModelSpec build_q_delta(QDeltaKind kind, std::int64_t n1, std::int64_t n2,
                             std::optional<std::int64_t> n3, double p0, double delta) {
  if (!(delta >= 0.0 && delta < 1.0)) throw ParameterError("delta must lie in [0, 1)");
  if (!(p0 >= 0.0 && p0 <= 1.0)) throw ParameterError("p0 must lie in [0, 1]");
  if (n1 < 2 || n2 < 2) throw ParameterError("block sizes n1, n2 must be at least 2");
  if ((kind == QDeltaKind::kThreeBlock) != n3.has_value()) {
    throw ParameterError("n3 is required for three_block and only for it");
  }
  if (n3 && *n3 < 1) throw ParameterError("block size n3 must be positive");

  const double a = static_cast<double>(n1);
  const double b = static_cast<double>(n2);
  const double q12 = p0 * (1.0 - delta);
  double q11 = p0;
  double q22 = p0;
  switch (kind) {
    case QDeltaKind::kBalanced:
    case QDeltaKind::kThreeBlock:
      q11 = q22 = p0 * (1.0 + 2.0 * a * b / (a * (a - 1.0) + b * (b - 1.0)) * delta);
      break;
    case QDeltaKind::kUnbalanced:
      q22 = p0 * (1.0 + 2.0 * a / (b - 1.0) * delta);
      break;
    case QDeltaKind::kEqualDegree:
      q11 = p0 * (1.0 + b / (a - 1.0) * delta);
      q22 = p0 * (1.0 + a / (b - 1.0) * delta);
      break;
  }

  std::vector<std::int64_t> sizes{n1, n2};
  Eigen::MatrixXd q;
  if (kind == QDeltaKind::kThreeBlock) {
    sizes.push_back(*n3);
    q.resize(3, 3);
    q << q11, q12, 0.3 * p0,
         q12, q22, 0.3 * p0,
         0.3 * p0, 0.3 * p0, p0;
  } else {
    q.resize(2, 2);
    q << q11, q12,
         q12, q22;
  }
  BlockModelSpec spec = BlockModelSpec::contiguous(sizes, std::move(q));
  spec.validate();
  return spec;
}

namespace {

// Visits a Bernoulli(p) subset of the indices [0, count) in increasing order
// by geometric skipping.
template <typename Visit>
void bernoulli_indices(std::int64_t count, double p, CounterRng& rng, Visit&& visit) {
  if (count <= 0 || p <= 0.0) return;
  if (p >= 1.0) {
    for (std::int64_t k = 0; k < count; ++k) visit(k);
    return;
  }
  const double log_q = std::log1p(-p);
  std::int64_t k = -1;
  while (true) {
    const double skip = std::floor(std::log(rng.uniform_open0()) / log_q);
    if (skip >= static_cast<double>(count - k - 1)) return;
    k += 1 + static_cast<std::int64_t>(skip);
    visit(k);
  }
}

}  // namespace

Graph sample_sbm(const BlockModelSpec& spec, RngSeed seed) {
  spec.validate();
  const int k = spec.num_blocks();
  std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(k));
  for (NodeId i = 0; i < spec.num_nodes(); ++i) members[spec.memberships[i]].push_back(i);

  CounterRng rng(seed);
  std::vector<Edge> edges;
  for (int a = 0; a < k; ++a) {
    const auto& ma = members[a];
    const auto sa = static_cast<std::int64_t>(ma.size());
    // Within block: pairs (r, c) with r < c, enumerated row by row.
    {
      std::int64_t row = 0;
      std::int64_t row_start = 0;  // linear index of (row, row + 1)
      bernoulli_indices(sa * (sa - 1) / 2, spec.q(a, a), rng, [&](std::int64_t idx) {
        while (idx - row_start >= sa - 1 - row) {
          row_start += sa - 1 - row;
          ++row;
        }
        const std::int64_t col = row + 1 + (idx - row_start);
        edges.emplace_back(ma[row], ma[col]);
      });
    }
    for (int b = a + 1; b < k; ++b) {
      const auto& mb = members[b];
      const auto sb = static_cast<std::int64_t>(mb.size());
      bernoulli_indices(sa * sb, spec.q(a, b), rng, [&](std::int64_t idx) {
        edges.emplace_back(ma[idx / sb], mb[idx % sb]);
      });
    }
  }
  return Graph::from_edges(spec.num_nodes(), edges);
}

Graph sample_er(NodeId n, double p, RngSeed seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("edge probability p must lie in [0, 1]");
  if (n < 1) throw ParameterError("node count must be at least 1");
  const std::int64_t sizes[] = {n};
  return sample_sbm(BlockModelSpec::contiguous(sizes, Eigen::MatrixXd::Constant(1, 1, p)), seed);
}

// ---------------------------------------------------------------------------
// Edge lists

ReadGraph parse_edge_list(std::istream& in) {
  std::vector<std::pair<std::int64_t, std::int64_t>> raw;
  std::optional<std::int64_t> declared_nodes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      std::istringstream comment(line.substr(hash + 1));
      std::string key;
      std::int64_t value = 0;
      if (raw.empty() && !declared_nodes && comment >> key && key == "nodes" && comment >> value) {
        if (value < 0) throw IoError("line " + std::to_string(line_no) + ": negative node count");
        declared_nodes = value;
      }
      line.erase(hash);
    }
    std::istringstream fields(line);
    std::string tok_u, tok_v, extra;
    if (!(fields >> tok_u)) continue;
    if (!(fields >> tok_v) || (fields >> extra)) {
      throw IoError("line " + std::to_string(line_no) + ": expected two node ids");
    }
    auto parse_id = [&](const std::string& tok) {
      std::size_t used = 0;
      long long v = -1;
      try {
        v = std::stoll(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || v < 0) {
        throw IoError("line " + std::to_string(line_no) + ": invalid node id '" + tok + "'");
      }
      return static_cast<std::int64_t>(v);
    };
    raw.emplace_back(parse_id(tok_u), parse_id(tok_v));
  }

  ReadGraph result;
  std::vector<Edge> edges;
  edges.reserve(raw.size());
  NodeId n = 0;
  if (declared_nodes) {
    n = static_cast<NodeId>(*declared_nodes);
    for (auto [u, v] : raw) {
      if (u >= n || v >= n) throw IoError("node id exceeds declared node count");
      edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
    }
    result.report.original_ids.resize(static_cast<std::size_t>(n));
    std::iota(result.report.original_ids.begin(), result.report.original_ids.end(), 0);
  } else {
    std::vector<std::int64_t> ids;
    ids.reserve(2 * raw.size());
    for (auto [u, v] : raw) {
      ids.push_back(u);
      ids.push_back(v);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    auto dense = [&](std::int64_t id) {
      return static_cast<NodeId>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
    };
    for (auto [u, v] : raw) edges.emplace_back(dense(u), dense(v));
    n = static_cast<NodeId>(ids.size());
    result.report.relabeled = !ids.empty() && ids.back() != static_cast<std::int64_t>(ids.size()) - 1;
    result.report.original_ids = std::move(ids);
  }
  result.graph = Graph::from_edges(n, edges, &result.report.dropped_self_loops,
                                   &result.report.dropped_duplicates);
  return result;
}

ReadGraph read_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list '" + path.string() + "'");
  return parse_edge_list(in);
}

void write_edge_list(const Graph& g, std::ostream& out) {
  out << "# nodes " << g.num_nodes() << '\n';
  for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

void write_edge_list(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write edge list '" + path.string() + "'");
  write_edge_list(g, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Components

Subgraph induced_subgraph(const Graph& g, std::span<const NodeId> nodes) {
  std::vector<NodeId> local(static_cast<std::size_t>(g.num_nodes()), -1);
  for (std::size_t k = 0; k < nodes.size(); ++k) local[nodes[k]] = static_cast<NodeId>(k);
  std::vector<Edge> edges;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    for (NodeId v : g.neighbors(nodes[k])) {
      const NodeId lv = local[v];
      if (lv >= 0 && static_cast<NodeId>(k) < lv) edges.emplace_back(static_cast<NodeId>(k), lv);
    }
  }
  return Subgraph{Graph::from_edges(static_cast<NodeId>(nodes.size()), edges),
                  std::vector<NodeId>(nodes.begin(), nodes.end())};
}

std::vector<NodeId> connected_components(const Graph& g, NodeId* count) {
  std::vector<NodeId> comp(static_cast<std::size_t>(g.num_nodes()), -1);
  NodeId next = 0;
  std::queue<NodeId> frontier;
  for (NodeId s = 0; s < g.num_nodes(); ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = next;
    frontier.push(s);
    while (!frontier.empty()) {
      const NodeId u = frontier.front();
      frontier.pop();
      for (NodeId v : g.neighbors(u)) {
        if (comp[v] < 0) {
          comp[v] = next;
          frontier.push(v);
        }
      }
    }
    ++next;
  }
  if (count) *count = next;
  return comp;
}

Subgraph largest_connected_component(const Graph& g) {
  if (g.num_nodes() == 0) return Subgraph{};
  NodeId count = 0;
  const auto comp = connected_components(g, &count);
  std::vector<std::int64_t> sizes(static_cast<std::size_t>(count), 0);
  for (NodeId c : comp) ++sizes[c];
  // Components are numbered by smallest member, so the first maximum wins ties.
  const auto best = static_cast<NodeId>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  std::vector<NodeId> nodes;
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    if (comp[i] == best) nodes.push_back(i);
  }
  return induced_subgraph(g, nodes);
}

}  // namespace nbgof
