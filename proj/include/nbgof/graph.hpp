#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nbgof/rng.hpp"

namespace nbgof {

using NodeId = std::int32_t;
using Edge = std::pair<NodeId, NodeId>;

// Undirected simple graph in compressed sparse row form. Both directions of
// every edge are stored and neighbor lists are sorted ascending. Immutable
// after construction.
class Graph {
 public:
  Graph() = default;

  // Builds the canonical graph on `n` nodes. Self-loops are dropped and
  // duplicate or reversed pairs collapsed; counts of each are written to the
  // optional out-parameters.
  static Graph from_edges(NodeId n, std::span<const Edge> edges,
                          std::size_t* dropped_self_loops = nullptr,
                          std::size_t* dropped_duplicates = nullptr);

  NodeId num_nodes() const { return n_; }
  std::int64_t num_edges() const { return static_cast<std::int64_t>(targets_.size() / 2); }

  std::span<const NodeId> neighbors(NodeId i) const {
    return {targets_.data() + offsets_[i], targets_.data() + offsets_[i + 1]};
  }
  NodeId degree(NodeId i) const {
    return static_cast<NodeId>(offsets_[i + 1] - offsets_[i]);
  }
  bool has_edge(NodeId i, NodeId j) const;

  const std::vector<std::int64_t>& offsets() const { return offsets_; }
  const std::vector<NodeId>& targets() const { return targets_; }

  // Canonical edge list: u < v, sorted lexicographically.
  std::vector<Edge> edges() const;

  // y = A x.
  void adjacency_apply(std::span<const double> x, std::span<double> y) const;

  Eigen::MatrixXd dense_adjacency() const;

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.n_ == b.n_ && a.offsets_ == b.offsets_ && a.targets_ == b.targets_;
  }

 private:
  NodeId n_ = 0;
  std::vector<std::int64_t> offsets_{0};
  std::vector<NodeId> targets_;
};

std::vector<std::int64_t> degrees(const Graph& g);

// Stochastic block model parameters. Block ids are 0-based: memberships[i]
// lies in [0, K) and every block is non-empty.
struct BlockModelSpec {
  std::vector<int> memberships;
  Eigen::MatrixXd q;

  int num_blocks() const { return static_cast<int>(q.rows()); }
  NodeId num_nodes() const { return static_cast<NodeId>(memberships.size()); }
  std::vector<std::int64_t> block_sizes() const;
  double edge_probability(NodeId i, NodeId j) const {
    return q(memberships[i], memberships[j]);
  }

  // Throws ParameterError when Q is not symmetric, has entries outside
  // [0, 1], or labels do not cover 0..K-1.
  void validate() const;

  // Contiguous memberships: the first sizes[0] nodes in block 0, and so on.
  static BlockModelSpec contiguous(std::span<const std::int64_t> sizes, Eigen::MatrixXd q);
};

enum class QDeltaKind { kBalanced, kUnbalanced, kEqualDegree, kThreeBlock };

QDeltaKind parse_q_delta_kind(const std::string& name);
std::string to_string(QDeltaKind kind);

// Two-block (or three-block) model whose off-diagonal probability is
// p0 (1 - delta) and whose diagonal is raised so that the average edge
// density of the two-block part stays at p0:
//   balanced:     Q11 = Q22 = p0 (1 + 2 n1 n2 / (n1(n1-1) + n2(n2-1)) delta)
//   unbalanced:   Q11 = p0, Q22 = p0 (1 + 2 n1 / (n2 - 1) delta)
//   equal_degree: Q11 = p0 (1 + n2 / (n1 - 1) delta),
//                 Q22 = p0 (1 + n1 / (n2 - 1) delta)
//   three_block:  balanced Q on blocks 1-2, Q13 = Q23 = 0.3 p0, Q33 = p0.
BlockModelSpec build_q_delta(QDeltaKind kind, std::int64_t n1, std::int64_t n2,
                             std::optional<std::int64_t> n3, double p0, double delta);

Graph sample_er(NodeId n, double p, RngSeed seed);
Graph sample_sbm(const BlockModelSpec& spec, RngSeed seed);

struct EdgeListReport {
  std::size_t dropped_self_loops = 0;
  std::size_t dropped_duplicates = 0;
  // original_ids[new index] = id in the file.
  std::vector<std::int64_t> original_ids;
  bool relabeled = false;
};

struct ReadGraph {
  Graph graph;
  EdgeListReport report;
};

// Whitespace-separated 0-based integer pairs, '#' comments. A leading
// "# nodes N" line pins the node count (ids used as-is, isolated nodes kept);
// without it the distinct ids are relabeled densely in ascending order.
ReadGraph parse_edge_list(std::istream& in);
ReadGraph read_edge_list(const std::filesystem::path& path);

// Writes "# nodes N" followed by one "u v" line per edge (u < v, ascending),
// LF-terminated.
void write_edge_list(const Graph& g, std::ostream& out);
void write_edge_list(const Graph& g, const std::filesystem::path& path);

struct Subgraph {
  Graph graph;
  std::vector<NodeId> to_original;
};

// Node-induced subgraph; `nodes` may be in any order, the subgraph numbers
// them in the given order.
Subgraph induced_subgraph(const Graph& g, std::span<const NodeId> nodes);

// Component id per node; components are numbered in order of their smallest
// node index.
std::vector<NodeId> connected_components(const Graph& g, NodeId* count = nullptr);

// Largest component; ties go to the component holding the smallest index.
Subgraph largest_connected_component(const Graph& g);

}  // namespace nbgof
