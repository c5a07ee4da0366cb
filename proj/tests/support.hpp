#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "nbgof/graph.hpp"

namespace nbgof::testing {

inline Graph make_graph(NodeId n, std::vector<Edge> edges) { return Graph::from_edges(n, edges); }

inline Graph complete_graph(NodeId n) {
  std::vector<Edge> e;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) e.emplace_back(i, j);
  }
  return Graph::from_edges(n, e);
}

// Disjoint union of cliques of the given sizes.
inline Graph cliques(std::vector<NodeId> sizes) {
  std::vector<Edge> e;
  NodeId off = 0;
  for (NodeId s : sizes) {
    for (NodeId i = 0; i < s; ++i) {
      for (NodeId j = i + 1; j < s; ++j) e.emplace_back(off + i, off + j);
    }
    off += s;
  }
  return Graph::from_edges(off, e);
}

inline Graph cycle_graph(NodeId n) {
  std::vector<Edge> e;
  for (NodeId i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return Graph::from_edges(n, e);
}

inline std::vector<std::complex<double>> dense_eigenvalues(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  std::vector<std::complex<double>> v(es.eigenvalues().data(), es.eigenvalues().data() + m.rows());
  return v;
}

inline std::vector<double> sym_eigenvalues(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  std::vector<double> v(es.eigenvalues().data(), es.eigenvalues().data() + m.rows());
  std::sort(v.rbegin(), v.rend());
  return v;
}

struct Cluster {
  std::complex<double> centroid;
  int size = 0;
};

// Single-linkage clusters of radius `radius`; defective eigenvalues scatter
// but their centroid stays accurate.
inline std::vector<Cluster> cluster_eigenvalues(const std::vector<std::complex<double>>& vals,
                                                double radius) {
  const std::size_t m = vals.size();
  std::vector<int> comp(m, -1);
  int nc = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (comp[i] >= 0) continue;
    std::vector<std::size_t> stack{i};
    comp[i] = nc;
    while (!stack.empty()) {
      const std::size_t a = stack.back();
      stack.pop_back();
      for (std::size_t b = 0; b < m; ++b) {
        if (comp[b] < 0 && std::abs(vals[a] - vals[b]) < radius) {
          comp[b] = nc;
          stack.push_back(b);
        }
      }
    }
    ++nc;
  }
  std::vector<Cluster> out(static_cast<std::size_t>(nc));
  for (std::size_t i = 0; i < m; ++i) {
    out[static_cast<std::size_t>(comp[i])].centroid += vals[i];
    out[static_cast<std::size_t>(comp[i])].size += 1;
  }
  for (auto& c : out) c.centroid /= static_cast<double>(c.size);
  return out;
}

// Multiset equality of two spectra ignoring eigenvalues at +-1, at one
// clustering resolution.
inline bool same_spectrum_mod_pm1_at(const std::vector<std::complex<double>>& a,
                                     const std::vector<std::complex<double>>& b, double radius,
                                     double tol, double* worst) {
  auto strip = [](std::vector<Cluster> cs) {
    std::vector<Cluster> out;
    for (const auto& c : cs) {
      if (std::abs(c.centroid - 1.0) < 1e-6 || std::abs(c.centroid + 1.0) < 1e-6) continue;
      out.push_back(c);
    }
    return out;
  };
  auto ca = strip(cluster_eigenvalues(a, radius));
  auto cb = strip(cluster_eigenvalues(b, radius));
  if (ca.size() != cb.size()) return false;
  double w = 0.0;
  std::vector<bool> used(cb.size(), false);
  for (const auto& x : ca) {
    std::size_t best = cb.size();
    double bd = 1e300;
    for (std::size_t j = 0; j < cb.size(); ++j) {
      if (used[j] || cb[j].size != x.size) continue;
      const double d = std::abs(cb[j].centroid - x.centroid);
      if (d < bd) {
        bd = d;
        best = j;
      }
    }
    if (best == cb.size()) return false;
    used[best] = true;
    w = std::max(w, bd);
  }
  *worst = w;
  return w <= tol;
}

// Finest resolution first: eigenvalues close to +-1 separate at small radii,
// scattered defective eigenvalues merge at large ones.
inline bool same_spectrum_mod_pm1(const std::vector<std::complex<double>>& a,
                                  const std::vector<std::complex<double>>& b, double tol,
                                  double* worst = nullptr) {
  double w = 0.0;
  for (double radius : {1e-5, 1e-4, 1e-3, 1e-2}) {
    if (same_spectrum_mod_pm1_at(a, b, radius, tol, &w)) {
      if (worst) *worst = w;
      return true;
    }
  }
  if (worst) *worst = w;
  return false;
}

}  // namespace nbgof::testing
