#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nbgof/graph.hpp"
#include "nbgof/operators.hpp"
#include "nbgof/rng.hpp"

namespace nbgof {

enum class StatKind {
  kCenteredNb,       // mu_1(H-under-hat) / sqrt((n-1) p (1-p))
  kNormalizedAdj,    // lambda_1(normalized adjacency)
  kNbPlain,          // Re mu_{K0+1}(H) / sqrt(mu_1(H))
  kBetheHessian,     // -lambda_{n-K0}(H(r))
  kLikelihoodRatio,  // L_{K0, K0+1}
  kTriangle,         // sqrt(T) - sqrt(p^3)
};

enum class BhRadius { kRa, kRm, kUser };

struct TestStatKind {
  StatKind stat = StatKind::kCenteredNb;
  BhRadius radius = BhRadius::kRa;
  double r = 0.0;  // kUser only

  // Keys: cnb, nadj, nb, bh:ra, bh:rm, bh:r=<value>, lr, tri.
  static TestStatKind parse(const std::string& key);
  std::string key() const;
  // The TW1 reference applies to cnb and nadj only.
  bool has_tw_limit() const {
    return stat == StatKind::kCenteredNb || stat == StatKind::kNormalizedAdj;
  }
};

// Statistic value; larger means more evidence against H0 for every kind.
// `est` must carry K0 blocks (except for tri, which ignores it).
double compute_statistic(const Graph& g, const ModelEstimate& est, const TestStatKind& kind, int k0);

// sqrt(tr(A^3) / (6 C(n,3))) - sqrt(p^3), p = 2m / (n(n-1)).
double triangle_statistic(const Graph& g);
// Number of triangles (tr(A^3) / 6).
std::int64_t triangle_count(const Graph& g);

struct LikelihoodRatio {
  double value = 0.0;
  bool empty_block = false;
};

// log sup f_{K1}(labels1) - log sup f_{K0}(labels0) with
// f = (prod_{a,b} Q^O (1-Q)^{n-O})^{1/2} over ordered pairs and Q-hat = O / n
// (clamped). Labels are 0-based.
LikelihoodRatio likelihood_ratio(const Graph& g, std::span<const int> labels0,
                                 std::span<const int> labels1);

// TW1 quantile, q in [0.001, 0.999]; monotone cubic interpolation of a table.
double tw1_quantile(double q);
// Inverse of tw1_quantile; 0 / 1 beyond the tabulated range.
double tw1_cdf(double x);

enum class NullKind { kTw1, kEmpirical };

struct NullDistribution {
  NullKind kind = NullKind::kEmpirical;
  std::string stat;  // statistic key
  NodeId n = 0;
  double p = 0.0;
  int k0 = 1;
  std::int64_t reps = 0;
  std::uint64_t seed = 0;
  std::vector<double> values;  // sorted ascending (empirical)
  bool low_reps = false;       // reps < 100

  static NullDistribution tw1(NodeId n, const std::string& stat = "cnb");

  // Empirical: the ceil(q * reps)-th order statistic. TW1: tw1_quantile(q).
  double quantile(double q) const;

  // "# kind,n,p,K0,reps,seed" header, a header-value line, then one sorted
  // value per line.
  void write_csv(std::ostream& out) const;
  void write_csv(const std::filesystem::path& path) const;
  static NullDistribution read_csv(std::istream& in);
  static NullDistribution read_csv(const std::filesystem::path& path);
};

// Replicate i samples ER(n, p) with seed.child(i), re-estimates p-hat, and
// evaluates the statistic. K0 must be 1.
NullDistribution simulate_null(const TestStatKind& kind, NodeId n, double p, int k0,
                               std::int64_t reps, RngSeed seed);

// Several statistics on the same replicate graphs; entry s equals
// simulate_null(kinds[s], n, p, 1, reps, seed).
std::vector<NullDistribution> simulate_null_multi(std::span<const TestStatKind> kinds, NodeId n,
                                                  double p, std::int64_t reps, RngSeed seed);

enum class Refit {
  kSpectral,     // labels re-fitted by adjacency spectral clustering
  kFixedLabels,  // labels kept, Q-hat re-estimated
};

// Graphs resampled from P-hat, P-hat re-estimated per replicate.
NullDistribution bootstrap_null(const Graph& g, const ModelEstimate& est, const TestStatKind& kind,
                                std::int64_t reps, RngSeed seed, Refit refit = Refit::kSpectral);

struct TestOutcome {
  double value = 0.0;
  double threshold = 0.0;
  double alpha = 0.0;
  bool reject = false;
  NullKind null_kind = NullKind::kEmpirical;
  int k0 = 1;
};

// Deterministic shift (np)^{-1} for the TW threshold.
inline double tw_shift(NodeId n, double p) { return 1.0 / (static_cast<double>(n) * p); }

// Threshold: 2 + shift + n^{-2/3} TW1(1 - alpha) for a TW1 null, the
// empirical (1 - alpha) quantile otherwise. Rejects when value > threshold.
TestOutcome gof_test(double value, const NullDistribution& null, double alpha, NodeId n,
                     double shift = 0.0);

// v1' D v1 with v1 the leading eigenvector of the centered adjacency.
double v1_d_v1(const Graph& g, const ModelEstimate& est);

struct VdvDiagnostic {
  double lambda1 = 0.0;  // lambda_1(A-under)
  double v_d_v = 0.0;    // v1' D v1
  double v_dc_v = 0.0;   // v1' D-under v1
  std::int64_t max_degree = 0;
};
VdvDiagnostic vdv_diagnostic(const Graph& g, const ModelEstimate& est);

struct ApproxGap {
  double mu1 = 0.0;             // Re mu_1(H-tilde)
  double y1hx1_closed = 0.0;    // lambda + lambda^{-1} (1 - v' D v / alpha)
  double y1hx1_centered = 0.0;  // lambda + (1 - v' D-under v) / (alpha lambda)
  double y1hx1_explicit = 0.0;  // (v, 0) H-tilde (v, v / lambda)
  double lambda1 = 0.0;         // lambda_1(A-under / sqrt(alpha))
};
ApproxGap y1hx1_gap(const Graph& g, const ModelEstimate& est);

namespace detail {
extern const std::array<double, 999> kTw1Quantiles;  // q = 0.001, ..., 0.999
}  // namespace detail

}  // namespace nbgof
