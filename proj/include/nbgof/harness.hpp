#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nbgof/estimate.hpp"
#include "nbgof/graph.hpp"
#include "nbgof/stats.hpp"

namespace nbgof {

// Inclusive grid lo, lo + step, ..., hi (rounded to the step).
std::vector<double> delta_grid(double lo, double hi, double step);

struct SweepConfig {
  QDeltaKind family = QDeltaKind::kBalanced;
  std::int64_t n1 = 250;
  std::int64_t n2 = 250;
  std::optional<std::int64_t> n3;
  double p0 = 0.01;
  std::vector<double> deltas = delta_grid(0.0, 0.98, 0.02);
  std::vector<TestStatKind> stats;
  std::vector<Embedding> embeddings{Embedding::kCenteredNbHalf, Embedding::kCenteredAdjacency,
                                    Embedding::kNbHalf};
  double alpha = 0.05;
  std::int64_t reps = 1000;
  std::int64_t null_reps = 2000;
  NullSource null = NullSource::kMonteCarlo;
  std::uint64_t seed = 1;

  NodeId num_nodes() const { return static_cast<NodeId>(n1 + n2 + n3.value_or(0)); }
  // Throws ParameterError on empty grids, reps < 1, or bad model parameters.
  void validate() const;
};

struct PowerRow {
  std::string stat;
  double delta = 0.0;
  std::int64_t rejections = 0;
  double power = 0.0;
  double se = 0.0;  // sqrt(power (1 - power) / reps)
  double threshold = 0.0;
};

struct PowerTable {
  SweepConfig cfg;
  std::vector<PowerRow> rows;  // stat-major, delta ascending

  // Power per delta for one statistic.
  std::vector<double> power_curve(const std::string& stat) const;
  // Smallest delta with power >= level, or nullopt.
  std::optional<double> first_delta_reaching(const std::string& stat, double level) const;
  void write_csv(std::ostream& out) const;
  void write_csv(const std::filesystem::path& path) const;
};

// Thresholds from K0 = 1 nulls at density p0 (shared graphs across
// statistics); replicate i of cell c samples with seed (seed, c).child(i).
PowerTable run_power_sweep(const SweepConfig& cfg);

enum class DensityMode { kFixedDegree, kFixedP };

struct NullScalingRow {
  NodeId n = 0;
  double p = 0.0;
  std::string stat;
  std::int64_t reps = 0;
  std::vector<double> quantiles;  // of n^{2/3}(value - 2) at kScalingLevels
  double median_shifted = 0.0;    // median of n^{2/3}(value - 2 - 1/(np))
  double ks_tw1 = 0.0;            // KS distance of n^{2/3}(value - 2) to TW1
  double tw_reject_rate = 0.0;    // fraction above the TW1 threshold at alpha
};

inline constexpr double kScalingLevels[] = {0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95};

struct NullScalingTable {
  std::vector<NodeId> ns;
  DensityMode mode = DensityMode::kFixedP;
  double density = 0.0;  // degree d or probability p
  double alpha = 0.05;
  std::int64_t reps = 0;
  std::uint64_t seed = 0;
  std::vector<NullScalingRow> rows;

  const NullScalingRow& row(NodeId n, const std::string& stat) const;
  void write_csv(std::ostream& out) const;
  void write_csv(const std::filesystem::path& path) const;
};

// p = d / (n - 1) in fixed-degree mode.
NullScalingTable run_null_scaling(std::span<const NodeId> ns, DensityMode mode, double density,
                                  std::span<const TestStatKind> stats, std::int64_t reps,
                                  std::uint64_t seed, double alpha = 0.05);

// p(n) = c for kConstant, c n^{-1/3}, c n^{-1/2}, c n^{-1}.
enum class PMode { kConstant, kCubeRoot, kSquareRoot, kInverse };
PMode parse_p_mode(const std::string& name);
std::string to_string(PMode mode);
double default_p_scale(PMode mode);
double p_of_n(PMode mode, double c, NodeId n);

struct VdvRow {
  NodeId n = 0;
  double p = 0.0;
  double median_abs_vdcv = 0.0;  // |v' D-under v|
  double q25_abs_vdcv = 0.0;
  double q75_abs_vdcv = 0.0;
  double median_vdv = 0.0;  // v' D v
  double median_ratio = 0.0;  // v' D v / (log n / log log n)
  double frac_ratio_ge_04 = 0.0;
  bool within_dmax = true;    // v' D v <= d_max on every replicate
};

struct VdvTable {
  PMode mode = PMode::kConstant;
  double scale = 0.0;
  std::int64_t reps = 0;
  std::uint64_t seed = 0;
  std::vector<VdvRow> rows;
  double slope = 0.0;  // least squares slope of log median |v' D-under v| vs log n

  void write_csv(std::ostream& out) const;
  void write_csv(const std::filesystem::path& path) const;
};

VdvTable run_vdv_growth(PMode mode, double scale, std::span<const NodeId> ns, std::int64_t reps,
                        std::uint64_t seed);

struct ApproxGapRow {
  NodeId n = 0;
  double p = 0.0;
  double alpha = 0.0;
  double median_mu_y = 0.0;      // |mu_1 - y' H x|
  double median_y_lambda = 0.0;  // |y' H x - lambda_1|
  double median_mu_lambda = 0.0; // |mu_1 - lambda_1|
  double ratio = 0.0;            // median_mu_y / median_y_lambda
  double predicted_gap = 0.0;    // sqrt(log n / log log n) / (2 sqrt(alpha))
  double max_identity_error = 0.0;  // closed form vs explicit product
  bool triangle_ok = true;
};

struct ApproxGapTable {
  PMode mode = PMode::kConstant;
  double scale = 0.0;
  std::int64_t reps = 0;
  std::uint64_t seed = 0;
  std::vector<ApproxGapRow> rows;

  void write_csv(std::ostream& out) const;
  void write_csv(const std::filesystem::path& path) const;
};

ApproxGapTable run_approx_gap(PMode mode, double scale, std::span<const NodeId> ns,
                              std::int64_t reps, std::uint64_t seed);

struct ClusteringRow {
  std::string embedding;
  double delta = 0.0;
  double mean_corr = 0.0;
  double se = 0.0;
};

struct ClusteringTable {
  SweepConfig cfg;
  std::vector<ClusteringRow> rows;

  double mean_corr(const std::string& embedding, double delta) const;
  void write_csv(std::ostream& out) const;
  void write_csv(const std::filesystem::path& path) const;
};

ClusteringTable run_clustering_corr(const SweepConfig& cfg);

}  // namespace nbgof
