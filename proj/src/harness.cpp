#include "nbgof/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numeric>
#include <ostream>

#include "nbgof/errors.hpp"

namespace nbgof {

namespace {

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string join_stats(const std::vector<TestStatKind>& stats) {
  std::string out;
  for (std::size_t i = 0; i < stats.size(); ++i) out += (i ? ";" : "") + stats[i].key();
  return out;
}

template <class T>
void write_file(const std::filesystem::path& path, const T& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  table.write_csv(out);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

// Runs fn(i) for i in [0, count) in parallel; rethrows the lowest-index error.
template <class Fn>
void parallel_for(std::int64_t count, Fn&& fn) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      fn(i);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double order_stat(const std::vector<double>& sorted, double q) {
  const auto r = static_cast<double>(sorted.size());
  auto idx = static_cast<std::int64_t>(std::ceil(q * r - 1e-9)) - 1;
  idx = std::clamp<std::int64_t>(idx, 0, static_cast<std::int64_t>(sorted.size()) - 1);
  return sorted[static_cast<std::size_t>(idx)];
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  if (m == 0) return 0.0;
  return (m % 2 == 1) ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

// Type-7 quantile.
double quantile7(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return 0.0;
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double log_ratio_scale(NodeId n) {
  const double ln = std::log(static_cast<double>(n));
  return ln / std::log(ln);
}

constexpr std::uint64_t kNullStream = 0x6e756c6cULL;
constexpr std::uint64_t kClusterStream = 0x636c7573ULL;

}  // namespace

std::vector<double> delta_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw ParameterError("delta grid needs step > 0 and hi >= lo");
  std::vector<double> out;
  const auto count = static_cast<std::int64_t>(std::floor((hi - lo) / step + 1e-9));
  for (std::int64_t i = 0; i <= count; ++i) {
    out.push_back(std::round((lo + static_cast<double>(i) * step) * 1e9) / 1e9);
  }
  return out;
}

void SweepConfig::validate() const {
  if (deltas.empty()) throw ParameterError("delta grid is empty");
  if (reps < 1) throw ParameterError("reps must be at least 1");
  if (null_reps < 1) throw ParameterError("null reps must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
  for (double d : deltas) build_q_delta(family, n1, n2, n3, p0, d).validate();
}

// ---------------------------------------------------------------------------
// Power

std::vector<double> PowerTable::power_curve(const std::string& stat) const {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.stat == stat) out.push_back(r.power);
  }
  return out;
}

std::optional<double> PowerTable::first_delta_reaching(const std::string& stat, double level) const {
  for (const auto& r : rows) {
    if (r.stat == stat && r.power >= level) return r.delta;
  }
  return std::nullopt;
}

void PowerTable::write_csv(std::ostream& out) const {
  out << "# experiment=power\n";
  out << "# family=" << to_string(cfg.family) << " n1=" << cfg.n1 << " n2=" << cfg.n2;
  if (cfg.n3) out << " n3=" << *cfg.n3;
  out << " p0=" << fmt(cfg.p0, "%.10g") << '\n';
  out << "# alpha=" << fmt(cfg.alpha, "%.10g") << " reps=" << cfg.reps << " null_reps=" << cfg.null_reps
      << " null=" << (cfg.null == NullSource::kTw ? "tw" : "mc") << " seed=" << cfg.seed << '\n';
  out << "# stats=" << join_stats(cfg.stats) << '\n';
  out << "stat,delta,rejections,power,se,threshold\n";
  for (const auto& r : rows) {
    out << r.stat << ',' << fmt(r.delta, "%.4f") << ',' << r.rejections << ',' << fmt(r.power) << ','
        << fmt(r.se) << ',' << fmt(r.threshold, "%.10f") << '\n';
  }
}

void PowerTable::write_csv(const std::filesystem::path& path) const { write_file(path, *this); }

PowerTable run_power_sweep(const SweepConfig& cfg) {
  cfg.validate();
  if (cfg.stats.empty()) throw ParameterError("no statistics selected");
  const NodeId n = cfg.num_nodes();
  const std::size_t ns = cfg.stats.size();

  // Thresholds.
  std::vector<double> thresholds(ns, 0.0);
  std::vector<TestStatKind> mc_stats;
  std::vector<std::size_t> mc_index;
  for (std::size_t s = 0; s < ns; ++s) {
    if (cfg.null == NullSource::kTw && cfg.stats[s].has_tw_limit()) {
      thresholds[s] = gof_test(0.0, NullDistribution::tw1(n), cfg.alpha, n).threshold;
    } else {
      mc_stats.push_back(cfg.stats[s]);
      mc_index.push_back(s);
    }
  }
  if (!mc_stats.empty()) {
    const auto nulls = simulate_null_multi(mc_stats, n, cfg.p0, cfg.null_reps,
                                           RngSeed{hash_combine(cfg.seed, kNullStream), 0});
    for (std::size_t j = 0; j < mc_stats.size(); ++j) {
      thresholds[mc_index[j]] = nulls[j].quantile(1.0 - cfg.alpha);
    }
  }

  PowerTable table;
  table.cfg = cfg;
  std::vector<std::vector<std::int64_t>> rejections(ns, std::vector<std::int64_t>(cfg.deltas.size(), 0));
  for (std::size_t c = 0; c < cfg.deltas.size(); ++c) {
    const BlockModelSpec spec = build_q_delta(cfg.family, cfg.n1, cfg.n2, cfg.n3, cfg.p0, cfg.deltas[c]);
    const RngSeed cell{cfg.seed, c};
    std::vector<unsigned char> flags(static_cast<std::size_t>(cfg.reps) * ns, 0);
    parallel_for(cfg.reps, [&](std::int64_t i) {
      const Graph g = sample_sbm(spec, cell.child(static_cast<std::uint64_t>(i)));
      const ModelEstimate est = ModelEstimate::constant(n, estimate_p(g));
      for (std::size_t s = 0; s < ns; ++s) {
        const double v = compute_statistic(g, est, cfg.stats[s], 1);
        flags[static_cast<std::size_t>(i) * ns + s] = v > thresholds[s] ? 1 : 0;
      }
    });
    for (std::int64_t i = 0; i < cfg.reps; ++i) {
      for (std::size_t s = 0; s < ns; ++s) rejections[s][c] += flags[static_cast<std::size_t>(i) * ns + s];
    }
  }
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t c = 0; c < cfg.deltas.size(); ++c) {
      PowerRow r;
      r.stat = cfg.stats[s].key();
      r.delta = cfg.deltas[c];
      r.rejections = rejections[s][c];
      r.power = static_cast<double>(r.rejections) / static_cast<double>(cfg.reps);
      r.se = std::sqrt(r.power * (1.0 - r.power) / static_cast<double>(cfg.reps));
      r.threshold = thresholds[s];
      table.rows.push_back(r);
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Null scaling

const NullScalingRow& NullScalingTable::row(NodeId n, const std::string& stat) const {
  for (const auto& r : rows) {
    if (r.n == n && r.stat == stat) return r;
  }
  throw ParameterError("no null-scaling row for n = " + std::to_string(n) + ", stat " + stat);
}

void NullScalingTable::write_csv(std::ostream& out) const {
  out << "# experiment=null_scaling\n";
  out << "# mode=" << (mode == DensityMode::kFixedDegree ? "fixed_degree" : "fixed_p")
      << " density=" << fmt(density, "%.10g") << " alpha=" << fmt(alpha, "%.10g") << " reps=" << reps
      << " seed=" << seed << '\n';
  out << "n,p,stat,reps";
  for (double q : kScalingLevels) out << ",q" << fmt(q, "%.2f");
  out << ",median_shifted,ks_tw1,tw_reject_rate\n";
  for (const auto& r : rows) {
    out << r.n << ',' << fmt(r.p, "%.10g") << ',' << r.stat << ',' << r.reps;
    for (double v : r.quantiles) out << ',' << fmt(v);
    out << ',' << fmt(r.median_shifted) << ',' << fmt(r.ks_tw1) << ',' << fmt(r.tw_reject_rate) << '\n';
  }
}

void NullScalingTable::write_csv(const std::filesystem::path& path) const { write_file(path, *this); }

NullScalingTable run_null_scaling(std::span<const NodeId> ns, DensityMode mode, double density,
                                  std::span<const TestStatKind> stats, std::int64_t reps,
                                  std::uint64_t seed, double alpha) {
  if (ns.empty() || stats.empty()) throw ParameterError("null scaling needs sizes and statistics");
  if (reps < 1) throw ParameterError("reps must be at least 1");
  NullScalingTable table;
  table.ns.assign(ns.begin(), ns.end());
  table.mode = mode;
  table.density = density;
  table.alpha = alpha;
  table.reps = reps;
  table.seed = seed;
  for (NodeId n : ns) {
    const double p = mode == DensityMode::kFixedDegree ? density / (n - 1.0) : density;
    if (!(p > 0.0 && p <= 1.0)) throw ParameterError("density gives p outside (0, 1]");
    const auto nulls = simulate_null_multi(stats, n, p, reps, RngSeed{seed, static_cast<std::uint64_t>(n)});
    const double scale = std::pow(static_cast<double>(n), 2.0 / 3.0);
    const double tw_threshold = 2.0 + tw1_quantile(1.0 - alpha) / scale;
    for (std::size_t s = 0; s < stats.size(); ++s) {
      NullScalingRow r;
      r.n = n;
      r.p = p;
      r.stat = stats[s].key();
      r.reps = reps;
      std::vector<double> x(nulls[s].values.size());
      std::vector<double> shifted(x.size());
      std::int64_t above = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = nulls[s].values[i];
        x[i] = scale * (v - 2.0);
        shifted[i] = scale * (v - 2.0 - tw_shift(n, p));
        above += v > tw_threshold ? 1 : 0;
      }
      for (double q : kScalingLevels) r.quantiles.push_back(order_stat(x, q));
      r.median_shifted = median(shifted);
      const auto m = static_cast<double>(x.size());
      double ks = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = tw1_cdf(x[i]);
        ks = std::max({ks, std::abs(f - static_cast<double>(i + 1) / m), std::abs(f - static_cast<double>(i) / m)});
      }
      r.ks_tw1 = ks;
      r.tw_reject_rate = static_cast<double>(above) / m;
      table.rows.push_back(std::move(r));
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// p(n) modes

PMode parse_p_mode(const std::string& name) {
  if (name == "constant") return PMode::kConstant;
  if (name == "n^-1/3" || name == "cube_root") return PMode::kCubeRoot;
  if (name == "n^-1/2" || name == "square_root") return PMode::kSquareRoot;
  if (name == "n^-1" || name == "inverse") return PMode::kInverse;
  throw ParameterError("unknown p mode '" + name + "' (expected constant, n^-1/3, n^-1/2, n^-1)");
}

std::string to_string(PMode mode) {
  switch (mode) {
    case PMode::kConstant:
      return "constant";
    case PMode::kCubeRoot:
      return "n^-1/3";
    case PMode::kSquareRoot:
      return "n^-1/2";
    case PMode::kInverse:
      return "n^-1";
  }
  return "?";
}

double default_p_scale(PMode mode) {
  switch (mode) {
    case PMode::kConstant:
      return 0.1;
    case PMode::kCubeRoot:
    case PMode::kSquareRoot:
      return 1.0;
    case PMode::kInverse:
      return 3.0;
  }
  return 1.0;
}

double p_of_n(PMode mode, double c, NodeId n) {
  const double nn = n;
  double p = c;
  if (mode == PMode::kCubeRoot) p = c * std::pow(nn, -1.0 / 3.0);
  if (mode == PMode::kSquareRoot) p = c / std::sqrt(nn);
  if (mode == PMode::kInverse) p = c / nn;
  if (!(p > 0.0 && p <= 1.0)) throw ParameterError("p(n) outside (0, 1]");
  return p;
}

// ---------------------------------------------------------------------------
// v' D v growth

void VdvTable::write_csv(std::ostream& out) const {
  out << "# experiment=vdv_growth\n";
  out << "# mode=" << to_string(mode) << " scale=" << fmt(scale, "%.10g") << " reps=" << reps
      << " seed=" << seed << '\n';
  out << "# slope=" << fmt(slope) << '\n';
  out << "n,p,median_abs_vdcv,q25_abs_vdcv,q75_abs_vdcv,median_vdv,median_ratio,frac_ratio_ge_0.4,within_dmax\n";
  for (const auto& r : rows) {
    out << r.n << ',' << fmt(r.p, "%.10g") << ',' << fmt(r.median_abs_vdcv) << ',' << fmt(r.q25_abs_vdcv) << ','
        << fmt(r.q75_abs_vdcv) << ',' << fmt(r.median_vdv) << ',' << fmt(r.median_ratio) << ','
        << fmt(r.frac_ratio_ge_04) << ',' << (r.within_dmax ? 1 : 0) << '\n';
  }
}

void VdvTable::write_csv(const std::filesystem::path& path) const { write_file(path, *this); }

VdvTable run_vdv_growth(PMode mode, double scale, std::span<const NodeId> ns, std::int64_t reps,
                        std::uint64_t seed) {
  if (ns.empty()) throw ParameterError("n grid is empty");
  if (reps < 1) throw ParameterError("reps must be at least 1");
  VdvTable table;
  table.mode = mode;
  table.scale = scale;
  table.reps = reps;
  table.seed = seed;
  for (NodeId n : ns) {
    const double p = p_of_n(mode, scale, n);
    std::vector<VdvDiagnostic> diags(static_cast<std::size_t>(reps));
    const RngSeed base{seed, static_cast<std::uint64_t>(n)};
    parallel_for(reps, [&](std::int64_t i) {
      const Graph g = sample_er(n, p, base.child(static_cast<std::uint64_t>(i)));
      diags[static_cast<std::size_t>(i)] = vdv_diagnostic(g, ModelEstimate::constant(n, estimate_p(g)));
    });
    VdvRow r;
    r.n = n;
    r.p = p;
    std::vector<double> abs_dc, vdv, ratio;
    std::int64_t ge = 0;
    for (const auto& d : diags) {
      abs_dc.push_back(std::abs(d.v_dc_v));
      vdv.push_back(d.v_d_v);
      ratio.push_back(d.v_d_v / log_ratio_scale(n));
      ge += ratio.back() >= 0.4 ? 1 : 0;
      if (d.v_d_v > static_cast<double>(d.max_degree) + 1e-9) r.within_dmax = false;
    }
    r.median_abs_vdcv = median(abs_dc);
    r.q25_abs_vdcv = quantile7(abs_dc, 0.25);
    r.q75_abs_vdcv = quantile7(abs_dc, 0.75);
    r.median_vdv = median(vdv);
    r.median_ratio = median(ratio);
    r.frac_ratio_ge_04 = static_cast<double>(ge) / static_cast<double>(reps);
    table.rows.push_back(r);
  }
  if (table.rows.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto m = static_cast<double>(table.rows.size());
    for (const auto& r : table.rows) {
      const double x = std::log(static_cast<double>(r.n));
      const double y = std::log(std::max(r.median_abs_vdcv, 1e-300));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    table.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Approximation gap

void ApproxGapTable::write_csv(std::ostream& out) const {
  out << "# experiment=approx_gap\n";
  out << "# mode=" << to_string(mode) << " scale=" << fmt(scale, "%.10g") << " reps=" << reps
      << " seed=" << seed << '\n';
  out << "n,p,alpha,median_mu_y,median_y_lambda,median_mu_lambda,ratio,predicted_gap,max_identity_error,"
         "triangle_ok\n";
  for (const auto& r : rows) {
    out << r.n << ',' << fmt(r.p, "%.10g") << ',' << fmt(r.alpha) << ',' << fmt(r.median_mu_y, "%.6e") << ','
        << fmt(r.median_y_lambda, "%.6e") << ',' << fmt(r.median_mu_lambda, "%.6e") << ',' << fmt(r.ratio) << ','
        << fmt(r.predicted_gap, "%.6e") << ',' << fmt(r.max_identity_error, "%.3e") << ','
        << (r.triangle_ok ? 1 : 0) << '\n';
  }
}

void ApproxGapTable::write_csv(const std::filesystem::path& path) const { write_file(path, *this); }

ApproxGapTable run_approx_gap(PMode mode, double scale, std::span<const NodeId> ns, std::int64_t reps,
                              std::uint64_t seed) {
  if (ns.empty()) throw ParameterError("n grid is empty");
  if (reps < 1) throw ParameterError("reps must be at least 1");
  ApproxGapTable table;
  table.mode = mode;
  table.scale = scale;
  table.reps = reps;
  table.seed = seed;
  for (NodeId n : ns) {
    const double p = p_of_n(mode, scale, n);
    std::vector<ApproxGap> gaps(static_cast<std::size_t>(reps));
    std::vector<double> alphas(static_cast<std::size_t>(reps));
    const RngSeed base{seed, static_cast<std::uint64_t>(n)};
    parallel_for(reps, [&](std::int64_t i) {
      const Graph g = sample_er(n, p, base.child(static_cast<std::uint64_t>(i)));
      const ModelEstimate est = ModelEstimate::constant(n, estimate_p(g));
      gaps[static_cast<std::size_t>(i)] = y1hx1_gap(g, est);
      alphas[static_cast<std::size_t>(i)] = est.alphahat();
    });
    ApproxGapRow r;
    r.n = n;
    r.p = p;
    r.alpha = median(alphas);
    std::vector<double> mu_y, y_l, mu_l;
    for (const auto& gp : gaps) {
      const double y = gp.y1hx1_explicit;
      mu_y.push_back(std::abs(gp.mu1 - y));
      y_l.push_back(std::abs(y - gp.lambda1));
      mu_l.push_back(std::abs(gp.mu1 - gp.lambda1));
      r.max_identity_error = std::max({r.max_identity_error, std::abs(gp.y1hx1_closed - y),
                                       std::abs(gp.y1hx1_centered - y)});
      if (mu_l.back() > mu_y.back() + y_l.back() + 1e-12) r.triangle_ok = false;
    }
    r.median_mu_y = median(mu_y);
    r.median_y_lambda = median(y_l);
    r.median_mu_lambda = median(mu_l);
    r.ratio = r.median_y_lambda > 0.0 ? r.median_mu_y / r.median_y_lambda : 0.0;
    r.predicted_gap = std::sqrt(log_ratio_scale(n)) / (2.0 * std::sqrt(r.alpha));
    table.rows.push_back(r);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Clustering correlation

double ClusteringTable::mean_corr(const std::string& embedding, double delta) const {
  for (const auto& r : rows) {
    if (r.embedding == embedding && std::abs(r.delta - delta) < 1e-9) return r.mean_corr;
  }
  throw ParameterError("no clustering row for " + embedding);
}

void ClusteringTable::write_csv(std::ostream& out) const {
  out << "# experiment=clustering_corr\n";
  out << "# family=" << to_string(cfg.family) << " n1=" << cfg.n1 << " n2=" << cfg.n2
      << " p0=" << fmt(cfg.p0, "%.10g") << " reps=" << cfg.reps << " seed=" << cfg.seed << '\n';
  out << "embedding,delta,mean_corr,se\n";
  for (const auto& r : rows) {
    out << r.embedding << ',' << fmt(r.delta, "%.4f") << ',' << fmt(r.mean_corr) << ',' << fmt(r.se) << '\n';
  }
}

void ClusteringTable::write_csv(const std::filesystem::path& path) const { write_file(path, *this); }

ClusteringTable run_clustering_corr(const SweepConfig& cfg) {
  cfg.validate();
  if (cfg.n3) throw ParameterError("clustering correlation needs a two-block family");
  if (cfg.embeddings.empty()) throw ParameterError("no embeddings selected");
  const std::size_t ne = cfg.embeddings.size();
  ClusteringTable table;
  table.cfg = cfg;
  std::vector<ClusteringRow> rows;
  std::vector<std::vector<ClusteringRow>> by_embedding(ne);
  for (std::size_t c = 0; c < cfg.deltas.size(); ++c) {
    const BlockModelSpec spec = build_q_delta(cfg.family, cfg.n1, cfg.n2, cfg.n3, cfg.p0, cfg.deltas[c]);
    const RngSeed cell{cfg.seed, c};
    const RngSeed km{hash_combine(cfg.seed, kClusterStream), c};
    std::vector<double> corr(static_cast<std::size_t>(cfg.reps) * ne, 0.0);
    parallel_for(cfg.reps, [&](std::int64_t i) {
      const Graph g = sample_sbm(spec, cell.child(static_cast<std::uint64_t>(i)));
      for (std::size_t e = 0; e < ne; ++e) {
        const auto labels = spectral_labels(g, 2, cfg.embeddings[e], km.child(static_cast<std::uint64_t>(i)));
        corr[static_cast<std::size_t>(i) * ne + e] = label_correlation(labels, spec.memberships);
      }
    });
    for (std::size_t e = 0; e < ne; ++e) {
      double sum = 0.0, sq = 0.0;
      for (std::int64_t i = 0; i < cfg.reps; ++i) {
        const double v = corr[static_cast<std::size_t>(i) * ne + e];
        sum += v;
        sq += v * v;
      }
      const auto r = static_cast<double>(cfg.reps);
      ClusteringRow row;
      row.embedding = to_string(cfg.embeddings[e]);
      row.delta = cfg.deltas[c];
      row.mean_corr = sum / r;
      const double var = r > 1 ? std::max(0.0, (sq - sum * sum / r) / (r - 1.0)) : 0.0;
      row.se = std::sqrt(var / r);
      by_embedding[e].push_back(row);
    }
  }
  for (auto& rs : by_embedding) table.rows.insert(table.rows.end(), rs.begin(), rs.end());
  return table;
}

}  // namespace nbgof
