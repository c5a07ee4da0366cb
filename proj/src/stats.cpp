#include "nbgof/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <sstream>

#include <math.h>  // pchip.hpp calls unqualified isnan
#include <boost/math/interpolators/pchip.hpp>

#include "nbgof/eig.hpp"
#include "nbgof/errors.hpp"
#include "nbgof/estimate.hpp"

namespace nbgof {

// ---------------------------------------------------------------------------
// Statistic keys

TestStatKind TestStatKind::parse(const std::string& key) {
  TestStatKind k;
  if (key == "cnb") {
    k.stat = StatKind::kCenteredNb;
  } else if (key == "nadj") {
    k.stat = StatKind::kNormalizedAdj;
  } else if (key == "nb") {
    k.stat = StatKind::kNbPlain;
  } else if (key == "bh:ra") {
    k.stat = StatKind::kBetheHessian;
    k.radius = BhRadius::kRa;
  } else if (key == "bh:rm") {
    k.stat = StatKind::kBetheHessian;
    k.radius = BhRadius::kRm;
  } else if (key.rfind("bh:r=", 0) == 0) {
    k.stat = StatKind::kBetheHessian;
    k.radius = BhRadius::kUser;
    const std::string v = key.substr(5);
    std::size_t used = 0;
    try {
      k.r = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != v.size() || !std::isfinite(k.r)) {
      throw ParameterError("invalid Bethe-Hessian radius in '" + key + "'");
    }
  } else if (key == "lr") {
    k.stat = StatKind::kLikelihoodRatio;
  } else if (key == "tri") {
    k.stat = StatKind::kTriangle;
  } else {
    throw ParameterError("unknown statistic '" + key +
                         "' (expected cnb, nadj, nb, bh:ra, bh:rm, bh:r=<value>, lr, tri)");
  }
  return k;
}

std::string TestStatKind::key() const {
  switch (stat) {
    case StatKind::kCenteredNb:
      return "cnb";
    case StatKind::kNormalizedAdj:
      return "nadj";
    case StatKind::kNbPlain:
      return "nb";
    case StatKind::kBetheHessian:
      if (radius == BhRadius::kRa) return "bh:ra";
      if (radius == BhRadius::kRm) return "bh:rm";
      {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "bh:r=%.17g", r);
        return buf;
      }
    case StatKind::kLikelihoodRatio:
      return "lr";
    case StatKind::kTriangle:
      return "tri";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Statistics

namespace {

EigOptions stat_options(int k, bool vectors = false) {
  EigOptions o;
  o.k = k;
  o.want_vectors = vectors;
  o.dense_threshold = 64;
  return o;
}

void require_blocks(const ModelEstimate& est, int k0, const Graph& g) {
  if (k0 < 1) throw ParameterError("K0 must be at least 1");
  if (est.num_nodes() != g.num_nodes()) {
    throw ParameterError("model estimate and graph have different node counts");
  }
  if (est.num_blocks() != k0) {
    throw ParameterError("model estimate has " + std::to_string(est.num_blocks()) +
                         " blocks but K0 = " + std::to_string(k0));
  }
}

double centered_nb_value(const Graph& g, const ModelEstimate& est) {
  const BlockOperator op = centered_nb_operator(g, est);
  const Spectrum s = eig_leading(op, stat_options(1));
  const double p = est.clamp(est.phat());
  return s[0].real() / std::sqrt((g.num_nodes() - 1.0) * p * (1.0 - p));
}

double normalized_adj_value(const Graph& g, const ModelEstimate& est) {
  const auto op = normalized_adjacency(g, est);
  return eig_leading(*op, stat_options(1))[0].real();
}

double nb_plain_value(const Graph& g, int k0) {
  const BlockOperator op = nb_operator(g);
  const Spectrum s = eig_leading(op, stat_options(k0 + 1));
  const double mu1 = std::max(s[0].real(), std::numeric_limits<double>::min());
  const double mu = s.size() > static_cast<std::size_t>(k0) ? s[k0].real() : 0.0;
  return mu / std::sqrt(mu1);
}

double bethe_hessian_value(const Graph& g, const TestStatKind& kind, int k0) {
  if (g.num_nodes() <= k0) throw ParameterError("graph has too few nodes for K0");
  double r = kind.r;
  if (kind.radius == BhRadius::kRa) r = bethe_hessian_ra(g);
  if (kind.radius == BhRadius::kRm) r = bethe_hessian_rm(g);
  const Eigen::SparseMatrix<double, Eigen::RowMajor> neg = -bethe_hessian(g, r);
  const SparseOperator op(neg, true);
  const Spectrum s = eig_leading(op, stat_options(k0 + 1));
  // Largest eigenvalues of -H(r): entry K0 is -lambda_{n-K0}(H(r)).
  return s[k0].real();
}

double likelihood_ratio_value(const Graph& g, const ModelEstimate& est, int k0) {
  std::vector<int> labels0(static_cast<std::size_t>(g.num_nodes()), 0);
  if (k0 > 1) labels0 = est.labels();
  const std::vector<int> labels1 = spectral_labels(g, k0 + 1, Embedding::kAdjacencyTopK);
  return likelihood_ratio(g, labels0, labels1).value;
}

}  // namespace

double compute_statistic(const Graph& g, const ModelEstimate& est, const TestStatKind& kind, int k0) {
  switch (kind.stat) {
    case StatKind::kCenteredNb:
      require_blocks(est, k0, g);
      return centered_nb_value(g, est);
    case StatKind::kNormalizedAdj:
      require_blocks(est, k0, g);
      return normalized_adj_value(g, est);
    case StatKind::kNbPlain:
      if (k0 < 1) throw ParameterError("K0 must be at least 1");
      return nb_plain_value(g, k0);
    case StatKind::kBetheHessian:
      if (k0 < 1) throw ParameterError("K0 must be at least 1");
      return bethe_hessian_value(g, kind, k0);
    case StatKind::kLikelihoodRatio:
      require_blocks(est, k0, g);
      return likelihood_ratio_value(g, est, k0);
    case StatKind::kTriangle:
      return triangle_statistic(g);
  }
  throw ParameterError("unknown statistic kind");
}

std::int64_t triangle_count(const Graph& g) {
  std::int64_t count = 0;
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    const auto nu = g.neighbors(u);
    for (NodeId v : nu) {
      if (v <= u) continue;
      const auto nv = g.neighbors(v);
      // Common neighbors w > v.
      auto a = std::upper_bound(nu.begin(), nu.end(), v);
      auto b = std::upper_bound(nv.begin(), nv.end(), v);
      while (a != nu.end() && b != nv.end()) {
        if (*a < *b) {
          ++a;
        } else if (*b < *a) {
          ++b;
        } else {
          ++count;
          ++a;
          ++b;
        }
      }
    }
  }
  return count;
}

double triangle_statistic(const Graph& g) {
  const double n = g.num_nodes();
  if (g.num_nodes() < 3) throw ParameterError("triangle statistic needs n >= 3");
  const double triples = n * (n - 1.0) * (n - 2.0) / 6.0;
  const double t = static_cast<double>(triangle_count(g)) / triples;
  const double p = estimate_p(g);
  return std::sqrt(t) - std::sqrt(p * p * p);
}

namespace {

// Half log-likelihood at the profile MLE; 0 log 0 = 0.
double profile_loglik(const Graph& g, std::span<const int> labels, bool* empty_block) {
  const NodeId n = g.num_nodes();
  if (static_cast<NodeId>(labels.size()) != n) {
    throw ParameterError("label vector length differs from node count");
  }
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
  auto xlogy = [](double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); };
  double total = 0.0;
  for (int a = 0; a < k; ++a) {
    if (sizes[a] == 0.0) *empty_block = true;
    for (int b = 0; b < k; ++b) {
      const double pairs = (a == b) ? sizes[a] * (sizes[a] - 1.0) : sizes[a] * sizes[b];
      if (pairs == 0.0) continue;
      const double q = o(a, b) / pairs;
      total += xlogy(o(a, b), q) + xlogy(pairs - o(a, b), 1.0 - q);
    }
  }
  return 0.5 * total;
}

}  // namespace

LikelihoodRatio likelihood_ratio(const Graph& g, std::span<const int> labels0,
                                 std::span<const int> labels1) {
  LikelihoodRatio out;
  const double l1 = profile_loglik(g, labels1, &out.empty_block);
  const double l0 = profile_loglik(g, labels0, &out.empty_block);
  out.value = l1 - l0;
  return out;
}

// ---------------------------------------------------------------------------
// Tracy-Widom

namespace {

using Pchip = boost::math::interpolators::pchip<std::vector<double>>;

const Pchip& tw1_interpolant() {
  static const Pchip interp = [] {
    std::vector<double> q(detail::kTw1Quantiles.size());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = static_cast<double>(i + 1) / 1000.0;
    std::vector<double> x(detail::kTw1Quantiles.begin(), detail::kTw1Quantiles.end());
    return Pchip(std::move(q), std::move(x));
  }();
  return interp;
}

}  // namespace

double tw1_quantile(double q) {
  if (!(q >= 0.001 - 1e-12 && q <= 0.999 + 1e-12)) {
    throw ParameterError("TW1 quantile level must lie in [0.001, 0.999]");
  }
  q = std::clamp(q, 0.001, 0.999);
  return tw1_interpolant()(q);
}

double tw1_cdf(double x) {
  if (std::isnan(x)) return x;
  if (x <= detail::kTw1Quantiles.front()) return x < detail::kTw1Quantiles.front() ? 0.0 : 0.001;
  if (x >= detail::kTw1Quantiles.back()) return x > detail::kTw1Quantiles.back() ? 1.0 : 0.999;
  const auto it = std::upper_bound(detail::kTw1Quantiles.begin(), detail::kTw1Quantiles.end(), x);
  const auto idx = static_cast<std::size_t>(it - detail::kTw1Quantiles.begin());
  double lo = static_cast<double>(idx) / 1000.0;
  double hi = static_cast<double>(idx + 1) / 1000.0;
  const Pchip& f = tw1_interpolant();
  for (int iter = 0; iter < 60; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < x) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Null distributions

NullDistribution NullDistribution::tw1(NodeId n, const std::string& stat) {
  NullDistribution d;
  d.kind = NullKind::kTw1;
  d.stat = stat;
  d.n = n;
  return d;
}

double NullDistribution::quantile(double q) const {
  if (kind == NullKind::kTw1) return tw1_quantile(q);
  if (values.empty()) throw ParameterError("empty null distribution");
  if (!(q > 0.0 && q <= 1.0)) throw ParameterError("quantile level must lie in (0, 1]");
  const auto r = static_cast<double>(values.size());
  auto idx = static_cast<std::int64_t>(std::ceil(q * r - 1e-9)) - 1;
  idx = std::clamp<std::int64_t>(idx, 0, static_cast<std::int64_t>(values.size()) - 1);
  return values[static_cast<std::size_t>(idx)];
}

void NullDistribution::write_csv(std::ostream& out) const {
  if (kind != NullKind::kEmpirical) throw ParameterError("only empirical nulls are serialized");
  char buf[64];
  out << "# kind,n,p,K0,reps,seed\n";
  std::snprintf(buf, sizeof(buf), "%.17g", p);
  out << "# " << stat << ',' << n << ',' << buf << ',' << k0 << ',' << reps << ',' << seed << '\n';
  for (double v : values) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf << '\n';
  }
}

void NullDistribution::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_csv(out);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

NullDistribution NullDistribution::read_csv(std::istream& in) {
  NullDistribution d;
  std::string line;
  int lineno = 0;
  bool have_meta = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(1);
      body.erase(0, body.find_first_not_of(' '));
      if (body.rfind("kind,", 0) == 0) continue;
      std::vector<std::string> fields;
      std::stringstream ss(body);
      std::string f;
      while (std::getline(ss, f, ',')) fields.push_back(f);
      if (fields.size() != 6) throw IoError("line " + std::to_string(lineno) + ": malformed null header");
      try {
        d.stat = fields[0];
        d.n = static_cast<NodeId>(std::stol(fields[1]));
        d.p = std::stod(fields[2]);
        d.k0 = std::stoi(fields[3]);
        d.reps = std::stoll(fields[4]);
        d.seed = std::stoull(fields[5]);
      } catch (const std::exception&) {
        throw IoError("line " + std::to_string(lineno) + ": malformed null header");
      }
      have_meta = true;
      continue;
    }
    try {
      std::size_t used = 0;
      d.values.push_back(std::stod(line, &used));
      if (line.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw IoError("line " + std::to_string(lineno) + ": expected a number");
    }
  }
  if (!have_meta) throw IoError("null distribution file lacks the '# kind,n,p,K0,reps,seed' header");
  if (!std::is_sorted(d.values.begin(), d.values.end())) std::sort(d.values.begin(), d.values.end());
  d.low_reps = d.values.size() < 100;
  return d;
}

NullDistribution NullDistribution::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_csv(in);
}

namespace {

template <class Fn>
std::vector<double> run_replicates(std::int64_t reps, Fn&& fn) {
  std::vector<double> values(static_cast<std::size_t>(reps));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(reps));
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < reps; ++i) {
    try {
      values[static_cast<std::size_t>(i)] = fn(i);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::sort(values.begin(), values.end());
  return values;
}

}  // namespace

std::vector<NullDistribution> simulate_null_multi(std::span<const TestStatKind> kinds, NodeId n,
                                                  double p, std::int64_t reps, RngSeed seed) {
  if (reps < 1) throw ParameterError("reps must be at least 1");
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("p must lie in [0, 1]");
  if (n < 3) throw ParameterError("null simulation needs n >= 3");
  const std::size_t ns = kinds.size();
  std::vector<double> flat(static_cast<std::size_t>(reps) * ns);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(reps));
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < reps; ++i) {
    try {
      const Graph g = sample_er(n, p, seed.child(static_cast<std::uint64_t>(i)));
      const ModelEstimate est = ModelEstimate::constant(n, estimate_p(g));
      for (std::size_t s = 0; s < ns; ++s) {
        flat[static_cast<std::size_t>(i) * ns + s] = compute_statistic(g, est, kinds[s], 1);
      }
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<NullDistribution> out(ns);
  for (std::size_t s = 0; s < ns; ++s) {
    NullDistribution& d = out[s];
    d.stat = kinds[s].key();
    d.n = n;
    d.p = p;
    d.k0 = 1;
    d.reps = reps;
    d.seed = seed.master;
    d.low_reps = reps < 100;
    d.values.resize(static_cast<std::size_t>(reps));
    for (std::int64_t i = 0; i < reps; ++i) d.values[static_cast<std::size_t>(i)] = flat[static_cast<std::size_t>(i) * ns + s];
    std::sort(d.values.begin(), d.values.end());
  }
  return out;
}

NullDistribution simulate_null(const TestStatKind& kind, NodeId n, double p, int k0,
                               std::int64_t reps, RngSeed seed) {
  if (k0 != 1) throw ParameterError("simulate_null samples Erdos-Renyi graphs (K0 = 1); use bootstrap_null");
  const TestStatKind kinds[] = {kind};
  return std::move(simulate_null_multi(kinds, n, p, reps, seed).front());
}

NullDistribution bootstrap_null(const Graph& g, const ModelEstimate& est, const TestStatKind& kind,
                                std::int64_t reps, RngSeed seed, Refit refit) {
  if (reps < 1) throw ParameterError("reps must be at least 1");
  const NodeId n = g.num_nodes();
  if (est.num_nodes() != n) throw ParameterError("model estimate and graph have different node counts");
  const int k0 = est.num_blocks();
  BlockModelSpec spec;
  spec.q = est.qhat();
  spec.memberships.resize(static_cast<std::size_t>(n));
  for (NodeId i = 0; i < n; ++i) spec.memberships[i] = est.label(i);
  NullDistribution d;
  d.stat = kind.key();
  d.n = n;
  d.p = est.phat();
  d.k0 = k0;
  d.reps = reps;
  d.seed = seed.master;
  d.low_reps = reps < 100;
  d.values = run_replicates(reps, [&](std::int64_t i) {
    const Graph gb = sample_sbm(spec, seed.child(static_cast<std::uint64_t>(i)));
    ModelEstimate eb;
    if (k0 == 1) {
      eb = ModelEstimate::constant(n, estimate_p(gb));
    } else if (refit == Refit::kFixedLabels) {
      eb = estimate_blocks(gb, spec.memberships);
    } else {
      eb = estimate_blocks(gb, spectral_labels(gb, k0, Embedding::kAdjacencyTopK));
    }
    return compute_statistic(gb, eb, kind, k0);
  });
  return d;
}

TestOutcome gof_test(double value, const NullDistribution& null, double alpha, NodeId n, double shift) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
  TestOutcome t;
  t.value = value;
  t.alpha = alpha;
  t.null_kind = null.kind;
  t.k0 = null.k0;
  if (null.kind == NullKind::kTw1) {
    t.threshold = 2.0 + shift + std::pow(static_cast<double>(n), -2.0 / 3.0) * tw1_quantile(1.0 - alpha);
  } else {
    t.threshold = null.quantile(1.0 - alpha);
  }
  t.reject = value > t.threshold;
  return t;
}

// ---------------------------------------------------------------------------
// Diagnostics

VdvDiagnostic vdv_diagnostic(const Graph& g, const ModelEstimate& est) {
  const auto op = centered_adjacency(g, est);
  const Spectrum s = eig_leading(*op, stat_options(1, true));
  const Eigen::VectorXd v = s.vectors->col(0).real();
  VdvDiagnostic out;
  out.lambda1 = s[0].real();
  const Eigen::VectorXd& dc = op->row_sums();
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    out.v_d_v += v[i] * v[i] * g.degree(i);
    out.v_dc_v += v[i] * v[i] * dc[i];
    out.max_degree = std::max<std::int64_t>(out.max_degree, g.degree(i));
  }
  return out;
}

double v1_d_v1(const Graph& g, const ModelEstimate& est) { return vdv_diagnostic(g, est).v_d_v; }

ApproxGap y1hx1_gap(const Graph& g, const ModelEstimate& est) {
  const NodeId n = g.num_nodes();
  const double alpha = est.alphahat();
  const double sa = std::sqrt(alpha);
  const BlockOperator op = centered_nb_operator(g, est);
  const RescaledSplit split = rescaled_split(op, alpha);
  ApproxGap out;
  out.mu1 = eig_leading(split.full, stat_options(1))[0].real();

  const auto ac = centered_adjacency(g, est);
  const Spectrum s = eig_leading(*ac, stat_options(1, true));
  const Eigen::VectorXd v = s.vectors->col(0).real();
  const double lambda = s[0].real() / sa;
  out.lambda1 = lambda;
  double vdv = 0.0;
  double vdcv = 0.0;
  for (NodeId i = 0; i < n; ++i) {
    vdv += v[i] * v[i] * g.degree(i);
    vdcv += v[i] * v[i] * ac->row_sums()[i];
  }
  out.y1hx1_closed = lambda + (1.0 - vdv / alpha) / lambda;
  out.y1hx1_centered = lambda + (1.0 - vdcv) / (alpha * lambda);
  Eigen::VectorXd x(2 * n);
  x.head(n) = v;
  x.tail(n) = v / lambda;
  const Eigen::VectorXd hx = split.full * x;
  out.y1hx1_explicit = v.dot(hx.head(n));
  return out;
}

}  // namespace nbgof
