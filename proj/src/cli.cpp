#include "nbgof/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nbgof/eig.hpp"
#include "nbgof/errors.hpp"
#include "nbgof/estimate.hpp"
#include "nbgof/graph.hpp"
#include "nbgof/harness.hpp"
#include "nbgof/stats.hpp"

namespace nbgof::cli {

namespace {

std::string fmt(double v, const char* spec = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

template <class T>
void write_to(const std::string& path, const T& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  writer(out);
  if (!out) throw IoError("failed writing '" + path + "'");
}

struct Options {
  // gen
  std::string model = "er";
  NodeId n = 100;
  double p = 0.05;
  std::string family = "balanced";
  std::int64_t n1 = 250;
  std::int64_t n2 = 250;
  std::int64_t n3 = 0;
  double p0 = 0.01;
  double delta = 0.0;
  std::string labels_out;

  // shared
  std::uint64_t seed = 1;
  std::string out;
  std::string graph;
  bool lcc = false;

  // spectrum
  std::string op = "cnb";
  int k = 6;
  double r = 0.0;

  // test / estimate-k
  int k0 = 1;
  std::string stat = "cnb";
  double alpha = 0.05;
  std::string null = "tw";
  std::string null_file;
  std::string save_null;
  std::int64_t null_reps = 2000;
  bool tw_shift = false;
  std::string method = "sequential";
  int kmax = 10;
  NodeId min_size = 20;
  std::string split = "cnb";

  // power / null-sim / diag
  std::string experiment;
  double delta_lo = 0.0;
  double delta_hi = 0.98;
  double delta_step = 0.02;
  std::vector<std::string> stats{"cnb", "nb"};
  std::vector<std::string> embeddings{"cnb", "cadj", "nb"};
  std::int64_t reps = 1000;
  std::vector<NodeId> ns;
  std::string density_mode = "fixed_p";
  double density = 0.08;
  std::string p_mode = "constant";
  double scale = 0.0;
};

Graph load_graph(const Options& o, std::ostream& err) {
  if (o.graph.empty()) throw ParameterError("--graph is required");
  ReadGraph rg = read_edge_list(o.graph);
  if (rg.report.dropped_self_loops || rg.report.dropped_duplicates) {
    err << "# dropped " << rg.report.dropped_self_loops << " self-loops, " << rg.report.dropped_duplicates
        << " duplicate edges\n";
  }
  if (!o.lcc) return std::move(rg.graph);
  Subgraph s = largest_connected_component(rg.graph);
  err << "# largest connected component: " << s.graph.num_nodes() << " of " << rg.graph.num_nodes() << " nodes\n";
  return std::move(s.graph);
}

std::optional<std::int64_t> opt_n3(const Options& o) {
  return o.n3 > 0 ? std::optional<std::int64_t>(o.n3) : std::nullopt;
}

SweepConfig sweep_config(const Options& o) {
  SweepConfig cfg;
  cfg.family = parse_q_delta_kind(o.family);
  cfg.n1 = o.n1;
  cfg.n2 = o.n2;
  cfg.n3 = opt_n3(o);
  cfg.p0 = o.p0;
  cfg.deltas = delta_grid(o.delta_lo, o.delta_hi, o.delta_step);
  cfg.stats.clear();
  for (const auto& s : o.stats) cfg.stats.push_back(TestStatKind::parse(s));
  cfg.embeddings.clear();
  for (const auto& e : o.embeddings) cfg.embeddings.push_back(parse_embedding(e));
  cfg.alpha = o.alpha;
  cfg.reps = o.reps;
  cfg.null_reps = o.null_reps;
  cfg.null = parse_null_source(o.null);
  cfg.seed = o.seed;
  return cfg;
}

void require_out(const Options& o) {
  if (o.out.empty()) throw ParameterError("--out is required");
}

int run_gen(const Options& o, std::ostream& out, std::ostream&) {
  require_out(o);
  Graph g;
  std::vector<int> labels;
  if (o.model == "er") {
    g = sample_er(o.n, o.p, RngSeed{o.seed, 0});
  } else if (o.model == "sbm") {
    const BlockModelSpec spec = build_q_delta(parse_q_delta_kind(o.family), o.n1, o.n2, opt_n3(o), o.p0, o.delta);
    g = sample_sbm(spec, RngSeed{o.seed, 0});
    labels = spec.memberships;
  } else {
    throw ParameterError("unknown model '" + o.model + "' (expected er or sbm)");
  }
  write_edge_list(g, std::filesystem::path(o.out));
  if (!o.labels_out.empty()) {
    if (labels.empty()) labels.assign(static_cast<std::size_t>(g.num_nodes()), 0);
    write_to(o.labels_out, [&](std::ostream& f) {
      for (int l : labels) f << l << '\n';
    });
  }
  out << "nodes=" << g.num_nodes() << " edges=" << g.num_edges() << '\n';
  return 0;
}

int run_spectrum(const Options& o, std::ostream& out, std::ostream& err) {
  const Graph g = load_graph(o, err);
  const NodeId n = g.num_nodes();
  if (o.k < 1) throw ParameterError("--k must be at least 1");
  const ModelEstimate est =
      o.k0 == 1 ? ModelEstimate::constant(n, estimate_p(g))
                : estimate_blocks(g, spectral_labels(g, o.k0, Embedding::kAdjacencyTopK));
  EigOptions eo;
  eo.want_vectors = false;
  Spectrum s;
  bool negate = false;
  if (o.op == "adj") {
    const AdjacencyOperator a(g);
    eo.k = std::min<int>(o.k, n);
    s = eig_leading(a, eo);
  } else if (o.op == "cadj") {
    eo.k = std::min<int>(o.k, n);
    s = eig_leading(*centered_adjacency(g, est), eo);
  } else if (o.op == "nadj") {
    eo.k = std::min<int>(o.k, n);
    s = eig_leading(*normalized_adjacency(g, est), eo);
  } else if (o.op == "nb") {
    eo.k = std::min<int>(o.k, 2 * n);
    s = eig_leading(nb_operator(g), eo);
  } else if (o.op == "cnb") {
    eo.k = std::min<int>(o.k, 2 * n);
    s = eig_leading(centered_nb_operator(g, est), eo);
  } else if (o.op == "bh") {
    const double r = o.r > 0.0 ? o.r : bethe_hessian_ra(g);
    const SparseOperator m(-bethe_hessian(g, r), true);
    eo.k = std::min<int>(o.k, n);
    s = eig_leading(m, eo);
    negate = true;
  } else {
    throw ParameterError("unknown operator '" + o.op + "' (expected adj, cadj, nadj, nb, cnb, bh)");
  }
  auto emit = [&](std::ostream& f) {
    f << "# operator=" << o.op << " n=" << n << " k0=" << o.k0 << '\n';
    f << "index,real,imag\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Complex v = negate ? -s[i] : s[i];
      f << i << ',' << fmt(v.real(), "%.12g") << ',' << fmt(v.imag(), "%.12g") << '\n';
    }
  };
  if (o.out.empty()) {
    emit(out);
  } else {
    write_to(o.out, emit);
  }
  return 0;
}

int run_test(const Options& o, std::ostream& out, std::ostream& err) {
  const Graph g = load_graph(o, err);
  const NodeId n = g.num_nodes();
  const TestStatKind kind = TestStatKind::parse(o.stat);
  if (o.k0 < 1) throw ParameterError("--k0 must be at least 1");
  if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
  const double phat = estimate_p(g);
  const ModelEstimate est =
      o.k0 == 1 ? ModelEstimate::constant(n, phat)
                : estimate_blocks(g, spectral_labels(g, o.k0, Embedding::kAdjacencyTopK));
  NullDistribution null;
  if (!o.null_file.empty()) {
    null = NullDistribution::read_csv(std::filesystem::path(o.null_file));
    if (null.stat != kind.key()) {
      throw ParameterError("null file is for statistic '" + null.stat + "', not '" + kind.key() + "'");
    }
    if (null.n != n) err << "# warning: null file was simulated at n=" << null.n << ", graph has n=" << n << '\n';
  } else if (o.null == "tw") {
    if (!kind.has_tw_limit() || o.k0 != 1) {
      throw ParameterError("the TW1 null applies to cnb and nadj with --k0 1 only");
    }
    null = NullDistribution::tw1(n, kind.key());
  } else if (o.null == "mc") {
    const RngSeed seed{o.seed, 0};
    null = o.k0 == 1 ? simulate_null(kind, n, phat, 1, o.null_reps, seed)
                     : bootstrap_null(g, est, kind, o.null_reps, seed);
  } else {
    throw ParameterError("unknown null '" + o.null + "' (expected tw or mc)");
  }
  if (!o.save_null.empty() && null.kind == NullKind::kEmpirical) null.write_csv(std::filesystem::path(o.save_null));
  if (null.low_reps) err << "# warning: fewer than 100 null replicates\n";
  const double value = compute_statistic(g, est, kind, o.k0);
  const double shift = (o.tw_shift && null.kind == NullKind::kTw1) ? tw_shift(n, phat) : 0.0;
  const TestOutcome t = gof_test(value, null, o.alpha, n, shift);
  out << "statistic=" << fmt(t.value, "%.10f") << '\n';
  out << "threshold=" << fmt(t.threshold, "%.10f") << '\n';
  out << "decision=" << (t.reject ? "reject" : "accept") << '\n';
  return 0;
}

int run_estimate_k(const Options& o, std::ostream& out, std::ostream& err) {
  const Graph g = load_graph(o, err);
  KEstimateConfig cfg;
  cfg.stat = TestStatKind::parse(o.stat);
  cfg.alpha = o.alpha;
  cfg.null = parse_null_source(o.null);
  cfg.kmax = o.kmax;
  cfg.min_size = o.min_size;
  cfg.null_reps = o.null_reps;
  cfg.seed = RngSeed{o.seed, 0};
  cfg.split = parse_embedding(o.split);
  if (o.method == "sequential") {
    const SequentialResult r = estimate_k_sequential(g, cfg);
    for (const auto& t : r.trace) {
      out << "K0=" << t.k0 << " statistic=" << fmt(t.value, "%.10f") << " threshold=" << fmt(t.threshold, "%.10f")
          << " decision=" << (t.reject ? "reject" : "accept") << '\n';
    }
    out << "K_hat=" << r.k_hat << (r.truncated ? " (truncated at kmax)" : "") << '\n';
    return 0;
  }
  if (o.method != "recursive") throw ParameterError("unknown method '" + o.method + "' (expected sequential or recursive)");
  const Dendrogram d = estimate_k_recursive(g, cfg);
  out << "K_hat=" << d.num_leaves() << '\n';
  out << "leaf_sizes=";
  const auto leaves = d.leaves();
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    out << (i ? "," : "") << d.nodes[static_cast<std::size_t>(leaves[i])].members.size();
  }
  out << '\n';
  if (!o.out.empty()) {
    write_to(o.out, [&](std::ostream& f) { f << d.to_json() << '\n'; });
  }
  return 0;
}

int run_count_nb(const Options& o, std::ostream& out, std::ostream& err) {
  const Graph g = load_graph(o, err);
  out << "K_hat=" << count_nb_informative(g) << '\n';
  return 0;
}

int run_power(const Options& o, std::ostream& out, std::ostream&) {
  require_out(o);
  const SweepConfig cfg = sweep_config(o);
  const std::string exp = o.experiment.empty() ? "power" : o.experiment;
  if (exp == "power") {
    if (cfg.stats.empty()) throw ParameterError("no statistics selected");
    const PowerTable t = run_power_sweep(cfg);
    t.write_csv(std::filesystem::path(o.out));
    for (const auto& s : cfg.stats) {
      const auto d = t.first_delta_reaching(s.key(), 0.9);
      out << s.key() << " delta_power_0.9=" << (d ? fmt(*d, "%.4f") : std::string("none")) << '\n';
    }
  } else if (exp == "clustering") {
    run_clustering_corr(cfg).write_csv(std::filesystem::path(o.out));
  } else {
    throw ParameterError("unknown experiment '" + exp + "' (expected power or clustering)");
  }
  out << "wrote " << o.out << '\n';
  return 0;
}

int run_null_sim(const Options& o, std::ostream& out, std::ostream&) {
  require_out(o);
  if (o.ns.empty()) {
    const TestStatKind kind = TestStatKind::parse(o.stat);
    const NullDistribution d = simulate_null(kind, o.n, o.p, 1, o.reps, RngSeed{o.seed, 0});
    d.write_csv(std::filesystem::path(o.out));
    out << "quantile_0.95=" << fmt(d.quantile(0.95), "%.10f") << '\n';
  } else {
    DensityMode mode;
    if (o.density_mode == "fixed_p") {
      mode = DensityMode::kFixedP;
    } else if (o.density_mode == "fixed_degree") {
      mode = DensityMode::kFixedDegree;
    } else {
      throw ParameterError("unknown density mode '" + o.density_mode + "' (expected fixed_p or fixed_degree)");
    }
    std::vector<TestStatKind> kinds;
    for (const auto& s : o.stats) kinds.push_back(TestStatKind::parse(s));
    run_null_scaling(o.ns, mode, o.density, kinds, o.reps, o.seed, o.alpha).write_csv(std::filesystem::path(o.out));
  }
  out << "wrote " << o.out << '\n';
  return 0;
}

int run_diag(const Options& o, std::ostream& out, std::ostream& err) {
  const std::string exp = o.experiment.empty() ? "vdv" : o.experiment;
  if (exp == "graph") {
    const Graph g = load_graph(o, err);
    const ModelEstimate est = ModelEstimate::constant(g.num_nodes(), estimate_p(g));
    const VdvDiagnostic v = vdv_diagnostic(g, est);
    const ApproxGap a = y1hx1_gap(g, est);
    out << "lambda1=" << fmt(v.lambda1) << " v_d_v=" << fmt(v.v_d_v) << " v_dc_v=" << fmt(v.v_dc_v)
        << " max_degree=" << v.max_degree << '\n';
    out << "mu1=" << fmt(a.mu1) << " y1hx1=" << fmt(a.y1hx1_explicit) << " lambda1_rescaled=" << fmt(a.lambda1)
        << '\n';
    return 0;
  }
  require_out(o);
  if (o.ns.empty()) throw ParameterError("--ns is required");
  const PMode mode = parse_p_mode(o.p_mode);
  const double scale = o.scale > 0.0 ? o.scale : default_p_scale(mode);
  if (exp == "vdv") {
    const VdvTable t = run_vdv_growth(mode, scale, o.ns, o.reps, o.seed);
    t.write_csv(std::filesystem::path(o.out));
    out << "slope=" << fmt(t.slope, "%.6f") << '\n';
  } else if (exp == "gap") {
    run_approx_gap(mode, scale, o.ns, o.reps, o.seed).write_csv(std::filesystem::path(o.out));
  } else {
    throw ParameterError("unknown experiment '" + exp + "' (expected vdv, gap or graph)");
  }
  out << "wrote " << o.out << '\n';
  return 0;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

// Appends "--key=value" for every config entry not already given as a flag.
std::vector<std::string> merge_config(const std::vector<std::string>& args, CLI::App* sub) {
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::vector<std::string> merged = args;
  int lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParameterError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    const std::string flag = "--" + key;
    if (key == "config" || sub->get_option_no_throw(flag) == nullptr) {
      throw ParameterError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "' for " +
                           sub->get_name());
    }
    if (!given_on_command_line(args, flag)) merged.push_back(flag + "=" + value);
  }
  return merged;
}

void add_seed_out(CLI::App* sub, Options& o, bool out_required) {
  sub->add_option("--seed", o.seed, "master seed")->capture_default_str();
  auto* opt = sub->add_option("--out", o.out, "output path");
  if (out_required) opt->required();
}

void add_graph(CLI::App* sub, Options& o) {
  sub->add_option("--graph", o.graph, "edge-list file")->required();
  sub->add_flag("--lcc", o.lcc, "restrict to the largest connected component");
}

void add_sweep(CLI::App* sub, Options& o) {
  sub->add_option("--family", o.family, "balanced | unbalanced | equal_degree | three_block")->capture_default_str();
  sub->add_option("--n1", o.n1)->capture_default_str();
  sub->add_option("--n2", o.n2)->capture_default_str();
  sub->add_option("--n3", o.n3, "third block size (three_block only)")->capture_default_str();
  sub->add_option("--p0", o.p0)->capture_default_str();
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  std::string config_path;
  CLI::App app{"Goodness-of-fit tests for the number of blocks in a stochastic block model", "nbgof"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "sample a graph and write its edge list");
  gen->add_option("--model", o.model, "er | sbm")->capture_default_str();
  gen->add_option("--n", o.n, "number of nodes (er)")->capture_default_str();
  gen->add_option("--p", o.p, "edge probability (er)")->capture_default_str();
  add_sweep(gen, o);
  gen->add_option("--delta", o.delta, "signal strength (sbm)")->capture_default_str();
  gen->add_option("--labels-out", o.labels_out, "write block labels, one per line");
  add_seed_out(gen, o, true);

  auto* spec = app.add_subcommand("spectrum", "leading eigenvalues of a graph operator");
  add_graph(spec, o);
  spec->add_option("--operator", o.op, "adj | cadj | nadj | nb | cnb | bh")->capture_default_str();
  spec->add_option("--k", o.k, "number of eigenvalues")->capture_default_str();
  spec->add_option("--k0", o.k0, "blocks in the fitted model")->capture_default_str();
  spec->add_option("--r", o.r, "Bethe-Hessian radius (default r_a)")->capture_default_str();
  add_seed_out(spec, o, false);

  auto* test = app.add_subcommand("test", "goodness-of-fit test of K = k0");
  add_graph(test, o);
  test->add_option("--k0", o.k0)->capture_default_str();
  test->add_option("--stat", o.stat, "cnb | nadj | nb | bh:ra | bh:rm | bh:r=<value> | lr | tri")
      ->capture_default_str();
  test->add_option("--alpha", o.alpha)->capture_default_str();
  test->add_option("--null", o.null, "tw | mc")->capture_default_str();
  test->add_option("--null-file", o.null_file, "read the null distribution from a CSV");
  test->add_option("--save-null", o.save_null, "write the simulated null distribution");
  test->add_option("--null-reps", o.null_reps)->capture_default_str();
  test->add_flag("--tw-shift", o.tw_shift, "add 1/(n p) to the TW threshold");
  add_seed_out(test, o, false);

  auto* est = app.add_subcommand("estimate-k", "estimate the number of blocks");
  add_graph(est, o);
  est->add_option("--method", o.method, "sequential | recursive")->capture_default_str();
  est->add_option("--stat", o.stat)->capture_default_str();
  est->add_option("--alpha", o.alpha)->capture_default_str();
  est->add_option("--null", o.null, "tw | mc")->capture_default_str();
  est->add_option("--null-reps", o.null_reps)->capture_default_str();
  est->add_option("--kmax", o.kmax)->capture_default_str();
  est->add_option("--min-size", o.min_size)->capture_default_str();
  est->add_option("--split", o.split, "adjacency | cnb | cadj | nb")->capture_default_str();
  add_seed_out(est, o, false);

  auto* count = app.add_subcommand("count-nb", "count informative real eigenvalues of H");
  add_graph(count, o);

  auto* power = app.add_subcommand("power", "power or clustering sweep over delta");
  power->add_option("--experiment", o.experiment, "power | clustering")->capture_default_str();
  add_sweep(power, o);
  power->add_option("--delta-lo", o.delta_lo)->capture_default_str();
  power->add_option("--delta-hi", o.delta_hi)->capture_default_str();
  power->add_option("--delta-step", o.delta_step)->capture_default_str();
  power->add_option("--stats", o.stats, "comma-separated statistic keys")->delimiter(',')->capture_default_str();
  power->add_option("--embeddings", o.embeddings, "comma-separated embeddings")
      ->delimiter(',')
      ->capture_default_str();
  power->add_option("--alpha", o.alpha)->capture_default_str();
  power->add_option("--reps", o.reps)->capture_default_str();
  power->add_option("--null", o.null, "tw | mc")->capture_default_str();
  power->add_option("--null-reps", o.null_reps)->capture_default_str();
  add_seed_out(power, o, true);

  auto* nsim = app.add_subcommand("null-sim", "simulate null distributions");
  nsim->add_option("--stat", o.stat, "statistic (single null)")->capture_default_str();
  nsim->add_option("--n", o.n)->capture_default_str();
  nsim->add_option("--p", o.p)->capture_default_str();
  nsim->add_option("--ns", o.ns, "comma-separated sizes (scaling table)")->delimiter(',');
  nsim->add_option("--density-mode", o.density_mode, "fixed_p | fixed_degree")->capture_default_str();
  nsim->add_option("--density", o.density, "p or expected degree")->capture_default_str();
  nsim->add_option("--stats", o.stats, "comma-separated statistic keys (scaling table)")
      ->delimiter(',')
      ->capture_default_str();
  nsim->add_option("--alpha", o.alpha)->capture_default_str();
  nsim->add_option("--reps", o.reps)->capture_default_str();
  add_seed_out(nsim, o, true);

  auto* diag = app.add_subcommand("diag", "eigenvector diagnostics");
  diag->add_option("--experiment", o.experiment, "vdv | gap | graph")->capture_default_str();
  diag->add_option("--graph", o.graph, "edge-list file (graph)");
  diag->add_flag("--lcc", o.lcc);
  diag->add_option("--p-mode", o.p_mode, "constant | n^-1/3 | n^-1/2 | n^-1")->capture_default_str();
  diag->add_option("--scale", o.scale, "constant c in p(n) (default per mode)")->capture_default_str();
  diag->add_option("--ns", o.ns, "comma-separated sizes")->delimiter(',');
  diag->add_option("--reps", o.reps)->capture_default_str();
  add_seed_out(diag, o, false);

  for (auto* sub : app.get_subcommands({})) {
    sub->add_option("--config", config_path, "flat key=value file; command-line flags take precedence");
  }

  std::vector<std::string> full = args;
  try {
    if (!args.empty()) {
      if (CLI::App* sub = app.get_subcommand_no_throw(args[0])) full = merge_config(args, sub);
    }
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  std::vector<std::string> rev(full.rbegin(), full.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::FileError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    std::istringstream resolved(sub->config_to_str(true, false));
    err << "# nbgof " << sub->get_name() << '\n';
    for (std::string line; std::getline(resolved, line);) {
      if (!line.empty()) err << "# " << line << '\n';
    }
    const std::string& name = sub->get_name();
    if (name == "gen") return run_gen(o, out, err);
    if (name == "spectrum") return run_spectrum(o, out, err);
    if (name == "test") return run_test(o, out, err);
    if (name == "estimate-k") return run_estimate_k(o, out, err);
    if (name == "count-nb") return run_count_nb(o, out, err);
    if (name == "power") return run_power(o, out, err);
    if (name == "null-sim") return run_null_sim(o, out, err);
    return run_diag(o, out, err);
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << " (best residual " << e.best_residual() << ")\n";
    return 3;
  } catch (const ResourceError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int dispatch(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace nbgof::cli
