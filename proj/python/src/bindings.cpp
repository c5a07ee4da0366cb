#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <sstream>

#include "nbgof/eig.hpp"
#include "nbgof/errors.hpp"
#include "nbgof/estimate.hpp"
#include "nbgof/graph.hpp"
#include "nbgof/operators.hpp"
#include "nbgof/stats.hpp"

namespace py = pybind11;
using namespace nbgof;

namespace {

ModelEstimate fit(const Graph& g, int k0, const std::optional<std::vector<int>>& labels) {
  if (labels) return estimate_blocks(g, *labels);
  if (k0 == 1) return ModelEstimate::constant(g.num_nodes(), estimate_p(g));
  return estimate_blocks(g, spectral_labels(g, k0, Embedding::kAdjacencyTopK));
}

KEstimateConfig k_config(const std::string& stat, double alpha, const std::string& null, int kmax,
                         NodeId min_size, std::int64_t null_reps, std::uint64_t seed) {
  KEstimateConfig cfg;
  cfg.stat = TestStatKind::parse(stat);
  cfg.alpha = alpha;
  cfg.null = parse_null_source(null);
  cfg.kmax = kmax;
  cfg.min_size = min_size;
  cfg.null_reps = null_reps;
  cfg.seed = RngSeed{seed, 0};
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_nbgof, m) {
  m.doc() = "Goodness-of-fit tests for block models via non-backtracking spectra";

  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

  py::class_<Graph>(m, "Graph")
      .def(py::init([](NodeId n, const std::vector<Edge>& edges) { return Graph::from_edges(n, edges); }),
           py::arg("n"), py::arg("edges"))
      .def_property_readonly("num_nodes", &Graph::num_nodes)
      .def_property_readonly("num_edges", &Graph::num_edges)
      .def("edges", &Graph::edges)
      .def("degrees", [](const Graph& g) { return degrees(g); })
      .def("neighbors", [](const Graph& g, NodeId i) {
        if (i < 0 || i >= g.num_nodes()) throw py::index_error("node out of range");
        const auto s = g.neighbors(i);
        return std::vector<NodeId>(s.begin(), s.end());
      })
      .def("largest_component", [](const Graph& g) {
        auto s = largest_connected_component(g);
        return py::make_tuple(std::move(s.graph), std::move(s.to_original));
      })
      .def("__eq__", [](const Graph& a, const Graph& b) { return a == b; })
      .def("__repr__", [](const Graph& g) {
        std::ostringstream s;
        s << "Graph(num_nodes=" << g.num_nodes() << ", num_edges=" << g.num_edges() << ")";
        return s.str();
      });

  m.def("read_edge_list", [](const std::filesystem::path& p) { return read_edge_list(p).graph; },
        py::arg("path"));
  m.def("write_edge_list", [](const Graph& g, const std::filesystem::path& p) { write_edge_list(g, p); },
        py::arg("graph"), py::arg("path"));

  m.def("sample_er", [](NodeId n, double p, std::uint64_t seed) { return sample_er(n, p, RngSeed{seed, 0}); },
        py::arg("n"), py::arg("p"), py::arg("seed") = 1);
  m.def(
      "sample_sbm",
      [](const std::string& family, std::int64_t n1, std::int64_t n2, std::optional<std::int64_t> n3, double p0,
         double delta, std::uint64_t seed) {
        const auto spec = build_q_delta(parse_q_delta_kind(family), n1, n2, n3, p0, delta);
        std::vector<int> labels(spec.memberships.begin(), spec.memberships.end());
        return py::make_tuple(sample_sbm(spec, RngSeed{seed, 0}), labels);
      },
      py::arg("family"), py::arg("n1"), py::arg("n2"), py::arg("n3") = py::none(), py::arg("p0"),
      py::arg("delta"), py::arg("seed") = 1,
      "Sample from the delta-family block model; returns (graph, labels).");

  m.def("estimate_p", &estimate_p, py::arg("graph"));
  m.def(
      "statistic",
      [](const Graph& g, const std::string& stat, int k0, std::optional<std::vector<int>> labels) {
        return compute_statistic(g, fit(g, k0, labels), TestStatKind::parse(stat), k0);
      },
      py::arg("graph"), py::arg("stat") = "cnb", py::arg("k0") = 1, py::arg("labels") = py::none());

  m.def("tw1_quantile", &tw1_quantile, py::arg("q"));
  m.def("tw1_cdf", &tw1_cdf, py::arg("x"));

  m.def(
      "simulate_null",
      [](const std::string& stat, NodeId n, double p, std::int64_t reps, std::uint64_t seed) {
        py::gil_scoped_release release;
        return simulate_null(TestStatKind::parse(stat), n, p, 1, reps, RngSeed{seed, 0}).values;
      },
      py::arg("stat"), py::arg("n"), py::arg("p"), py::arg("reps") = 2000, py::arg("seed") = 1,
      "Sorted null values of the statistic under ER(n, p).");

  m.def(
      "gof_test",
      [](const Graph& g, const std::string& stat, int k0, double alpha, const std::string& null,
         std::int64_t null_reps, std::uint64_t seed) {
        const TestStatKind kind = TestStatKind::parse(stat);
        const ModelEstimate est = fit(g, k0, std::nullopt);
        const double value = compute_statistic(g, est, kind, k0);
        NullDistribution dist;
        if (parse_null_source(null) == NullSource::kTw && kind.has_tw_limit() && k0 == 1) {
          dist = NullDistribution::tw1(g.num_nodes(), kind.key());
        } else if (k0 == 1) {
          dist = simulate_null(kind, g.num_nodes(), est.phat(), 1, null_reps, RngSeed{seed, 0});
        } else {
          dist = bootstrap_null(g, est, kind, null_reps, RngSeed{seed, 0});
        }
        const auto out = gof_test(value, dist, alpha, g.num_nodes());
        py::dict d;
        d["statistic"] = out.value;
        d["threshold"] = out.threshold;
        d["reject"] = out.reject;
        return d;
      },
      py::arg("graph"), py::arg("stat") = "cnb", py::arg("k0") = 1, py::arg("alpha") = 0.05,
      py::arg("null") = "tw", py::arg("null_reps") = 2000, py::arg("seed") = 1);

  m.def(
      "estimate_k",
      [](const Graph& g, const std::string& method, const std::string& stat, double alpha,
         const std::string& null, int kmax, NodeId min_size, std::int64_t null_reps,
         std::uint64_t seed) -> py::tuple {
        const auto cfg = k_config(stat, alpha, null, kmax, min_size, null_reps, seed);
        if (method == "sequential") {
          return py::make_tuple(estimate_k_sequential(g, cfg).k_hat, py::none());
        }
        if (method != "recursive") throw ParameterError("method must be sequential or recursive");
        const auto d = estimate_k_recursive(g, cfg);
        return py::make_tuple(d.num_leaves(), py::cast(d.leaf_labels(g.num_nodes())));
      },
      py::arg("graph"), py::arg("method") = "sequential", py::arg("stat") = "cnb", py::arg("alpha") = 0.05,
      py::arg("null") = "tw", py::arg("kmax") = 10, py::arg("min_size") = 20, py::arg("null_reps") = 2000,
      py::arg("seed") = 1, "Returns (k_hat, leaf labels or None).");

  m.def("count_nb", &count_nb_informative, py::arg("graph"));

  m.def(
      "spectral_labels",
      [](const Graph& g, int k, const std::string& embedding, std::uint64_t seed) {
        return spectral_labels(g, k, parse_embedding(embedding), RngSeed{seed, 0});
      },
      py::arg("graph"), py::arg("k"), py::arg("embedding") = "adjacency", py::arg("seed") = 0);
  m.def("label_correlation",
        [](const std::vector<int>& a, const std::vector<int>& b) { return label_correlation(a, b); },
        py::arg("labels"), py::arg("truth"));

  m.def(
      "nb_spectrum",
      [](const Graph& g, int k, bool centered) {
        EigOptions o;
        o.k = k;
        const Spectrum s = centered
                               ? eig_leading(centered_nb_operator(g, ModelEstimate::constant(g.num_nodes(), estimate_p(g))), o)
                               : eig_leading(nb_operator(g), o);
        return s.values;
      },
      py::arg("graph"), py::arg("k") = 6, py::arg("centered") = true,
      "Leading eigenvalues of H (or the centered H with a constant p-hat).");
}
