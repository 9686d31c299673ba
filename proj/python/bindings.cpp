#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "glot/cache.hpp"
#include "glot/cli.hpp"
#include "glot/error.hpp"
#include "glot/graph.hpp"
#include "glot/heads.hpp"
#include "glot/metrics.hpp"
#include "glot/model.hpp"
#include "glot/pooling.hpp"

namespace py = pybind11;
using namespace glot;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Mask = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw InvalidArgument("expected a 2-d array");
  const auto r = static_cast<std::size_t>(a.shape(0)), c = static_cast<std::size_t>(a.shape(1));
  return Matrix(r, c, std::vector<double>(a.data(), a.data() + r * c));
}

py::array_t<double> to_array(const Matrix& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

std::vector<std::uint8_t> to_mask(const std::optional<Mask>& m) {
  if (!m) return {};
  return {m->data(), m->data() + m->size()};
}

GraphConfig graph_config(double tau, bool self_loops, bool symmetric) {
  GraphConfig g;
  g.tau = tau;
  g.add_self_loops = self_loops;
  g.symmetric = symmetric;
  return g;
}

py::dict token_graph(const Array& states, double tau, bool self_loops, bool symmetric,
                     const std::optional<Mask>& mask) {
  const auto m = to_mask(mask);
  const TokenGraph g = build_token_graph(to_matrix(states), m, graph_config(tau, self_loops, symmetric));
  py::array_t<std::int64_t> edges({g.edges.size(), std::size_t{2}});
  auto e = edges.mutable_unchecked<2>();
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    e(k, 0) = static_cast<std::int64_t>(g.edges[k].src);
    e(k, 1) = static_cast<std::int64_t>(g.edges[k].dst);
  }
  py::dict d;
  d["edges"] = edges;
  d["num_nodes"] = g.num_nodes();
  d["edge_density"] = edge_density(g).front();
  return d;
}

std::pair<py::array_t<double>, std::vector<std::vector<double>>> glot_pool_py(
    const std::vector<Array>& states, const std::optional<std::vector<Mask>>& masks, double tau,
    const std::string& variant, std::size_t num_layers, std::size_t hidden_dim, const std::string& jk,
    std::size_t readout_hidden, std::uint64_t seed) {
  if (states.empty()) throw InvalidArgument("glot_pool: empty batch");
  std::vector<Matrix> xs;
  for (const Array& a : states) xs.push_back(to_matrix(a));
  std::vector<std::vector<std::uint8_t>> ms;
  if (masks)
    for (const Mask& m : *masks) ms.emplace_back(m.data(), m.data() + m.size());
  GnnConfig cfg;
  cfg.variant = parse_gnn_variant(variant);
  cfg.num_layers = num_layers;
  cfg.hidden_dim = hidden_dim;
  cfg.input_dim = xs.front().cols();
  cfg.jk = parse_jk_mode(jk);
  GlotParams params = init_glot_params(cfg, readout_hidden, seed);
  const GlotOutput out = glot_pool(xs, ms, graph_config(tau, true, true), cfg, params);
  return {to_array(out.embeddings), out.token_weights};
}

PredictionDump dump(std::vector<double> predicted, std::vector<double> gold) {
  return {std::move(predicted), std::move(gold)};
}

py::object json_to_py(const nlohmann::ordered_json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json py_to_json(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

}  // namespace

PYBIND11_MODULE(_glot, m) {
  m.doc() = "Graph-based token pooling over frozen hidden states";
  m.attr("__version__") = cli::kVersion;

  static py::exception<DataError> data_error(m, "DataError", PyExc_ValueError);
  static py::exception<NumericError> numeric_error(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const DataError& e) {
      data_error(e.what());
    } catch (const NumericError& e) {
      numeric_error(e.what());
    } catch (const InvalidArgument& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("token_graph", &token_graph, py::arg("states"), py::arg("tau") = 0.6, py::arg("self_loops") = true,
        py::arg("symmetric") = true, py::arg("mask") = py::none(),
        "Cosine-threshold graph over the valid rows: dict(edges, num_nodes, edge_density).");

  m.def("mean_pool", [](const Array& s, const std::optional<Mask>& mask) {
        return to_array(mean_pool(to_matrix(s), to_mask(mask)));
      }, py::arg("states"), py::arg("mask") = py::none());
  m.def("max_pool", [](const Array& s, const std::optional<Mask>& mask) {
        return to_array(max_pool(to_matrix(s), to_mask(mask)));
      }, py::arg("states"), py::arg("mask") = py::none());
  m.def("boundary_pool", [](const Array& s, const std::string& which, const std::optional<Mask>& mask) {
        if (which != "first" && which != "last") throw InvalidArgument("which must be 'first' or 'last'");
        return to_array(boundary_token_pool(to_matrix(s), to_mask(mask), which == "first" ? Boundary::first : Boundary::last));
      }, py::arg("states"), py::arg("which") = "last", py::arg("mask") = py::none());

  m.def("glot_pool", &glot_pool_py, py::arg("states"), py::arg("masks") = py::none(), py::arg("tau") = 0.6,
        py::arg("variant") = "gat", py::arg("num_layers") = 2, py::arg("hidden_dim") = 128,
        py::arg("jk") = "cat", py::arg("readout_hidden") = 128, py::arg("seed") = 42,
        "Freshly initialised GLOT pooler over a batch; returns (embeddings, token_weights).");

  m.def("symmetric_infonce", [](const Array& q, const Array& d, double temperature) {
        return symmetric_infonce_terms(to_matrix(q), to_matrix(d), temperature).loss;
      }, py::arg("queries"), py::arg("docs"), py::arg("temperature") = 0.07);

  m.def("accuracy", [](std::vector<double> p, std::vector<double> g) { return accuracy(dump(p, g)); });
  m.def("f1", [](std::vector<double> p, std::vector<double> g) { return f1_binary(dump(p, g)); });
  m.def("mcc", [](std::vector<double> p, std::vector<double> g) { return mcc(dump(p, g)); });
  m.def("spearman", [](std::vector<double> p, std::vector<double> g) { return spearman(dump(p, g)); });

  m.def("write_cache", [](const std::vector<Array>& sentences, const std::filesystem::path& path) {
        std::vector<Matrix> xs;
        for (const Array& a : sentences) xs.push_back(to_matrix(a));
        write_cache(xs, path);
      }, py::arg("sentences"), py::arg("path"));
  m.def("read_cache", [](const std::filesystem::path& path) {
        std::vector<py::array_t<double>> out;
        for (const Matrix& s : read_cache(path).sentences) out.push_back(to_array(s));
        return out;
      }, py::arg("path"));

  m.def("gen_diagnostic", [](const std::filesystem::path& out, const std::string& mode, std::size_t n_train,
                             std::size_t n_test, std::size_t len, double ratio, std::size_t dim, std::uint64_t seed) {
        cli::GenDiagnosticOptions o;
        o.out = out;
        o.mode = mode;
        o.n_train = n_train;
        o.n_test = n_test;
        o.len = len;
        o.ratio = ratio;
        o.dim = dim;
        o.seed = seed;
        const cli::GenDiagnosticResult r = cli::gen_diagnostic(o);
        py::dict d;
        d["train_lines"] = r.train_lines;
        d["test_lines"] = r.test_lines;
        d["truncated_templates"] = r.truncated_templates;
        d["certified"] = r.certificate ? py::cast(r.certificate->holds()) : py::none();
        return d;
      }, py::arg("out"), py::arg("mode") = "alg2", py::arg("n_train") = 10000, py::arg("n_test") = 2000,
      py::arg("len") = 256, py::arg("ratio") = 0.9, py::arg("dim") = 64, py::arg("seed") = 42);

  m.def("default_train_options", [] { return json_to_py(cli::options_to_json(cli::TrainOptions{})); });
  m.def("train", [](const py::object& options) {
        const cli::TrainOptions opt = cli::options_from_json(py_to_json(options));
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = cli::run_train(opt);
        }
        py::dict d;
        d["metrics"] = r.report.metrics;
        d["epoch_loss"] = r.report.epoch_loss;
        d["steps"] = r.report.batches.size();
        d["trainable_params"] = count_trainable_params(r.model.spec);
        return d;
      }, py::arg("options"), "Train from an options dict shaped like default_train_options(); writes under options['out'].");

  m.def("bench", [](std::size_t len, std::size_t dim, std::size_t repeats, std::uint64_t seed) {
        cli::BenchOptions o;
        o.len = len;
        o.dim = dim;
        o.repeats = repeats;
        o.seed = seed;
        return json_to_py(cli::to_json(cli::run_bench(o), o));
      }, py::arg("len") = 512, py::arg("dim") = 768, py::arg("repeats") = 10, py::arg("seed") = 42);
}
