// Python bindings for the simulator core. Matrices cross the boundary
// as 2-D float64 numpy arrays, label vectors as 1-D int64 arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fslsim/baselines.hpp"
#include "fslsim/config.hpp"
#include "fslsim/data.hpp"
#include "fslsim/metrics.hpp"
#include "fslsim/models.hpp"
#include "fslsim/protocol.hpp"
#include "fslsim/runner.hpp"

namespace py = pybind11;
using namespace fslsim;

namespace {

Matrix matrix_from_numpy(const py::array_t<double>& arr) {
  const auto buf = arr.request();
  if (buf.ndim != 2) throw std::invalid_argument("expected a 2-D array");
  Matrix m(static_cast<std::size_t>(buf.shape[0]),
           static_cast<std::size_t>(buf.shape[1]));
  auto view = arr.unchecked<2>();
  for (py::ssize_t i = 0; i < buf.shape[0]; ++i)
    for (py::ssize_t j = 0; j < buf.shape[1]; ++j)
      m(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = view(i, j);
  return m;
}

py::array_t<double> matrix_to_numpy(const Matrix& m) {
  py::array_t<double> arr({m.rows, m.cols});
  auto view = arr.mutable_unchecked<2>();
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j)
      view(static_cast<py::ssize_t>(i), static_cast<py::ssize_t>(j)) = m(i, j);
  return arr;
}

LabelVector labels_from_numpy(const py::array_t<std::int64_t>& arr) {
  const auto buf = arr.request();
  if (buf.ndim != 1) throw std::invalid_argument("expected a 1-D array");
  LabelVector y(static_cast<std::size_t>(buf.shape[0]));
  auto view = arr.unchecked<1>();
  for (py::ssize_t i = 0; i < buf.shape[0]; ++i)
    y[static_cast<std::size_t>(i)] = view(i);
  return y;
}

py::array_t<std::int64_t> labels_to_numpy(const LabelVector& y) {
  py::array_t<std::int64_t> arr(static_cast<py::ssize_t>(y.size()));
  auto view = arr.mutable_unchecked<1>();
  for (std::size_t i = 0; i < y.size(); ++i)
    view(static_cast<py::ssize_t>(i)) = y[i];
  return arr;
}

Activation activation_from_name(const std::string& s) {
  if (s == "identity") return Activation::kIdentity;
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

Head head_from_name(const std::string& s) {
  if (s == "none") return Head::kNone;
  if (s == "softmax_xent") return Head::kSoftmaxXent;
  if (s == "mse") return Head::kMse;
  throw std::invalid_argument("unknown head '" + s + "'");
}

MlpSpec make_spec(const std::vector<std::size_t>& dims,
                  const std::vector<std::string>& activations,
                  const std::string& head) {
  MlpSpec spec;
  spec.layer_dims = dims;
  for (const std::string& a : activations)
    spec.activations.push_back(activation_from_name(a));
  spec.head = head_from_name(head);
  spec.validate();
  return spec;
}

py::dict row_to_dict(const MetricsRow& r) {
  py::dict d;
  d["round"] = r.round;
  d["train_loss"] = r.train_loss;
  d["eval_loss"] = r.eval_loss;
  d["eval_accuracy"] = r.eval_accuracy;
  d["cumulative_bytes"] = r.cumulative_bytes;
  d["epsilon_t"] = r.epsilon_t ? py::cast(*r.epsilon_t) : py::none();
  d["grad_norm_sq"] =
      r.grad_norm_sq ? py::cast(*r.grad_norm_sq) : py::none();
  d["alignment_loss"] =
      r.alignment_loss ? py::cast(*r.alignment_loss) : py::none();
  return d;
}

py::dict result_to_dict(const RunResult& result) {
  py::list rows;
  for (const MetricsRow& r : result.rows) rows.append(row_to_dict(r));
  py::list events;
  for (const AlignmentEvent& ev : result.alignment_events) {
    py::dict d;
    d["round"] = ev.round;
    d["eps_before"] = ev.eps_before;
    d["eps_after"] = ev.eps_after;
    d["mean_final_loss"] = ev.mean_final_loss;
    events.append(d);
  }
  py::dict out;
  out["rows"] = rows;
  out["alignment_events"] = events;
  out["total_bytes"] = result.ledger.total_bytes();
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Deterministic split/federated learning simulator core";

  py::class_<MlpSpec>(m, "MlpSpec")
      .def(py::init(&make_spec), py::arg("layer_dims"), py::arg("activations"),
           py::arg("head"))
      .def_property_readonly("param_count", &MlpSpec::param_count)
      .def_property_readonly("input_dim", &MlpSpec::input_dim)
      .def_property_readonly("output_dim", &MlpSpec::output_dim);

  py::class_<ParamVector>(m, "ParamVector")
      .def_property_readonly("size", &ParamVector::size)
      .def("to_numpy", [](const ParamVector& p) {
        py::array_t<double> arr(static_cast<py::ssize_t>(p.data.size()));
        auto view = arr.mutable_unchecked<1>();
        for (std::size_t i = 0; i < p.data.size(); ++i)
          view(static_cast<py::ssize_t>(i)) = p.data[i];
        return arr;
      });

  m.def("params_from_numpy",
        [](const MlpSpec& spec, const py::array_t<double>& arr) {
          ParamVector p = zeros_like(spec);
          const auto buf = arr.request();
          if (buf.ndim != 1 ||
              static_cast<std::size_t>(buf.shape[0]) != p.data.size())
            throw std::invalid_argument(
                "array length does not match spec.param_count");
          auto view = arr.unchecked<1>();
          for (std::size_t i = 0; i < p.data.size(); ++i)
            p.data[i] = view(static_cast<py::ssize_t>(i));
          return p;
        },
        py::arg("spec"), py::arg("values"));

  m.def("init_params", &init_params, py::arg("spec"), py::arg("seed"));

  m.def("forward",
        [](const MlpSpec& spec, const ParamVector& params,
           const py::array_t<double>& x) {
          return matrix_to_numpy(
              forward(spec, params, matrix_from_numpy(x)).output());
        },
        py::arg("spec"), py::arg("params"), py::arg("inputs"));

  m.def("loss_and_grad",
        [](const MlpSpec& spec, const ParamVector& params,
           const py::array_t<double>& x, const py::array_t<std::int64_t>& y) {
          const LossGrad lg = loss_and_grad(spec, params, matrix_from_numpy(x),
                                            labels_from_numpy(y));
          return py::make_tuple(lg.loss, lg.grad_params,
                                matrix_to_numpy(lg.grad_inputs));
        },
        py::arg("spec"), py::arg("params"), py::arg("inputs"),
        py::arg("labels"));

  m.def("vjp_params",
        [](const MlpSpec& spec, const ParamVector& params,
           const py::array_t<double>& x, const py::array_t<double>& cot) {
          return vjp_params(spec, params, matrix_from_numpy(x),
                            matrix_from_numpy(cot));
        },
        py::arg("spec"), py::arg("params"), py::arg("inputs"),
        py::arg("cotangent"));

  m.def("sgd_step", &sgd_step, py::arg("params"), py::arg("grad"),
        py::arg("lr"));

  m.def("gen_gaussian_mixture",
        [](std::size_t n, std::size_t d, std::size_t classes,
           double separation, std::uint64_t seed) {
          const Dataset ds =
              gen_gaussian_mixture(n, d, classes, separation, seed);
          return py::make_tuple(matrix_to_numpy(ds.inputs),
                                labels_to_numpy(ds.labels));
        },
        py::arg("n"), py::arg("dim"), py::arg("classes"),
        py::arg("separation"), py::arg("seed"));

  m.def("dirichlet_partition",
        [](const py::array_t<std::int64_t>& labels, std::size_t m_clients,
           double alpha, std::uint64_t seed) {
          const auto shards =
              dirichlet_partition(labels_from_numpy(labels), m_clients, alpha,
                                  seed);
          py::list out;
          for (const Shard& s : shards) {
            py::list idx;
            for (std::size_t i : s.indices) idx.append(i);
            out.append(idx);
          }
          return out;
        },
        py::arg("labels"), py::arg("clients"), py::arg("alpha"),
        py::arg("seed"));

  m.def("parse_config", &parse_config, py::arg("text"));
  m.def("emit_config", &emit_config, py::arg("config"));

  py::class_<RunConfig>(m, "RunConfig")
      .def_property_readonly("algorithm", [](const RunConfig& c) {
        return to_string(c.algorithm);
      })
      .def_property_readonly("rounds",
                             [](const RunConfig& c) { return c.rounds; })
      .def_property_readonly("clients",
                             [](const RunConfig& c) { return c.clients; });

  m.def("run",
        [](const RunConfig& cfg) { return result_to_dict(run_algorithm(cfg)); },
        py::arg("config"));

  m.def("run_to_dir",
        [](const RunConfig& cfg, const std::string& outdir, bool quiet) {
          return result_to_dict(run_and_write(cfg, outdir, quiet));
        },
        py::arg("config"), py::arg("outdir"), py::arg("quiet") = true);

  py::register_exception<ConfigError>(m, "ConfigError");
}
