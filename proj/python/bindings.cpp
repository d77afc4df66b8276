#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "nmsvr/dataset.hpp"
#include "nmsvr/error.hpp"
#include "nmsvr/measures.hpp"
#include "nmsvr/pipeline.hpp"
#include "nmsvr/svr.hpp"
#include "nmsvr/version.hpp"

namespace py = pybind11;
using namespace nmsvr;

namespace {

ParamGrid grid_arg(const py::object& g) {
  if (py::isinstance<py::str>(g)) return ParamGrid::parse(g.cast<std::string>());
  const auto t = g.cast<std::tuple<double, double, std::size_t>>();
  return ParamGrid{std::get<0>(t), std::get<1>(t), std::get<2>(t)};
}

py::array_t<double> matrix(const std::vector<std::vector<double>>& rows, std::size_t cols) {
  py::array_t<double> a({rows.size(), cols});
  auto m = a.mutable_unchecked<2>();
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
  return a;
}

py::array_t<double> vector(const std::vector<double>& v) {
  return py::array_t<double>(v.size(), v.data());
}

std::vector<double> row_of(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw DimensionError("expected a 1-d feature vector");
  return {a.data(), a.data() + a.size()};
}

py::dict to_dict(const Evaluation& e) {
  py::dict d;
  d["mae"] = e.mae;
  d["max_error"] = e.max_error;
  d["rows"] = e.rows;
  return d;
}

SvrConfig make_config(double C, double epsilon, double tol, std::optional<double> gamma,
                      std::size_t max_iter) {
  SvrConfig c;
  c.C = C;
  c.epsilon = epsilon;
  c.tol = tol;
  c.gamma = gamma;
  c.max_iter = max_iter;
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Non-Markovianity datasets and support-vector regression";
  m.attr("__version__") = kVersion;

  static py::exception<Error> config_error(m, "ConfigError", PyExc_ValueError);
  static py::exception<Error> numeric_error(m, "NumericError", PyExc_ArithmeticError);
  static py::exception<Error> io_error(m, "IoError", PyExc_OSError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      switch (e.kind()) {
        case ErrorKind::Config: py::set_error(config_error, e.what()); break;
        case ErrorKind::Numeric: py::set_error(numeric_error, e.what()); break;
        case ErrorKind::Io: py::set_error(io_error, e.what()); break;
      }
    }
  });

  py::class_<DataTable>(m, "DataTable")
      .def("__len__", &DataTable::size)
      .def_property_readonly("channel", [](const DataTable& t) { return to_string(t.schema().channel); })
      .def_property_readonly("measure", [](const DataTable& t) { return to_string(t.schema().measure); })
      .def_property_readonly("times", [](const DataTable& t) { return t.schema().times; })
      .def_property_readonly("header", [](const DataTable& t) { return t.schema().header(); })
      .def_property_readonly("meta", [](const DataTable& t) { return t.meta; })
      .def_property_readonly("features",
                             [](const DataTable& t) { return matrix(t.features(), t.schema().n_features()); })
      .def_property_readonly("targets", [](const DataTable& t) { return vector(t.targets()); })
      .def_property_readonly("params",
                             [](const DataTable& t) {
                               std::vector<double> v;
                               for (const auto& s : t.samples()) v.push_back(s.param);
                               return vector(v);
                             })
      .def_property_readonly("omegas",
                             [](const DataTable& t) {
                               std::vector<double> v;
                               for (const auto& s : t.samples()) v.push_back(s.omega);
                               return vector(v);
                             })
      .def("select_omega", &select_omega, py::arg("omega"))
      .def("save", [](const DataTable& t, const std::string& path) { save_csv(t, path); }, py::arg("path"))
      .def("__repr__", [](const DataTable& t) {
        return "<DataTable " + to_string(t.schema().channel) + "/" + to_string(t.schema().measure) + " rows=" +
               std::to_string(t.size()) + ">";
      });

  py::class_<SvrModel>(m, "SvrModel")
      .def_readonly("intercept", &SvrModel::intercept)
      .def_readonly("gamma", &SvrModel::gamma)
      .def_readonly("C", &SvrModel::C)
      .def_readonly("epsilon", &SvrModel::epsilon)
      .def_property_readonly("n_features", &SvrModel::n_features)
      .def_property_readonly("n_support", [](const SvrModel& s) { return s.support_vectors.size(); })
      .def_property_readonly("converged", [](const SvrModel& s) { return s.info.converged; })
      .def_property_readonly("iterations", [](const SvrModel& s) { return s.info.iterations; })
      .def(
          "predict",
          [](const SvrModel& s, const py::array_t<double, py::array::c_style | py::array::forcecast>& x)
              -> py::object {
            if (x.ndim() == 1) return py::float_(s.predict(row_of(x)));
            if (x.ndim() != 2) throw DimensionError("expected a 1-d or 2-d feature array");
            const auto n = static_cast<std::size_t>(x.shape(0)), d = static_cast<std::size_t>(x.shape(1));
            std::vector<double> out(n);
            for (std::size_t i = 0; i < n; ++i) out[i] = s.predict(std::span<const double>(x.data() + i * d, d));
            return vector(out);
          },
          py::arg("features"))
      .def("predict_table", [](const SvrModel& s, const DataTable& t) { return vector(s.predict(t)); },
           py::arg("table"))
      .def(
          "kkt",
          [](const SvrModel& s, const DataTable& train, double tol) {
            const auto r = kkt_certificate(s, train, tol);
            py::dict d;
            d["ok"] = r.ok;
            d["worst"] = r.worst;
            d["violations"] = r.violations;
            return d;
          },
          py::arg("train"), py::arg("tol") = 1e-3)
      .def("save", [](const SvrModel& s, const std::string& path) { save_model(s, path); }, py::arg("path"));

  m.def(
      "measure",
      [](const std::string& channel, const std::string& kind, double param, double omega) {
        const auto spec = make_spec(parse_channel_kind(channel), param, omega);
        validate(spec);
        py::gil_scoped_release nogil;
        return n_measure(parse_measure_kind(kind), spec).value;
      },
      py::arg("channel"), py::arg("measure"), py::arg("param"), py::arg("omega") = 0.0,
      "Non-Markovianity of one channel; omega is used by the driven channel only.");

  m.def(
      "bloch_features",
      [](const std::string& channel, double param, const std::vector<double>& times, double omega) {
        const auto spec = make_spec(parse_channel_kind(channel), param, omega);
        validate(spec);
        return vector(features_at(spec, times));
      },
      py::arg("channel"), py::arg("param"), py::arg("times") = std::vector<double>{3.0}, py::arg("omega") = 0.0);

  m.def(
      "sweep_measure",
      [](const std::string& channel, const std::string& kind, const std::vector<double>& params,
         const std::vector<double>& omegas, std::size_t threads) {
        std::vector<MeasurePoint> pts;
        {
          py::gil_scoped_release nogil;
          pts = sweep_measure(parse_channel_kind(channel), parse_measure_kind(kind), params, omegas, threads);
        }
        std::vector<double> v;
        for (const auto& p : pts) v.push_back(p.value);
        return vector(v);
      },
      py::arg("channel"), py::arg("measure"), py::arg("params"), py::arg("omegas") = std::vector<double>{},
      py::arg("threads") = 0);

  m.def(
      "generate",
      [](const std::string& channel, const std::string& kind, const std::vector<double>& times,
         const py::object& grid, std::size_t threads) {
        GenerateOptions o;
        if (!grid.is_none()) o.grid = grid_arg(grid);
        o.threads = threads;
        const auto mk = parse_measure_kind(kind);
        const auto ck = parse_channel_kind(channel);
        py::gil_scoped_release nogil;
        switch (ck) {
          case ChannelKind::PhaseDamping: return generate_pure_pd(mk, times, o);
          case ChannelKind::AmplitudeDamping: return generate_pure_ad(mk, times, o);
          default: throw ConfigError("use generate_driven for the driven channel");
        }
      },
      py::arg("channel"), py::arg("measure") = "entanglement", py::arg("times") = std::vector<double>{3.0},
      py::arg("grid") = py::none(), py::arg("threads") = 0,
      "Pure-channel table; grid is 'start:step:count' or a (start, step, count) tuple.");

  m.def(
      "generate_driven",
      [](const std::vector<double>& times, const py::object& grid, const std::optional<std::vector<double>>& omegas,
         std::size_t threads) {
        DrivenOptions o;
        if (!grid.is_none()) o.grid = grid_arg(grid);
        if (omegas) o.omegas = *omegas;
        o.threads = threads;
        py::gil_scoped_release nogil;
        return generate_driven_ad(times, o);
      },
      py::arg("times") = std::vector<double>{3.0}, py::arg("grid") = py::none(), py::arg("omegas") = py::none(),
      py::arg("threads") = 0);

  m.def("load_csv", &load_csv, py::arg("path"));
  m.def("load_model", &load_model, py::arg("path"));
  m.def("split", &split, py::arg("table"), py::arg("train_fraction") = 0.7, py::arg("seed") = 42);

  m.def(
      "fit",
      [](const DataTable& train, double C, double epsilon, double tol, std::optional<double> gamma,
         std::size_t max_iter, bool standardize) {
        const auto c = make_config(C, epsilon, tol, gamma, max_iter);
        py::gil_scoped_release nogil;
        return fit(train, c, standardize ? Scaling::Standardize : Scaling::None);
      },
      py::arg("train"), py::arg("C") = 1.0, py::arg("epsilon") = 1e-3, py::arg("tol") = 1e-3,
      py::arg("gamma") = py::none(), py::arg("max_iter") = 10'000'000, py::arg("standardize") = true,
      "gamma=None selects the scale heuristic.");

  m.def(
      "evaluate", [](const SvrModel& model, const DataTable& table) { return to_dict(evaluate(model, table)); },
      py::arg("model"), py::arg("table"));

  m.def(
      "run_pipeline",
      [](const DataTable& table, double train_fraction, std::uint64_t seed, double C, double epsilon,
         std::optional<double> gamma, bool standardize) {
        PipelineOptions o;
        o.train_fraction = train_fraction;
        o.seed = seed;
        o.svr = make_config(C, epsilon, 1e-3, gamma, 10'000'000);
        o.scaling = standardize ? Scaling::Standardize : Scaling::None;
        PipelineResult r;
        {
          py::gil_scoped_release nogil;
          r = run_pipeline(table, o);
        }
        py::dict d;
        d["model"] = std::move(r.model);
        d["train"] = std::move(r.train);
        d["test"] = std::move(r.test);
        d["test_eval"] = to_dict(r.test_eval);
        d["kkt_ok"] = r.kkt.ok;
        return d;
      },
      py::arg("table"), py::arg("train_fraction") = 0.7, py::arg("seed") = 42, py::arg("C") = 1.0,
      py::arg("epsilon") = 1e-3, py::arg("gamma") = py::none(), py::arg("standardize") = true);
}
