#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cpprop/analysis.hpp"
#include "cpprop/analytic_models.hpp"
#include "cpprop/errors.hpp"
#include "cpprop/mb_engine.hpp"
#include "cpprop/phase_solver.hpp"
#include "cpprop/phase_tables.hpp"
#include "cpprop/pipeline.hpp"
#include "cpprop/run_config.hpp"

namespace py = pybind11;
using namespace cpprop;

namespace {

using CArray = py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>;
using DArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

template <class T>
py::array_t<T> to_numpy(const std::vector<T>& v) {
  return py::array_t<T>(static_cast<py::ssize_t>(v.size()), v.data());
}

FieldGrid grid_from(const DArray& z, double tau0, double dt, const CArray& field) {
  if (field.ndim() != 2 || field.shape(0) != z.size()) {
    throw ConfigError("field must be a 2-D array with one row per depth");
  }
  FieldGrid g;
  g.z_values.assign(z.data(), z.data() + z.size());
  g.tau0 = tau0;
  g.dt = dt;
  g.n_samples = static_cast<std::size_t>(field.shape(1));
  g.field.assign(field.data(), field.data() + field.size());
  return g;
}

ErrorMap map_from(const DArray& z, const DArray& delta, const DArray& p) {
  if (p.ndim() != 2 || p.shape(0) != z.size() || p.shape(1) != delta.size()) {
    throw ConfigError("p_err must have shape (len(alpha_z), len(delta))");
  }
  ErrorMap m;
  m.alpha_z_values.assign(z.data(), z.data() + z.size());
  m.delta_values.assign(delta.data(), delta.data() + delta.size());
  m.p_err.assign(p.data(), p.data() + p.size());
  return m;
}

py::dict propagate_config(const std::string& text, int threads) {
  RunConfig cfg = parse_config(text, "<python>");
  cfg.medium.threads = resolve_thread_count(threads, cfg.medium.threads);
  PropagationResult r;
  {
    py::gil_scoped_release release;
    r = propagate(cfg.pulse, cfg.medium);
  }
  py::array_t<std::complex<double>> field({static_cast<py::ssize_t>(r.grid.n_rows()),
                                           static_cast<py::ssize_t>(r.grid.n_samples)});
  std::copy(r.grid.field.begin(), r.grid.field.end(), field.mutable_data());
  py::dict d;
  d["alpha_z"] = to_numpy(r.grid.z_values);
  d["tau0"] = r.grid.tau0;
  d["dt"] = r.grid.dt;
  d["field"] = field;
  d["fluence"] = to_numpy(r.diagnostics.fluence_per_z);
  d["energy_residual"] = to_numpy(r.diagnostics.energy_residual_per_z);
  d["accumulated_energy_residual"] = r.diagnostics.accumulated_energy_residual;
  d["n_channels"] = r.diagnostics.n_channels;
  d["warnings"] = r.diagnostics.warnings;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Composite pulse phases and Maxwell-Bloch propagation";
  m.attr("__version__") = code_version();

  static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  static py::exception<NumericalError> numerical_error(m, "NumericalError", PyExc_ArithmeticError);
  static py::exception<IoError> io_error(m, "IoError", PyExc_OSError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const NumericalError& e) {
      py::set_error(numerical_error, e.what());
    } catch (const IoError& e) {
      py::set_error(io_error, e.what());
    }
  });

  py::class_<SU2>(m, "SU2")
      .def(py::init<cplx, cplx>(), py::arg("a"), py::arg("b"))
      .def_property_readonly("a", &SU2::a)
      .def_property_readonly("b", &SU2::b)
      .def("__matmul__", [](const SU2& x, const SU2& y) { return compose(x, y); })
      .def("__repr__", [](const SU2& u) {
        return "SU2(a=" + py::repr(py::cast(u.a())).cast<std::string>() +
               ", b=" + py::repr(py::cast(u.b())).cast<std::string>() + ")";
      });

  m.def("resonant_propagator", &resonant_propagator, py::arg("area"), py::arg("phase"));
  m.def("rosen_zener_propagator", &rosen_zener_propagator, py::arg("p"), py::arg("q"), py::arg("phase") = 0.0);
  m.def("square_pulse_propagator", &square_pulse_propagator, py::arg("omega0"), py::arg("duration"),
        py::arg("delta"), py::arg("phase") = 0.0);
  m.def("expand_anagram", &expand_anagram, py::arg("free_phases"));
  m.def(
      "composed_a",
      [](const std::vector<double>& phases, const std::string& error, double eps, double delta,
         const std::string& model) {
        ErrorModel em;
        em.epsilon = eps;
        if (error == "alternating") em.kind = ErrorKind::Alternating;
        else if (error == "uniform") em.kind = ErrorKind::Uniform;
        else if (error == "none") em.kind = ErrorKind::None;
        else throw ConfigError("error must be 'alternating', 'uniform' or 'none'");
        PulseModel pm;
        if (model == "resonant") pm = PulseModel::Resonant;
        else if (model == "sech") pm = PulseModel::RosenZener;
        else if (model == "square") pm = PulseModel::Square;
        else throw ConfigError("model must be 'resonant', 'sech' or 'square'");
        return composed_a(phases, em, delta, pm);
      },
      py::arg("phases"), py::arg("error") = "alternating", py::arg("eps") = 0.0, py::arg("delta") = 0.0,
      py::arg("model") = "resonant");

  m.def("table_entries", [] {
    std::vector<std::string> names;
    for (const auto& e : phase_table()) names.push_back(e.name);
    return names;
  });
  m.def("entry_phases", [](const std::string& name) { return find_entry(name).free_phases(); },
        py::arg("name"), "Free phases of a table entry, in radians.");
  m.def(
      "verify_table",
      [](const std::string& name) {
        const TableVerification v = verify_table(name);
        py::dict d;
        d["name"] = v.name;
        d["pass"] = v.pass;
        d["exact"] = v.exact;
        d["root"] = v.root;
        d["root_residual"] = v.root_residual;
        d["max_phase_deviation"] = v.max_phase_deviation;
        return d;
      },
      py::arg("name"));
  m.def(
      "solve",
      [](int n, const std::string& cls, int order, int seed_density) {
        SolveOptions opt;
        opt.seed_grid_density = seed_density;
        const CompClass c = parse_comp_class(cls);
        SolveReport r;
        {
          py::gil_scoped_release release;
          r = solve(n, c, order > 0 ? order : default_max_order(c, n), opt);
        }
        std::vector<std::vector<double>> out;
        for (const auto& s : r.sequences) out.push_back(s.free_phases);
        return out;
      },
      py::arg("n"), py::arg("comp_class") = "alternating", py::arg("order") = -1, py::arg("seed_density") = 24);

  m.def("propagate", &propagate_config, py::arg("config_text"), py::arg("threads") = 0,
        "Run the medium described by a YAML config; returns the field grid and diagnostics.");
  m.def(
      "perr_map",
      [](const DArray& z, double tau0, double dt, const CArray& field, const DArray& deltas, int threads) {
        const FieldGrid g = grid_from(z, tau0, dt, field);
        const std::vector<double> d(deltas.data(), deltas.data() + deltas.size());
        MapOptions opt;
        opt.threads = threads;
        ErrorMap map;
        {
          py::gil_scoped_release release;
          map = perr_map(g, d, opt);
        }
        py::array_t<double> out({static_cast<py::ssize_t>(map.n_z()), static_cast<py::ssize_t>(map.n_delta())});
        std::copy(map.p_err.begin(), map.p_err.end(), out.mutable_data());
        return out;
      },
      py::arg("alpha_z"), py::arg("tau0"), py::arg("dt"), py::arg("field"), py::arg("deltas"),
      py::arg("threads") = 0);
  m.def("sinh_spaced_deltas", &sinh_spaced_deltas, py::arg("halfwidth"), py::arg("n"), py::arg("scale"));
  m.def(
      "width_at_depth",
      [](const DArray& z, const DArray& delta, const DArray& p, double level, double alpha_z) {
        return width_at_depth(map_from(z, delta, p), level, alpha_z);
      },
      py::arg("alpha_z_values"), py::arg("delta_values"), py::arg("p_err"), py::arg("level"), py::arg("alpha_z"));
  m.def(
      "region_area",
      [](const DArray& z, const DArray& delta, const DArray& p, double level, double lo, double hi) {
        return region_area(map_from(z, delta, p), level, lo, hi);
      },
      py::arg("alpha_z_values"), py::arg("delta_values"), py::arg("p_err"), py::arg("level"),
      py::arg("z_lo"), py::arg("z_hi"));
  m.def(
      "contours",
      [](const DArray& z, const DArray& delta, const DArray& p, double level) {
        const ContourSet c = extract_contours(map_from(z, delta, p), level);
        std::vector<py::array_t<double>> lines;
        for (const auto& line : c.polylines) {
          py::array_t<double> a({static_cast<py::ssize_t>(line.size()), py::ssize_t{2}});
          auto w = a.mutable_unchecked<2>();
          for (std::size_t k = 0; k < line.size(); ++k) {
            w(k, 0) = line[k].alpha_z;
            w(k, 1) = line[k].delta;
          }
          lines.push_back(std::move(a));
        }
        return lines;
      },
      py::arg("alpha_z_values"), py::arg("delta_values"), py::arg("p_err"), py::arg("level"),
      "Polylines as (n, 2) arrays of (alpha_z, delta).");
  m.def("area_theorem", &area_theorem, py::arg("theta0"), py::arg("alpha_z"), py::arg("absorption") = 1.0);
}
