// Python bindings for the hierarchy-evolution core. The module mirrors the
// C++ API closely: polynomials in ladder operators, hierarchy states backed
// by dense tensors, the equation compiler, integration, and the exact
// truncated-Fock oracle. Heavy numerics stay in C++; numpy arrays are copies.
#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qbbgky/io.hpp"

namespace py = pybind11;
using namespace qbbgky;

namespace {

LadderOp op_from_pair(const std::string& kind, int mode) {
  if (kind == "create") return create(mode);
  if (kind == "annihilate") return annihilate(mode);
  throw ConfigError("operator kind must be 'create' or 'annihilate', got '" + kind + "'");
}

LadderPolynomial poly_from_terms(
    const std::vector<std::pair<Complex, std::vector<std::pair<std::string, int>>>>& terms) {
  LadderPolynomial poly;
  for (const auto& [coeff, factors] : terms) {
    OpSequence seq;
    seq.reserve(factors.size());
    for (const auto& [kind, mode] : factors) seq.push_back(op_from_pair(kind, mode));
    poly += LadderPolynomial::monomial(seq, coeff);
  }
  return poly;
}

py::list poly_terms(const LadderPolynomial& poly) {
  py::list out;
  for (const auto& [seq, coeff] : poly.terms()) {
    py::list factors;
    for (const LadderOp& op : seq) {
      factors.append(py::make_tuple(
          op.kind == OpKind::Create ? "create" : "annihilate", op.mode));
    }
    out.append(py::make_tuple(coeff, factors));
  }
  return out;
}

py::array_t<Complex> tensor_to_array(const GammaTensor& tensor) {
  std::vector<py::ssize_t> shape(static_cast<std::size_t>(tensor.rank()),
                                 tensor.mode_count());
  py::array_t<Complex> out(shape);
  std::copy(tensor.data().begin(), tensor.data().end(), out.mutable_data());
  return out;
}

GammaTensor tensor_from_array(int m, int n, py::array_t<Complex> values) {
  auto arr = py::array_t<Complex, py::array::c_style | py::array::forcecast>::ensure(values);
  if (!arr) throw ConfigError("gamma payload must be a complex array");
  int rank = m + n;
  if (arr.ndim() != rank) {
    throw ConfigError("gamma payload for order (" + std::to_string(m) + "," +
                      std::to_string(n) + ") must have rank " + std::to_string(rank));
  }
  int M = rank > 0 ? static_cast<int>(arr.shape(0)) : 1;
  for (py::ssize_t d = 0; d < arr.ndim(); ++d) {
    if (arr.shape(d) != M) throw ConfigError("gamma payload axes must all have equal length");
  }
  GammaTensor tensor(m, n, M);
  std::copy(arr.data(), arr.data() + tensor.size(), tensor.data().begin());
  return tensor;
}

HierarchyState evolve_final(const std::string& config_text) {
  RunConfig config = parse_config(config_text);
  config.model.validate();
  int M = config.model.grid.mode_count();
  LadderPolynomial H = config.hamiltonian();
  KernelStore kernels = build_kernel_store(H, M);
  ProgramSet programs = compile_programs(H, config.closure.N, M);
  HierarchyState initial = build_initial_state(config);
  Trajectory traj =
      integrate(initial, programs, kernels, config.closure, config.integrator, H);
  return std::move(traj.samples.back());
}

HierarchyState oracle_final(const std::string& config_text) {
  RunConfig config = parse_config(config_text);
  config.model.validate();
  LadderPolynomial H = config.hamiltonian();
  FockDensityMatrix rho0 = build_initial_density(config);
  rho0.validate();
  std::vector<FockDensityMatrix> states =
      evolve_density(rho0, H, {config.integrator.t_final});
  double bw = states[0].boundary_weight();
  if (bw > 1e-8) {
    throw CutoffError("oracle boundary weight " + format_value(bw) +
                      " exceeds 1e-8; raise oracle.n_max");
  }
  HierarchyState out = hierarchy_from_oracle(states[0], config.order_cap());
  out.set_time(config.integrator.t_final);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hierarchy evolution of bosonic reduced density matrices";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);
  py::register_exception<CutoffError>(m, "CutoffError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<LadderPolynomial>(m, "Polynomial")
      .def(py::init(&poly_from_terms), py::arg("terms"),
           "Build from [(coeff, [('create'|'annihilate', mode), ...]), ...]")
      .def_static("scalar", &LadderPolynomial::scalar, py::arg("value"))
      .def("terms", &poly_terms)
      .def("degree", &LadderPolynomial::degree)
      .def("__len__", &LadderPolynomial::size)
      .def("__str__", [](const LadderPolynomial& p) { return to_string(p); })
      .def("__repr__", [](const LadderPolynomial& p) { return to_string(p); })
      .def("__add__", [](const LadderPolynomial& a, const LadderPolynomial& b) { return a + b; })
      .def("__sub__", [](const LadderPolynomial& a, const LadderPolynomial& b) { return a - b; })
      .def("__mul__", [](const LadderPolynomial& a, const LadderPolynomial& b) { return a * b; })
      .def("__mul__", [](const LadderPolynomial& a, Complex c) {
        LadderPolynomial out = a;
        out *= c;
        return out;
      })
      .def("__rmul__", [](const LadderPolynomial& a, Complex c) {
        LadderPolynomial out = a;
        out *= c;
        return out;
      });

  m.def("normal_order", &normal_order, py::arg("poly"), py::arg("mode_count") = -1,
        "Rewrite with all creation operators to the left, exactly");
  m.def("commutator", &commutator, py::arg("a"), py::arg("b"));
  m.def("adjoint", &adjoint, py::arg("poly"));
  m.def("is_hermitian", &is_hermitian, py::arg("poly"), py::arg("tol") = 1e-12);
  m.def("dispersion", &dispersion, py::arg("momentum"), py::arg("mass"),
        "Relativistic single-mode energy sqrt(|p|^2 + m^2)");
  m.def(
      "fock_matrix",
      [](const LadderPolynomial& poly, int mode_count, int n_max) {
        FockBasis basis(mode_count, n_max);
        Eigen::MatrixXcd mat = matrix_of(poly, basis);
        py::array_t<Complex> out({mat.rows(), mat.cols()});
        for (Eigen::Index r = 0; r < mat.rows(); ++r) {
          for (Eigen::Index c = 0; c < mat.cols(); ++c) {
            out.mutable_at(r, c) = mat(r, c);
          }
        }
        return out;
      },
      py::arg("poly"), py::arg("mode_count"), py::arg("n_max"),
      "Dense matrix of the operator on the truncated Fock basis");

  py::class_<HierarchyState>(m, "State")
      .def_property_readonly("mode_count", &HierarchyState::mode_count)
      .def_property_readonly("K", &HierarchyState::order_K)
      .def_property_readonly("time", &HierarchyState::time)
      .def("orders", [](const HierarchyState& s) { return s.stored_orders(); },
           "Stored (m, n) tensor orders")
      .def(
          "gamma",
          [](const HierarchyState& s, int m, int n) {
            return tensor_to_array(s.get_gamma(m, n));
          },
          py::arg("m"), py::arg("n"),
          "Dense tensor for order (m, n); conjugate orders are materialized")
      .def(
          "set_gamma",
          [](HierarchyState& s, int m, int n, py::array_t<Complex> values) {
            s.set_gamma(tensor_from_array(m, n, values));
          },
          py::arg("m"), py::arg("n"), py::arg("values"),
          "Store a tensor; it is symmetrized and, on diagonal orders, "
          "projected back to Hermitian")
      .def("hermiticity_residual", &HierarchyState::hermiticity_residual)
      .def("symmetry_residual", &HierarchyState::symmetry_residual_max);

  m.def(
      "coherent_state",
      [](const std::vector<Complex>& alpha, int K) {
        return init_coherent(static_cast<int>(alpha.size()), alpha, K);
      },
      py::arg("alpha"), py::arg("K"));
  m.def(
      "gaussian_state",
      [](const std::vector<double>& occupations, int K) {
        return init_gaussian(static_cast<int>(occupations.size()), occupations, K);
      },
      py::arg("occupations"), py::arg("K"));
  m.def("vacuum_state", &init_vacuum, py::arg("mode_count"), py::arg("K"));
  m.def("distance", &distance, py::arg("a"), py::arg("b"), py::arg("order_cap"),
        "Largest entrywise deviation across tensors up to the order cap");

  m.def("evolve", &evolve_final, py::arg("config_json"),
        "Integrate the hierarchy described by a JSON config; returns the final state");
  m.def("oracle_state", &oracle_final, py::arg("config_json"),
        "Exactly evolve the config's initial state in a truncated Fock space "
        "and reduce it to a hierarchy state at t_final");
  m.def(
      "derive_programs",
      [](const std::string& config_text) {
        RunConfig config = parse_config(config_text);
        config.model.validate();
        int M = config.model.grid.mode_count();
        LadderPolynomial H = config.hamiltonian();
        KernelStore kernels = build_kernel_store(H, M);
        ProgramSet programs = compile_programs(H, config.closure.N, M);
        return programs_to_json(programs, kernels, M).dump();
      },
      py::arg("config_json"),
      "Compile the evolution equations and return their JSON listing");
  m.def(
      "run",
      [](const std::string& config_text) {
        RunResult result = run(parse_config(config_text));
        py::dict out;
        out["final_time"] = result.final_time;
        out["samples"] = result.sample_count;
        return out;
      },
      py::arg("config_json"), "Full file-writing run, as the CLI 'run' subcommand");
  m.def(
      "compare",
      [](const std::string& config_text) {
        CompareResult result = compare(parse_config(config_text));
        py::dict out;
        out["max_distance"] = result.max_distance;
        out["samples"] = result.sample_count;
        return out;
      },
      py::arg("config_json"),
      "Run hierarchy and oracle side by side, as the CLI 'compare' subcommand");
  m.def("normalized_config",
        [](const std::string& config_text) {
          return normalized_config(parse_config(config_text)).dump(2);
        },
        py::arg("config_json"), "Echo a config with every default made explicit");
}
