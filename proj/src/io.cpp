#include "qbbgky/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace qbbgky {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kBase64Alphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

[[noreturn]] void config_fail(const std::string& path, const std::string& what) {
  throw ConfigError("config error at " + path + ": " + what);
}

void check_object(const json& j, const std::string& path,
                  std::initializer_list<const char*> allowed) {
  if (!j.is_object()) config_fail(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) config_fail(path + "." + it.key(), "unknown key");
  }
}

double number_or(const json& j, const std::string& path, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) config_fail(path + "." + key, "expected a number");
  return j[key].get<double>();
}

int int_or(const json& j, const std::string& path, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) config_fail(path + "." + key, "expected an integer");
  return j[key].get<int>();
}

bool bool_or(const json& j, const std::string& path, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) config_fail(path + "." + key, "expected a boolean");
  return j[key].get<bool>();
}

std::string string_or(const json& j, const std::string& path, const char* key,
                      const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string()) config_fail(path + "." + key, "expected a string");
  return j[key].get<std::string>();
}

Complex complex_from(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    config_fail(path, "expected [re, im]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<double> real_vector_from(const json& j, const std::string& path) {
  if (!j.is_array()) config_fail(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) config_fail(path + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(j[i].get<double>());
  }
  return out;
}

InteractionKernel parse_kernel(const json& j, const std::string& path, int mode_count) {
  check_object(j, path, {"variant", "value", "f", "table"});
  std::string variant = string_or(j, path, "variant", "constant");
  if (variant == "constant") {
    return InteractionKernel::constant(number_or(j, path, "value", 1.0));
  }
  if (variant == "separable") {
    if (!j.contains("f")) config_fail(path + ".f", "separable kernel needs f");
    return InteractionKernel::separable(real_vector_from(j["f"], path + ".f"));
  }
  if (variant == "tabulated") {
    if (!j.contains("table") || !j["table"].is_array()) {
      config_fail(path + ".table", "tabulated kernel needs an MxM table");
    }
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(mode_count) * static_cast<std::size_t>(mode_count));
    for (std::size_t r = 0; r < j["table"].size(); ++r) {
      std::vector<double> row =
          real_vector_from(j["table"][r], path + ".table[" + std::to_string(r) + "]");
      flat.insert(flat.end(), row.begin(), row.end());
    }
    if (flat.size() != static_cast<std::size_t>(mode_count) * static_cast<std::size_t>(mode_count)) {
      config_fail(path + ".table", "table must be MxM for M=" + std::to_string(mode_count));
    }
    return InteractionKernel::tabulated(std::move(flat));
  }
  config_fail(path + ".variant", "expected constant | separable | tabulated");
}

LadderPolynomial parse_custom_terms(const json& j, const std::string& path, int mode_count) {
  if (!j.is_array()) config_fail(path, "expected an array of terms");
  LadderPolynomial poly;
  for (std::size_t i = 0; i < j.size(); ++i) {
    std::string tpath = path + "[" + std::to_string(i) + "]";
    check_object(j[i], tpath, {"coefficient", "factors"});
    if (!j[i].contains("coefficient") || !j[i].contains("factors")) {
      config_fail(tpath, "term needs coefficient and factors");
    }
    Complex coeff = complex_from(j[i]["coefficient"], tpath + ".coefficient");
    const json& factors = j[i]["factors"];
    if (!factors.is_array()) config_fail(tpath + ".factors", "expected an array");
    OpSequence seq;
    for (std::size_t f = 0; f < factors.size(); ++f) {
      std::string fpath = tpath + ".factors[" + std::to_string(f) + "]";
      const json& fj = factors[f];
      if (!fj.is_array() || fj.size() != 2 || !fj[0].is_string() ||
          !fj[1].is_number_integer()) {
        config_fail(fpath, "expected [\"create\"|\"annihilate\", mode]");
      }
      std::string kind = fj[0].get<std::string>();
      int mode = fj[1].get<int>();
      if (mode < 0 || mode >= mode_count) config_fail(fpath, "mode outside grid");
      if (kind == "create") {
        seq.push_back(create(mode));
      } else if (kind == "annihilate") {
        seq.push_back(annihilate(mode));
      } else {
        config_fail(fpath, "kind must be create or annihilate");
      }
    }
    poly.add_term(std::move(seq), coeff);
  }
  return poly;
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file);
  if (!out) throw Error("cannot open " + file.string() + " for writing");
  out << text;
}

void write_json(const fs::path& file, const json& doc) { write_text(file, doc.dump(2) + "\n"); }

std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

std::string snapshot_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "snapshot_%05d.json", index);
  return buf;
}

void write_status_ok(const fs::path& dir, const json& extra = json::object()) {
  json doc = extra;
  doc["status"] = "ok";
  write_json(dir / "status.json", doc);
}

const char* error_kind(const std::exception& err) {
  if (dynamic_cast<const ConfigError*>(&err)) return "config";
  if (dynamic_cast<const CutoffError*>(&err)) return "cutoff";
  if (dynamic_cast<const NumericalError*>(&err)) return "numerical";
  return "unknown";
}

void write_status_error(const fs::path& dir, const std::exception& err) {
  json doc;
  doc["status"] = "error";
  doc["error_kind"] = error_kind(err);
  doc["message"] = err.what();
  doc["partial_outputs"] = true;
  if (const auto* div = dynamic_cast<const DivergenceError*>(&err)) {
    doc["diverged_at"] = {{"t", div->time()}, {"m", div->order_m()}, {"n", div->order_n()}};
  }
  write_json(dir / "status.json", doc);
}

json spatial_grid_json(const SpatialGrid& xs) {
  return json{{"dims", xs.dims}, {"points_per_dim", xs.points_per_dim}, {"x_max", xs.x_max}};
}

json metadata_json(const RunConfig& config) {
  const ModeGrid& grid = config.model.grid;
  SpatialGrid xs = config.spatial_grid();
  double two_pi_d = 1.0;
  for (int i = 0; i < grid.dims; ++i) two_pi_d *= 2.0 * std::numbers::pi;
  json modes = json::array();
  for (int k = 0; k < grid.mode_count(); ++k) {
    double energy = config.model.mode_energy(k);
    modes.push_back(
        {{"mode", k},
         {"grid_point", grid.grid_point_of(k)},
         {"species", grid.species_of(k)},
         {"p", grid.momentum_of(k)},
         {"energy", energy},
         {"energy_leg_weight", std::sqrt(grid.cell_volume() / (two_pi_d * 2.0 * energy))},
         {"number_leg_weight", std::sqrt(grid.cell_volume() / two_pi_d)}});
  }
  return json{{"mode_count", grid.mode_count()},
              {"dims", grid.dims},
              {"points_per_dim", grid.points_per_dim},
              {"p_max", grid.p_max},
              {"n_species", grid.n_species},
              {"dp", grid.dp()},
              {"cell_volume", grid.cell_volume()},
              {"two_pi_pow_dims", two_pi_d},
              {"spatial_grid",
               {{"dims", xs.dims},
                {"points_per_dim", xs.points_per_dim},
                {"x_max", xs.x_max},
                {"dx", xs.dx()},
                {"cell_volume", xs.cell_volume()}}},
              {"modes", modes}};
}

class CsvWriter {
 public:
  CsvWriter() = default;
  void open(const fs::path& file, const std::string& header) {
    out_.open(file);
    if (!out_) throw Error("cannot open " + file.string() + " for writing");
    out_ << header << "\n";
  }
  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ",";
      out_ << format_double(values[i]);
    }
    out_ << "\n";
    out_.flush();
  }
  void raw_row(const std::string& line) {
    out_ << line << "\n";
    out_.flush();
  }
  bool is_open() const { return out_.is_open(); }

 private:
  std::ofstream out_;
};

std::string axis_header(const char* stem, int dims) {
  std::string h;
  for (int i = 0; i < dims; ++i) {
    h += ",";
    h += stem;
    h += std::to_string(i);
  }
  return h;
}

void write_observable_rows(CsvWriter& momentum_csv, CsvWriter& spatial_csv,
                           const HierarchyState& state, const RunConfig& config) {
  HierarchyState aug = augment_for_observables(state, config.closure);
  const ModeGrid& grid = config.model.grid;
  SpatialGrid xs = config.spatial_grid();
  std::vector<double> dens = momentum_density(aug, grid);
  for (int k = 0; k < grid.mode_count(); ++k) {
    std::vector<double> row{state.time(), static_cast<double>(k)};
    for (double p : grid.momentum_of(k)) row.push_back(p);
    row.push_back(dens[static_cast<std::size_t>(k)]);
    momentum_csv.row(row);
  }
  std::vector<double> e_field = energy_density(aug, config.model, xs);
  std::vector<double> n_field = number_density(aug, config.model, xs);
  for (int xi = 0; xi < xs.point_count(); ++xi) {
    std::vector<double> row{state.time()};
    for (double x : xs.position_of(xi)) row.push_back(x);
    row.push_back(e_field[static_cast<std::size_t>(xi)]);
    row.push_back(n_field[static_cast<std::size_t>(xi)]);
    spatial_csv.row(row);
  }
}

}  // namespace

std::string base64_encode(const unsigned char* data, std::size_t len) {
  std::string out;
  out.reserve(((len + 2) / 3) * 4);
  for (std::size_t i = 0; i < len; i += 3) {
    unsigned v = static_cast<unsigned>(data[i]) << 16;
    int rest = static_cast<int>(len - i);
    if (rest > 1) v |= static_cast<unsigned>(data[i + 1]) << 8;
    if (rest > 2) v |= static_cast<unsigned>(data[i + 2]);
    out.push_back(kBase64Alphabet[(v >> 18) & 63]);
    out.push_back(kBase64Alphabet[(v >> 12) & 63]);
    out.push_back(rest > 1 ? kBase64Alphabet[(v >> 6) & 63] : '=');
    out.push_back(rest > 2 ? kBase64Alphabet[v & 63] : '=');
  }
  return out;
}

std::vector<unsigned char> base64_decode(const std::string& text) {
  auto value_of = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  std::vector<unsigned char> out;
  int bits = 0, acc = 0;
  for (char c : text) {
    if (c == '=' || c == '\n' || c == '\r') continue;
    int v = value_of(c);
    if (v < 0) throw Error("invalid base64 payload");
    acc = (acc << 6) | v;
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<unsigned char>((acc >> bits) & 0xff));
    }
  }
  return out;
}

LadderPolynomial RunConfig::hamiltonian() const {
  LadderPolynomial h = assemble_hamiltonian(model).total();
  h += custom_terms;
  LadderPolynomial hn = normal_order(h, model.grid.mode_count());
  grade_hamiltonian(hn);  // enforces the degree cap
  return hn;
}

SpatialGrid RunConfig::spatial_grid() const {
  if (observables.custom_grid) return observables.spatial;
  return SpatialGrid::dual_of(model.grid);
}

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    throw ConfigError(std::string("config is not valid JSON: ") + err.what());
  }
  check_object(doc, "$",
               {"model", "initial_state", "closure", "integrator", "observables", "oracle",
                "output_dir"});
  RunConfig config;

  if (doc.contains("model")) {
    const json& jm = doc["model"];
    check_object(jm, "model", {"grid", "mass", "kernel", "coupling", "terms"});
    if (jm.contains("grid")) {
      const json& jg = jm["grid"];
      check_object(jg, "model.grid", {"dims", "points_per_dim", "p_max", "n_species"});
      config.model.grid.dims = int_or(jg, "model.grid", "dims", 1);
      config.model.grid.points_per_dim = int_or(jg, "model.grid", "points_per_dim", 1);
      config.model.grid.p_max = number_or(jg, "model.grid", "p_max", 1.0);
      config.model.grid.n_species = int_or(jg, "model.grid", "n_species", 1);
    }
    config.model.mass = number_or(jm, "model", "mass", 1.0);
    config.model.coupling = number_or(jm, "model", "coupling", 0.0);
    if (jm.contains("kernel")) {
      config.model.kernel =
          parse_kernel(jm["kernel"], "model.kernel", config.model.grid.mode_count());
    }
    if (jm.contains("terms")) {
      config.custom_terms =
          parse_custom_terms(jm["terms"], "model.terms", config.model.grid.mode_count());
      LadderPolynomial custom_normal =
          normal_order(config.custom_terms, config.model.grid.mode_count());
      grade_hamiltonian(custom_normal);
      if (!is_hermitian(custom_normal)) {
        throw InvalidModelError("config error at model.terms: polynomial is not Hermitian");
      }
    }
  }
  config.model.validate();
  int M = config.model.grid.mode_count();

  if (doc.contains("initial_state")) {
    const json& js = doc["initial_state"];
    check_object(js, "initial_state", {"variant", "alpha", "occupations"});
    std::string variant = string_or(js, "initial_state", "variant", "vacuum");
    if (variant == "vacuum") {
      config.initial.variant = InitialStateSpec::Variant::Vacuum;
    } else if (variant == "coherent") {
      config.initial.variant = InitialStateSpec::Variant::Coherent;
      if (!js.contains("alpha") || !js["alpha"].is_array()) {
        config_fail("initial_state.alpha", "coherent state needs an alpha list");
      }
      for (std::size_t i = 0; i < js["alpha"].size(); ++i) {
        config.initial.alpha.push_back(
            complex_from(js["alpha"][i], "initial_state.alpha[" + std::to_string(i) + "]"));
      }
      if (static_cast<int>(config.initial.alpha.size()) != M) {
        config_fail("initial_state.alpha", "length must equal mode count " + std::to_string(M));
      }
    } else if (variant == "gaussian" || variant == "fock") {
      if (!js.contains("occupations")) {
        config_fail("initial_state.occupations", "state needs an occupations list");
      }
      std::vector<double> occ =
          real_vector_from(js["occupations"], "initial_state.occupations");
      if (static_cast<int>(occ.size()) != M) {
        config_fail("initial_state.occupations",
                    "length must equal mode count " + std::to_string(M));
      }
      if (variant == "gaussian") {
        config.initial.variant = InitialStateSpec::Variant::Gaussian;
        for (double v : occ) {
          if (v < 0.0) config_fail("initial_state.occupations", "must be >= 0");
        }
        config.initial.occupations = std::move(occ);
      } else {
        config.initial.variant = InitialStateSpec::Variant::Fock;
        for (double v : occ) {
          if (v < 0.0 || v != std::floor(v)) {
            config_fail("initial_state.occupations", "fock occupations must be integers >= 0");
          }
          config.initial.fock_occupations.push_back(static_cast<int>(v));
        }
      }
    } else {
      config_fail("initial_state.variant", "expected vacuum | coherent | gaussian | fock");
    }
  }

  if (doc.contains("closure")) {
    const json& jc = doc["closure"];
    check_object(jc, "closure", {"variant", "N"});
    std::string variant = string_or(jc, "closure", "variant", "truncate");
    if (variant == "truncate") {
      config.closure.variant = ClosureSpec::Variant::Truncate;
    } else if (variant == "cluster") {
      config.closure.variant = ClosureSpec::Variant::Cluster;
    } else {
      config_fail("closure.variant", "expected truncate | cluster");
    }
    config.closure.N = int_or(jc, "closure", "N", 3);
  }
  config.closure.validate();

  if (doc.contains("integrator")) {
    const json& ji = doc["integrator"];
    check_object(ji, "integrator", {"dt", "t_final", "sample_every", "method"});
    std::string method = string_or(ji, "integrator", "method", "rk4");
    if (method != "rk4") config_fail("integrator.method", "only rk4 is supported");
    config.integrator.dt = number_or(ji, "integrator", "dt", 1e-3);
    config.integrator.t_final = number_or(ji, "integrator", "t_final", 1.0);
    config.integrator.sample_every = int_or(ji, "integrator", "sample_every", 100);
  }
  config.integrator.validate();

  if (doc.contains("observables")) {
    const json& jo = doc["observables"];
    check_object(jo, "observables", {"enabled", "spatial_grid"});
    config.observables.enabled = bool_or(jo, "observables", "enabled", true);
    if (jo.contains("spatial_grid")) {
      const json& jx = jo["spatial_grid"];
      check_object(jx, "observables.spatial_grid", {"dims", "points_per_dim", "x_max"});
      config.observables.custom_grid = true;
      SpatialGrid dual = SpatialGrid::dual_of(config.model.grid);
      config.observables.spatial.dims =
          int_or(jx, "observables.spatial_grid", "dims", config.model.grid.dims);
      if (config.observables.spatial.dims != config.model.grid.dims) {
        config_fail("observables.spatial_grid.dims", "must match model grid dims");
      }
      config.observables.spatial.points_per_dim =
          int_or(jx, "observables.spatial_grid", "points_per_dim", dual.points_per_dim);
      config.observables.spatial.x_max =
          number_or(jx, "observables.spatial_grid", "x_max", dual.x_max);
      if (config.observables.spatial.points_per_dim < 1 ||
          !(config.observables.spatial.x_max > 0.0)) {
        config_fail("observables.spatial_grid", "needs points_per_dim >= 1 and x_max > 0");
      }
    }
  }

  if (doc.contains("oracle")) {
    const json& jr = doc["oracle"];
    check_object(jr, "oracle", {"enabled", "n_max", "total_cap", "order_cap"});
    config.oracle.enabled = bool_or(jr, "oracle", "enabled", false);
    config.oracle.n_max = int_or(jr, "oracle", "n_max", 4);
    config.oracle.total_cap = int_or(jr, "oracle", "total_cap", -1);
    config.oracle.order_cap = int_or(jr, "oracle", "order_cap", 0);
    if (config.oracle.n_max < 0) config_fail("oracle.n_max", "must be >= 0");
    if (config.oracle.order_cap < 0) config_fail("oracle.order_cap", "must be >= 0");
    if (config.oracle.order_cap > config.closure.N) {
      config_fail("oracle.order_cap", "cannot exceed closure N (the stored orders)");
    }
  }

  config.output_dir = string_or(doc, "$", "output_dir", "out");
  return config;
}

nlohmann::json normalized_config(const RunConfig& config) {
  json kernel;
  switch (config.model.kernel.variant) {
    case InteractionKernel::Variant::Constant:
      kernel = {{"variant", "constant"}, {"value", config.model.kernel.constant_value}};
      break;
    case InteractionKernel::Variant::Separable:
      kernel = {{"variant", "separable"}, {"f", config.model.kernel.separable_f}};
      break;
    case InteractionKernel::Variant::Tabulated: {
      int M = config.model.grid.mode_count();
      json table = json::array();
      for (int r = 0; r < M; ++r) {
        json row = json::array();
        for (int c = 0; c < M; ++c) {
          row.push_back(config.model.kernel.table[static_cast<std::size_t>(r * M + c)]);
        }
        table.push_back(row);
      }
      kernel = {{"variant", "tabulated"}, {"table", table}};
      break;
    }
  }

  json model = {{"grid",
                 {{"dims", config.model.grid.dims},
                  {"points_per_dim", config.model.grid.points_per_dim},
                  {"p_max", config.model.grid.p_max},
                  {"n_species", config.model.grid.n_species}}},
                {"mass", config.model.mass},
                {"kernel", kernel},
                {"coupling", config.model.coupling}};
  if (!config.custom_terms.empty()) {
    json terms = json::array();
    for (const auto& [seq, coeff] : config.custom_terms.terms()) {
      json factors = json::array();
      for (const LadderOp& op : seq) {
        factors.push_back(
            json::array({op.kind == OpKind::Create ? "create" : "annihilate", op.mode}));
      }
      terms.push_back(
          {{"coefficient", json::array({coeff.real(), coeff.imag()})}, {"factors", factors}});
    }
    model["terms"] = terms;
  }

  json initial;
  switch (config.initial.variant) {
    case InitialStateSpec::Variant::Vacuum:
      initial = {{"variant", "vacuum"}};
      break;
    case InitialStateSpec::Variant::Coherent: {
      json alpha = json::array();
      for (Complex a : config.initial.alpha) {
        alpha.push_back(json::array({a.real(), a.imag()}));
      }
      initial = {{"variant", "coherent"}, {"alpha", alpha}};
      break;
    }
    case InitialStateSpec::Variant::Gaussian:
      initial = {{"variant", "gaussian"}, {"occupations", config.initial.occupations}};
      break;
    case InitialStateSpec::Variant::Fock:
      initial = {{"variant", "fock"}, {"occupations", config.initial.fock_occupations}};
      break;
  }

  SpatialGrid xs = config.spatial_grid();
  return json{
      {"model", model},
      {"initial_state", initial},
      {"closure",
       {{"variant",
         config.closure.variant == ClosureSpec::Variant::Truncate ? "truncate" : "cluster"},
        {"N", config.closure.N}}},
      {"integrator",
       {{"method", "rk4"},
        {"dt", config.integrator.dt},
        {"t_final", config.integrator.t_final},
        {"sample_every", config.integrator.sample_every}}},
      {"observables", {{"enabled", config.observables.enabled}, {"spatial_grid", spatial_grid_json(xs)}}},
      {"oracle",
       {{"enabled", config.oracle.enabled},
        {"n_max", config.oracle.n_max},
        {"total_cap", config.oracle.total_cap},
        {"order_cap", config.order_cap()}}},
      {"output_dir", config.output_dir}};
}

nlohmann::json state_to_json(const HierarchyState& state) {
  json tensors = json::array();
  for (auto [m, n] : state.stored_orders()) {
    const GammaTensor& tensor = state.stored(m, n);
    std::vector<unsigned char> bytes(tensor.size() * 8);
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      float re = static_cast<float>(tensor.data()[i].real());
      float im = static_cast<float>(tensor.data()[i].imag());
      std::memcpy(bytes.data() + 8 * i, &re, 4);
      std::memcpy(bytes.data() + 8 * i + 4, &im, 4);
    }
    tensors.push_back(
        {{"m", m}, {"n", n}, {"data", base64_encode(bytes.data(), bytes.size())}});
  }
  return json{{"format", "qbbgky-state-v1"},
              {"time", state.time()},
              {"mode_count", state.mode_count()},
              {"K", state.order_K()},
              {"tensors", tensors}};
}

HierarchyState state_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || doc.value("format", "") != "qbbgky-state-v1") {
    throw ConfigError("snapshot document is not qbbgky-state-v1");
  }
  HierarchyState state(doc.at("mode_count").get<int>(), doc.at("K").get<int>());
  state.set_time(doc.at("time").get<double>());
  for (const json& jt : doc.at("tensors")) {
    int m = jt.at("m").get<int>();
    int n = jt.at("n").get<int>();
    std::vector<unsigned char> bytes = base64_decode(jt.at("data").get<std::string>());
    GammaTensor tensor(m, n, state.mode_count());
    if (bytes.size() != tensor.size() * 8) {
      throw ConfigError("snapshot tensor payload has wrong size");
    }
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      float re, im;
      std::memcpy(&re, bytes.data() + 8 * i, 4);
      std::memcpy(&im, bytes.data() + 8 * i + 4, 4);
      tensor.data()[i] = Complex{static_cast<double>(re), static_cast<double>(im)};
    }
    state.set_gamma(tensor);
  }
  return state;
}

nlohmann::json programs_to_json(const ProgramSet& programs, const KernelStore& kernels,
                                int mode_count) {
  json jkernels = json::array();
  for (const auto& [id, kernel] : kernels) {
    jkernels.push_back({{"id", id},
                        {"creates", kernel.create_rank},
                        {"annihilates", kernel.annihilate_rank}});
  }
  json jprograms = json::array();
  for (const auto& [order, program] : programs) {
    json terms = json::array();
    for (const ProgramTerm& term : program.terms) {
      json wiring = json::array();
      auto push_bindings = [&](const std::vector<SlotBinding>& slots, const char* site,
                               int create_count, bool creates_first) {
        for (std::size_t axis = 0; axis < slots.size(); ++axis) {
          bool is_create = creates_first ? static_cast<int>(axis) < create_count
                                         : static_cast<int>(axis) >= create_count;
          wiring.push_back({{"site", site},
                            {"axis", axis},
                            {"kind", is_create ? "create" : "annihilate"},
                            {"bind", slots[axis].summed ? "sum" : "free"},
                            {"ref", slots[axis].ref}});
        }
      };
      auto kit = kernels.find(term.kernel);
      int kernel_creates = kit != kernels.end()
                               ? kit->second.create_rank
                               : static_cast<int>(term.kernel_axes.size()) - term.source_m;
      push_bindings(term.kernel_axes, "kernel", kernel_creates, true);
      // Gamma slots: the first source_m slots are annihilation legs.
      push_bindings(term.gamma_slots, "gamma", term.source_m, false);
      terms.push_back({{"source", json::array({term.source_m, term.source_n})},
                       {"kernel", term.kernel},
                       {"weight", json::array({term.weight.real(), term.weight.imag()})},
                       {"sum_rank", term.sum_rank},
                       {"wiring", wiring}});
    }
    jprograms.push_back(
        {{"target", json::array({order.first, order.second})}, {"terms", terms}});
  }
  return json{{"format", "qbbgky-programs-v1"},
              {"mode_count", mode_count},
              {"kernels", jkernels},
              {"programs", jprograms}};
}

HierarchyState build_initial_state(const RunConfig& config) {
  int M = config.model.grid.mode_count();
  int K = config.closure.N;
  switch (config.initial.variant) {
    case InitialStateSpec::Variant::Vacuum:
      return init_vacuum(M, K);
    case InitialStateSpec::Variant::Coherent:
      return init_coherent(M, config.initial.alpha, K);
    case InitialStateSpec::Variant::Gaussian:
      return init_gaussian(M, config.initial.occupations, K);
    case InitialStateSpec::Variant::Fock: {
      // Exact: for a normal-ordered monomial read on a product Fock state,
      // cutting at the state's own max occupation loses nothing.
      int n_max = 0;
      for (int nk : config.initial.fock_occupations) n_max = std::max(n_max, nk);
      FockBasis basis(M, n_max + K);
      FockDensityMatrix rho =
          density_from_vector(basis, fock_state_vector(basis, config.initial.fock_occupations));
      return hierarchy_from_oracle(rho, K);
    }
  }
  throw ConfigError("unknown initial state variant");
}

FockDensityMatrix build_initial_density(const RunConfig& config) {
  int M = config.model.grid.mode_count();
  FockBasis basis(M, config.oracle.n_max, config.oracle.total_cap);
  switch (config.initial.variant) {
    case InitialStateSpec::Variant::Vacuum: {
      std::vector<int> occ(static_cast<std::size_t>(M), 0);
      return density_from_vector(basis, fock_state_vector(basis, occ));
    }
    case InitialStateSpec::Variant::Coherent:
      return density_from_vector(basis, coherent_state_vector(basis, config.initial.alpha));
    case InitialStateSpec::Variant::Gaussian:
      return thermal_density(basis, config.initial.occupations);
    case InitialStateSpec::Variant::Fock:
      return density_from_vector(basis,
                                 fock_state_vector(basis, config.initial.fock_occupations));
  }
  throw ConfigError("unknown initial state variant");
}

HierarchyState augment_for_observables(const HierarchyState& state,
                                       const ClosureSpec& closure) {
  if (state.order_K() >= 3) return state;
  HierarchyState aug(state.mode_count(), 3);
  aug.set_time(state.time());
  aug.set_gamma(state.stored(1, 0));
  aug.set_gamma(close(state, 2, 0, closure));
  aug.set_gamma(close(state, 1, 1, closure));
  return aug;
}

std::vector<double> sample_times(const IntegratorSpec& spec) {
  std::vector<double> ts{0.0};
  if (spec.t_final <= 0.0) return ts;
  long long index = 0;
  double t = 0.0;
  while (true) {
    double remaining = spec.t_final - t;
    if (remaining <= 1e-12 * std::max(1.0, spec.t_final)) break;
    double dt = std::min(spec.dt, remaining);
    ++index;
    t = dt == spec.dt ? static_cast<double>(index) * spec.dt : t + dt;
    bool final_step = spec.t_final - t <= 1e-12 * std::max(1.0, spec.t_final);
    if (index % spec.sample_every == 0 || final_step) ts.push_back(t);
    if (final_step) break;
  }
  return ts;
}

RunResult run(const RunConfig& config) {
  fs::path dir(config.output_dir);
  fs::create_directories(dir / "snapshots");
  if (config.observables.enabled) fs::create_directories(dir / "observables");
  try {
    config.model.validate();
    int M = config.model.grid.mode_count();
    LadderPolynomial H = config.hamiltonian();
    KernelStore kernels = build_kernel_store(H, M);
    ProgramSet programs = compile_programs(H, config.closure.N, M);
    HierarchyState initial = build_initial_state(config);

    write_json(dir / "normalized_config.json", normalized_config(config));
    write_json(dir / "run_metadata.json", metadata_json(config));

    CsvWriter conservation;
    conservation.open(dir / "conservation.csv",
                      "t,trace,number,energy,herm_residual,min_eig_gamma11");
    CsvWriter momentum_csv, spatial_csv;
    if (config.observables.enabled) {
      momentum_csv.open(dir / "observables" / "momentum_density.csv",
                        "t,mode" + axis_header("p", config.model.grid.dims) + ",D");
      spatial_csv.open(dir / "observables" / "spatial_density.csv",
                       "t" + axis_header("x", config.model.grid.dims) + ",E,N");
    }

    int snapshot_index = 0;
    SampleSink sink = [&](const HierarchyState& state, const ConservationSample& sample) {
      write_json(dir / "snapshots" / snapshot_name(snapshot_index++), state_to_json(state));
      conservation.row({sample.t, sample.trace, sample.number, sample.energy,
                        sample.herm_residual, sample.min_eig_gamma11});
      if (config.observables.enabled) {
        write_observable_rows(momentum_csv, spatial_csv, state, config);
      }
    };

    Trajectory traj =
        integrate(initial, programs, kernels, config.closure, config.integrator, H, sink);
    write_status_ok(dir, {{"samples", snapshot_index},
                          {"final_time", traj.samples.back().time()}});
    return {traj.samples.back().time(), static_cast<int>(traj.samples.size())};
  } catch (const std::exception& err) {
    write_status_error(dir, err);
    throw;
  }
}

RunResult run_oracle(const RunConfig& config) {
  fs::path dir(config.output_dir);
  fs::create_directories(dir / "oracle_snapshots");
  try {
    if (!config.oracle.enabled) {
      throw ConfigError("oracle subcommand needs oracle.enabled = true");
    }
    config.model.validate();
    LadderPolynomial H = config.hamiltonian();
    FockDensityMatrix rho0 = build_initial_density(config);
    rho0.validate();
    std::vector<double> ts = sample_times(config.integrator);
    std::vector<FockDensityMatrix> states = evolve_density(rho0, H, ts);

    write_json(dir / "normalized_config.json", normalized_config(config));
    CsvWriter diag;
    diag.open(dir / "oracle_diagnostics.csv", "t,boundary_weight,trace_error,energy");
    Eigen::MatrixXcd Hm = matrix_of(H, rho0.basis());
    int K = config.order_cap();
    for (std::size_t i = 0; i < states.size(); ++i) {
      double bw = states[i].boundary_weight();
      if (bw > 1e-8) {
        throw CutoffError("oracle boundary weight " + format_value(bw) + " at t=" +
                          format_value(ts[i]) + " exceeds 1e-8; raise oracle.n_max");
      }
      HierarchyState h = hierarchy_from_oracle(states[i], K);
      h.set_time(ts[i]);
      write_json(dir / "oracle_snapshots" / snapshot_name(static_cast<int>(i)),
                 state_to_json(h));
      diag.row({ts[i], bw, std::abs(states[i].rho().trace() - Complex{1.0, 0.0}),
                (states[i].rho() * Hm).trace().real()});
    }
    write_status_ok(dir, {{"samples", static_cast<int>(states.size())}});
    return {ts.back(), static_cast<int>(states.size())};
  } catch (const std::exception& err) {
    write_status_error(dir, err);
    throw;
  }
}

CompareResult compare(const RunConfig& config) {
  fs::path dir(config.output_dir);
  fs::create_directories(dir);
  try {
    if (!config.oracle.enabled) {
      throw ConfigError("compare subcommand needs oracle.enabled = true");
    }
    config.model.validate();
    int M = config.model.grid.mode_count();
    LadderPolynomial H = config.hamiltonian();
    KernelStore kernels = build_kernel_store(H, M);
    ProgramSet programs = compile_programs(H, config.closure.N, M);
    HierarchyState initial = build_initial_state(config);
    Trajectory traj =
        integrate(initial, programs, kernels, config.closure, config.integrator, H);

    FockDensityMatrix rho0 = build_initial_density(config);
    rho0.validate();
    std::vector<double> ts = sample_times(config.integrator);
    if (ts.size() != traj.samples.size()) {
      throw NumericalError("sample grids of hierarchy and oracle disagree");
    }
    std::vector<FockDensityMatrix> oracle_states = evolve_density(rho0, H, ts);

    int cap = config.order_cap();
    write_json(dir / "normalized_config.json", normalized_config(config));
    CsvWriter series;
    series.open(dir / "compare.csv", "t,distance");
    std::map<std::pair<int, int>, double> per_order;
    double max_distance = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      double bw = oracle_states[i].boundary_weight();
      if (bw > 1e-8) {
        throw CutoffError("oracle boundary weight " + format_value(bw) + " at t=" +
                          format_value(ts[i]) + " exceeds 1e-8; raise oracle.n_max");
      }
      HierarchyState oh = hierarchy_from_oracle(oracle_states[i], cap);
      double d = distance(traj.samples[i], oh, cap);
      max_distance = std::max(max_distance, d);
      series.row({ts[i], d});
      for (auto [m, n] : oh.stored_orders()) {
        double e = max_abs_diff(traj.samples[i].stored(m, n), oh.stored(m, n));
        auto [it, inserted] = per_order.try_emplace({m, n}, e);
        if (!inserted) it->second = std::max(it->second, e);
      }
    }
    CsvWriter summary;
    summary.open(dir / "compare_summary.csv", "m,n,max_error");
    for (const auto& [order, err] : per_order) {
      summary.row({static_cast<double>(order.first), static_cast<double>(order.second), err});
    }
    write_status_ok(dir, {{"max_distance", max_distance},
                          {"samples", static_cast<int>(ts.size())}});
    return {max_distance, static_cast<int>(ts.size())};
  } catch (const std::exception& err) {
    write_status_error(dir, err);
    throw;
  }
}

void derive(const RunConfig& config) {
  fs::path dir(config.output_dir);
  fs::create_directories(dir);
  try {
    config.model.validate();
    int M = config.model.grid.mode_count();
    LadderPolynomial H = config.hamiltonian();
    KernelStore kernels = build_kernel_store(H, M);
    ProgramSet programs = compile_programs(H, config.closure.N, M);
    write_json(dir / "normalized_config.json", normalized_config(config));
    write_json(dir / "programs.json", programs_to_json(programs, kernels, M));
    write_status_ok(dir, {{"programs", static_cast<int>(programs.size())}});
  } catch (const std::exception& err) {
    write_status_error(dir, err);
    throw;
  }
}

void observe(const RunConfig& config) {
  fs::path dir(config.output_dir);
  try {
    fs::path snapdir = dir / "snapshots";
    std::vector<fs::path> files;
    if (fs::exists(snapdir)) {
      for (const auto& entry : fs::directory_iterator(snapdir)) {
        if (entry.path().extension() == ".json") files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      throw ConfigError("no snapshots found under " + snapdir.string() +
                        "; run the run subcommand first");
    }
    fs::create_directories(dir / "observables");
    CsvWriter momentum_csv, spatial_csv;
    momentum_csv.open(dir / "observables" / "momentum_density.csv",
                      "t,mode" + axis_header("p", config.model.grid.dims) + ",D");
    spatial_csv.open(dir / "observables" / "spatial_density.csv",
                     "t" + axis_header("x", config.model.grid.dims) + ",E,N");
    for (const fs::path& file : files) {
      std::ifstream in(file);
      json doc = json::parse(in);
      HierarchyState state = state_from_json(doc);
      if (state.mode_count() != config.model.grid.mode_count()) {
        throw ConfigError("snapshot mode count differs from config model");
      }
      write_observable_rows(momentum_csv, spatial_csv, state, config);
    }
    write_status_ok(dir, {{"snapshots", static_cast<int>(files.size())}});
  } catch (const std::exception& err) {
    write_status_error(dir, err);
    throw;
  }
}

int exit_code_for(const std::exception& err) {
  if (dynamic_cast<const ConfigError*>(&err)) return kExitConfig;
  if (dynamic_cast<const CutoffError*>(&err)) return kExitCutoff;
  if (dynamic_cast<const NumericalError*>(&err)) return kExitNumerical;
  return 1;
}

}  // namespace qbbgky
