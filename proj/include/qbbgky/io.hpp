#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "qbbgky/contraction.hpp"
#include "qbbgky/errors.hpp"
#include "qbbgky/evolution.hpp"
#include "qbbgky/fock.hpp"
#include "qbbgky/hierarchy.hpp"
#include "qbbgky/model.hpp"
#include "qbbgky/observables.hpp"

namespace qbbgky {

struct InitialStateSpec {
  enum class Variant { Vacuum, Coherent, Gaussian, Fock };
  Variant variant = Variant::Vacuum;
  std::vector<Complex> alpha;
  std::vector<double> occupations;
  std::vector<int> fock_occupations;
};

struct OracleSpec {
  bool enabled = false;
  int n_max = 4;
  int total_cap = -1;  // -1: no cap
  int order_cap = 0;   // 0: defaults to closure N
};

struct ObservablesSpec {
  bool enabled = true;
  bool custom_grid = false;
  SpatialGrid spatial;  // meaningful when custom_grid; else the dual lattice
};

struct RunConfig {
  ModelSpec model;
  LadderPolynomial custom_terms;  // optional extra Hamiltonian terms
  InitialStateSpec initial;
  ClosureSpec closure;
  IntegratorSpec integrator;
  ObservablesSpec observables;
  OracleSpec oracle;
  std::string output_dir = "out";

  // Full Hamiltonian (model pieces + custom terms), normal-ordered.
  LadderPolynomial hamiltonian() const;
  SpatialGrid spatial_grid() const;
  int order_cap() const { return oracle.order_cap > 0 ? oracle.order_cap : closure.N; }
};

// Parses and fully validates a JSON config; error messages name the offending
// JSON path. Unknown keys are rejected to catch typos.
RunConfig parse_config(const std::string& text);

// Config with every default resolved; parse(dump(normalized)) round-trips.
nlohmann::json normalized_config(const RunConfig& config);

// Snapshot serialization: complex tensors as base64 little-endian
// complex64 (float32 re,im pairs).
nlohmann::json state_to_json(const HierarchyState& state);
HierarchyState state_from_json(const nlohmann::json& doc);

nlohmann::json programs_to_json(const ProgramSet& programs, const KernelStore& kernels,
                                int mode_count);

std::string base64_encode(const unsigned char* data, std::size_t len);
std::vector<unsigned char> base64_decode(const std::string& text);

// Initial hierarchy state of a config at order K = closure.N.
HierarchyState build_initial_state(const RunConfig& config);

// Initial oracle density matrix on the config's truncated Fock basis.
FockDensityMatrix build_initial_density(const RunConfig& config);

// States with K = 2 store no Gamma^(1,1)/Gamma^(2,0); observables need them,
// so reconstruct a K >= 3 view through the closure.
HierarchyState augment_for_observables(const HierarchyState& state,
                                       const ClosureSpec& closure);

// The sample times integrate() produces for this integrator spec.
std::vector<double> sample_times(const IntegratorSpec& spec);

struct RunResult {
  double final_time = 0.0;
  int sample_count = 0;
};

struct CompareResult {
  double max_distance = 0.0;
  int sample_count = 0;
};

// Subcommand bodies. Each writes into config.output_dir and a status.json
// recording success or the failure kind (with partial outputs flagged).
RunResult run(const RunConfig& config);
RunResult run_oracle(const RunConfig& config);
CompareResult compare(const RunConfig& config);
void derive(const RunConfig& config);
void observe(const RunConfig& config);

// Maps an in-flight exception to the CLI exit code contract.
int exit_code_for(const std::exception& err);

}  // namespace qbbgky
