#pragma once

#include <functional>
#include <vector>

#include "qbbgky/contraction.hpp"
#include "qbbgky/errors.hpp"
#include "qbbgky/hierarchy.hpp"
#include "qbbgky/ladder.hpp"

namespace qbbgky {

struct ClosureSpec {
  enum class Variant { Truncate, Cluster };
  Variant variant = Variant::Truncate;
  int N = 3;

  void validate() const {
    if (N < 2) throw ConfigError("closure order N must be >= 2");
    if (variant == Variant::Cluster && N > 3) {
      throw ConfigError("cluster closure supports N = 2 or 3 only");
    }
  }
};

struct IntegratorSpec {
  double dt = 1e-3;
  double t_final = 1.0;
  int sample_every = 100;

  void validate() const {
    if (!(dt > 0.0)) throw ConfigError("integrator dt must be > 0");
    if (t_final < 0.0) throw ConfigError("integrator t_final must be >= 0");
    if (sample_every < 1) throw ConfigError("sample_every must be >= 1");
  }
};

// One closure evaluation: Gamma^(m,n) entry at explicit modes, reconstructed
// from in-range data. Used lazily inside RHS contractions so out-of-range
// tensors are never materialized.
Complex closure_value(const HierarchyState& state, const ClosureSpec& closure, int m,
                      int n, const int* annih, const int* create);

// Materialized out-of-range tensor (m+n >= closure.N). In-range requests are
// misuse and rejected.
GammaTensor close(const HierarchyState& state, int m, int n, const ClosureSpec& closure);

// Accessor combining stored orders with lazy closure for the rest.
SourceFn closed_source(const HierarchyState& state, const ClosureSpec& closure);

// Time derivative of every stored tensor. The programs must cover every
// stored order of the state; closure.N must equal state.K.
HierarchyState rhs(const HierarchyState& state, const ProgramSet& programs,
                   const KernelStore& kernels, const ClosureSpec& closure);

// One fixed-size RK4 step; restores symmetry/Hermiticity invariants and
// checks finiteness afterwards.
HierarchyState step(const HierarchyState& state, const ProgramSet& programs,
                    const KernelStore& kernels, const ClosureSpec& closure, double dt);

struct ConservationSample {
  double t = 0.0;
  double trace = 1.0;
  double number = 0.0;
  double energy = 0.0;
  double herm_residual = 0.0;
  double min_eig_gamma11 = 0.0;
};

struct ConservationReport {
  std::vector<ConservationSample> samples;
};

struct Trajectory {
  std::vector<HierarchyState> samples;
  ConservationReport report;
};

// <H> from the state, using the closure for out-of-range expectation legs.
double energy_expectation(const HierarchyState& state, const LadderPolynomial& H_normal,
                          const ClosureSpec& closure);

double total_number_from_state(const HierarchyState& state, const ClosureSpec& closure);

double min_eig_gamma11(const HierarchyState& state, const ClosureSpec& closure);

ConservationSample conservation_sample(const HierarchyState& state,
                                       const LadderPolynomial& H_normal,
                                       const ClosureSpec& closure);

using SampleSink = std::function<void(const HierarchyState&, const ConservationSample&)>;

// Fixed-step integration to t_final, sampling every sample_every steps plus
// the endpoints. Deterministic for a given configuration. On divergence the
// sink has already received every completed sample; the error then
// propagates.
Trajectory integrate(const HierarchyState& initial, const ProgramSet& programs,
                     const KernelStore& kernels, const ClosureSpec& closure,
                     const IntegratorSpec& spec, const LadderPolynomial& H_normal,
                     const SampleSink& sink = {});

}  // namespace qbbgky
