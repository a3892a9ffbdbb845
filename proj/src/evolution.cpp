#include "qbbgky/evolution.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace qbbgky {

namespace {

struct Leg {
  OpKind kind;
  int mode;
};

// First cumulant of one leg.
Complex cumulant1(const HierarchyState& state, const Leg& leg) {
  const GammaTensor& g1 = state.stored(1, 0);
  Complex v = g1.data()[static_cast<std::size_t>(leg.mode)];
  return leg.kind == OpKind::Annihilate ? v : std::conj(v);
}

// Second cumulant of a leg pair; the pair moment is the normal-ordered one,
// so the value does not depend on the order of the two legs.
Complex cumulant2(const HierarchyState& state, const Leg& x, const Leg& y) {
  const GammaTensor& g1 = state.stored(1, 0);
  auto a1 = [&](int mode) { return g1.data()[static_cast<std::size_t>(mode)]; };
  if (x.kind == OpKind::Annihilate && y.kind == OpKind::Annihilate) {
    int modes[2] = {x.mode, y.mode};
    return state.stored(2, 0).at(modes) - a1(x.mode) * a1(y.mode);
  }
  if (x.kind == OpKind::Create && y.kind == OpKind::Create) {
    int modes[2] = {x.mode, y.mode};
    return std::conj(state.stored(2, 0).at(modes) - a1(x.mode) * a1(y.mode));
  }
  const Leg& an = x.kind == OpKind::Annihilate ? x : y;
  const Leg& cr = x.kind == OpKind::Annihilate ? y : x;
  int modes[2] = {an.mode, cr.mode};
  return state.stored(1, 1).at(modes) - a1(an.mode) * std::conj(a1(cr.mode));
}

// Moment from first and second cumulants: sum over partitions of the legs
// into singletons and pairs (third and higher cumulants dropped).
Complex gaussian_moment(const HierarchyState& state, std::vector<Leg>& legs) {
  if (legs.empty()) return 1.0;
  Leg head = legs.front();
  std::vector<Leg> rest(legs.begin() + 1, legs.end());
  Complex total = cumulant1(state, head) * gaussian_moment(state, rest);
  for (std::size_t j = 0; j < rest.size(); ++j) {
    std::vector<Leg> remaining;
    remaining.reserve(rest.size() - 1);
    for (std::size_t i = 0; i < rest.size(); ++i) {
      if (i != j) remaining.push_back(rest[i]);
    }
    total += cumulant2(state, head, rest[j]) * gaussian_moment(state, remaining);
  }
  return total;
}

}  // namespace

Complex closure_value(const HierarchyState& state, const ClosureSpec& closure, int m,
                      int n, const int* annih, const int* create) {
  switch (closure.variant) {
    case ClosureSpec::Variant::Truncate:
      return 0.0;
    case ClosureSpec::Variant::Cluster: {
      if (closure.N == 2) {
        const GammaTensor& g1 = state.stored(1, 0);
        Complex v = 1.0;
        for (int i = 0; i < m; ++i) v *= g1.data()[static_cast<std::size_t>(annih[i])];
        for (int j = 0; j < n; ++j) {
          v *= std::conj(g1.data()[static_cast<std::size_t>(create[j])]);
        }
        return v;
      }
      std::vector<Leg> legs;
      legs.reserve(static_cast<std::size_t>(m + n));
      for (int i = 0; i < m; ++i) legs.push_back({OpKind::Annihilate, annih[i]});
      for (int j = 0; j < n; ++j) legs.push_back({OpKind::Create, create[j]});
      return gaussian_moment(state, legs);
    }
  }
  throw ConfigError("unknown closure variant");
}

GammaTensor close(const HierarchyState& state, int m, int n, const ClosureSpec& closure) {
  closure.validate();
  if (m + n < closure.N) {
    throw ConfigError("close() called on in-range order (" + std::to_string(m) + "," +
                      std::to_string(n) + "); read the state instead");
  }
  int M = state.mode_count();
  GammaTensor out(m, n, M);
  int modes[16];
  for (std::size_t idx = 0; idx < out.size(); ++idx) {
    unflatten_index(idx, m + n, M, modes);
    out.data()[idx] = closure_value(state, closure, m, n, modes, modes + m);
  }
  return out;
}

SourceFn closed_source(const HierarchyState& state, const ClosureSpec& closure) {
  return [&state, closure](int m, int n, const int* annih, const int* create) {
    if (state.in_range(m, n)) return state.entry(annih, m, create, n);
    return closure_value(state, closure, m, n, annih, create);
  };
}

HierarchyState rhs(const HierarchyState& state, const ProgramSet& programs,
                   const KernelStore& kernels, const ClosureSpec& closure) {
  int M = state.mode_count();
  HierarchyState deriv(M, state.order_K());
  deriv.set_time(state.time());
  SourceFn source = closed_source(state, closure);
  for (auto [m, n] : state.stored_orders()) {
    auto pit = programs.find({m, n});
    if (pit == programs.end()) {
      throw ConfigError("no compiled program for Gamma^(" + std::to_string(m) + "," +
                        std::to_string(n) + ")");
    }
    const ContractionProgram& program = pit->second;
    GammaTensor tensor(m, n, M);
    parallel_chunks(tensor.size(), [&](std::size_t begin, std::size_t end) {
      int modes[16];
      for (std::size_t idx = begin; idx < end; ++idx) {
        unflatten_index(idx, m + n, M, modes);
        tensor.data()[idx] = evaluate_program_entry(program, kernels, source, modes, M);
      }
    });
    deriv.set_gamma(tensor);
  }
  return deriv;
}

namespace {

// target = base + sum_i coeff_i * deriv_i, written through set_gamma so the
// symmetry invariants are restored after every stage combination.
HierarchyState combine(const HierarchyState& base,
                       const std::vector<std::pair<double, const HierarchyState*>>& mix,
                       double new_time) {
  HierarchyState out(base.mode_count(), base.order_K());
  out.set_time(new_time);
  for (auto [m, n] : base.stored_orders()) {
    GammaTensor t = base.stored(m, n);
    for (const auto& [coeff, deriv] : mix) {
      const GammaTensor& d = deriv->stored(m, n);
      for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] += coeff * d.data()[i];
    }
    out.set_gamma(t);
  }
  return out;
}

void check_finite(const HierarchyState& state, double t) {
  for (auto [m, n] : state.stored_orders()) {
    if (!all_finite(state.stored(m, n))) throw DivergenceError(t, m, n);
  }
}

}  // namespace

HierarchyState step(const HierarchyState& state, const ProgramSet& programs,
                    const KernelStore& kernels, const ClosureSpec& closure, double dt) {
  double t0 = state.time();
  HierarchyState k1 = rhs(state, programs, kernels, closure);
  HierarchyState y2 = combine(state, {{0.5 * dt, &k1}}, t0 + 0.5 * dt);
  HierarchyState k2 = rhs(y2, programs, kernels, closure);
  HierarchyState y3 = combine(state, {{0.5 * dt, &k2}}, t0 + 0.5 * dt);
  HierarchyState k3 = rhs(y3, programs, kernels, closure);
  HierarchyState y4 = combine(state, {{dt, &k3}}, t0 + dt);
  HierarchyState k4 = rhs(y4, programs, kernels, closure);
  HierarchyState out = combine(state,
                               {{dt / 6.0, &k1},
                                {dt / 3.0, &k2},
                                {dt / 3.0, &k3},
                                {dt / 6.0, &k4}},
                               t0 + dt);
  check_finite(out, t0 + dt);
  return out;
}

double energy_expectation(const HierarchyState& state, const LadderPolynomial& H_normal,
                          const ClosureSpec& closure) {
  SourceFn source = closed_source(state, closure);
  Complex total = 0.0;
  int annih[8], createm[8];
  for (const auto& [seq, coeff] : H_normal.terms()) {
    int a = 0;
    while (a < static_cast<int>(seq.size()) &&
           seq[static_cast<std::size_t>(a)].kind == OpKind::Create) {
      ++a;
    }
    int b = static_cast<int>(seq.size()) - a;
    for (int i = 0; i < a; ++i) createm[i] = seq[static_cast<std::size_t>(i)].mode;
    for (int i = 0; i < b; ++i) annih[i] = seq[static_cast<std::size_t>(a + i)].mode;
    // <b†_S b_T> = Gamma^(|T|,|S|)(T; S)
    total += coeff * source(b, a, annih, createm);
  }
  return total.real();
}

double total_number_from_state(const HierarchyState& state, const ClosureSpec& closure) {
  SourceFn source = closed_source(state, closure);
  Complex total = 0.0;
  for (int k = 0; k < state.mode_count(); ++k) {
    int mode[1] = {k};
    total += source(1, 1, mode, mode);
  }
  return total.real();
}

double min_eig_gamma11(const HierarchyState& state, const ClosureSpec& closure) {
  int M = state.mode_count();
  SourceFn source = closed_source(state, closure);
  Eigen::MatrixXcd g(M, M);
  for (int j = 0; j < M; ++j) {
    for (int k = 0; k < M; ++k) {
      int an[1] = {j}, cr[1] = {k};
      g(j, k) = source(1, 1, an, cr);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(0.5 * (g + g.adjoint()),
                                                         Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("Gamma^(1,1) eigendecomposition failed");
  }
  return solver.eigenvalues().minCoeff();
}

ConservationSample conservation_sample(const HierarchyState& state,
                                       const LadderPolynomial& H_normal,
                                       const ClosureSpec& closure) {
  ConservationSample s;
  s.t = state.time();
  s.trace = 1.0;  // Gamma^(0,0) is structurally pinned
  s.number = total_number_from_state(state, closure);
  s.energy = energy_expectation(state, H_normal, closure);
  s.herm_residual = state.hermiticity_residual();
  s.min_eig_gamma11 = min_eig_gamma11(state, closure);
  return s;
}

Trajectory integrate(const HierarchyState& initial, const ProgramSet& programs,
                     const KernelStore& kernels, const ClosureSpec& closure,
                     const IntegratorSpec& spec, const LadderPolynomial& H_normal,
                     const SampleSink& sink) {
  spec.validate();
  closure.validate();
  if (closure.N != initial.order_K()) {
    throw ConfigError("closure order N must equal the state's stored order K");
  }
  Trajectory traj;
  auto record = [&](const HierarchyState& s) {
    ConservationSample sample = conservation_sample(s, H_normal, closure);
    traj.report.samples.push_back(sample);
    traj.samples.push_back(s);
    if (sink) sink(s, sample);
  };

  HierarchyState state = initial;
  record(state);
  if (spec.t_final <= 0.0) return traj;

  double t0 = initial.time();
  long long step_index = 0;
  while (true) {
    double elapsed = state.time() - t0;
    double remaining = spec.t_final - elapsed;
    if (remaining <= 1e-12 * std::max(1.0, spec.t_final)) break;
    double dt = std::min(spec.dt, remaining);
    state = step(state, programs, kernels, closure, dt);
    ++step_index;
    // Keep full-step times exact multiples of dt to avoid drift.
    if (dt == spec.dt) state.set_time(t0 + static_cast<double>(step_index) * spec.dt);
    bool final_step =
        spec.t_final - (state.time() - t0) <= 1e-12 * std::max(1.0, spec.t_final);
    if (step_index % spec.sample_every == 0 || final_step) record(state);
    if (final_step) break;
  }
  return traj;
}

}  // namespace qbbgky
