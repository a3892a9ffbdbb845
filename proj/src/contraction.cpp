#include "qbbgky/contraction.hpp"

#include <algorithm>

namespace qbbgky {

namespace {

double binomial(int n, int k) {
  double v = 1.0;
  for (int i = 0; i < k; ++i) v = v * (n - i) / (i + 1);
  return v;
}

double factorial(int n) {
  double v = 1.0;
  for (int i = 2; i <= n; ++i) v *= i;
  return v;
}

// Ascending-index subsets of {0..n-1} of size c, lexicographic.
std::vector<std::vector<int>> subsets(int n, int c) {
  std::vector<std::vector<int>> out;
  std::vector<int> pick(static_cast<std::size_t>(c));
  for (int i = 0; i < c; ++i) pick[static_cast<std::size_t>(i)] = i;
  if (c == 0) {
    out.push_back({});
    return out;
  }
  while (true) {
    out.push_back(pick);
    int i = c - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == n - c + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < c; ++j) {
      pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return out;
}

std::vector<int> complement(const std::vector<int>& picked, int n) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n) - picked.size());
  std::size_t at = 0;
  for (int i = 0; i < n; ++i) {
    if (at < picked.size() && picked[at] == i) {
      ++at;
    } else {
      out.push_back(i);
    }
  }
  return out;
}

// Number of distinct arrangements of a sorted index list (multiset
// permutations).
long long distinct_arrangements(std::vector<int> sorted_modes) {
  long long count = 0;
  do {
    ++count;
  } while (std::next_permutation(sorted_modes.begin(), sorted_modes.end()));
  return count;
}

}  // namespace

KernelStore build_kernel_store(const LadderPolynomial& H_normal, int mode_count) {
  KernelStore store;
  for (const auto& [seq, coeff] : H_normal.terms()) {
    int a = 0;
    while (a < static_cast<int>(seq.size()) &&
           seq[static_cast<std::size_t>(a)].kind == OpKind::Create) {
      ++a;
    }
    int b = static_cast<int>(seq.size()) - a;
    for (int i = a; i < static_cast<int>(seq.size()); ++i) {
      if (seq[static_cast<std::size_t>(i)].kind != OpKind::Annihilate) {
        throw ConfigError("Hamiltonian must be normal-ordered before kernel build");
      }
    }
    if (a == 0 && b == 0) continue;

    std::string id = kernel_id(a, b);
    auto [it, inserted] = store.try_emplace(id);
    KernelTensor& tensor = it->second;
    if (inserted) {
      tensor.id = id;
      tensor.create_rank = a;
      tensor.annihilate_rank = b;
      tensor.mode_count = mode_count;
      tensor.data.assign(tensor_size(mode_count, a + b), Complex{0.0, 0.0});
    }

    std::vector<int> creates, annihs;
    creates.reserve(static_cast<std::size_t>(a));
    annihs.reserve(static_cast<std::size_t>(b));
    for (int i = 0; i < a; ++i) creates.push_back(seq[static_cast<std::size_t>(i)].mode);
    for (int i = a; i < a + b; ++i) annihs.push_back(seq[static_cast<std::size_t>(i)].mode);

    // Spread the coefficient evenly over every arrangement of each block so
    // the tensor is symmetric within its create axes and its annihilate axes.
    long long nc = distinct_arrangements(creates);
    long long na = distinct_arrangements(annihs);
    Complex share = coeff / static_cast<double>(nc * na);

    std::vector<int> modes(static_cast<std::size_t>(a + b));
    std::vector<int> cperm = creates, aperm = annihs;
    do {
      std::copy(cperm.begin(), cperm.end(), modes.begin());
      std::vector<int> ap = aperm;
      do {
        std::copy(ap.begin(), ap.end(), modes.begin() + a);
        tensor.data[flat_index(modes.data(), a + b, mode_count)] += share;
      } while (std::next_permutation(ap.begin(), ap.end()));
    } while (std::next_permutation(cperm.begin(), cperm.end()));
  }
  return store;
}

ContractionProgram compile_rhs_normal(const LadderPolynomial& H_normal, int m, int n,
                                      int mode_count) {
  if (m < 0 || n < 0 || m + n < 1) {
    throw ConfigError("compile target needs m+n >= 1");
  }
  validate_modes(H_normal, mode_count);
  if (H_normal.degree() > 4) {
    throw UnsupportedInteractionError("Hamiltonian degree " +
                                      std::to_string(H_normal.degree()) +
                                      " exceeds the supported cap of 4");
  }
  if (!is_hermitian(H_normal)) {
    throw InvalidModelError("Hamiltonian is not Hermitian");
  }

  // Present (creates, annihilates) signatures, ascending for determinism.
  std::vector<std::pair<int, int>> classes;
  for (const auto& [seq, coeff] : H_normal.terms()) {
    int a = 0;
    while (a < static_cast<int>(seq.size()) &&
           seq[static_cast<std::size_t>(a)].kind == OpKind::Create) {
      ++a;
    }
    int b = static_cast<int>(seq.size()) - a;
    if (a == 0 && b == 0) continue;
    std::pair<int, int> cls{a, b};
    if (std::find(classes.begin(), classes.end(), cls) == classes.end()) {
      classes.push_back(cls);
    }
  }
  std::sort(classes.begin(), classes.end());

  ContractionProgram program;
  program.target_m = m;
  program.target_n = n;
  const Complex I{0.0, 1.0};

  for (auto [a, b] : classes) {
    std::string id = kernel_id(a, b);

    // X*H piece: contract c of the target's annihilation legs against the
    // kernel's creation axes. The zero-contraction pieces of X*H and H*X
    // cancel identically, so c starts at 1.
    for (int c = 1; c <= std::min(m, a); ++c) {
      Complex weight = -I * binomial(a, c) * factorial(c);
      for (const std::vector<int>& V : subsets(m, c)) {
        ProgramTerm term;
        term.kernel = id;
        term.weight = weight;
        term.source_m = m - c + b;
        term.source_n = n + a - c;
        term.sum_rank = (a - c) + b;

        term.kernel_axes.resize(static_cast<std::size_t>(a + b));
        for (int i = 0; i < c; ++i) {
          term.kernel_axes[static_cast<std::size_t>(i)] = {false, V[static_cast<std::size_t>(i)]};
        }
        for (int i = c; i < a; ++i) {
          term.kernel_axes[static_cast<std::size_t>(i)] = {true, i - c};
        }
        for (int i = 0; i < b; ++i) {
          term.kernel_axes[static_cast<std::size_t>(a + i)] = {true, (a - c) + i};
        }

        term.gamma_slots.reserve(static_cast<std::size_t>(term.source_m + term.source_n));
        for (int leg : complement(V, m)) term.gamma_slots.push_back({false, leg});
        for (int i = 0; i < b; ++i) term.gamma_slots.push_back({true, (a - c) + i});
        for (int j = 0; j < n; ++j) term.gamma_slots.push_back({false, m + j});
        for (int i = 0; i < a - c; ++i) term.gamma_slots.push_back({true, i});

        program.terms.push_back(std::move(term));
      }
    }

    // H*X piece: contract c of the target's creation legs against the
    // kernel's annihilation axes.
    for (int c = 1; c <= std::min(n, b); ++c) {
      Complex weight = I * binomial(b, c) * factorial(c);
      for (const std::vector<int>& U : subsets(n, c)) {
        ProgramTerm term;
        term.kernel = id;
        term.weight = weight;
        term.source_m = m + b - c;
        term.source_n = n - c + a;
        term.sum_rank = (b - c) + a;

        term.kernel_axes.resize(static_cast<std::size_t>(a + b));
        for (int i = 0; i < a; ++i) {
          term.kernel_axes[static_cast<std::size_t>(i)] = {true, (b - c) + i};
        }
        for (int i = 0; i < c; ++i) {
          term.kernel_axes[static_cast<std::size_t>(a + i)] = {false,
                                                               m + U[static_cast<std::size_t>(i)]};
        }
        for (int i = c; i < b; ++i) {
          term.kernel_axes[static_cast<std::size_t>(a + i)] = {true, i - c};
        }

        term.gamma_slots.reserve(static_cast<std::size_t>(term.source_m + term.source_n));
        for (int leg = 0; leg < m; ++leg) term.gamma_slots.push_back({false, leg});
        for (int i = 0; i < b - c; ++i) term.gamma_slots.push_back({true, i});
        for (int j : complement(U, n)) term.gamma_slots.push_back({false, m + j});
        for (int i = 0; i < a; ++i) term.gamma_slots.push_back({true, (b - c) + i});

        program.terms.push_back(std::move(term));
      }
    }
  }
  return program;
}

ContractionProgram compile_rhs(const LadderPolynomial& H, int m, int n,
                               const ModelSpec& model) {
  int M = model.grid.mode_count();
  return compile_rhs_normal(normal_order(H, M), m, n, M);
}

ProgramSet compile_programs(const LadderPolynomial& H_normal, int K, int mode_count) {
  ProgramSet programs;
  for (int total = 1; total <= K - 1; ++total) {
    for (int nn = 0; total - nn >= nn; ++nn) {
      int mm = total - nn;
      programs.emplace(std::make_pair(mm, nn),
                       compile_rhs_normal(H_normal, mm, nn, mode_count));
    }
  }
  return programs;
}

Complex evaluate_program_entry(const ContractionProgram& program,
                               const KernelStore& kernels, const SourceFn& source,
                               const int* free_modes, int mode_count) {
  Complex total = 0.0;
  int kmodes[16], annih[16], createm[16], sums[16];
  for (const ProgramTerm& term : program.terms) {
    auto kit = kernels.find(term.kernel);
    if (kit == kernels.end()) {
      throw ConfigError("program references missing kernel tensor " + term.kernel);
    }
    const KernelTensor& kernel = kit->second;
    Complex acc = 0.0;
    for (int i = 0; i < term.sum_rank; ++i) sums[i] = 0;
    do {
      for (std::size_t i = 0; i < term.kernel_axes.size(); ++i) {
        const SlotBinding& bind = term.kernel_axes[i];
        kmodes[i] = bind.summed ? sums[bind.ref] : free_modes[bind.ref];
      }
      Complex kv = kernel.at(kmodes);
      if (kv != Complex{0.0, 0.0}) {
        for (int i = 0; i < term.source_m; ++i) {
          const SlotBinding& bind = term.gamma_slots[static_cast<std::size_t>(i)];
          annih[i] = bind.summed ? sums[bind.ref] : free_modes[bind.ref];
        }
        for (int i = 0; i < term.source_n; ++i) {
          const SlotBinding& bind =
              term.gamma_slots[static_cast<std::size_t>(term.source_m + i)];
          createm[i] = bind.summed ? sums[bind.ref] : free_modes[bind.ref];
        }
        acc += kv * source(term.source_m, term.source_n, annih, createm);
      }
    } while (term.sum_rank > 0 && next_tuple(sums, term.sum_rank, mode_count));
    total += term.weight * acc;
  }
  return total;
}

}  // namespace qbbgky
