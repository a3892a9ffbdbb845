#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qbbgky/errors.hpp"
#include "qbbgky/ladder.hpp"
#include "qbbgky/model.hpp"
#include "qbbgky/util.hpp"

namespace qbbgky {

// One Hamiltonian coefficient tensor: the fully symmetrized coefficients of
// all normal-form terms with create_rank creation and annihilate_rank
// annihilation factors. Axes are ordered creates first, row-major.
struct KernelTensor {
  std::string id;
  int create_rank = 0;
  int annihilate_rank = 0;
  int mode_count = 0;
  std::vector<Complex> data;

  int rank() const { return create_rank + annihilate_rank; }
  Complex at(const int* modes) const {
    return data[flat_index(modes, rank(), mode_count)];
  }
};

// Keyed by KernelTensor::id.
using KernelStore = std::map<std::string, KernelTensor>;

inline std::string kernel_id(int create_rank, int annihilate_rank) {
  return "H_c" + std::to_string(create_rank) + "_a" + std::to_string(annihilate_rank);
}

// Groups a normal-ordered Hamiltonian by (creates, annihilates) signature and
// symmetrizes each group's coefficients into a dense tensor. Scalar terms are
// dropped (they commute with everything).
KernelStore build_kernel_store(const LadderPolynomial& H_normal, int mode_count);

// How one tensor axis (kernel) or index slot (source Gamma) is bound during
// evaluation: either to a free index of the target (ref = target leg,
// annihilation legs 0..m-1 then creation legs m..m+n-1) or to one of the
// term's summed dummy indices (ref = 0..sum_rank-1).
struct SlotBinding {
  bool summed = false;
  int ref = 0;
};

struct ProgramTerm {
  int source_m = 0, source_n = 0;
  std::string kernel;
  Complex weight;
  int sum_rank = 0;
  std::vector<SlotBinding> kernel_axes;  // creates first, then annihilates
  std::vector<SlotBinding> gamma_slots;  // annihilation slots first, then creation
};

// d/dt Gamma^(m,n) = sum of terms, each a weighted contraction of one kernel
// tensor with one source Gamma over the summed indices.
struct ContractionProgram {
  int target_m = 0, target_n = 0;
  std::vector<ProgramTerm> terms;
};

// Compiles the evolution equation of Gamma^(m,n) generated by H. The program
// is independent of the state and of the kernel values; it references kernel
// tensors by id. H must be Hermitian with degree <= 4.
ContractionProgram compile_rhs(const LadderPolynomial& H, int m, int n,
                               const ModelSpec& model);

// Same, for an already normal-ordered H on a bare mode count.
ContractionProgram compile_rhs_normal(const LadderPolynomial& H_normal, int m, int n,
                                      int mode_count);

using ProgramSet = std::map<std::pair<int, int>, ContractionProgram>;

// Programs for every stored order of a K-level state: all (m,n) with m >= n
// and 1 <= m+n <= K-1.
ProgramSet compile_programs(const LadderPolynomial& H_normal, int K, int mode_count);

// Source accessor: entry of Gamma^(m',n') at the given annihilation/creation
// modes, however the caller realizes out-of-range orders.
using SourceFn =
    std::function<Complex(int m, int n, const int* annih, const int* create)>;

// Evaluates one entry of the program target at the given free-leg modes
// (annihilation legs first).
Complex evaluate_program_entry(const ContractionProgram& program,
                               const KernelStore& kernels, const SourceFn& source,
                               const int* free_modes, int mode_count);

}  // namespace qbbgky
