"""Hierarchy evolution of bosonic reduced density matrices.

The package wraps a C++ core that:

* manipulates polynomials in bosonic ladder operators exactly
  (``normal_order``, ``commutator``, ``adjoint``),
* compiles a normal-ordered Hamiltonian into coupled evolution equations
  for the reduced density tensors ``Gamma^(m,n)`` (``derive_programs``),
* integrates those equations under a truncation or cluster closure
  (``evolve``, ``run``),
* cross-checks trajectories against exact evolution in a truncated Fock
  space (``oracle_state``, ``compare``).

Configs are JSON strings; see ``normalized_config`` for the full schema
with defaults filled in.
"""

from qbbgky._core import (
    ConfigError,
    CutoffError,
    Error,
    NumericalError,
    Polynomial,
    State,
    adjoint,
    coherent_state,
    commutator,
    compare,
    derive_programs,
    dispersion,
    distance,
    evolve,
    fock_matrix,
    gaussian_state,
    is_hermitian,
    normal_order,
    normalized_config,
    oracle_state,
    run,
    vacuum_state,
)

__all__ = [
    "ConfigError",
    "CutoffError",
    "Error",
    "NumericalError",
    "Polynomial",
    "State",
    "adjoint",
    "coherent_state",
    "commutator",
    "compare",
    "derive_programs",
    "dispersion",
    "distance",
    "evolve",
    "fock_matrix",
    "gaussian_state",
    "is_hermitian",
    "normal_order",
    "normalized_config",
    "oracle_state",
    "run",
    "vacuum_state",
]

__version__ = "0.1.0"
