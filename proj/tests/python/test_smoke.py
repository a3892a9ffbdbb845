"""End-to-end smoke tests for the python bindings."""

import json
import math

import numpy as np
import pytest

import qbbgky


def b(mode):
    return qbbgky.Polynomial([(1.0, [("annihilate", mode)])])


def bd(mode):
    return qbbgky.Polynomial([(1.0, [("create", mode)])])


def test_canonical_commutation_relation():
    comm = qbbgky.normal_order(qbbgky.commutator(b(0), bd(0)))
    terms = comm.terms()
    assert len(terms) == 1
    coeff, factors = terms[0]
    assert factors == []
    assert coeff == pytest.approx(1.0)
    assert qbbgky.normal_order(qbbgky.commutator(b(0), bd(1))).terms() == []


def test_normal_order_preserves_matrix_elements():
    poly = b(0) * bd(0) * b(1) + bd(1) * b(0) * 0.5j
    ordered = qbbgky.normal_order(poly)
    a = qbbgky.fock_matrix(poly, 2, 6)
    o = qbbgky.fock_matrix(ordered, 2, 6)
    # Interior columns are exact; the top occupation rows feel the cutoff.
    assert np.max(np.abs(a[:, :20] - o[:, :20])) < 1e-12


def test_hermiticity_probe():
    h = bd(0) * b(0) + qbbgky.Polynomial.scalar(2.0)
    assert qbbgky.is_hermitian(qbbgky.normal_order(h))
    assert not qbbgky.is_hermitian(qbbgky.normal_order(1j * bd(0) * b(1)))


def test_dispersion():
    assert qbbgky.dispersion([0.0], 1.3) == pytest.approx(1.3)
    assert qbbgky.dispersion([3.0, 4.0], 0.0) == pytest.approx(5.0)


FREE_CONFIG = {
    "model": {
        "grid": {"dims": 1, "points_per_dim": 2, "p_max": 1.0},
        "mass": 1.0,
        "coupling": 0.0,
    },
    "initial_state": {"variant": "coherent", "alpha": [[0.3, 0.0], [0.0, 0.2]]},
    "closure": {"variant": "truncate", "N": 3},
    "integrator": {"dt": 1e-3, "t_final": 0.5, "sample_every": 100},
    "oracle": {"enabled": True, "n_max": 10},
}


def test_free_evolution_rotates_amplitudes():
    final = qbbgky.evolve(json.dumps(FREE_CONFIG))
    assert final.time == pytest.approx(0.5)
    energy = qbbgky.dispersion([0.5], 1.0)
    gamma10 = np.asarray(final.gamma(1, 0))
    expected = np.array([0.3, 0.2j]) * np.exp(-1j * energy * 0.5)
    assert np.max(np.abs(gamma10 - expected)) < 1e-8


def test_hierarchy_matches_oracle_for_free_theory():
    final = qbbgky.evolve(json.dumps(FREE_CONFIG))
    exact = qbbgky.oracle_state(json.dumps(FREE_CONFIG))
    assert qbbgky.distance(final, exact, 3) < 1e-8


def test_interacting_compare_is_finite_and_small(tmp_path):
    config = json.loads(json.dumps(FREE_CONFIG))
    config["model"]["coupling"] = 0.1
    config["model"]["kernel"] = {"variant": "constant", "value": 1.0}
    config["integrator"]["t_final"] = 0.2
    config["output_dir"] = str(tmp_path / "cmp")
    result = qbbgky.compare(json.dumps(config))
    assert result["samples"] == 3
    assert 0.0 <= result["max_distance"] < 1e-3
    assert (tmp_path / "cmp" / "compare.csv").exists()


def test_run_writes_the_output_tree(tmp_path):
    config = json.loads(json.dumps(FREE_CONFIG))
    config["output_dir"] = str(tmp_path / "out")
    result = qbbgky.run(json.dumps(config))
    assert result["samples"] == 6
    status = json.loads((tmp_path / "out" / "status.json").read_text())
    assert status["status"] == "ok"
    assert (tmp_path / "out" / "snapshots" / "snapshot_00005.json").exists()
    assert (tmp_path / "out" / "observables" / "spatial_density.csv").exists()


def test_state_roundtrip_and_symmetrization():
    state = qbbgky.vacuum_state(2, 3)
    raw = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    state.set_gamma(2, 0, raw)
    stored = np.asarray(state.gamma(2, 0))
    assert stored == pytest.approx((raw + raw.T) / 2)
    # Conjugate orders are materialized on read.
    assert np.asarray(state.gamma(0, 2)) == pytest.approx(stored.conj())
    assert state.symmetry_residual() <= 1e-15


def test_coherent_state_moments():
    state = qbbgky.coherent_state([0.2 + 0.1j], 4)
    amp = 0.2 + 0.1j
    assert np.asarray(state.gamma(1, 0))[0] == pytest.approx(amp)
    assert np.asarray(state.gamma(1, 1))[0, 0] == pytest.approx(abs(amp) ** 2)
    assert np.asarray(state.gamma(2, 1))[0, 0, 0] == pytest.approx(amp * abs(amp) ** 2)


def test_config_errors_are_value_errors():
    with pytest.raises(qbbgky.ConfigError):
        qbbgky.evolve("{\"unknown_key\": 1}")
    assert issubclass(qbbgky.ConfigError, ValueError)


def test_normalized_config_roundtrip():
    echoed = qbbgky.normalized_config(json.dumps(FREE_CONFIG))
    again = qbbgky.normalized_config(echoed)
    assert json.loads(echoed) == json.loads(again)


def test_derive_lists_programs():
    doc = json.loads(qbbgky.derive_programs(json.dumps(FREE_CONFIG)))
    assert doc["format"] == "qbbgky-programs-v1"
    targets = {tuple(p["target"]) for p in doc["programs"]}
    assert targets == {(1, 0), (2, 0), (1, 1)}
