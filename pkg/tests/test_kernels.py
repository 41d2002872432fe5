import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dense_1q, dense_cnot, random_circuit
from sparsetomo import _pykernels, kernels
from sparsetomo.qcore import H, V, u3

BACKENDS = kernels.available_backends()


def test_compiled_backend_is_selected_when_built():
    assert "python" in BACKENDS
    if "cython" in BACKENDS:
        assert kernels.BACKEND == "cython"


def _state(rng, n):
    a = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return a / np.linalg.norm(a)


@pytest.mark.parametrize("name", sorted(BACKENDS))
@pytest.mark.parametrize("n", [1, 2, 4])
def test_apply_1q_matches_dense(name, n, rng):
    mod = BACKENDS[name]
    g = u3(0.3, 1.1, -0.7).matrix
    for q in range(n):
        a = _state(rng, n)
        want = dense_1q(n, g, q) @ a
        mod.apply_1q(a, np.ascontiguousarray(g.ravel()), q)
        np.testing.assert_allclose(a, want, atol=1e-13)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_apply_cnot_matches_dense(name, rng):
    mod = BACKENDS[name]
    n = 3
    for c in range(n):
        for t in range(n):
            if c == t:
                continue
            a = _state(rng, n)
            want = dense_cnot(n, c, t) @ a
            mod.apply_cnot(a, c, t)
            np.testing.assert_allclose(a, want, atol=0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 5), depth=st.integers(0, 25))
def test_backends_agree_on_random_circuits(seed, n, depth):
    rng = np.random.default_rng(seed)
    circ = random_circuit(rng, n, depth)
    table, mats = circ.compiled
    init = _state(rng, n)
    outs = []
    for mod in BACKENDS.values():
        a = init.copy()
        if depth:
            mod.run_ops(a, table, mats)
        outs.append(a)
    for other in outs[1:]:
        np.testing.assert_allclose(other, outs[0], atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4), depth=st.integers(1, 15))
def test_trajectory_backends_agree(seed, n, depth):
    rng = np.random.default_rng(seed)
    circ = random_circuit(rng, n, depth)
    table, mats = circ.compiled
    codes = np.ascontiguousarray(rng.integers(0, 16, size=(5, len(circ))).astype(np.int8))
    # 1-qubit ops only take codes 0..3
    codes[:, table[:, 0] == kernels.OP_1Q] &= 3
    init = np.zeros(1 << n, dtype=complex)
    init[0] = 1
    outs = [mod.run_trajectories(init, table, mats, codes) for mod in BACKENDS.values()]
    for other in outs[1:]:
        np.testing.assert_allclose(other, outs[0], atol=1e-12)
    np.testing.assert_allclose(outs[0].sum(axis=1), 1.0, atol=1e-12)


def test_trajectory_pauli_codes_follow_the_gate():
    # X after H on |0> gives H|0> again in probabilities; Z after H gives |->
    from sparsetomo.qcore import Circuit

    circ = Circuit(1).h(0).h(0)
    table, mats = circ.compiled
    init = np.array([1, 0], dtype=complex)
    codes = np.array([[0, 0], [3, 0], [1, 0]], dtype=np.int8)
    for mod in BACKENDS.values():
        p = mod.run_trajectories(init, table, mats, codes)
        np.testing.assert_allclose(p, [[1, 0], [0, 1], [1, 0]], atol=1e-12)


def test_cnot_noise_code_splits_control_and_target():
    from sparsetomo.qcore import Circuit

    circ = Circuit(2).cx(0, 1)
    table, mats = circ.compiled
    init = np.array([1, 0, 0, 0], dtype=complex)
    # code 0b0100: X on control (qubit 0); code 0b0001: X on target (qubit 1)
    codes = np.array([[0b0100], [0b0001]], dtype=np.int8)
    for mod in BACKENDS.values():
        p = mod.run_trajectories(init, table, mats, codes)
        np.testing.assert_allclose(p, [[0, 1, 0, 0], [0, 0, 1, 0]], atol=1e-12)


def test_empty_op_table():
    table = np.zeros((0, 3), dtype=np.int64)
    mats = np.zeros((0, 4), dtype=complex)
    init = np.array([0.6, 0.8j])
    for mod in BACKENDS.values():
        p = mod.run_trajectories(init, table, mats, np.zeros((2, 0), dtype=np.int8))
        np.testing.assert_allclose(p, [[0.36, 0.64]] * 2)


def test_pauli_table_is_hermitian_unitary():
    for row in _pykernels.PAULI_MATS:
        m = row.reshape(2, 2)
        np.testing.assert_allclose(m @ m, np.eye(2), atol=0)


def test_hv_matrices_used_by_kernels():
    assert np.allclose(V.matrix, H.matrix @ np.diag([1, 1j]))


def test_pure_fallback_end_to_end():
    import os
    import subprocess
    import sys

    code = (
        "from sparsetomo import kernels, reconstruct, MeasurementManager, load_preset, run_circuit, fidelity\n"
        "c = load_preset('triple-000-011-110')\n"
        "r = reconstruct(MeasurementManager(), c, 0.05)\n"
        "print(kernels.BACKEND, round(fidelity(r.estimate, run_circuit(c)), 12))\n"
    )
    env = dict(os.environ, SPARSETOMO_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["python", "1.0"]
