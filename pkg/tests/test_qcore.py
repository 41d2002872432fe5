import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dense_1q, dense_circuit, random_circuit
from sparsetomo.errors import ContractError, DimensionError, EmptySupportError, InvalidCircuitError
from sparsetomo.qcore import (D, H, I2, V, X, Circuit, Gate, StateVector, apply_1q, apply_cnot, fidelity,
                              phase_normalize, run_circuit, rx, ry, support_of, tensor_gates, u3)

S2 = 1 / math.sqrt(2)


def sv(*amps):
    return StateVector.from_amplitudes(np.array(amps, dtype=complex))


def test_h_on_zero():
    out = apply_1q(StateVector.zero(1), H, 0)
    np.testing.assert_allclose(out.amps, [S2, S2], atol=1e-15)


def test_identity_gate_changes_nothing(rng):
    s = StateVector(3, rng.normal(size=8) + 0j)
    for q in range(3):
        np.testing.assert_array_equal(apply_1q(s, I2, q).amps, s.amps)


def test_h_on_qubit_1_matches_kron():
    out = apply_1q(sv(1, 0, 0, 0), H, 1)
    np.testing.assert_allclose(out.amps, [S2, 0, S2, 0], atol=1e-15)
    np.testing.assert_allclose(out.amps, dense_1q(2, H.matrix, 1) @ [1, 0, 0, 0], atol=1e-15)


def test_apply_1q_leaves_input_untouched():
    s = StateVector.zero(2)
    apply_1q(s, H, 0)
    np.testing.assert_array_equal(s.amps, [1, 0, 0, 0])
    assert not s.amps.flags.writeable


def test_qubit_out_of_range():
    with pytest.raises(IndexError):
        apply_1q(StateVector.zero(2), H, 2)
    with pytest.raises(IndexError):
        Circuit(2).h(5)


def test_cnot_moves_10_to_11():
    np.testing.assert_array_equal(apply_cnot(sv(0, 0, 1, 0), 1, 0).amps, [0, 0, 0, 1])


def test_cnot_without_control_bit_is_identity():
    s = sv(0.6, 0, 0.8, 0)  # control is qubit 0, never set
    np.testing.assert_array_equal(apply_cnot(s, 0, 1).amps, s.amps)


def test_cnot_is_involution(rng):
    s = StateVector(3, rng.normal(size=8) + 1j * rng.normal(size=8))
    np.testing.assert_array_equal(apply_cnot(apply_cnot(s, 2, 0), 2, 0).amps, s.amps)


def test_cnot_equal_qubits_rejected():
    with pytest.raises(InvalidCircuitError):
        apply_cnot(StateVector.zero(2), 1, 1)
    with pytest.raises(InvalidCircuitError):
        Circuit(2).cx(0, 0)


def test_run_circuit_empty_and_h():
    s = sv(0.6, 0.8j)
    np.testing.assert_array_equal(run_circuit(Circuit(1), s).amps, s.amps)
    np.testing.assert_allclose(run_circuit(Circuit(1).h(0)).amps, [S2, S2])


def test_run_circuit_dimension_mismatch():
    with pytest.raises(DimensionError):
        run_circuit(Circuit(2), StateVector.zero(3))


def test_t2_probe_layout():
    c = Circuit(4).h(2).h(3).cx(2, 0).cx(3, 1)
    want = np.zeros(16)
    want[[0, 5, 10, 15]] = 0.5
    np.testing.assert_allclose(run_circuit(c).amps, want, atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 5), depth=st.integers(0, 20))
def test_run_circuit_matches_dense_oracle(seed, n, depth):
    rng = np.random.default_rng(seed)
    c = random_circuit(rng, n, depth)
    a = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    s = StateVector(n, a / np.linalg.norm(a))
    out = run_circuit(c, s)
    np.testing.assert_allclose(out.amps, dense_circuit(c) @ s.amps, atol=1e-12)
    assert abs(out.norm() - 1) < 1e-10


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_h_layer_matches_dense(n, rng):
    a = rng.normal(size=1 << n) + 0j
    s = StateVector(n, a)
    dense = np.array([[1]])
    for _ in range(n):
        dense = np.kron(dense, H.matrix)
    out = run_circuit(tensor_gates(n, [H] * n), s)
    np.testing.assert_allclose(out.amps, dense @ a, atol=1e-12)


def test_v_is_h_times_d(rng):
    s = StateVector(2, rng.normal(size=4) + 1j * rng.normal(size=4))
    for q in range(2):
        two = apply_1q(apply_1q(s, D, q), H, q)
        np.testing.assert_allclose(apply_1q(s, V, q).amps, two.amps, atol=1e-12)


def test_non_unitary_gate_rejected():
    with pytest.raises(InvalidCircuitError):
        Gate("bad", [[1, 1], [0, 1]])


def test_u3_convention():
    g = u3(math.pi / 2, 0.3, 0.7).matrix
    c = s = S2
    want = [[c, -np.exp(0.7j) * s], [np.exp(0.3j) * s, np.exp(1.0j) * c]]
    np.testing.assert_allclose(g, want, atol=1e-15)


def test_rotations_are_exponentials():
    from scipy.linalg import expm

    xm = np.array([[0, 1], [1, 0]])
    ym = np.array([[0, -1j], [1j, 0]])
    np.testing.assert_allclose(rx(0.4).matrix, expm(-0.2j * xm), atol=1e-14)
    np.testing.assert_allclose(ry(0.9).matrix, expm(-0.45j * ym), atol=1e-14)


def test_fidelity_basics(rng):
    a = sv(0.6, 0.8)
    assert fidelity(a, a) == pytest.approx(1.0)
    assert fidelity(sv(1, 0), sv(0, 1)) == 0.0
    phase = np.exp(1j * rng.uniform(0, 2 * np.pi))
    assert fidelity(a, StateVector(1, phase * a.amps)) == pytest.approx(1.0)


def test_fidelity_requires_normalized():
    with pytest.raises(ContractError):
        fidelity(sv(1, 1), sv(1, 0))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False), min_size=8, max_size=8),
       st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False), min_size=8, max_size=8))
def test_fidelity_symmetric(xs, ys):
    a, b = np.array(xs), np.array(ys)
    if np.linalg.norm(a) < 1e-3 or np.linalg.norm(b) < 1e-3:
        return
    sa, sb = StateVector(3, a / np.linalg.norm(a)), StateVector(3, b / np.linalg.norm(b))
    assert fidelity(sa, sb) == pytest.approx(fidelity(sb, sa), abs=1e-12)
    assert 0 <= fidelity(sa, sb) <= 1


def test_phase_normalize_examples():
    np.testing.assert_allclose(phase_normalize(sv(1j * S2, 1j * S2), 1e-9).amps, [S2, S2], atol=1e-15)
    s = sv(0.6, -0.8)
    np.testing.assert_array_equal(phase_normalize(s, 1e-9).amps, s.amps)
    out = phase_normalize(sv(0, -S2, S2, 0), 1e-9)
    np.testing.assert_allclose(out.amps, [0, S2, -S2, 0], atol=1e-15)
    assert fidelity(out, sv(0, -S2, S2, 0)) == pytest.approx(1.0)


def test_phase_normalize_empty():
    with pytest.raises(EmptySupportError):
        phase_normalize(sv(0.1, 0.1), 0.5)


def test_serialize_round_trip(rng):
    c = Circuit(3).h(0).v(1).d(2).x(0).y(1).z(2).u3(1, 0.1, 0.2, 0.3).rx(0, 0.5).ry(2, 1.5).cx(2, 0)
    text = c.serialize()
    assert text.splitlines()[0] == "qubits 3"
    assert "cx 2 0" in text and "h 0" in text
    back = Circuit.parse(text)
    assert back.serialize() == text
    np.testing.assert_allclose(run_circuit(back).amps, run_circuit(c).amps, atol=0)


def test_parse_comments_and_errors():
    c = Circuit.parse("# bell\nh 0   # first\ncx 0 1\n")
    assert c.n == 2 and len(c) == 2
    with pytest.raises(InvalidCircuitError):
        Circuit.parse("qubits 2\nfoo 0")
    with pytest.raises(InvalidCircuitError):
        Circuit.parse("qubits 2\nu3 0 1.0")
    with pytest.raises(DimensionError):
        Circuit.parse("qubits 2\nh 0", n=3)


def test_custom_gates_have_no_text_form():
    c = Circuit(1).gate(H.dagger(), 0)
    with pytest.raises(InvalidCircuitError):
        c.serialize()


def test_circuit_concat_and_embed():
    a = Circuit(2).h(0)
    assert len(a + Circuit(2).cx(0, 1)) == 2
    with pytest.raises(DimensionError):
        a + Circuit(3)
    wide = Circuit(2).cx(0, 1).on_qubits(4, 2)
    assert wide.serialize().splitlines()[1] == "cx 2 3"
    assert wide.cnot_count == 1


def test_support_of():
    assert support_of(sv(S2, 0, 0, S2)) == [0, 3]


def test_state_dimension_checks():
    with pytest.raises(DimensionError):
        StateVector(2, np.zeros(3))
    with pytest.raises(DimensionError):
        StateVector.from_amplitudes([1, 0, 0])
