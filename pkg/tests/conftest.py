import numpy as np
import pytest

from sparsetomo.qcore import Apply1Q, Circuit, StateVector


def dense_1q(n, mat, q):
    """Full 2**n matrix of a 1-qubit gate, built with Kronecker products."""
    return np.kron(np.kron(np.eye(1 << (n - 1 - q)), np.asarray(mat)), np.eye(1 << q))


def dense_cnot(n, c, t):
    dim = 1 << n
    m = np.zeros((dim, dim))
    for i in range(dim):
        j = i ^ (1 << t) if i >> c & 1 else i
        m[j, i] = 1
    return m


def dense_circuit(circuit):
    """Matrix oracle for a circuit, independent of the strided kernels."""
    n = circuit.n
    u = np.eye(1 << n, dtype=complex)
    for op in circuit.ops:
        if isinstance(op, Apply1Q):
            u = dense_1q(n, op.gate.matrix, op.qubit) @ u
        else:
            u = dense_cnot(n, op.control, op.target) @ u
    return u


def random_sparse_state(rng, n, k=None):
    dim = 1 << n
    if k is None:
        k = int(rng.integers(1, dim + 1))
    idx = rng.choice(dim, size=k, replace=False)
    a = np.zeros(dim, dtype=complex)
    a[idx] = rng.normal(size=k) + 1j * rng.normal(size=k)
    # keep every entry comfortably away from zero
    a[idx] += 0.3 * np.exp(1j * np.angle(a[idx]))
    return StateVector(n, a / np.linalg.norm(a))


def random_circuit(rng, n, depth):
    from sparsetomo.qcore import u3

    c = Circuit(n)
    for _ in range(depth):
        if n > 1 and rng.random() < 0.4:
            a, b = rng.choice(n, size=2, replace=False)
            c = c.cx(int(a), int(b))
        else:
            c = c.gate(u3(*rng.uniform(0, 2 * np.pi, 3)), int(rng.integers(n)))
    return c


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
