"""Pure numpy implementation of the statevector kernels.

Every function here has a twin in ``_ckernels.pyx`` with the same signature
and in-place semantics. Op tables are int64 arrays of rows ``(kind, a, b)``:

* ``kind == 0``: apply ``mats[b]`` (a flattened 2x2 matrix) to qubit ``a``
* ``kind == 1``: CNOT with control ``a`` and target ``b``

Noise codes (one int8 per op per trajectory) encode Paulis inserted right
after the op: for a 1-qubit op ``0..3`` means I, X, Y, Z on qubit ``a``; for
a CNOT ``code >> 2`` acts on the control and ``code & 3`` on the target.
"""
from functools import lru_cache

import numpy as np

OP_1Q = 0
OP_CNOT = 1

PAULI_MATS = np.array(
    [
        [1, 0, 0, 1],
        [0, 1, 1, 0],
        [0, -1j, 1j, 0],
        [1, 0, 0, -1],
    ],
    dtype=np.complex128,
)


def apply_1q(amps, mat, qubit):
    """Apply a flattened 2x2 ``mat`` to ``qubit`` of ``amps`` in place."""
    v = amps.reshape(-1, 2, 1 << qubit)
    a0 = v[:, 0, :]
    a1 = v[:, 1, :]
    n0 = mat[0] * a0 + mat[1] * a1
    n1 = mat[2] * a0 + mat[3] * a1
    v[:, 0, :] = n0
    v[:, 1, :] = n1


@lru_cache(maxsize=512)
def _cnot_sources(size, control, target):
    idx = np.arange(size)
    lo = idx[((idx >> control) & 1 == 1) & ((idx >> target) & 1 == 0)]
    lo.flags.writeable = False
    return lo, lo | (1 << target)


def apply_cnot(amps, control, target):
    lo, hi = _cnot_sources(amps.shape[0], control, target)
    tmp = amps[lo]
    amps[lo] = amps[hi]
    amps[hi] = tmp


def _apply_pauli(amps, code, qubit):
    if code:
        apply_1q(amps, PAULI_MATS[code], qubit)


def run_ops(amps, ops, mats):
    for kind, a, b in ops:
        if kind == OP_1Q:
            apply_1q(amps, mats[b], a)
        else:
            apply_cnot(amps, a, b)


def run_trajectories(init, ops, mats, codes):
    """Run one noisy copy of the op table per row of ``codes``.

    Returns the outcome probabilities, shape ``(len(codes), len(init))``.
    """
    n_traj = codes.shape[0]
    out = np.empty((n_traj, init.shape[0]), dtype=np.float64)
    for t in range(n_traj):
        amps = init.copy()
        row = codes[t]
        for j, (kind, a, b) in enumerate(ops):
            code = row[j]
            if kind == OP_1Q:
                apply_1q(amps, mats[b], a)
                _apply_pauli(amps, code, a)
            else:
                apply_cnot(amps, a, b)
                if code:
                    _apply_pauli(amps, code >> 2, a)
                    _apply_pauli(amps, code & 3, b)
        out[t] = amps.real**2 + amps.imag**2
    return out
