"""Unitary process tomography through a maximally entangled probe.

Applying the process to the low half of ``(1/sqrt N) sum_j |j>|j>`` stacks its
columns into a 2n-qubit state; reconstruct that state, read the columns back
and project onto the nearest unitary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DimensionError, SingularMatrixError
from .qcore import MAX_QUBITS, Circuit, StateVector, fidelity, run_circuit
from .sim import MeasurementManager, Prep
from .tomo import ReconstructionReport, reconstruct

SINGULAR_TOL = 1e-9


@dataclass
class UnitaryEstimate:
    n: int
    matrix: np.ndarray
    raw_matrix: np.ndarray
    process_fidelity: float | None
    state_fidelity: float | None
    report: ReconstructionReport

    def to_dict(self) -> dict:
        def enc(m):
            return [[[float(z.real), float(z.imag)] for z in row] for row in m]

        return {
            "matrix": enc(self.matrix),
            "raw_matrix": enc(self.raw_matrix),
            "process_fidelity": self.process_fidelity,
            "state_fidelity": self.state_fidelity,
            "settings_used": self.report.settings_used,
            "cnots_used": self.report.cnots_used,
        }


def prepare_probe(n: int) -> Circuit:
    """Circuit on ``2n`` qubits producing ``(1/sqrt N) sum_j |j>|j>``."""
    if n < 1:
        raise DimensionError("process must act on at least one qubit")
    if 2 * n > MAX_QUBITS:
        raise CapacityError(f"probe needs {2 * n} qubits; simulator holds {MAX_QUBITS}")
    c = Circuit(2 * n)
    for q in range(n, 2 * n):
        c = c.h(q)
    for j in range(n):
        c = c.cx(n + j, j)
    return c


def process_to_state_circuit(probe: Circuit, process: Circuit) -> Circuit:
    if probe.n != 2 * process.n:
        raise DimensionError(f"{probe.n}-qubit probe cannot host a {process.n}-qubit process")
    return probe + process.on_qubits(probe.n)


def process_matrix(process: Circuit) -> np.ndarray:
    """Dense matrix of a circuit, column ``j`` being its output on ``|j>``."""
    dim = 1 << process.n
    cols = [run_circuit(process, StateVector.basis(process.n, j)).amps for j in range(dim)]
    return np.column_stack(cols)


def extract_columns(estimate: StateVector, n: int) -> np.ndarray:
    """Reshape a stacked-column state into its ``N x N`` operator."""
    if estimate.n != 2 * n:
        raise DimensionError(f"expected a {2 * n}-qubit state, got {estimate.n}")
    dim = 1 << n
    return math.sqrt(dim) * estimate.amps.reshape(dim, dim).T


def polar_project(raw: np.ndarray) -> np.ndarray:
    """Unitary factor of the polar decomposition, the Frobenius-nearest unitary."""
    raw = np.asarray(raw, dtype=np.complex128)
    u, s, vh = np.linalg.svd(raw)
    if s[-1] <= SINGULAR_TOL:
        raise SingularMatrixError(f"matrix is rank deficient (smallest singular value {s[-1]:.3g})")
    return u @ vh


def process_fidelity(u: np.ndarray, u_ref: np.ndarray) -> float:
    u, u_ref = np.asarray(u), np.asarray(u_ref)
    if u.shape != u_ref.shape:
        raise DimensionError(f"shape {u.shape} vs {u_ref.shape}")
    dim = u.shape[0]
    f = abs(np.trace(u_ref.conj().T @ u)) ** 2 / dim**2
    return float(min(1.0, f))


def run_process_tomography(mgr: MeasurementManager, process: Circuit, eps: float, scheme: str = "mst",
                           reference: Circuit | np.ndarray | None = None, **kwargs) -> UnitaryEstimate:
    n = process.n
    full = process_to_state_circuit(prepare_probe(n), process)
    report = reconstruct(mgr, Prep(full), eps, scheme, **kwargs)
    raw = extract_columns(report.estimate, n)
    unitary = polar_project(raw)
    proc_f = None
    if reference is not None:
        ref = process_matrix(reference) if isinstance(reference, Circuit) else np.asarray(reference)
        proc_f = process_fidelity(unitary, ref)
    state_f = fidelity(report.estimate, run_circuit(full))
    return UnitaryEstimate(n, unitary, raw, proc_f, state_f, report)


def w1_circuit(theta: float = math.pi / 4, phi: float = math.pi / 3) -> Circuit:
    """``CNOT (R_x(theta) (x) R_y(phi))``: R_y on qubit 0, R_x on qubit 1, CNOT from 1 to 0."""
    return Circuit(2).ry(0, phi).rx(1, theta).cx(1, 0)
