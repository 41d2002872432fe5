"""Statevectors, single-qubit gates, CNOT circuits and their text form.

Basis index ``i`` is the bitstring ``i_{n-1} ... i_0`` with qubit 0 the
least-significant bit. Gates are applied by strided passes over amplitude
pairs; no ``2**n x 2**n`` matrix is ever built.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Union

import numpy as np

from . import kernels
from .errors import ContractError, DimensionError, EmptySupportError, InvalidCircuitError

MAX_QUBITS = 16
UNITARY_TOL = 1e-12
NORM_TOL = 1e-6

_S2 = 1 / math.sqrt(2)


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True, eq=False)
class Gate:
    """A 2x2 unitary with an optional text name for serialization."""

    name: str
    matrix: np.ndarray
    params: tuple = ()

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128).reshape(2, 2)
        if not np.allclose(m.conj().T @ m, np.eye(2), atol=UNITARY_TOL, rtol=0):
            raise InvalidCircuitError(f"gate {self.name!r} is not unitary")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))

    @classmethod
    def from_matrix(cls, matrix) -> "Gate":
        return cls("custom", matrix)

    @property
    def serializable(self) -> bool:
        return self.name != "custom"

    def dagger(self) -> "Gate":
        return Gate.from_matrix(self.matrix.conj().T)

    def token(self, qubit: int) -> str:
        if not self.serializable:
            raise InvalidCircuitError("custom matrix gates have no text form")
        return " ".join([self.name, str(qubit), *(_fmt(p) for p in self.params)])

    def __eq__(self, other):
        if not isinstance(other, Gate):
            return NotImplemented
        return (
            self.name == other.name
            and self.params == other.params
            and np.array_equal(self.matrix, other.matrix)
        )

    def __hash__(self):
        return hash((self.name, self.params, self.matrix.tobytes()))

    def __repr__(self):
        if self.params:
            return f"Gate({self.name}{self.params})"
        return f"Gate({self.name})"


def u3(theta: float, phi: float, lam: float) -> Gate:
    """Generic rotation ``[[c, -e^{il} s], [e^{ip} s, e^{i(p+l)} c]]`` with ``c = cos(theta/2)``."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    m = [
        [c, -np.exp(1j * lam) * s],
        [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c],
    ]
    return Gate("u3", m, (theta, phi, lam))


def rx(theta: float) -> Gate:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return Gate("rx", [[c, -1j * s], [-1j * s, c]], (theta,))


def ry(theta: float) -> Gate:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return Gate("ry", [[c, -s], [s, c]], (theta,))


I2 = Gate("id", np.eye(2))
H = Gate("h", [[_S2, _S2], [_S2, -_S2]])
D = Gate("d", [[1, 0], [0, 1j]])
# V = H D, applied as one gate
V = Gate("v", [[_S2, 1j * _S2], [_S2, -1j * _S2]])
X = Gate("x", [[0, 1], [1, 0]])
Y = Gate("y", [[0, -1j], [1j, 0]])
Z = Gate("z", [[1, 0], [0, -1]])

_FIXED = {g.name: g for g in (I2, H, D, V, X, Y, Z)}
_PARAMETRIC = {"u3": (u3, 3), "rx": (rx, 1), "ry": (ry, 1)}


@dataclass(frozen=True)
class Apply1Q:
    gate: Gate
    qubit: int


@dataclass(frozen=True)
class Cnot:
    control: int
    target: int


Op = Union[Apply1Q, Cnot]


def _check_qubit(q: int, n: int):
    if not 0 <= q < n:
        raise IndexError(f"qubit {q} out of range for {n} qubits")


@dataclass(frozen=True)
class Circuit:
    """An ordered, immutable list of 1-qubit gates and CNOTs on ``n`` qubits.

    Builder methods return new circuits, so ``Circuit(2).h(0).cx(0, 1)`` reads
    left to right in execution order.
    """

    n: int
    ops: tuple = field(default=())

    def __post_init__(self):
        if self.n < 1:
            raise InvalidCircuitError("circuit needs at least one qubit")
        ops = tuple(self.ops)
        for op in ops:
            if isinstance(op, Apply1Q):
                _check_qubit(op.qubit, self.n)
            elif isinstance(op, Cnot):
                _check_qubit(op.control, self.n)
                _check_qubit(op.target, self.n)
                if op.control == op.target:
                    raise InvalidCircuitError("CNOT control equals target")
            else:
                raise InvalidCircuitError(f"unknown op {op!r}")
        object.__setattr__(self, "ops", ops)

    def append(self, *ops: Op) -> "Circuit":
        return Circuit(self.n, self.ops + tuple(ops))

    def gate(self, g: Gate, qubit: int) -> "Circuit":
        return self.append(Apply1Q(g, qubit))

    def h(self, q):
        return self.gate(H, q)

    def v(self, q):
        return self.gate(V, q)

    def d(self, q):
        return self.gate(D, q)

    def x(self, q):
        return self.gate(X, q)

    def y(self, q):
        return self.gate(Y, q)

    def z(self, q):
        return self.gate(Z, q)

    def u3(self, q, theta, phi, lam):
        return self.gate(u3(theta, phi, lam), q)

    def rx(self, q, theta):
        return self.gate(rx(theta), q)

    def ry(self, q, theta):
        return self.gate(ry(theta), q)

    def cx(self, control, target):
        return self.append(Cnot(control, target))

    def __add__(self, other: "Circuit") -> "Circuit":
        if not isinstance(other, Circuit):
            return NotImplemented
        if other.n != self.n:
            raise DimensionError(f"cannot join {self.n}- and {other.n}-qubit circuits")
        return Circuit(self.n, self.ops + other.ops)

    def __len__(self):
        return len(self.ops)

    @property
    def cnot_count(self) -> int:
        return sum(isinstance(op, Cnot) for op in self.ops)

    def on_qubits(self, n: int, offset: int = 0) -> "Circuit":
        """Embed this circuit into a wider register, shifting qubit labels by ``offset``."""
        if offset < 0 or self.n + offset > n:
            raise DimensionError(f"{self.n}-qubit circuit does not fit at offset {offset} of {n}")
        moved = []
        for op in self.ops:
            if isinstance(op, Apply1Q):
                moved.append(Apply1Q(op.gate, op.qubit + offset))
            else:
                moved.append(Cnot(op.control + offset, op.target + offset))
        return Circuit(n, tuple(moved))

    def serialize(self) -> str:
        lines = [f"qubits {self.n}"]
        for op in self.ops:
            if isinstance(op, Apply1Q):
                lines.append(op.gate.token(op.qubit))
            else:
                lines.append(f"cx {op.control} {op.target}")
        return "\n".join(lines)

    @classmethod
    def parse(cls, text: str, n: int | None = None) -> "Circuit":
        """Parse the one-op-per-line text form; ``#`` starts a comment.

        The qubit count comes from a ``qubits <n>`` line or the ``n`` argument.
        """
        ops = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].split()
            if not line:
                continue
            word, args = line[0].lower(), line[1:]
            try:
                if word == "qubits":
                    declared = int(args[0])
                    if n is not None and n != declared:
                        raise DimensionError(f"declared {declared} qubits, expected {n}")
                    n = declared
                elif word == "cx":
                    ops.append(Cnot(int(args[0]), int(args[1])))
                elif word in _FIXED:
                    ops.append(Apply1Q(_FIXED[word], int(args[0])))
                elif word in _PARAMETRIC:
                    make, arity = _PARAMETRIC[word]
                    if len(args) != arity + 1:
                        raise InvalidCircuitError(f"{word} takes {arity} angle(s)")
                    ops.append(Apply1Q(make(*map(float, args[1:])), int(args[0])))
                else:
                    raise InvalidCircuitError(f"unknown gate {word!r}")
            except (IndexError, ValueError) as exc:
                if isinstance(exc, (InvalidCircuitError, DimensionError)):
                    raise
                raise InvalidCircuitError(f"line {lineno}: cannot parse {raw.strip()!r}") from exc
        if n is None:
            used = [max(op.control, op.target) if isinstance(op, Cnot) else op.qubit for op in ops]
            if not used:
                raise InvalidCircuitError("empty circuit without a 'qubits' line")
            n = max(used) + 1
        return cls(n, tuple(ops))

    @cached_property
    def compiled(self) -> tuple[np.ndarray, np.ndarray]:
        """Op table and gate-matrix table in the kernel layout."""
        table = np.zeros((len(self.ops), 3), dtype=np.int64)
        mats: list[np.ndarray] = []
        slots: dict = {}
        for j, op in enumerate(self.ops):
            if isinstance(op, Apply1Q):
                key = op.gate
                if key not in slots:
                    slots[key] = len(mats)
                    mats.append(op.gate.matrix.ravel())
                table[j] = (kernels.OP_1Q, op.qubit, slots[key])
            else:
                table[j] = (kernels.OP_CNOT, op.control, op.target)
        mat_arr = np.array(mats, dtype=np.complex128).reshape(-1, 4)
        table.flags.writeable = False
        mat_arr.flags.writeable = False
        return table, np.ascontiguousarray(mat_arr)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Amplitudes of an ``n``-qubit pure state (read-only array of length ``2**n``)."""

    n: int
    amps: np.ndarray

    def __post_init__(self):
        a = np.array(self.amps, dtype=np.complex128).ravel()
        if self.n < 1 or a.shape[0] != 1 << self.n:
            raise DimensionError(f"{a.shape[0]} amplitudes do not fit {self.n} qubits")
        a.flags.writeable = False
        object.__setattr__(self, "amps", a)

    @classmethod
    def from_amplitudes(cls, amps) -> "StateVector":
        a = np.asarray(amps, dtype=np.complex128).ravel()
        n = int(a.shape[0]).bit_length() - 1
        if n < 1 or 1 << n != a.shape[0]:
            raise DimensionError(f"length {a.shape[0]} is not a power of two >= 2")
        return cls(n, a)

    @classmethod
    def zero(cls, n: int) -> "StateVector":
        return cls.basis(n, 0)

    @classmethod
    def basis(cls, n: int, index: int) -> "StateVector":
        a = np.zeros(1 << n, dtype=np.complex128)
        a[index] = 1
        return cls(n, a)

    @property
    def dim(self) -> int:
        return self.amps.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "StateVector":
        nrm = self.norm()
        if nrm == 0:
            raise EmptySupportError("cannot normalize the zero vector")
        return StateVector(self.n, self.amps / nrm)

    def probabilities(self) -> np.ndarray:
        return self.amps.real**2 + self.amps.imag**2

    def __repr__(self):
        return f"StateVector(n={self.n}, amps={np.array2string(self.amps, precision=4)})"


def _writable(state: StateVector) -> np.ndarray:
    return np.array(state.amps, dtype=np.complex128, copy=True, order="C")


def apply_1q(state: StateVector, gate: Gate, qubit: int) -> StateVector:
    _check_qubit(qubit, state.n)
    amps = _writable(state)
    kernels.apply_1q(amps, np.ascontiguousarray(gate.matrix.ravel()), qubit)
    return StateVector(state.n, amps)


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    _check_qubit(control, state.n)
    _check_qubit(target, state.n)
    if control == target:
        raise InvalidCircuitError("CNOT control equals target")
    amps = _writable(state)
    kernels.apply_cnot(amps, control, target)
    return StateVector(state.n, amps)


def run_circuit(circuit: Circuit, input: StateVector | None = None) -> StateVector:
    """Exact output of ``circuit`` on ``input`` (default ``|0...0>``)."""
    if input is None:
        input = StateVector.zero(circuit.n)
    if circuit.n != input.n:
        raise DimensionError(f"{circuit.n}-qubit circuit on a {input.n}-qubit state")
    amps = _writable(input)
    if circuit.ops:
        table, mats = circuit.compiled
        kernels.run_ops(amps, table, mats)
    return StateVector(input.n, amps)


def _require_normalized(s: StateVector, what: str):
    if abs(s.norm() - 1) > NORM_TOL:
        raise ContractError(f"{what} is not normalized (norm {s.norm():.3g})")


def fidelity(a: StateVector, b: StateVector) -> float:
    """Squared overlap ``|<a|b>|**2`` of two normalized states."""
    if a.n != b.n:
        raise DimensionError(f"fidelity between {a.n}- and {b.n}-qubit states")
    _require_normalized(a, "first state")
    _require_normalized(b, "second state")
    f = abs(np.vdot(a.amps, b.amps)) ** 2
    return float(min(1.0, max(0.0, f)))


def phase_normalize(state: StateVector, eps: float) -> StateVector:
    """Rotate the global phase so the first entry with modulus above ``eps`` is real and >= 0."""
    mod = np.abs(state.amps)
    above = np.flatnonzero(mod > eps)
    if above.size == 0:
        raise EmptySupportError(f"no amplitude exceeds {eps}")
    lead = state.amps[above[0]]
    out = state.amps * (np.conj(lead) / abs(lead))
    out[above[0]] = abs(lead)
    return StateVector(state.n, out)


def support_of(state: StateVector, eps: float = 1e-12) -> list[int]:
    """Indices whose probability exceeds ``eps``."""
    return [int(i) for i in np.flatnonzero(state.probabilities() > eps)]


def tensor_gates(n: int, gates: Iterable[Gate]) -> Circuit:
    """One gate per qubit, ``gates[q]`` on qubit ``q``."""
    gates = list(gates)
    if len(gates) != n:
        raise DimensionError(f"need {n} gates, got {len(gates)}")
    return Circuit(n, tuple(Apply1Q(g, q) for q, g in enumerate(gates)))
