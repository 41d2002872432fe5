"""Shot-based measurement simulation and the measurement cache.

Noise is modelled as independent depolarizing Pauli kicks after every gate
plus independent readout bit flips, realized by Monte Carlo trajectories:
one noisy circuit is drawn per block of shots, simulated exactly, and the
block is sampled from its output distribution.
"""
from __future__ import annotations

import hashlib
import json
import math
import threading
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ConfigError, DimensionError, NumericError
from .qcore import X, Y, Z, Apply1Q, Circuit, StateVector, run_circuit

PAULIS = (None, X, Y, Z)


@dataclass(frozen=True)
class NoiseModel:
    p_depol_1q: float = 0.0
    p_depol_2q: float = 0.0
    p_readout: float = 0.0

    def __post_init__(self):
        for name, p in asdict(self).items():
            if not (isinstance(p, (int, float)) and 0.0 <= p <= 1.0):
                raise ConfigError(f"{name} must be a probability, got {p!r}")

    @classmethod
    def default_noisy(cls) -> "NoiseModel":
        return cls(p_depol_1q=0.0005, p_depol_2q=0.01, p_readout=0.02)

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseModel":
        unknown = set(data) - {"p_depol_1q", "p_depol_2q", "p_readout"}
        if unknown:
            raise ConfigError(f"unknown noise keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})

    @classmethod
    def from_json(cls, text: str) -> "NoiseModel":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"noise model is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("noise model JSON must be an object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def gate_free(self) -> bool:
        return self.p_depol_1q == 0 and self.p_depol_2q == 0

    @property
    def is_zero(self) -> bool:
        return self.gate_free and self.p_readout == 0


@dataclass(frozen=True, eq=False)
class MeasurementOutcome:
    """Estimated basis probabilities; ``shots == 0`` marks an exact result."""

    probs: np.ndarray
    shots: int

    def __post_init__(self):
        p = np.array(self.probs, dtype=np.float64)
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    def __eq__(self, other):
        if not isinstance(other, MeasurementOutcome):
            return NotImplemented
        return self.shots == other.shots and np.array_equal(self.probs, other.probs)


@dataclass(frozen=True, eq=False)
class Prep:
    """A state preparation: optional initial state, then a (noisy) circuit.

    An explicit initial state lets arbitrary states be probed without a
    synthesis circuit; it is treated as prepared without noise.
    """

    circuit: Circuit
    initial: StateVector | None = None

    def __post_init__(self):
        if self.initial is not None and self.initial.n != self.circuit.n:
            raise DimensionError("initial state and circuit sizes differ")

    @property
    def n(self) -> int:
        return self.circuit.n

    def then(self, circuit: Circuit) -> "Prep":
        return Prep(self.circuit + circuit, self.initial)

    def key(self) -> str:
        parts = []
        if self.initial is not None:
            digest = hashlib.sha256(self.initial.amps.tobytes()).hexdigest()
            parts.append(f"init sha256 {digest}")
        parts.append(self.circuit.serialize())
        return "\n".join(parts)

    def exact_state(self) -> StateVector:
        return run_circuit(self.circuit, self.initial)


def as_prep(obj) -> Prep:
    if isinstance(obj, Prep):
        return obj
    if isinstance(obj, Circuit):
        return Prep(obj)
    if isinstance(obj, StateVector):
        return Prep(Circuit(obj.n), obj)
    raise TypeError(f"cannot prepare a state from {type(obj).__name__}")


def sample_counts(probs, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Multinomial shot counts for a probability vector."""
    if shots < 1:
        raise ConfigError("shots must be >= 1")
    p = np.asarray(probs, dtype=np.float64)
    if p.min(initial=0.0) < -1e-12:
        raise NumericError(f"negative probability {p.min():.3g}")
    total = p.sum()
    if abs(total - 1) > 1e-9:
        raise NumericError(f"probabilities sum to {total!r}")
    p = np.clip(p, 0.0, None)
    return rng.multinomial(shots, p / p.sum())


def draw_noise_codes(table: np.ndarray, noise: NoiseModel, rng, n_traj: int) -> np.ndarray:
    """Per-trajectory Pauli insertions in the kernel code layout (int8, ``n_traj x n_ops``)."""
    m = table.shape[0]
    is_1q = table[:, 0] == kernels.OP_1Q
    p = np.where(is_1q, noise.p_depol_1q, noise.p_depol_2q)
    hit = rng.random((n_traj, m)) < p
    single = rng.integers(1, 4, size=(n_traj, m))
    pair = rng.integers(1, 16, size=(n_traj, m))
    return np.ascontiguousarray(np.where(is_1q, single, pair) * hit, dtype=np.int8)


def apply_noise_trajectory(circuit: Circuit, noise: NoiseModel, rng) -> Circuit:
    """One stochastic realization of ``circuit`` under ``noise``, Paulis made explicit."""
    table, _ = circuit.compiled
    codes = draw_noise_codes(table, noise, rng, 1)[0]
    ops = []
    for op, code in zip(circuit.ops, codes):
        ops.append(op)
        if not code:
            continue
        if isinstance(op, Apply1Q):
            ops.append(Apply1Q(PAULIS[code], op.qubit))
        else:
            if code >> 2:
                ops.append(Apply1Q(PAULIS[code >> 2], op.control))
            if code & 3:
                ops.append(Apply1Q(PAULIS[code & 3], op.target))
    return Circuit(circuit.n, tuple(ops))


def apply_readout_flips(bitstring, p_readout: float, n: int, rng):
    """Flip each of the ``n`` bits independently with probability ``p_readout``.

    Accepts a single index or an integer array of indices.
    """
    arr = np.asarray(bitstring, dtype=np.int64)
    flips = rng.random(arr.shape + (n,)) < p_readout
    masks = flips.astype(np.int64) @ (np.int64(1) << np.arange(n, dtype=np.int64))
    out = arr ^ masks
    return int(out) if out.ndim == 0 else out


def _key_rng(seed: int, key: str) -> np.random.Generator:
    digest = hashlib.sha256(key.encode()).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    return np.random.default_rng(np.random.SeedSequence([int(seed), *words]))


class MeasurementManager:
    """Runs measurement settings on demand and caches their outcomes.

    ``mode`` is ``"exact"`` (probabilities straight from the statevector) or
    ``"sampled"`` (finite shots, optional noise). Every setting gets its own
    random stream derived from ``seed`` and the setting's text key, so results
    do not depend on the order or thread in which settings are requested.
    A key is executed at most once even under concurrent requests.
    """

    def __init__(self, mode="exact", shots=16384, noise=None, seed=0, block_size=64):
        if mode not in ("exact", "sampled"):
            raise ConfigError(f"unknown backend mode {mode!r}")
        if mode == "sampled" and shots < 1:
            raise ConfigError("sampled mode needs shots >= 1")
        if block_size < 1:
            raise ConfigError("block_size must be >= 1")
        self.mode = mode
        self.shots = int(shots) if mode == "sampled" else 0
        self.noise = noise or NoiseModel()
        self.seed = int(seed)
        self.block_size = int(block_size)
        self.cache: dict[str, MeasurementOutcome] = {}
        self.executions = 0
        self._lock = threading.Lock()
        self._pending: dict[str, threading.Event] = {}

    @staticmethod
    def key(prep, meas: Circuit) -> str:
        return as_prep(prep).key() + "\n--\n" + meas.serialize()

    def measure(self, prep, meas: Circuit | None = None) -> MeasurementOutcome:
        prep = as_prep(prep)
        if meas is None:
            meas = Circuit(prep.n)
        if meas.n != prep.n:
            raise DimensionError(f"{meas.n}-qubit measurement on a {prep.n}-qubit preparation")
        key = self.key(prep, meas)
        while True:
            with self._lock:
                hit = self.cache.get(key)
                if hit is not None:
                    return hit
                event = self._pending.get(key)
                owner = event is None
                if owner:
                    event = self._pending[key] = threading.Event()
            if owner:
                break
            event.wait()
        try:
            outcome = self._execute(prep, meas, key)
            with self._lock:
                self.cache[key] = outcome
                self.executions += 1
        finally:
            with self._lock:
                self._pending.pop(key, None)
            event.set()
        return outcome

    def _execute(self, prep: Prep, meas: Circuit, key: str) -> MeasurementOutcome:
        full = prep.circuit + meas
        if self.mode == "exact":
            return MeasurementOutcome(run_circuit(full, prep.initial).probabilities(), 0)
        rng = _key_rng(self.seed, key)
        n = prep.n
        if self.noise.gate_free:
            probs = run_circuit(full, prep.initial).probabilities()
            counts = sample_counts(probs / probs.sum(), self.shots, rng)
        else:
            counts = self._trajectory_counts(full, prep.initial, rng)
        if self.noise.p_readout > 0:
            shots_idx = np.repeat(np.arange(1 << n, dtype=np.int64), counts)
            flipped = apply_readout_flips(shots_idx, self.noise.p_readout, n, rng)
            counts = np.bincount(flipped, minlength=1 << n)
        return MeasurementOutcome(counts / self.shots, self.shots)

    def _trajectory_counts(self, full: Circuit, initial, rng) -> np.ndarray:
        table, mats = full.compiled
        n_traj = math.ceil(self.shots / self.block_size)
        sizes = np.full(n_traj, self.block_size, dtype=np.int64)
        sizes[-1] = self.shots - self.block_size * (n_traj - 1)
        codes = draw_noise_codes(table, self.noise, rng, n_traj)
        init = (initial or StateVector.zero(full.n)).amps
        probs = kernels.run_trajectories(np.ascontiguousarray(init), table, mats, codes)
        probs = np.clip(probs, 0.0, None)
        probs /= probs.sum(axis=1, keepdims=True)
        return rng.multinomial(sizes, probs).sum(axis=0)

    def dump(self, path) -> None:
        """Write the cache as newline-delimited JSON records ``{key, probs, shots}``."""
        with self._lock:
            items = sorted(self.cache.items())
        with open(path, "w") as fh:
            for key, out in items:
                rec = {"key": key, "probs": out.probs.tolist(), "shots": out.shots}
                fh.write(json.dumps(rec) + "\n")

    def load(self, path) -> int:
        """Merge records from a file written by :meth:`dump`; returns how many were read."""
        count = 0
        with self._lock:
            for line in Path(path).read_text().splitlines():
                if not line.strip():
                    continue
                rec = json.loads(line)
                self.cache[rec["key"]] = MeasurementOutcome(np.array(rec["probs"]), int(rec["shots"]))
                count += 1
        return count


def measure(mgr: MeasurementManager, prep, meas: Circuit | None = None) -> MeasurementOutcome:
    return mgr.measure(prep, meas)
