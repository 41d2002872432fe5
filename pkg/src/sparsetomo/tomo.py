"""Sparse pure-state reconstruction.

Plan: an identity measurement finds the support, a Hamming-distance MST over
the support fixes which pairs of entries to relate, and every tree edge is
resolved by two settings (``H`` and ``V`` on a pivot qubit after a CNOT chain
that brings the pair to distance one). The randomized variant first spreads
the state with a layer of single-qubit gates so the plan needs no CNOTs.
"""
from __future__ import annotations

import heapq
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, EmptySupportError, IllConditionedError
from .hamming import HammingGraph, SpanningTree, build_mst, forest_partition, hamming_distance
from .qcore import H, V, Circuit, Gate, StateVector, apply_1q, phase_normalize, tensor_gates, u3
from .sim import MeasurementManager, MeasurementOutcome, Prep, _key_rng, as_prep

SCHEMES = ("mst", "randomized", "randomized-masked")
RANDOMIZERS = ("auto", "h", "v", "haar")
MIN_PIVOT_PROB = 1e-12


@dataclass(frozen=True)
class SupportSet:
    entries: tuple  # (index, probability), sorted by index
    eps: float

    @property
    def indices(self) -> list[int]:
        return [i for i, _ in self.entries]

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class PairPlan:
    det_index: int
    unk_index: int
    pivot: int
    cnot_chain: tuple  # (control, target) pairs, applied in order
    mapped_d: int
    mapped_k: int

    @property
    def weight(self) -> int:
        return hamming_distance(self.det_index, self.unk_index)

    def chain_circuit(self, n: int) -> Circuit:
        c = Circuit(n)
        for control, target in self.cnot_chain:
            c = c.cx(control, target)
        return c


@dataclass(frozen=True)
class EdgeStep:
    det_index: int
    unk_index: int
    weight: int
    value: complex


@dataclass
class ReconstructionReport:
    estimate: StateVector
    settings_used: int
    cnots_used: int
    scheme: str
    support: tuple
    edge_trace: list = field(default_factory=list)
    tree: SpanningTree | None = None
    mask_settings: int = 0
    randomizer: str | None = None
    warning: str | None = None

    def to_dict(self) -> dict:
        return {
            "estimate": [[float(a.real), float(a.imag)] for a in self.estimate.amps],
            "settings_used": self.settings_used,
            "cnots_used": self.cnots_used,
            "scheme": self.scheme,
            "support": list(self.support),
            "mask_settings": self.mask_settings,
            "randomizer": self.randomizer,
            "warning": self.warning,
            "edge_trace": [
                {
                    "edge": [s.det_index, s.unk_index, s.weight],
                    "value": [float(s.value.real), float(s.value.imag)],
                }
                for s in self.edge_trace
            ],
        }


class _Session:
    """Wraps a manager and records the distinct settings one reconstruction asks for."""

    def __init__(self, mgr: MeasurementManager):
        self.mgr = mgr
        self.settings: dict[str, int] = {}

    def measure(self, prep, meas: Circuit) -> MeasurementOutcome:
        self.settings.setdefault(self.mgr.key(prep, meas), meas.cnot_count)
        return self.mgr.measure(prep, meas)

    @property
    def settings_used(self) -> int:
        return len(self.settings)

    @property
    def cnots_used(self) -> int:
        return sum(self.settings.values())


def _probs(m) -> np.ndarray:
    return m.probs if isinstance(m, MeasurementOutcome) else np.asarray(m, dtype=np.float64)


def detect_support(mgr, prep, eps: float) -> SupportSet:
    """Identity measurement; keep entries whose probability exceeds ``eps``."""
    if eps <= 0:
        raise ConfigError("eps must be positive")
    prep = as_prep(prep)
    probs = mgr.measure(prep, Circuit(prep.n)).probs
    idx = np.flatnonzero(probs > eps)
    if idx.size == 0:
        raise EmptySupportError(f"no outcome probability exceeds eps={eps}")
    return SupportSet(tuple((int(i), float(probs[i])) for i in idx), eps)


def _lowest_bit(x: int) -> int:
    return (x & -x).bit_length() - 1


def plan_pair(i_d: int, i_k: int, n: int) -> PairPlan:
    """CNOT chain and pivot qubit that bring ``i_d`` and ``i_k`` to Hamming distance one.

    The pivot is the lowest bit set in ``i_k`` but not ``i_d`` (or, failing
    that, set in ``i_d`` but not ``i_k``); it controls one CNOT onto every
    other differing bit, in ascending target order.
    """
    if i_d == i_k:
        raise DomainError("pair endpoints must differ")
    for i in (i_d, i_k):
        if not 0 <= i < 1 << n:
            raise DomainError(f"index {i} out of range for {n} qubits")
    diff = i_d ^ i_k
    side = diff & i_k & ~i_d or diff & i_d & ~i_k
    pivot = _lowest_bit(side)
    chain = tuple((pivot, t) for t in range(n) if diff >> t & 1 and t != pivot)

    def mapped(x):
        for control, target in chain:
            if x >> control & 1:
                x ^= 1 << target
        return x

    return PairPlan(i_d, i_k, pivot, chain, mapped(i_d), mapped(i_k))


def measure_pair(mgr, prep, plan: PairPlan) -> tuple[MeasurementOutcome, MeasurementOutcome]:
    prep = as_prep(prep)
    chain = plan.chain_circuit(prep.n)
    m_h = mgr.measure(prep, chain.gate(H, plan.pivot))
    m_v = mgr.measure(prep, chain.gate(V, plan.pivot))
    return m_h, m_v


def infer_entry(d_value: complex, m_H, m_V, mapped_d: int, mapped_k: int) -> complex:
    """Solve for the unknown amplitude of a distance-one pair from its H and V outcomes.

    With ``t``/``b`` the amplitudes at the lower/upper mapped index, the outcome
    differences give ``P_H[t] - P_H[b] = 2 Re(t b*)`` and
    ``P_V[t] - P_V[b] = 2 Im(t b*)``, which is linear in the unknown once the
    determined amplitude is fixed.
    """
    d = complex(d_value)
    dd = abs(d) ** 2
    if dd < MIN_PIVOT_PROB:
        raise IllConditionedError(f"determined amplitude {d!r} is too small to infer from")
    ph, pv = _probs(m_H), _probs(m_V)
    top, bot = min(mapped_d, mapped_k), max(mapped_d, mapped_k)
    cross = complex(ph[top] - ph[bot], pv[top] - pv[bot]) / 2
    if mapped_d == top:
        return cross.conjugate() * d / dd
    return cross * d / dd


def _fix_phase(amps: np.ndarray, index: int) -> np.ndarray:
    lead = amps[index]
    if lead == 0:
        return amps
    out = amps * (np.conj(lead) / abs(lead))
    out[index] = abs(lead)
    return out


def _mst_core(session: _Session, prep: Prep, eps: float, support: SupportSet | None = None,
              tree: SpanningTree | None = None):
    n = prep.n
    if support is None:
        support = detect_support(session, prep, eps)
    first, p_first = support.entries[0]
    values = {first: complex(math.sqrt(p_first))}
    trace: list[EdgeStep] = []
    if tree is None:
        tree = build_mst(HammingGraph(n, tuple(support.indices)))
    adjacency = defaultdict(list)
    for u, v, w in tree.edges:
        adjacency[u].append((v, w))
        adjacency[v].append((u, w))

    frontier: list = []

    def open_edges(vertex):
        for other, w in adjacency[vertex]:
            if other not in values:
                heapq.heappush(frontier, (w, min(vertex, other), max(vertex, other), vertex, other))

    open_edges(first)
    while frontier:
        w, _, _, det, unk = heapq.heappop(frontier)
        if unk in values:
            continue
        plan = plan_pair(det, unk, n)
        m_h, m_v = measure_pair(session, prep, plan)
        values[unk] = infer_entry(values[det], m_h, m_v, plan.mapped_d, plan.mapped_k)
        trace.append(EdgeStep(det, unk, w, values[unk]))
        open_edges(unk)

    amps = np.zeros(1 << n, dtype=np.complex128)
    for i, val in values.items():
        amps[i] = val
    norm = np.linalg.norm(amps)
    if norm == 0:
        raise EmptySupportError("reconstructed vector is zero")
    amps = _fix_phase(amps / norm, first)
    return StateVector(n, amps), support, tree, trace


def reconstruct_mst(mgr: MeasurementManager, prep, eps: float) -> ReconstructionReport:
    """MST-guided reconstruction of the state produced by ``prep``."""
    prep = as_prep(prep)
    session = _Session(mgr)
    estimate, support, tree, trace = _mst_core(session, prep, eps)
    return ReconstructionReport(
        estimate=estimate,
        settings_used=session.settings_used,
        cnots_used=session.cnots_used,
        scheme="mst",
        support=tuple(support.indices),
        edge_trace=trace,
        tree=tree,
    )


def apply_mask(state: StateVector, keep) -> StateVector:
    """Zero every entry outside ``keep`` and renormalize."""
    mask = np.zeros(state.dim, dtype=bool)
    mask[list(keep)] = True
    amps = np.where(mask, state.amps, 0)
    norm = np.linalg.norm(amps)
    if norm == 0:
        raise EmptySupportError("mask removes the whole estimate")
    return StateVector(state.n, amps / norm)


def randomizer_gates(tag: str, n: int, rng: np.random.Generator | None = None) -> list[Gate]:
    """One gate per qubit for a randomizer tag (``h``, ``v`` or seeded Haar-random ``haar``)."""
    if tag == "h":
        return [H] * n
    if tag == "v":
        return [V] * n
    if tag == "haar":
        if rng is None:
            raise ConfigError("haar randomizer needs an rng")
        gates = []
        for _ in range(n):
            theta = math.acos(1 - 2 * rng.random())
            phi, lam = 2 * math.pi * rng.random(2)
            gates.append(u3(theta, phi, lam))
        return gates
    raise ConfigError(f"unknown randomizer {tag!r}; expected one of {RANDOMIZERS}")


def is_dense_enough(support: SupportSet, tree: SpanningTree, n: int) -> bool:
    """Whether a randomized state can be resolved with single-qubit settings only.

    A single entry needs no pair measurements. Otherwise the support must cover
    at least half the basis and its weight-1 tree edges must connect it.
    """
    k = len(support)
    if k == 1:
        return True
    if k < max(2, math.ceil(0.5 * (1 << n))):
        return False
    return len(forest_partition(tree, 1)) == 1


def _finish_phase(state: StateVector, eps: float) -> StateVector:
    threshold = math.sqrt(eps)
    if np.abs(state.amps).max() <= threshold:
        threshold = 0.5 * np.abs(state.amps).max()
    return phase_normalize(state, threshold)


def reconstruct_randomized(mgr: MeasurementManager, prep, eps: float, masked: bool = False,
                           randomizer: str = "auto", mask_eps: float | None = None) -> ReconstructionReport:
    """Reconstruct ``R|psi>`` for a layer ``R`` of single-qubit gates, then undo ``R``.

    ``randomizer="auto"`` tries ``H`` on every qubit, then ``V``, then seeded
    Haar-random gates, keeping the first whose output is dense enough. With
    ``masked=True`` an extra identity measurement of the unrandomized state
    (threshold ``mask_eps``, default ``eps``) zeroes entries outside its support.
    """
    if eps <= 0:
        raise ConfigError("eps must be positive")
    prep = as_prep(prep)
    n = prep.n
    session = _Session(mgr)
    mask = None
    if masked:
        mask = detect_support(session, prep, mask_eps or eps).indices
    scheme = "randomized-masked" if masked else "randomized"
    ladder = ("h", "v", "haar") if randomizer == "auto" else (randomizer,)
    haar_rng = _key_rng(mgr.seed, "haar-randomizer\n" + prep.key())

    for tag in ladder:
        gates = randomizer_gates(tag, n, haar_rng if tag == "haar" else None)
        rprep = prep.then(tensor_gates(n, gates))
        try:
            support = detect_support(session, rprep, eps)
        except EmptySupportError:
            continue
        tree = build_mst(HammingGraph(n, tuple(support.indices)))
        if not is_dense_enough(support, tree, n):
            continue
        spread, _, tree, trace = _mst_core(session, rprep, eps, support, tree)
        estimate = spread
        for q, g in enumerate(gates):
            estimate = apply_1q(estimate, g.dagger(), q)
        if mask is not None:
            estimate = apply_mask(estimate, mask)
        return ReconstructionReport(
            estimate=_finish_phase(estimate.normalized(), eps),
            settings_used=session.settings_used,
            cnots_used=session.cnots_used,
            scheme=scheme,
            support=tuple(mask) if mask is not None else tuple(support.indices),
            edge_trace=trace,
            tree=tree,
            mask_settings=int(masked),
            randomizer=tag,
        )

    estimate, support, tree, trace = _mst_core(session, prep, eps)
    if mask is not None:
        estimate = apply_mask(estimate, mask)
    return ReconstructionReport(
        estimate=_finish_phase(estimate, eps),
        settings_used=session.settings_used,
        cnots_used=session.cnots_used,
        scheme=scheme,
        support=tuple(support.indices),
        edge_trace=trace,
        tree=tree,
        mask_settings=int(masked),
        warning="randomized state stayed sparse; fell back to the MST scheme",
    )


def reconstruct(mgr: MeasurementManager, prep, eps: float, scheme: str = "mst", **kwargs) -> ReconstructionReport:
    if scheme == "mst":
        return reconstruct_mst(mgr, prep, eps)
    if scheme == "randomized":
        return reconstruct_randomized(mgr, prep, eps, masked=False, **kwargs)
    if scheme == "randomized-masked":
        return reconstruct_randomized(mgr, prep, eps, masked=True, **kwargs)
    raise ConfigError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def dense_settings_count(n: int) -> int:
    """Settings needed for a state with no zero entries: identity plus H and V per qubit."""
    if n < 1:
        raise DomainError("n must be >= 1")
    return 2 * n + 1
