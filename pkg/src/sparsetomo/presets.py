"""Named state-preparation circuits and their default thresholds."""
from __future__ import annotations

import math

from .errors import ConfigError
from .proctomo import prepare_probe, process_to_state_circuit, w1_circuit
from .qcore import Circuit, u3

_U = u3(math.pi / 4, 0.0, 0.0)


def _ghz(n: int) -> Circuit:
    c = Circuit(n).h(0)
    for q in range(n - 1):
        c = c.cx(q, q + 1)
    return c


def _triple_base() -> Circuit:
    return Circuit(3).gate(_U, 1).gate(_U, 2).cx(2, 1)


def _proc_w1_state() -> Circuit:
    return process_to_state_circuit(prepare_probe(2), w1_circuit())


_BUILDERS = {
    # the first two diagrams label qubits top-down; relabelled so the
    # support matches the preset name in the little-endian convention
    "pair-000-001": lambda: Circuit(3).h(0),
    "pair-000-011": lambda: Circuit(3).h(0).x(0).cx(0, 1),
    "pair-000-111": lambda: Circuit(3).h(2).x(2).cx(2, 1).cx(2, 0),
    "pair-011-100": lambda: Circuit(3).h(0).x(2).cx(0, 1).cx(1, 2),
    "pair-110-001": lambda: Circuit(3).x(0).h(1).cx(1, 0).cx(1, 2),
    "triple-000-010-100": lambda: _triple_base().h(2),
    "triple-000-010-101": lambda: _triple_base().h(2).cx(2, 0),
    "triple-000-011-110": lambda: _triple_base().cx(1, 0).h(2).cx(2, 1),
    "ghz-3": lambda: _ghz(3),
    "ghz-4": lambda: _ghz(4),
    "ghz-5": lambda: _ghz(5),
    "ghz-6": lambda: _ghz(6),
    "proc-w1": _proc_w1_state,
}

PRESETS = tuple(_BUILDERS)

# (unrandomized, randomized); None means no default is configured
_EPS = {
    "pair-000-001": (5e-2, 5e-2),
    "pair-000-011": (5e-2, 5e-2),
    "pair-000-111": (5e-2, 5e-2),
    "pair-011-100": (5e-2, 5e-5),
    "pair-110-001": (5e-2, 5e-5),
    "triple-000-010-100": (5e-2, 5e-5),
    "triple-000-010-101": (5e-2, 5e-5),
    "triple-000-011-110": (5e-2, 5e-3),
    "ghz-3": (5e-2, 5e-2),
    "ghz-4": (5e-2, 5e-3),
    "ghz-5": (5e-2, 5e-5),
    "ghz-6": (5e-2, 5e-5),
    "proc-w1": (5e-3, None),
}


def load_preset(preset_id: str) -> Circuit:
    try:
        return _BUILDERS[preset_id]()
    except KeyError:
        raise ConfigError(f"unknown preset {preset_id!r}; available: {', '.join(PRESETS)}") from None


def preset_process(preset_id: str) -> Circuit:
    """The process behind a process-tomography preset."""
    if preset_id != "proc-w1":
        raise ConfigError(f"{preset_id!r} is not a process preset")
    return w1_circuit()


def default_eps(preset_id: str, scheme: str) -> float:
    if preset_id not in _EPS:
        raise ConfigError(f"unknown preset {preset_id!r}; available: {', '.join(PRESETS)}")
    plain, rand = _EPS[preset_id]
    eps = plain if scheme in ("mst", "process") else rand
    if eps is None:
        raise ConfigError(f"no default eps for {preset_id!r} with scheme {scheme!r}; pass eps explicitly")
    return eps


def default_mask_eps(preset_id: str) -> float:
    return _EPS[preset_id][0]
