"""Backend selection for the statevector kernels.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy twin in ``_pykernels`` takes over. Set ``SPARSETOMO_PURE=1`` to force
the fallback (used by the benchmark and the backend-equivalence tests).
"""
import os

from . import _pykernels

OP_1Q = _pykernels.OP_1Q
OP_CNOT = _pykernels.OP_CNOT

_impl = _pykernels
BACKEND = "python"
if not os.environ.get("SPARSETOMO_PURE"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # extension not built
        pass

apply_1q = _impl.apply_1q
apply_cnot = _impl.apply_cnot
run_ops = _impl.run_ops
run_trajectories = _impl.run_trajectories


def available_backends():
    """Map backend name to kernel module for every backend that imports."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        found["cython"] = _ckernels
    return found
