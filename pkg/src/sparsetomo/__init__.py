"""Pure-state tomography for sparse states, guided by Hamming-distance spanning trees."""
from .hamming import HammingGraph, SpanningTree, build_mst, cnot_upper_bound, mst_of
from .kernels import BACKEND
from .presets import PRESETS, load_preset
from .proctomo import UnitaryEstimate, polar_project, prepare_probe, process_fidelity, run_process_tomography
from .qcore import Circuit, Gate, StateVector, fidelity, run_circuit
from .sim import MeasurementManager, NoiseModel, Prep
from .tomo import ReconstructionReport, reconstruct, reconstruct_mst, reconstruct_randomized

__version__ = "0.1.0"
