"""Compare the compiled and numpy kernel backends on circuit and trajectory workloads.

    python benchmarks/bench_kernels.py [--repeat 5] [--max-qubits 12]
"""
import argparse
import timeit

import numpy as np

from sparsetomo.kernels import available_backends
from sparsetomo.presets import load_preset
from sparsetomo.qcore import Circuit
from sparsetomo.sim import NoiseModel, draw_noise_codes


def layered_circuit(n, layers=4):
    c = Circuit(n)
    for _ in range(layers):
        for q in range(n):
            c = c.h(q).d(q)
        for q in range(n - 1):
            c = c.cx(q, q + 1)
    return c


def workloads(max_qubits):
    for n in range(4, max_qubits + 1, 4):
        yield f"layered n={n}", layered_circuit(n), 0
    for n in (3, 6):
        yield f"ghz-{n} trajectories x256", load_preset(f"ghz-{n}").h(0), 256
    yield "layered n=8 trajectories x256", layered_circuit(8, 2), 256


def bench(mod, circuit, n_traj, repeat):
    table, mats = circuit.compiled
    init = np.zeros(1 << circuit.n, dtype=np.complex128)
    init[0] = 1
    if n_traj:
        codes = draw_noise_codes(table, NoiseModel.default_noisy(), np.random.default_rng(0), n_traj)
        run = lambda: mod.run_trajectories(init, table, mats, codes)  # noqa: E731
    else:
        run = lambda: mod.run_ops(init.copy(), table, mats)  # noqa: E731
    number = max(1, int(0.2 / max(timeit.timeit(run, number=1), 1e-6)))
    return min(timeit.repeat(run, number=number, repeat=repeat)) / number


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--max-qubits", type=int, default=12)
    args = parser.parse_args()
    backends = available_backends()
    if "cython" not in backends:
        print("compiled backend not built; only the numpy fallback is available")
    names = sorted(backends)
    print(f"{'workload':34}" + "".join(f"{n:>14}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for label, circuit, n_traj in workloads(args.max_qubits):
        times = {name: bench(backends[name], circuit, n_traj, args.repeat) for name in names}
        row = f"{label:34}" + "".join(f"{times[n] * 1e3:>12.3f}ms" for n in names)
        if len(names) > 1:
            row += f"{times['python'] / times['cython']:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
