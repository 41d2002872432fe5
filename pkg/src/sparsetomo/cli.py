"""``tomo`` command line: batch experiments, single reconstructions and MST reports."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import BatchError, ConfigError, TomoError
from .experiment import ExperimentConfig, emit_results, run_experiment
from .hamming import (adversarial_decomposition, adversarial_vertex_set, adversarial_weight, build_mst,
                      cnot_upper_bound, mst_of, theorem_a_check)
from .presets import PRESETS, default_eps, default_mask_eps, load_preset, preset_process
from .proctomo import process_matrix, run_process_tomography
from .qcore import Circuit, fidelity, run_circuit
from .sim import MeasurementManager, NoiseModel
from .tomo import SCHEMES, reconstruct

EXIT_OK, EXIT_CONFIG, EXIT_BATCH = 0, 2, 3


def _env_seed(default: int) -> int:
    raw = os.environ.get("TOMO_SEED")
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"TOMO_SEED must be an integer, got {raw!r}") from None


def _circuit(ref: str) -> Circuit:
    if ref in PRESETS:
        return load_preset(ref)
    try:
        return Circuit.parse(Path(ref).read_text())
    except OSError as exc:
        raise ConfigError(f"{ref!r} is neither a preset nor a readable circuit file") from exc


def _noise(text: str) -> NoiseModel | None:
    if text in ("none", ""):
        return None
    if text == "default":
        return NoiseModel.default_noisy()
    if os.path.exists(text):
        text = Path(text).read_text()
    return NoiseModel.from_json(text)


def _manager(args) -> MeasurementManager:
    mode = "exact" if args.shots == 0 else "sampled"
    return MeasurementManager(mode, args.shots or 1, _noise(args.noise), _env_seed(args.seed))


def _write_json(path, data):
    text = json.dumps(data, indent=2) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_run(args) -> int:
    cfg = ExperimentConfig.from_json(args.config)
    cfg.seed = _env_seed(cfg.seed)
    result = run_experiment(cfg, args.workers)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    emit_results(result.stats, result.records, "csv", out / f"{cfg.name}.csv")
    line = emit_results(result.stats, result.records, "json", out / f"{cfg.name}.json")
    print(f"{cfg.name} {cfg.scheme} {line} errors {result.stats.errors}/{cfg.trials}")
    return EXIT_OK


def _eps_for(ref: str, scheme: str, eps):
    if eps is not None:
        return eps
    if ref in PRESETS:
        return default_eps(ref, scheme)
    raise ConfigError("--eps is required for circuit files")


def cmd_reconstruct(args) -> int:
    prep = _circuit(args.prep)
    mgr = _manager(args)
    kwargs = {}
    if args.scheme != "mst":
        kwargs["randomizer"] = args.randomizer
        if args.prep in PRESETS:
            kwargs["mask_eps"] = default_mask_eps(args.prep)
    report = reconstruct(mgr, prep, _eps_for(args.prep, args.scheme, args.eps), args.scheme, **kwargs)
    data = report.to_dict()
    data["fidelity"] = fidelity(report.estimate, run_circuit(prep))
    _write_json(args.out, data)
    if args.cache_out:
        mgr.dump(args.cache_out)
    return EXIT_OK


def cmd_process(args) -> int:
    process = preset_process(args.process) if args.process in PRESETS else _circuit(args.process)
    reference = None
    if args.reference != "none":
        reference = process_matrix(_circuit(args.reference) if args.reference != "self" else process)
    eps = args.eps if args.eps is not None else default_eps("proc-w1", "process")
    mgr = _manager(args)
    est = run_process_tomography(mgr, process, eps, args.scheme, reference=reference)
    _write_json(args.out, est.to_dict())
    if args.cache_out:
        mgr.dump(args.cache_out)
    return EXIT_OK


def cmd_mst_report(args) -> int:
    try:
        support = [int(s, 0) for s in args.support.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"bad --support list: {exc}") from exc
    tree = mst_of(support, args.n)
    _write_json(args.out, {
        "vertices": list(tree.vertices),
        "edges": [list(e) for e in tree.edges],
        "total_weight": tree.total_weight,
        "weight_hist": {str(k): v for k, v in tree.weight_hist.items()},
        "cnot_bound": cnot_upper_bound(tree),
    })
    return EXIT_OK


def cmd_verify_theorems(args) -> int:
    if args.n not in (2, 3, 4):
        raise ConfigError("--n must be 2, 3 or 4")
    ok = theorem_a_check(args.n)
    print(f"large-support weight-1 check n={args.n}: {'pass' if ok else 'FAIL'}")
    for n in range(3, 13):
        for k in range(3, n + 1):
            try:
                adversarial_decomposition(n, k)
            except TomoError:
                continue
            w = build_mst(adversarial_vertex_set(n, k)).total_weight
            good = w == adversarial_weight(n, k)
            ok &= good
            if not good:
                print(f"adversarial n={n} k={k}: weight {w} != {adversarial_weight(n, k)}")
    print(f"adversarial weight check: {'pass' if ok else 'FAIL'}")
    return EXIT_OK if ok else 1


def _add_backend_args(p):
    p.add_argument("--scheme", choices=SCHEMES, default="mst")
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--shots", type=int, default=16384, help="0 selects exact probabilities")
    p.add_argument("--noise", default="none", help="'none', 'default', a JSON object or a JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.add_argument("--cache-out", default=None, help="write measured settings as NDJSON")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tomo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a batch experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("reconstruct", help="reconstruct one prepared state")
    p.add_argument("--prep", required=True, help="preset id or circuit file")
    p.add_argument("--randomizer", choices=("auto", "h", "v", "haar"), default="auto")
    _add_backend_args(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("process", help="reconstruct a unitary process")
    p.add_argument("--process", required=True, help="preset id or circuit file")
    p.add_argument("--reference", default="self", help="circuit file, 'self' or 'none'")
    _add_backend_args(p)
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("mst-report", help="MST and CNOT bound for a support")
    p.add_argument("--support", required=True, help="comma-separated indices, e.g. 0,3,0b110")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_mst_report)

    p = sub.add_parser("verify-theorems", help="exhaustive and constructive MST weight checks")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_verify_theorems)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BATCH
    except (ConfigError, TomoError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
