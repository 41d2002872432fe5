"""Batch trials over a preparation, fidelity statistics and result files."""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats as sstats

from .errors import BatchError, ConfigError
from .presets import PRESETS, default_eps, default_mask_eps, load_preset, preset_process
from .proctomo import process_matrix, run_process_tomography
from .qcore import Circuit, fidelity, run_circuit
from .sim import MeasurementManager, NoiseModel
from .tomo import SCHEMES, reconstruct

ALL_SCHEMES = SCHEMES + ("process",)
CSV_COLUMNS = ("trial", "scheme", "fidelity", "settings_used", "cnots_used", "seed")
MAX_ERROR_FRACTION = 0.10
QUARTILE_METHOD = "midpoint"


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    prep: str = "pair-000-001"
    scheme: str = "mst"
    trials: int = 512
    shots: int = 16384
    eps: float | None = None
    mask_eps: float | None = None
    noise: NoiseModel | None = None
    seed: int = 0
    mode: str = "sampled"
    reference: str | None = None
    randomizer: str = "auto"
    workers: int = 1

    def __post_init__(self):
        if isinstance(self.noise, dict):
            self.noise = NoiseModel.from_dict(self.noise)
        if self.scheme not in ALL_SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; expected one of {ALL_SCHEMES}")
        if self.mode not in ("exact", "sampled"):
            raise ConfigError(f"mode must be 'exact' or 'sampled', got {self.mode!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.mode == "sampled" and self.shots < 1:
            raise ConfigError("shots must be >= 1 in sampled mode")
        if self.eps is not None and self.eps <= 0:
            raise ConfigError("eps must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config JSON must be an object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["noise"] = self.noise.to_dict() if self.noise else None
        return d

    def resolved_eps(self) -> float:
        if self.eps is not None:
            return self.eps
        if self.prep in PRESETS:
            return default_eps(self.prep, self.scheme)
        raise ConfigError("eps is required when prep is a circuit file")

    def resolved_mask_eps(self) -> float | None:
        if self.mask_eps is not None:
            return self.mask_eps
        if self.prep in PRESETS:
            return default_mask_eps(self.prep)
        return None


def _load_circuit(ref: str) -> Circuit:
    if ref in PRESETS:
        return load_preset(ref)
    try:
        return Circuit.parse(Path(ref).read_text())
    except OSError as exc:
        raise ConfigError(f"{ref!r} is neither a preset nor a readable circuit file") from exc


@dataclass
class TrialStats:
    fidelities: np.ndarray
    median: float
    q1: float
    q3: float
    settings_mean: float
    cnots_mean: float
    errors: int = 0

    @classmethod
    def from_records(cls, records: list[dict]) -> "TrialStats":
        ok = [r for r in records if r.get("error") is None]
        fids = np.array([r["fidelity"] for r in ok], dtype=np.float64)
        if fids.size:
            q1, med, q3 = quartiles(fids)
            settings = float(np.mean([r["settings_used"] for r in ok]))
            cnots = float(np.mean([r["cnots_used"] for r in ok]))
        else:
            q1 = med = q3 = settings = cnots = float("nan")
        return cls(fids, med, q1, q3, settings, cnots, len(records) - len(ok))

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1

    def to_dict(self) -> dict:
        return {
            "fidelities": self.fidelities.tolist(),
            "median": self.median,
            "q1": self.q1,
            "q3": self.q3,
            "settings_mean": self.settings_mean,
            "cnots_mean": self.cnots_mean,
            "errors": self.errors,
        }

    def summary(self) -> str:
        return f"median {self.median:.6f} [{self.q1:.6f}, {self.q3:.6f}]"


def quartiles(values) -> tuple[float, float, float]:
    """``(q1, median, q3)``, each the midpoint of its two closest ranks."""
    q = np.quantile(np.asarray(values, dtype=np.float64), [0.25, 0.5, 0.75], method=QUARTILE_METHOD)
    return float(q[0]), float(q[1]), float(q[2])


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    stats: TrialStats
    records: list = field(default_factory=list)


def run_trial(config: ExperimentConfig, index: int) -> dict:
    seed = config.seed + index
    record = {"trial": index, "scheme": config.scheme, "fidelity": None,
              "settings_used": None, "cnots_used": None, "seed": seed, "error": None}
    try:
        mgr = MeasurementManager(config.mode, config.shots, config.noise, seed)
        eps = config.resolved_eps()
        if config.scheme == "process":
            if config.prep in PRESETS:
                process = preset_process(config.prep)
            else:
                process = _load_circuit(config.prep)
            reference = _load_circuit(config.reference) if config.reference else process
            est = run_process_tomography(mgr, process, eps, "mst", reference=process_matrix(reference))
            record["fidelity"] = est.process_fidelity
            report = est.report
        else:
            prep = _load_circuit(config.prep)
            kwargs = {}
            if config.scheme != "mst":
                kwargs = {"randomizer": config.randomizer, "mask_eps": config.resolved_mask_eps()}
            report = reconstruct(mgr, prep, eps, config.scheme, **kwargs)
            record["fidelity"] = fidelity(report.estimate, run_circuit(prep))
        record["settings_used"] = report.settings_used
        record["cnots_used"] = report.cnots_used
    except ConfigError:
        raise
    except Exception as exc:  # a failed trial is recorded, the batch goes on
        record["error"] = f"{type(exc).__name__}: {exc}"
    return record


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> ExperimentResult:
    """Run ``config.trials`` independent trials; trial ``i`` is seeded with ``seed + i``."""
    config.resolved_eps()  # surface config problems before spawning work
    workers = workers or config.workers
    if workers == 1:
        records = [run_trial(config, i) for i in range(config.trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda i: run_trial(config, i), range(config.trials)))
    records.sort(key=lambda r: r["trial"])
    stats = TrialStats.from_records(records)
    if stats.errors > MAX_ERROR_FRACTION * config.trials:
        first = next(r["error"] for r in records if r["error"])
        raise BatchError(f"{stats.errors}/{config.trials} trials failed; first: {first}")
    return ExperimentResult(config, stats, records)


def _fmt(x) -> str:
    return "" if x is None else repr(x)


def results_csv(records: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow([_fmt(r[c]) if c == "fidelity" else r[c] for c in CSV_COLUMNS])
    return buf.getvalue()


def results_json(stats: TrialStats, records: list[dict]) -> str:
    return json.dumps({"stats": stats.to_dict(), "records": records}, indent=2, sort_keys=True) + "\n"


def emit_results(stats: TrialStats, records: list[dict], fmt: str, path) -> str:
    """Write ``records`` as CSV or ``stats`` plus records as JSON; returns the summary line."""
    if fmt == "csv":
        text = results_csv(records)
    elif fmt == "json":
        text = results_json(stats, records)
    else:
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    Path(path).write_text(text)
    return stats.summary()


@dataclass
class Comparison:
    a: TrialStats
    b: TrialStats
    median_diff: float
    ci_low: float
    ci_high: float

    def to_dict(self) -> dict:
        return {"a": self.a.to_dict(), "b": self.b.to_dict(), "median_diff": self.median_diff,
                "ci": [self.ci_low, self.ci_high]}


def bootstrap_ci(a, b, statistic, n_resamples: int = 2000, seed: int = 0, confidence: float = 0.95):
    """Percentile bootstrap CI of ``statistic(a) - statistic(b)`` over independent resamples."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if np.ptp(a) == 0 and np.ptp(b) == 0:
        d = float(statistic(a) - statistic(b))
        return d, d

    def diff(x, y, axis=-1):
        return statistic(x, axis=axis) - statistic(y, axis=axis)

    res = sstats.bootstrap((a, b), diff, n_resamples=n_resamples, confidence_level=confidence,
                           method="percentile", rng=np.random.default_rng(seed))
    return float(res.confidence_interval.low), float(res.confidence_interval.high)


def _median(x, axis=-1):
    return np.median(x, axis=axis)


def compare_schemes(config_a: ExperimentConfig, config_b: ExperimentConfig, n_resamples: int = 2000,
                    workers: int | None = None) -> Comparison:
    if config_a.prep != config_b.prep:
        raise ConfigError("compared configs must share the same prep")
    ra = run_experiment(config_a, workers)
    rb = run_experiment(config_b, workers)
    lo, hi = bootstrap_ci(ra.stats.fidelities, rb.stats.fidelities, _median, n_resamples, config_a.seed)
    return Comparison(ra.stats, rb.stats, ra.stats.median - rb.stats.median, lo, hi)


def paired_bootstrap_ci(a, b, n_resamples: int = 2000, seed: int = 0, confidence: float = 0.95):
    """Percentile bootstrap CI of the median per-trial difference ``a - b``."""
    d = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    if np.ptp(d) == 0:
        return float(d[0]), float(d[0])
    res = sstats.bootstrap((d,), _median, n_resamples=n_resamples, confidence_level=confidence,
                           method="percentile", rng=np.random.default_rng(seed))
    return float(res.confidence_interval.low), float(res.confidence_interval.high)
