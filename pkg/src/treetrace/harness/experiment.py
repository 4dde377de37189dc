"""Seeded Monte Carlo experiments: success rate of an algorithm versus trace count."""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .. import __version__
from .._validation import check_probability
from ..channel import EMPTY, ChannelConfig, check_model, derive_rng, sample_spider_vectors, sample_string_traces, sample_traces
from ..exceptions import NoUsableTraces, ReconstructionTerminated
from ..lp_recon import reconstruct_lp_large, reconstruct_lp_small
from ..spider_recon import best_match, reconstruct_spider_large_depth, reconstruct_spider_rows
from ..string_recon import censored_reconstruct, exhaustive_best_match_string
from ..ted_recon import reconstruct_ted_large, reconstruct_ted_small
from ..trees import TreeShape, build_tree
from .stats import wilson_interval
from .trace_counts import DEFAULT_CONSTANTS, string_budget, theorem_trace_count

ALGORITHMS = {
    # algo id: (shape kind, theorem id used for "auto" trace counts)
    "ted_large": ("kary", None),
    "ted_small": ("kary", "ted_small"),
    "lp_large": ("kary", None),
    "lp_small": ("kary", "lp_small"),
    "spider_meanbased": ("spider", "spider_meanbased"),
    "spider_large_depth": ("spider", "spider_large_depth"),
    "spider_rows": ("spider", None),
    "string": ("spider", None),
}
LABEL_MODES = ("random", "fixed", "worst_case_enumerate")
CSV_COLUMNS = ("T", "trial", "success", "millis")


@dataclass
class ExperimentConfig:
    shape: TreeShape
    algo: str
    q: float
    trace_counts: list = field(default_factory=lambda: [100])
    trials: int = 20
    master_seed: int = 0
    model: str = "ted"
    gamma: float = 0.0
    constants: dict = field(default_factory=dict)
    label_mode: str = "random"
    labels: list | None = None
    workers: int = 1
    timing: bool = True
    retries: int = 0

    def __post_init__(self):
        if isinstance(self.shape, dict):
            self.shape = TreeShape.from_dict(self.shape)
        if self.algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algo!r}; expected one of {sorted(ALGORITHMS)}")
        kind, _ = ALGORITHMS[self.algo]
        if self.shape.kind != kind:
            raise ValueError(f"algorithm {self.algo} needs a {kind} shape, got {self.shape}")
        if self.algo == "string" and self.shape.d != self.shape.n:
            raise ValueError("the string algorithm needs a one-path shape (n == d)")
        self.model = check_model(self.model)
        self.q = check_probability(self.q, "q", upper_open=True)
        self.gamma = check_probability(self.gamma, "gamma")
        if self.gamma >= 1.0:
            raise ValueError("gamma = 1 censors every trace")
        if int(self.trials) < 1:
            raise ValueError("trials must be at least 1")
        if not self.trace_counts:
            raise ValueError("trace_counts must be nonempty")
        if self.label_mode not in LABEL_MODES:
            raise ValueError(f"label_mode must be one of {LABEL_MODES}")
        if self.label_mode == "fixed":
            if self.labels is None or len(self.labels) != self.shape.n:
                raise ValueError(f"label_mode 'fixed' needs {self.shape.n} labels")
        self.constants = {**DEFAULT_CONSTANTS, **self.constants}
        self.trace_counts = [self.resolve_count(T) for T in self.trace_counts]

    def resolve_count(self, T) -> int:
        if T == "auto":
            theorem = ALGORITHMS[self.algo][1]
            if theorem is not None:
                return theorem_trace_count(theorem, self.shape, self.q, self.constants)
            if self.algo == "spider_rows":
                return string_budget(self.shape.n_paths, round(1 - (1 - self.q) ** self.shape.d, 6))
            if self.algo == "string":
                return string_budget(self.shape.n, self.q)
            raise ValueError(f"no theorem trace count for {self.algo}; give explicit counts")
        T = int(T)
        if T < 1:
            raise ValueError("trace counts must be positive")
        return T

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["shape"] = self.shape.to_dict()
        return out


@dataclass
class ExperimentReport:
    config: dict
    rows: list[dict]
    aggregates: list[dict]
    version: str = __version__

    def csv_body(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: row[k] for k in CSV_COLUMNS})
        return buf.getvalue()

    def summary(self) -> dict:
        return {"version": self.version, "config": self.config, "aggregates": self.aggregates}

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)

    def rate(self, T: int) -> float:
        for agg in self.aggregates:
            if agg["T"] == T:
                return agg["rate"]
        raise KeyError(T)


def aggregate(rows: list[dict]) -> list[dict]:
    """Per-T success counts, rates and 95% Wilson intervals, in order of first appearance."""
    order: list[int] = []
    by_T: dict[int, list[int]] = {}
    for row in rows:
        T = int(row["T"])
        if T not in by_T:
            order.append(T)
            by_T[T] = []
        by_T[T].append(int(row["success"]))
    out = []
    for T in order:
        wins, n = sum(by_T[T]), len(by_T[T])
        lo, hi = wilson_interval(wins, n)
        out.append({"T": T, "trials": n, "successes": wins, "rate": wins / n, "wilson_low": lo, "wilson_high": hi})
    return out


def read_csv(text: str) -> list[dict]:
    return [{k: int(v) for k, v in row.items()} for row in csv.DictReader(io.StringIO(text))]


# ---------------------------------------------------------------------------
# single trials


def trial_labels(cfg: ExperimentConfig, trial: int) -> np.ndarray:
    n = cfg.shape.n
    if cfg.label_mode == "fixed":
        return np.asarray(cfg.labels, dtype=np.int8)
    if cfg.label_mode == "worst_case_enumerate":
        code = trial % (2**n)
        return np.array([(code >> (n - 1 - b)) & 1 for b in range(n)], dtype=np.int8)
    return derive_rng(cfg.master_seed, 0, trial).integers(0, 2, n).astype(np.int8)


def _drop_censored(traces: list) -> list:
    kept = [t for t in traces if t is not EMPTY]
    if not kept:
        raise NoUsableTraces("every trace was censored")
    return kept


def reconstruct_once(cfg: ExperimentConfig, labels: np.ndarray, T: int, rng) -> np.ndarray:
    """Sample ``T`` traces of ``labels`` and run the configured algorithm."""
    shape, q, algo = cfg.shape, cfg.q, cfg.algo
    if algo == "spider_meanbased":
        U = sample_spider_vectors(labels, shape, q, T, rng)
        if cfg.gamma > 0:
            U = U[rng.random(T) >= cfg.gamma]
            if U.shape[0] == 0:
                raise NoUsableTraces("every trace was censored")
        return best_match(U, shape, q, rng=rng).labels
    if algo == "string":
        traces = sample_string_traces(labels, q, T, rng)
        if cfg.gamma > 0:
            traces = [EMPTY if c < cfg.gamma else t for t, c in zip(traces, rng.random(T))]
            return np.asarray(censored_reconstruct(traces, shape.n, q, cfg.gamma))
        return np.asarray(exhaustive_best_match_string(traces, shape.n, q))
    x = build_tree(shape, labels)
    traces = _drop_censored(sample_traces(x, ChannelConfig(cfg.model, q, cfg.gamma), T, rng))
    runners = {
        "ted_large": reconstruct_ted_large,
        "ted_small": reconstruct_ted_small,
        "lp_large": reconstruct_lp_large,
        "lp_small": reconstruct_lp_small,
        "spider_large_depth": reconstruct_spider_large_depth,
        "spider_rows": reconstruct_spider_rows,
    }
    return runners[algo](traces, shape, q)


def run_trial(cfg: ExperimentConfig, T: int, trial: int) -> dict:
    labels = trial_labels(cfg, trial)
    start = time.perf_counter()
    success = False
    terminated = None
    for attempt in range(cfg.retries + 1):
        rng = derive_rng(cfg.master_seed, 1, T, trial, attempt)
        try:
            out = reconstruct_once(cfg, labels, T, rng)
        except ReconstructionTerminated as exc:
            terminated = type(exc).__name__
            continue
        success = bool(np.array_equal(np.asarray(out), labels))
        terminated = None
        break
    millis = round((time.perf_counter() - start) * 1000) if cfg.timing else 0
    return {"T": T, "trial": trial, "success": int(success), "millis": millis, "terminated": terminated}


def _run_task(args):
    cfg_dict, T, trial = args
    return run_trial(ExperimentConfig.from_dict(cfg_dict), T, trial)


def run_experiment(cfg: ExperimentConfig | dict) -> ExperimentReport:
    """Run every (T, trial) pair; output order never depends on scheduling."""
    if isinstance(cfg, dict):
        cfg = ExperimentConfig.from_dict(cfg)
    tasks = [(T, trial) for T in cfg.trace_counts for trial in range(cfg.trials)]
    if cfg.workers > 1:
        cfg_dict = cfg.to_dict()
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_run_task, [(cfg_dict, T, trial) for T, trial in tasks]))
    else:
        rows = [run_trial(cfg, T, trial) for T, trial in tasks]
    rows.sort(key=lambda r: (cfg.trace_counts.index(r["T"]), r["trial"]))
    return ExperimentReport(config=cfg.to_dict(), rows=rows, aggregates=aggregate(rows))


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        data: Any = json.load(fh)
    return ExperimentConfig.from_dict(data)
