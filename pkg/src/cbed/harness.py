"""The intervene / infer / design loop, sweeps and benchmarks."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgumentError, UndefinedMetricError
from .graphs import GraphFamily, GraphKind
from .metrics import auprc, auroc, edge_marginals, expected_shd
from .policy import POLICIES, VALUE_STRATEGIES, MiSettings, ValueChooser
from .posterior import MAX_EXACT_NODES, PriorConfig, bootstrap_posterior, exact_posterior
from .scm import Dataset, MechanismKind, Scm, generate_ground_truth, sample, scm_to_json
from .valueopt import SearchDomain, mi_sweep

log = logging.getLogger(__name__)

__all__ = [
    "ExperimentConfig",
    "MetricRecord",
    "stream",
    "ground_truth",
    "fit_posterior",
    "run_experiment",
    "write_metrics",
    "write_manifest",
    "run_and_write",
    "run_sweep",
    "write_sweep",
    "BenchmarkResult",
    "run_benchmark",
    "METRIC_HEADER",
    "SWEEP_HEADER",
]

METRIC_HEADER = ("batch", "samples", "e_shd", "auroc", "auprc", "acq_seconds")
SWEEP_HEADER = ("target", "value", "mi")

# named streams; the integer ids are part of the reproducibility contract
STREAMS = {"ground_truth": 0, "data": 1, "posterior": 2, "policy": 3, "execute": 4, "sweep": 5}


def stream(seed: int, name: str, *counter: int) -> np.random.Generator:
    """Independent generator for ``name`` (and an optional counter such as the batch index)."""
    return np.random.default_rng([seed, STREAMS[name], *counter])


@dataclass(frozen=True)
class ExperimentConfig:
    d: int = 5
    graph: str = "er"
    edges_per_vertex: float = 1.0
    mechanism: str = "linear"
    noise_var: float = 0.1
    n_obs_init: int = 100
    batch_size: int = 10
    n_batches: int = 10
    policy: str = "soft-cbed"
    value_strategy: str = "gp-ucb"
    posterior: str = "exact"
    n_particles: int = 20
    score: str = "auto"
    c_o: int | None = None
    c_in: int | None = None
    m: int = 32
    bound: float = 5.0
    T: int = 8
    beta: float = 2.0
    zeta: float = 1.0
    edge_penalty: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("d", "n_obs_init", "batch_size", "n_particles", "m", "T"):
            if getattr(self, name) < 1:
                raise InvalidArgumentError(f"{name} must be positive")
        for name in ("c_o", "c_in"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise InvalidArgumentError(f"{name} must be positive")
        if self.n_batches < 0:
            raise InvalidArgumentError("n_batches must be >= 0")
        if self.policy not in POLICIES:
            raise InvalidArgumentError(f"unknown policy {self.policy!r}; choose from {sorted(POLICIES)}")
        if self.value_strategy not in VALUE_STRATEGIES:
            raise InvalidArgumentError(f"unknown value strategy {self.value_strategy!r}")
        if self.posterior not in ("exact", "bootstrap"):
            raise InvalidArgumentError("posterior must be 'exact' or 'bootstrap'")
        if self.posterior == "exact" and self.d > MAX_EXACT_NODES:
            raise InvalidArgumentError(f"exact posterior supports d <= {MAX_EXACT_NODES}")
        if self.score not in ("auto", "bge", "gaussian"):
            raise InvalidArgumentError(f"unknown score {self.score!r}")
        GraphKind(self.graph)
        MechanismKind(self.mechanism)
        if self.noise_var <= 0 or self.bound <= 0 or self.beta <= 0 or self.zeta <= 0:
            raise InvalidArgumentError("noise_var, bound, beta and zeta must be positive")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise InvalidArgumentError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**raw)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)

    @property
    def prior(self) -> PriorConfig:
        score = self.score
        if score == "auto":
            score = "bge" if self.mechanism == MechanismKind.LINEAR.value else "gaussian"
        return PriorConfig(
            score=score, mechanism=self.mechanism, noise_var=self.noise_var, edge_penalty=self.edge_penalty
        )


@dataclass(frozen=True)
class MetricRecord:
    batch: int
    samples: int
    e_shd: float
    auroc: float
    auprc: float
    acq_seconds: float

    def row(self) -> list[str]:
        return [str(self.batch), str(self.samples), *(repr(float(x)) for x in (self.e_shd, self.auroc, self.auprc, self.acq_seconds))]


def ground_truth(cfg: ExperimentConfig) -> Scm:
    family = GraphFamily(cfg.graph, cfg.edges_per_vertex)
    return generate_ground_truth(family, cfg.d, cfg.mechanism, stream(cfg.seed, "ground_truth"), noise_var=cfg.noise_var)


def fit_posterior(cfg: ExperimentConfig, data: Dataset, rng: np.random.Generator):
    if cfg.posterior == "exact":
        return exact_posterior(data, cfg.prior, rng, n_particles=cfg.n_particles)
    return bootstrap_posterior(data, cfg.n_particles, rng)


def _safe(metric, *args) -> float:
    try:
        return metric(*args)
    except UndefinedMetricError:
        return math.nan


def _record(b: int, data: Dataset, post, truth: Scm, acq: float) -> MetricRecord:
    marg = edge_marginals(post)
    return MetricRecord(
        b,
        data.n_interventional(),
        expected_shd(post, truth.dag),
        _safe(auroc, marg, truth.dag),
        _safe(auprc, marg, truth.dag),
        acq,
    )


def _with_context(exc: Exception, b: int) -> Exception:
    exc.add_note(f"while processing batch {b}") if hasattr(exc, "add_note") else None
    return exc


def run_experiment(cfg: ExperimentConfig) -> list[MetricRecord]:
    truth = ground_truth(cfg)
    data = sample(truth, None, cfg.n_obs_init, stream(cfg.seed, "data"))
    chooser_kw = dict(domain=SearchDomain(cfg.bound), T=cfg.T, beta=cfg.beta)
    mi = MiSettings(cfg.c_o, cfg.c_in, cfg.m)
    policy = POLICIES[cfg.policy]
    records = []
    for b in range(cfg.n_batches + 1):
        try:
            post = fit_posterior(cfg, data, stream(cfg.seed, "posterior", b))
            if b == cfg.n_batches:
                records.append(_record(b, data, post, truth, 0.0))
                break
            chooser = ValueChooser(cfg.value_strategy, data=data, **chooser_kw)
            t0 = time.perf_counter()
            batch = policy(post, cfg.batch_size, stream(cfg.seed, "policy", b), chooser, cfg.zeta, mi)
            acq = time.perf_counter() - t0
            records.append(_record(b, data, post, truth, acq))
            rng = stream(cfg.seed, "execute", b)
            for xi in batch:
                data = data.concat(sample(truth, xi, 1, rng))
        except Exception as exc:
            raise _with_context(exc, b)
    return records


def write_metrics(records: Iterable[MetricRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRIC_HEADER)
        for r in records:
            w.writerow(r.row())


def write_manifest(cfg: ExperimentConfig, path, **extra) -> None:
    from . import __version__

    body = {"config": cfg.to_dict(), "seed": cfg.seed, "version": __version__, **extra}
    Path(path).write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")


def run_and_write(cfg: ExperimentConfig, out_dir) -> list[MetricRecord]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = run_experiment(cfg)
    write_metrics(records, out / "metrics.csv")
    write_manifest(cfg, out / "manifest.json", ground_truth=scm_to_json(ground_truth(cfg)))
    return records


def run_sweep(cfg: ExperimentConfig, targets: Sequence[int], grid, post=None) -> list[tuple[int, float, float]]:
    """MI on ``grid`` for each target under the observational posterior (or ``post``)."""
    grid = np.sort(np.asarray(grid, float))
    if post is None:
        truth = ground_truth(cfg)
        data = sample(truth, None, cfg.n_obs_init, stream(cfg.seed, "data"))
        post = fit_posterior(cfg, data, stream(cfg.seed, "posterior", 0))
    for j in targets:
        if not 0 <= j < post.d:
            raise InvalidArgumentError(f"target {j} out of range for d={post.d}")
    rows = []
    for j in sorted(set(int(t) for t in targets)):
        rows += mi_sweep(post, j, grid, stream(cfg.seed, "sweep", j), cfg.c_o, cfg.c_in, cfg.m)
    return rows


def write_sweep(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for j, v, mi in rows:
            w.writerow([j, repr(v), repr(mi)])


# ---------------------------------------------------------------------------
# benchmark


@dataclass
class BenchmarkResult:
    aggregate: list[dict]
    timing: dict
    checks: list[tuple[str, bool]] = field(default_factory=list)
    runs: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(passed for _, passed in self.checks)


def _batching_mode(policy: str) -> str | None:
    return {"soft-cbed": "soft", "greedy-cbed": "greedy"}.get(policy)


def _ordering_checks(timing: dict) -> list[tuple[str, bool]]:
    checks = []
    strategies = sorted({s for _, s in timing})
    for s in strategies:
        soft, greedy = timing.get(("soft-cbed", s)), timing.get(("greedy-cbed", s))
        if soft is not None and greedy is not None:
            checks.append((f"soft < greedy [{s}]", soft < greedy))
    for p in ("soft-cbed", "greedy-cbed"):
        fixed, gp = timing.get((p, "fixed")), timing.get((p, "gp-ucb"))
        if fixed is not None and gp is not None:
            checks.append((f"fixed < gp-ucb [{_batching_mode(p)}]", fixed < gp))
    return checks


def _stats(xs: np.ndarray) -> tuple[float, float | None]:
    mean = float(np.mean(xs))
    if xs.size < 2:
        return mean, None
    return mean, float(np.std(xs, ddof=1) / math.sqrt(xs.size))


def run_benchmark(
    configs: Sequence[ExperimentConfig], n_seeds: int, out_dir=None, workers: int = 1
) -> BenchmarkResult:
    """Run every config for seeds ``cfg.seed .. cfg.seed + n_seeds - 1``.

    Cells are keyed by (policy, value strategy).  The timing table holds the
    mean total acquisition time per run.
    """
    if n_seeds < 1:
        raise InvalidArgumentError("n_seeds must be >= 1")
    jobs = [(cfg.policy, cfg.value_strategy, cfg.replace(seed=cfg.seed + s)) for cfg in configs for s in range(n_seeds)]
    keys = [(p, v) for p, v, _ in jobs]
    if len(set(keys)) * n_seeds != len(jobs):
        raise InvalidArgumentError("each (policy, value strategy) cell may appear only once")
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(run_experiment, [c for _, _, c in jobs]))
    else:
        results = [run_experiment(c) for _, _, c in jobs]
    runs: dict = {}
    for key, recs in zip(keys, results):
        runs.setdefault(key, []).append(recs)

    aggregate, timing = [], {}
    for (p, v), seeds in runs.items():
        timing[(p, v)] = float(np.mean([sum(r.acq_seconds for r in recs) for recs in seeds]))
        for b in range(len(seeds[0])):
            row = {"policy": p, "value_strategy": v, "batch": b, "samples": seeds[0][b].samples, "n_seeds": len(seeds)}
            for metric in ("e_shd", "auroc", "auprc", "acq_seconds"):
                mean, se = _stats(np.array([getattr(recs[b], metric) for recs in seeds]))
                row[f"{metric}_mean"] = mean
                if metric != "acq_seconds":
                    row[f"{metric}_stderr"] = se
            aggregate.append(row)
    result = BenchmarkResult(aggregate, timing, _ordering_checks(timing), runs)
    for name, passed in result.checks:
        if not passed:
            log.warning("runtime ordering violated: %s", name)
    if out_dir is not None:
        _write_benchmark(result, Path(out_dir))
    return result


def _fmt(x) -> str:
    return "" if x is None else (repr(x) if isinstance(x, float) else str(x))


def _write_benchmark(result: BenchmarkResult, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    if result.aggregate:
        cols = list(result.aggregate[0])
        with open(out / "aggregate.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for row in result.aggregate:
                w.writerow([_fmt(row[c]) for c in cols])
    with open(out / "timing.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["policy", "value_strategy", "acq_seconds"])
        for (p, v), t in sorted(result.timing.items()):
            w.writerow([p, v, repr(t)])
