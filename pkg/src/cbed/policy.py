"""Intervention-selection policies and batch assembly."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidArgumentError
from .infogain import ait_score, mi_single
from .posterior import PosteriorParticles
from .scm import Dataset, Intervention
from .valueopt import Objective, SearchDomain, ValueTrace, optimize_value

log = logging.getLogger(__name__)

__all__ = [
    "DesignBatch",
    "CandidatePool",
    "ValueStrategy",
    "ValueChooser",
    "value_strategy",
    "MiSettings",
    "mi_objective",
    "ait_objective",
    "policy_random",
    "cbed",
    "greedy_cbed",
    "soft_topk_sample",
    "soft_cbed",
    "soft_ait",
    "POLICIES",
    "VALUE_STRATEGIES",
]


@dataclass(frozen=True)
class DesignBatch:
    interventions: tuple
    scores: tuple

    def __post_init__(self):
        if len(self.interventions) != len(self.scores):
            raise InvalidArgumentError("one score per intervention")

    def __len__(self) -> int:
        return len(self.interventions)

    def __iter__(self):
        return iter(self.interventions)

    @property
    def targets(self) -> list[int]:
        return [xi.target for xi in self.interventions]

    @property
    def values(self) -> list[float]:
        return [xi.value for xi in self.interventions]


@dataclass(frozen=True)
class CandidatePool:
    """Flat list of (target, value, utility) gathered from per-target value searches."""

    entries: tuple

    @classmethod
    def from_traces(cls, traces) -> "CandidatePool":
        return cls(tuple((tr.target, v, u) for tr in traces for v, u in tr.trace))

    def __len__(self) -> int:
        return len(self.entries)


class ValueStrategy(str, enum.Enum):
    FIXED = "fixed"
    SAMPLE_DIST = "sample-dist"
    GP_UCB = "gp-ucb"
    UNIFORM = "uniform"


VALUE_STRATEGIES = tuple(s.value for s in ValueStrategy)


@dataclass
class ValueChooser:
    """Produces candidate values (with utilities) for one target at a time.

    ``trace`` always returns ``T`` (value, utility) pairs:

    * fixed: the value 0, evaluated once and repeated ``T`` times;
    * sample-dist: ``T`` draws from the target's observational marginal;
    * uniform: ``T`` uniform draws on the domain;
    * gp-ucb: the full GP-UCB trace.
    """

    kind: ValueStrategy = ValueStrategy.GP_UCB
    domain: SearchDomain = field(default_factory=SearchDomain)
    T: int = 8
    beta: float = 2.0
    grid_size: int = 256
    data: Dataset | None = None
    fixed_value: float = 0.0

    def __post_init__(self):
        self.kind = ValueStrategy(self.kind)
        if self.T < 1:
            raise InvalidArgumentError("T must be >= 1")
        if self.kind is ValueStrategy.SAMPLE_DIST:
            if self.data is None or len(self.data.observational()) == 0:
                raise InvalidArgumentError("sample-dist needs a non-empty observational dataset")
            self._support = self.data.observational().values

    def _draw(self, target: int, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind is ValueStrategy.SAMPLE_DIST:
            return rng.choice(self._support[:, target], size=n)
        return rng.uniform(-self.domain.bound, self.domain.bound, size=n)

    def trace(self, target: int, objective: Objective, rng: np.random.Generator) -> ValueTrace:
        if self.kind is ValueStrategy.GP_UCB:
            return optimize_value(
                None, target, self.domain, self.T, rng, beta=self.beta, grid_size=self.grid_size, objective=objective
            )
        if self.kind is ValueStrategy.FIXED:
            u = float(objective(target, self.fixed_value, rng))
            tr = ((self.fixed_value, u),) * self.T
        else:
            tr = tuple((float(v), float(objective(target, float(v), rng))) for v in self._draw(target, self.T, rng))
        best = tr[int(np.argmax([u for _, u in tr]))]
        return ValueTrace(target, tr, best)

    def choose(self, target: int, objective: Objective | None, rng: np.random.Generator) -> float:
        """A single value without scoring, except gp-ucb which needs the objective."""
        if self.kind is ValueStrategy.FIXED:
            return self.fixed_value
        if self.kind is ValueStrategy.GP_UCB:
            if objective is None:
                raise InvalidArgumentError("gp-ucb needs an objective")
            return self.trace(target, objective, rng).best[0]
        return float(self._draw(target, 1, rng)[0])


def value_strategy(kind, **context) -> ValueChooser:
    return ValueChooser(ValueStrategy(kind), **context)


@dataclass(frozen=True)
class MiSettings:
    c_o: int | None = None
    c_in: int | None = None
    m: int = 32
    entropy: str = "mc"


def mi_objective(post: PosteriorParticles, mi: MiSettings = MiSettings()) -> Objective:
    def objective(target, value, rng):
        return mi_single(post, Intervention(target, value), mi.c_o, mi.c_in, mi.m, rng, mi.entropy).value

    return objective


def ait_objective(post: PosteriorParticles, mi: MiSettings = MiSettings()) -> Objective:
    def objective(target, value, rng):
        return ait_score(post, target, mi.c_o, mi.m, rng, value=value).score

    return objective


def _node_streams(rng: np.random.Generator, d: int) -> list[np.random.Generator]:
    return rng.spawn(d)


def policy_random(
    d: int,
    batch_size: int,
    chooser: ValueChooser,
    rng: np.random.Generator,
    objective: Objective | None = None,
) -> DesignBatch:
    """Uniform targets with replacement; values from ``chooser``."""
    targets = rng.integers(0, d, size=batch_size)
    xis = tuple(Intervention(int(j), chooser.choose(int(j), objective, rng)) for j in targets)
    return DesignBatch(xis, (math.nan,) * batch_size)


def _all_traces(d, chooser, objective, rng) -> list[ValueTrace]:
    return [chooser.trace(j, objective, r) for j, r in zip(range(d), _node_streams(rng, d))]


def greedy_cbed(
    post: PosteriorParticles,
    batch_size: int,
    rng: np.random.Generator,
    chooser: ValueChooser | None = None,
    mi: MiSettings = MiSettings(),
) -> DesignBatch:
    """Build the batch one argmax at a time.

    Under the additive batch MI the increment of adding (j, v) does not
    depend on the designs already chosen, so each round re-runs the value
    search with fresh Monte Carlo draws and appends its best design.
    """
    chooser = chooser or ValueChooser()
    objective = mi_objective(post, mi)
    d = post.d
    xis, scores = [], []
    for _ in range(batch_size):
        traces = _all_traces(d, chooser, objective, rng)
        utilities = [max(tr.best[1], 0.0) for tr in traces]
        j = int(np.argmax(utilities))
        xis.append(Intervention(j, traces[j].best[0]))
        scores.append(utilities[j])
    return DesignBatch(tuple(xis), tuple(scores))


def cbed(
    post: PosteriorParticles,
    batch_size: int,
    rng: np.random.Generator,
    chooser: ValueChooser | None = None,
    mi: MiSettings = MiSettings(),
) -> DesignBatch:
    """Single best design repeated for the whole batch."""
    one = greedy_cbed(post, 1, rng, chooser, mi)
    return DesignBatch(one.interventions * batch_size, one.scores * batch_size)


def soft_topk_sample(pool: CandidatePool, batch_size: int, zeta: float, rng: np.random.Generator) -> DesignBatch:
    """Sequential sampling without replacement with P(entry) proportional to exp(utility / zeta).

    Negative utilities are clamped to zero first.
    """
    n = len(pool)
    if batch_size > n:
        raise InvalidArgumentError(f"batch size {batch_size} exceeds pool size {n}")
    if zeta <= 0:
        raise InvalidArgumentError("temperature must be positive")
    logits = np.array([max(u, 0.0) for _, _, u in pool.entries]) / zeta
    remaining = list(range(n))
    chosen = []
    for _ in range(batch_size):
        z = logits[remaining]
        p = np.exp(z - z.max())
        p /= p.sum()
        pick = remaining.pop(int(rng.choice(len(remaining), p=p)))
        chosen.append(pick)
    entries = [pool.entries[k] for k in chosen]
    return DesignBatch(tuple(Intervention(j, v) for j, v, _ in entries), tuple(u for _, _, u in entries))


def soft_cbed(
    post: PosteriorParticles,
    batch_size: int,
    rng: np.random.Generator,
    chooser: ValueChooser | None = None,
    zeta: float = 1.0,
    mi: MiSettings = MiSettings(),
) -> DesignBatch:
    chooser = chooser or ValueChooser()
    traces = _all_traces(post.d, chooser, mi_objective(post, mi), rng)
    return soft_topk_sample(CandidatePool.from_traces(traces), batch_size, zeta, rng)


def soft_ait(
    post: PosteriorParticles,
    batch_size: int,
    rng: np.random.Generator,
    chooser: ValueChooser | None = None,
    zeta: float = 1.0,
    mi: MiSettings = MiSettings(),
) -> DesignBatch:
    """Soft top-k over discrepancy scores; infinite (degenerate) scores are dropped."""
    chooser = chooser or ValueChooser(ValueStrategy.FIXED)
    traces = _all_traces(post.d, chooser, ait_objective(post, mi), rng)
    pool = CandidatePool.from_traces(traces)
    finite = CandidatePool(tuple(e for e in pool.entries if math.isfinite(e[2])))
    if not any(e[2] > 0 for e in finite.entries) or len(finite) < batch_size:
        log.warning("all discrepancy scores degenerate; sampling the pool uniformly")
        flat = CandidatePool(tuple((j, v, 0.0) for j, v, _ in pool.entries))
        return soft_topk_sample(flat, batch_size, 1.0, rng)
    return soft_topk_sample(finite, batch_size, zeta, rng)


def _run_random(post, batch_size, rng, chooser, zeta, mi):
    return policy_random(post.d, batch_size, chooser, rng, mi_objective(post, mi))


POLICIES: dict[str, Callable] = {
    "random": _run_random,
    "cbed": lambda post, b, rng, chooser, zeta, mi: cbed(post, b, rng, chooser, mi),
    "greedy-cbed": lambda post, b, rng, chooser, zeta, mi: greedy_cbed(post, b, rng, chooser, mi),
    "soft-cbed": soft_cbed,
    "soft-ait": soft_ait,
}
