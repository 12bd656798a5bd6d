"""One-dimensional GP-UCB over the intervention value of a fixed target."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import cho_solve, cholesky

from .errors import InvalidArgumentError, NumericalDegeneracyError
from .infogain import mi_single
from .posterior import PosteriorParticles
from .scm import Intervention

__all__ = [
    "matern52",
    "GpSurrogate",
    "SearchDomain",
    "gp_predict",
    "ucb_select",
    "optimize_value",
    "ValueTrace",
    "mi_sweep",
]

Objective = Callable[[int, float, np.random.Generator], float]


def matern52(a, b, length_scale: float = 1.0) -> np.ndarray:
    r = np.abs(np.subtract.outer(np.asarray(a, float), np.asarray(b, float))) / length_scale
    s = math.sqrt(5.0) * r
    return (1.0 + s + s * s / 3.0) * np.exp(-s)


@dataclass
class GpSurrogate:
    """Zero-mean GP with a Matern(nu=5/2) kernel and the (K + I) predictive.

    ``jitter`` is added to k(x, x') when x == x', both inside K and for
    test points that coincide with a queried point.
    """

    queried_points: list = field(default_factory=list)
    observed_utilities: list = field(default_factory=list)
    length_scale: float = 1.0
    jitter: float = 1e-6

    def kernel(self, a, b) -> np.ndarray:
        a = np.atleast_1d(np.asarray(a, float))
        b = np.atleast_1d(np.asarray(b, float))
        return matern52(a, b, self.length_scale) + self.jitter * (a[:, None] == b[None, :])

    def add(self, v: float, u: float) -> None:
        self.queried_points.append(float(v))
        self.observed_utilities.append(float(u))

    def __len__(self) -> int:
        return len(self.queried_points)


def gp_predict(gp: GpSurrogate, v) -> tuple[np.ndarray, np.ndarray]:
    """Predictive mean and variance at ``v`` (scalar or array)."""
    v = np.atleast_1d(np.asarray(v, float))
    # Matern at zero distance is 1, plus the coincident-point jitter
    prior_var = np.full(v.shape, 1.0 + gp.jitter)
    if len(gp) == 0:
        return np.zeros_like(v), np.asarray(prior_var, float)
    x = np.asarray(gp.queried_points)
    u = np.asarray(gp.observed_utilities)
    A = gp.kernel(x, x) + np.eye(x.size)
    try:
        L = cholesky(A, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalDegeneracyError("Cholesky of K + I failed") from exc
    ks = gp.kernel(x, v)
    mean = ks.T @ cho_solve((L, True), u)
    var = prior_var - np.sum(ks * cho_solve((L, True), ks), axis=0)
    return mean, var


@dataclass(frozen=True)
class SearchDomain:
    bound: float = 5.0

    def __post_init__(self):
        if not self.bound > 0:
            raise InvalidArgumentError("domain bound must be positive")

    def grid(self, n: int = 256) -> np.ndarray:
        """Cell midpoints, so every candidate lies strictly inside [-k, k]."""
        k = self.bound
        return -k + (np.arange(n) + 0.5) * (2 * k / n)

    def __contains__(self, v) -> bool:
        return -self.bound <= v <= self.bound


def ucb_select(gp: GpSurrogate, beta: float, grid) -> float:
    """argmax of mean + sqrt(beta) * sd over ``grid``; the first (smallest) grid point wins ties."""
    grid = np.asarray(grid, float)
    if grid.size == 0:
        raise InvalidArgumentError("empty candidate grid")
    if beta <= 0:
        raise InvalidArgumentError("beta must be positive")
    mean, var = gp_predict(gp, grid)
    ucb = mean + math.sqrt(beta) * np.sqrt(np.maximum(var, 0.0))
    return float(grid[int(np.argmax(ucb))])


@dataclass(frozen=True)
class ValueTrace:
    target: int
    trace: tuple
    best: tuple


def _standardized(u: np.ndarray) -> np.ndarray:
    return (u - u.mean()) / max(float(u.std()), 1e-8)


def optimize_value(
    post: PosteriorParticles | None,
    target: int,
    domain: SearchDomain,
    T: int,
    rng: np.random.Generator,
    *,
    beta: float = 2.0,
    grid_size: int = 256,
    objective: Objective | None = None,
    c_o: int | None = None,
    c_in: int | None = None,
    m: int = 32,
) -> ValueTrace:
    """Run ``T`` GP-UCB steps on the target's utility curve.

    The utility defaults to ``mi_single`` on ``post``; any callable
    ``objective(target, value, rng)`` may be substituted.  The GP is fitted
    to standardized utilities while the trace keeps the raw values.
    """
    if T < 1:
        raise InvalidArgumentError("T must be >= 1")
    if objective is None:
        if post is None:
            raise InvalidArgumentError("need a posterior or an objective")

        def objective(j, v, r):
            return mi_single(post, Intervention(j, v), c_o, c_in, m, r).value

    grid = domain.grid(grid_size)
    trace = []
    gp = GpSurrogate()
    for _ in range(T):
        v = ucb_select(gp, beta, grid)
        u = float(objective(target, v, rng))
        trace.append((v, u))
        fin = [(a, b) for a, b in trace if math.isfinite(b)]
        gp = GpSurrogate()
        if fin:
            xs, us = zip(*fin)
            for a, b in zip(xs, _standardized(np.asarray(us))):
                gp.add(a, b)
        _, var = gp_predict(gp, grid)
        assert np.all(var >= 0.0), "negative predictive variance"
    best = trace[int(np.argmax([u for _, u in trace]))]
    return ValueTrace(target, tuple(trace), best)


def mi_sweep(
    post: PosteriorParticles,
    target: int,
    grid,
    rng: np.random.Generator,
    c_o: int | None = None,
    c_in: int | None = None,
    m: int = 32,
) -> list[tuple[int, float, float]]:
    return [(target, float(v), mi_single(post, Intervention(target, v), c_o, c_in, m, rng).value) for v in grid]
