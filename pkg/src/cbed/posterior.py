"""Particle posteriors over SCMs from mixed observational / interventional data.

Two constructions are provided:

* ``exact_posterior``: enumerate every DAG (d <= 5), score each with a
  closed-form marginal likelihood that drops intervened factors, and draw
  particles with parameters from the conjugate posterior.
* ``bootstrap_posterior``: regime-stratified bootstrap + greedy BIC
  hill-climbing, parameters fitted by least squares per replica.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import stats
from scipy.special import logsumexp, multigammaln

from .errors import InvalidArgumentError, UnsupportedScaleError
from .graphs import Dag, enumerate_dags
from .scm import (
    OBSERVATIONAL,
    Dataset,
    LinearMechanism,
    MechanismKind,
    RandomFeatureMechanism,
    Scm,
)

__all__ = [
    "Dataset",
    "PriorConfig",
    "PosteriorParticles",
    "ExactGraphPosterior",
    "exact_graph_posterior",
    "exact_posterior",
    "bootstrap_posterior",
    "hill_climb",
    "sample_particles",
]

MAX_EXACT_NODES = 5
MIN_NOISE_VAR = 1e-6


@dataclass(frozen=True)
class PriorConfig:
    """Prior / likelihood settings for the exact posterior.

    ``score="bge"`` uses the Normal-Wishart (BGe) marginal likelihood, which
    is score-equivalent, so Markov-equivalent DAGs tie on observational data.
    ``score="gaussian"`` uses Bayesian regression with a known noise
    variance ``noise_var`` and N(0, weight_var I) weights; this is the only
    score that supports ``mechanism="random_feature"`` (ridge regression on
    fixed random tanh features).
    """

    score: str = "bge"
    mechanism: MechanismKind = MechanismKind.LINEAR
    noise_var: float = 0.1
    weight_var: float = 1.0
    edge_penalty: float = 0.0
    n_features: int = 32
    feature_seed: int = 0
    alpha_mu: float = 1.0
    alpha_w: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "mechanism", MechanismKind(self.mechanism))
        if self.score not in ("bge", "gaussian"):
            raise InvalidArgumentError(f"unknown score {self.score!r}")
        if self.score == "bge" and self.mechanism is not MechanismKind.LINEAR:
            raise InvalidArgumentError("the BGe score is linear-Gaussian only")
        if self.noise_var <= 0 or self.weight_var <= 0 or self.edge_penalty < 0:
            raise InvalidArgumentError("noise_var, weight_var must be > 0 and edge_penalty >= 0")


@dataclass(frozen=True, eq=False)
class PosteriorParticles:
    particles: tuple
    weights: np.ndarray
    graph_posterior: "ExactGraphPosterior | None" = field(default=None, repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(self.particles) < 1:
            raise InvalidArgumentError("posterior needs at least one particle")
        if w.size != len(self.particles) or np.any(w < 0):
            raise InvalidArgumentError("one nonnegative weight per particle required")
        if abs(w.sum() - 1.0) > 1e-12:
            raise InvalidArgumentError("weights must sum to 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "particles", tuple(self.particles))

    @classmethod
    def uniform(cls, particles: Sequence[Scm], **kw) -> "PosteriorParticles":
        n = len(particles)
        return cls(tuple(particles), np.full(n, 1.0 / n), **kw)

    @property
    def dags(self) -> list[Dag]:
        return [p.dag for p in self.particles]

    @property
    def d(self) -> int:
        return self.particles[0].d

    def __len__(self) -> int:
        return len(self.particles)

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.weights == self.weights[0]))


def sample_particles(post: PosteriorParticles, c: int, rng: np.random.Generator) -> list[Scm]:
    """``c`` i.i.d. categorical draws from the particle weights."""
    if c < 1:
        raise InvalidArgumentError("c must be >= 1")
    idx = rng.choice(len(post.particles), size=c, p=post.weights)
    return [post.particles[i] for i in idx]


# ---------------------------------------------------------------------------
# local scores


def _mask_members(mask: int, d: int) -> list[int]:
    return [b for b in range(d) if mask >> b & 1]


class _BgeNode:
    """Normal-Wishart posterior statistics for one node's usable rows."""

    def __init__(self, x: np.ndarray, d: int, alpha_mu: float, alpha_w: float):
        self.n = x.shape[0]
        self.d = d
        self.alpha_mu = alpha_mu
        self.alpha_w = alpha_w
        self.t = alpha_mu * (alpha_w - d - 1) / (alpha_mu + 1)
        if self.n:
            xbar = x.mean(axis=0)
            centred = x - xbar
            scatter = centred.T @ centred
        else:
            xbar = np.zeros(d)
            scatter = np.zeros((d, d))
        shrink = self.n * alpha_mu / (self.n + alpha_mu)
        self.R = self.t * np.eye(d) + scatter + shrink * np.outer(xbar, xbar)
        self.mu_n = self.n * xbar / (self.n + alpha_mu)

    def log_marginal(self, members: list[int]) -> float:
        l = len(members)
        if l == 0:
            return 0.0
        n, a_w, d = self.n, self.alpha_w, self.d
        RY = self.R[np.ix_(members, members)]
        _, logdet = np.linalg.slogdet(RY)
        return (
            -0.5 * l * n * math.log(math.pi)
            + 0.5 * l * math.log(self.alpha_mu / (n + self.alpha_mu))
            + multigammaln(0.5 * (n + a_w - d + l), l)
            - multigammaln(0.5 * (a_w - d + l), l)
            + 0.5 * (a_w - d + l) * l * math.log(self.t)
            - 0.5 * (n + a_w - d + l) * logdet
        )

    def local_score(self, node: int, parents: list[int]) -> float:
        return self.log_marginal(sorted(parents + [node])) - self.log_marginal(parents)

    def draw(self, node: int, parents: list[int], rng: np.random.Generator) -> tuple[LinearMechanism, float]:
        fam = parents + [node]
        l = len(fam)
        df = self.alpha_w + self.n - self.d + l
        sigma = np.atleast_2d(stats.invwishart(df=df, scale=self.R[np.ix_(fam, fam)]).rvs(random_state=rng))
        mu = rng.multivariate_normal(self.mu_n[fam], sigma / (self.n + self.alpha_mu))
        p = len(parents)
        if p:
            s_pp = sigma[:p, :p]
            s_ip = sigma[p, :p]
            w = np.linalg.solve(s_pp, s_ip)
            var = sigma[p, p] - s_ip @ w
            bias = mu[p] - w @ mu[:p]
        else:
            w = np.zeros(0)
            var = sigma[0, 0]
            bias = mu[0]
        return LinearMechanism(w, bias), max(float(var), MIN_NOISE_VAR)


def _feature_map(prior: PriorConfig, node: int, parents: list[int]):
    """Fixed random tanh features for a (node, parent set); deterministic in the seed."""
    mask = sum(1 << p for p in parents)
    rng = np.random.default_rng([prior.feature_seed, node, mask])
    fw = rng.standard_normal((len(parents), prior.n_features))
    fb = rng.standard_normal(prior.n_features)
    return fw, fb


class _GaussianNode:
    """Conjugate regression with known noise variance for one node."""

    def __init__(self, x: np.ndarray, node: int, prior: PriorConfig):
        self.x = x
        self.y = x[:, node]
        self.node = node
        self.prior = prior
        self._cache: dict[tuple, tuple] = {}

    def _design(self, parents: list[int]):
        if self.prior.mechanism is MechanismKind.LINEAR:
            return self.x[:, parents], None
        fw, fb = _feature_map(self.prior, self.node, parents)
        return np.tanh(self.x[:, parents] @ fw + fb), (fw, fb)

    def _stats(self, parents: list[int]):
        key = tuple(parents)
        if key not in self._cache:
            phi, fmap = self._design(parents)
            s2, t2 = self.prior.noise_var, self.prior.weight_var
            n, p = phi.shape
            if p == 0:
                logml = -0.5 * (n * math.log(2 * math.pi * s2) + self.y @ self.y / s2)
                self._cache[key] = (logml, np.zeros(0), np.zeros((0, 0)), fmap)
            else:
                A = phi.T @ phi / s2 + np.eye(p) / t2
                L = np.linalg.cholesky(A)
                b = phi.T @ self.y / s2
                z = np.linalg.solve(L, b)
                logdet_c = n * math.log(s2) + p * math.log(t2) + 2 * np.log(np.diag(L)).sum()
                quad = self.y @ self.y / s2 - z @ z
                logml = -0.5 * (n * math.log(2 * math.pi) + logdet_c + quad)
                mean = np.linalg.solve(L.T, z)
                cov = np.linalg.inv(A)
                self._cache[key] = (logml, mean, cov, fmap)
        return self._cache[key]

    def local_score(self, node: int, parents: list[int]) -> float:
        return self._stats(parents)[0]

    def draw(self, node: int, parents: list[int], rng: np.random.Generator):
        _, mean, cov, fmap = self._stats(parents)
        if mean.size:
            w = rng.multivariate_normal(mean, cov)
        else:
            w = np.zeros(0)
        if fmap is None:
            return LinearMechanism(w), self.prior.noise_var
        fw, fb = fmap
        return RandomFeatureMechanism(fw, fb, w), self.prior.noise_var


def _node_models(data: Dataset, prior: PriorConfig):
    d = data.d
    alpha_w = prior.alpha_w if prior.alpha_w is not None else d + 2.0
    models = []
    for i in range(d):
        rows = data.values[data.not_intervened(i)]
        if prior.score == "bge":
            models.append(_BgeNode(rows, d, prior.alpha_mu, alpha_w))
        else:
            models.append(_GaussianNode(rows, i, prior))
    return models


# ---------------------------------------------------------------------------
# exact enumeration


@lru_cache(maxsize=8)
def _parent_masks(d: int) -> np.ndarray:
    dags = enumerate_dags(d)
    masks = np.zeros((len(dags), d), dtype=np.int64)
    for k, g in enumerate(dags):
        for j, pa in enumerate(g.parents):
            masks[k, j] = sum(1 << p for p in pa)
    return masks


@dataclass(frozen=True, eq=False)
class ExactGraphPosterior:
    """Normalized posterior over all DAGs on ``d`` nodes."""

    dags: tuple
    log_probs: np.ndarray
    models: list = field(repr=False, default_factory=list)

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_probs)

    def prob_of(self, g: Dag) -> float:
        return float(self.weights[self.dags.index(g)])

    def draw_particles(self, n: int, rng: np.random.Generator) -> list[Scm]:
        idx = rng.choice(len(self.dags), size=n, p=self.weights / self.weights.sum())
        out = []
        for k in idx:
            g = self.dags[k]
            mechs, nvs = [], []
            for j in range(g.d):
                mech, nv = self.models[j].draw(j, list(g.parents[j]), rng)
                mechs.append(mech)
                nvs.append(nv)
            out.append(Scm(g, tuple(mechs), np.array(nvs)))
        return out


def exact_graph_posterior(data: Dataset, prior: PriorConfig = PriorConfig()) -> ExactGraphPosterior:
    d = data.d
    if d > MAX_EXACT_NODES:
        raise UnsupportedScaleError(f"exact enumeration supports d <= {MAX_EXACT_NODES}, got {d}")
    models = _node_models(data, prior)
    table = np.full((d, 1 << d), -np.inf)
    for j in range(d):
        for mask in range(1 << d):
            if mask >> j & 1:
                continue
            table[j, mask] = models[j].local_score(j, _mask_members(mask, d))
    masks = _parent_masks(d)
    log_post = table[np.arange(d), masks].sum(axis=1)
    if prior.edge_penalty:
        n_edges = np.array([len(g) for g in enumerate_dags(d)])
        log_post = log_post - prior.edge_penalty * n_edges
    log_post = log_post - logsumexp(log_post)
    return ExactGraphPosterior(enumerate_dags(d), log_post, models)


def exact_posterior(
    data: Dataset,
    prior: PriorConfig = PriorConfig(),
    rng: np.random.Generator | None = None,
    n_particles: int = 20,
) -> PosteriorParticles:
    """Enumerate every DAG, then draw ``n_particles`` SCMs from the posterior."""
    rng = np.random.default_rng() if rng is None else rng
    gp = exact_graph_posterior(data, prior)
    return PosteriorParticles.uniform(gp.draw_particles(n_particles, rng), graph_posterior=gp)


# ---------------------------------------------------------------------------
# bootstrap + hill climbing


class _BicScorer:
    def __init__(self, data: Dataset):
        self.values = data.values
        self.targets = data.targets
        self.cache: dict[tuple[int, tuple[int, ...]], float] = {}

    def fit(self, node: int, parents: tuple[int, ...]):
        rows = self.targets != node
        y = self.values[rows, node]
        n = y.size
        X = np.column_stack([np.ones(n), self.values[rows][:, list(parents)]])
        if n == 0:
            return np.zeros(len(parents)), 0.0, 1.0, 0
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        rss = float(np.sum((y - X @ coef) ** 2))
        var = max(rss / n, MIN_NOISE_VAR)
        return coef[1:], float(coef[0]), var, n

    def local(self, node: int, parents: tuple[int, ...]) -> float:
        key = (node, parents)
        if key not in self.cache:
            coef, bias, var, n = self.fit(node, parents)
            if n == 0:
                self.cache[key] = 0.0
            else:
                rows = self.targets != node
                X = self.values[rows][:, list(parents)]
                resid = self.values[rows, node] - (X @ coef + bias)
                ll = -0.5 * n * math.log(2 * math.pi * var) - 0.5 * float(resid @ resid) / var
                self.cache[key] = ll - 0.5 * (len(parents) + 2) * math.log(n)
        return self.cache[key]


def _reaches(adj: np.ndarray, src: int, dst: int) -> bool:
    stack, seen = [src], {src}
    while stack:
        u = stack.pop()
        if u == dst:
            return True
        for v in np.flatnonzero(adj[u]):
            if v not in seen:
                seen.add(int(v))
                stack.append(int(v))
    return False


def _parents_of(adj: np.ndarray, j: int) -> tuple[int, ...]:
    return tuple(np.flatnonzero(adj[:, j]).tolist())


def _climb(adj: np.ndarray, scorer: _BicScorer) -> tuple[np.ndarray, float]:
    d = adj.shape[0]
    local = [scorer.local(j, _parents_of(adj, j)) for j in range(d)]
    pairs = [(i, j) for i in range(d) for j in range(d) if i != j]
    improved = True
    while improved:
        improved = False
        # operators in fixed order 0=add, 1=delete, 2=reverse; edges lexicographic
        for op in range(3):
            for i, j in pairs:
                if op == 0:
                    if adj[i, j] or adj[j, i] or _reaches(adj, j, i):
                        continue
                    new_pa = tuple(sorted(_parents_of(adj, j) + (i,)))
                    delta = scorer.local(j, new_pa) - local[j]
                    if delta > 1e-10:
                        adj[i, j] = 1
                        local[j] = scorer.local(j, new_pa)
                        improved = True
                elif op == 1:
                    if not adj[i, j]:
                        continue
                    new_pa = tuple(p for p in _parents_of(adj, j) if p != i)
                    delta = scorer.local(j, new_pa) - local[j]
                    if delta > 1e-10:
                        adj[i, j] = 0
                        local[j] = scorer.local(j, new_pa)
                        improved = True
                else:
                    if not adj[i, j]:
                        continue
                    adj[i, j] = 0
                    if _reaches(adj, i, j):
                        adj[i, j] = 1
                        continue
                    pa_j = _parents_of(adj, j)
                    pa_i = tuple(sorted(_parents_of(adj, i) + (j,)))
                    new_j, new_i = scorer.local(j, pa_j), scorer.local(i, pa_i)
                    delta = new_j + new_i - local[j] - local[i]
                    if delta > 1e-10:
                        adj[j, i] = 1
                        local[j], local[i] = new_j, new_i
                        improved = True
                    else:
                        adj[i, j] = 1
                if improved:
                    break
            if improved:
                break
    return adj, float(sum(local))


def _random_start(d: int, rng: np.random.Generator) -> np.ndarray:
    perm = rng.permutation(d)
    adj = np.zeros((d, d), dtype=np.int8)
    p = min(1.0, 2.0 / max(d - 1, 1))
    for a in range(d):
        for b in range(a + 1, d):
            if rng.random() < p:
                adj[perm[a], perm[b]] = 1
    return adj


def hill_climb(data: Dataset, rng: np.random.Generator, restarts: int = 3) -> Dag:
    """Greedy BIC search over DAGs with add / delete / reverse moves.

    The first start is the empty graph and the remaining ``restarts - 1``
    start from random DAGs; the best final score wins (earliest on ties).
    """
    d = data.d
    scorer = _BicScorer(data)
    best_adj, best_score = None, -np.inf
    for r in range(max(1, restarts)):
        start = np.zeros((d, d), dtype=np.int8) if r == 0 else _random_start(d, rng)
        adj, score = _climb(start, scorer)
        if score > best_score + 1e-10:
            best_adj, best_score = adj.copy(), score
    return Dag.from_adjacency(best_adj)


def fit_linear_scm(g: Dag, data: Dataset) -> Scm:
    """Least-squares mechanisms with intercepts; residual variance floored at 1e-6."""
    scorer = _BicScorer(data)
    mechs, nvs = [], []
    for j in range(g.d):
        coef, bias, var, _ = scorer.fit(j, g.parents[j])
        mechs.append(LinearMechanism(coef, bias))
        nvs.append(var)
    return Scm(g, tuple(mechs), np.array(nvs))


def _stratified_resample(data: Dataset, rng: np.random.Generator) -> Dataset:
    rows = []
    for t in np.unique(data.targets):
        members = np.flatnonzero(data.targets == t)
        rows.append(rng.choice(members, size=members.size, replace=True))
    return data.subset(np.concatenate(rows))


def bootstrap_posterior(
    data: Dataset, n_particles: int, rng: np.random.Generator, restarts: int = 3
) -> PosteriorParticles:
    if len(data) == 0:
        raise InvalidArgumentError("bootstrap posterior needs data")
    if n_particles < 1:
        raise InvalidArgumentError("n_particles must be >= 1")
    particles = []
    for _ in range(n_particles):
        resampled = _stratified_resample(data, rng)
        g = hill_climb(resampled, rng, restarts=restarts)
        particles.append(fit_linear_scm(g, resampled))
    return PosteriorParticles.uniform(particles)
