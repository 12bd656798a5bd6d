"""Mutual-information estimators over intervention outcomes.

All estimators share one outcome-drawing routine so that, given the same
random stream, they see identical particles and identical outcomes.
Likelihoods are aggregated in log space throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from .errors import InvalidArgumentError
from .posterior import PosteriorParticles, sample_particles
from .scm import Intervention, Scm, sample_with_noise

__all__ = [
    "MiEstimate",
    "AitScore",
    "select_particles",
    "draw_outcomes",
    "cross_log_likelihood",
    "marginal_entropy_mc",
    "marginal_entropy_lb",
    "conditional_entropy_mc",
    "mi_single",
    "mi_batch",
    "mi_wis",
    "ait_outcomes",
    "discrepancy",
    "ait_score",
]


@dataclass(frozen=True)
class MiEstimate:
    value: float
    n_outer: int
    n_inner: int
    n_samples_per_particle: int
    marginal_entropy: float = math.nan
    conditional_entropy: float = math.nan
    terms: tuple = ()

    def __post_init__(self):
        if min(self.n_outer, self.n_inner, self.n_samples_per_particle) < 1:
            raise InvalidArgumentError("estimator sizes must be >= 1")

    @property
    def score(self) -> float:
        """Value clamped at zero, as used for selection."""
        return max(self.value, 0.0)


class AitScore(NamedTuple):
    score: float
    between: float
    within: float
    degenerate: bool


def _full_list(post: PosteriorParticles, c: int | None) -> bool:
    return c is None or (c == len(post) and post.is_uniform)


def select_particles(post: PosteriorParticles, c: int | None, rng: np.random.Generator) -> list[Scm]:
    """``c`` draws from the posterior.

    A uniform posterior already is an equally weighted sample, so ``c=None``
    or ``c`` equal to its size returns the particle list itself; otherwise
    (and for any weighted posterior) ``c`` categorical draws are made.
    """
    if _full_list(post, c):
        if post.is_uniform:
            return list(post.particles)
        c = len(post)
    return sample_particles(post, c, rng)


def draw_outcomes(particles: Sequence[Scm], xi: Intervention, m: int, rng: np.random.Generator) -> np.ndarray:
    """Outcomes y[i, k] ~ p(y | particle i, do(xi)); shape (c, m, d)."""
    if m < 1:
        raise InvalidArgumentError("m must be >= 1")
    d = particles[0].d
    eps = rng.standard_normal((len(particles), m, d))
    return np.stack([sample_with_noise(p, xi, eps[i]) for i, p in enumerate(particles)])


def cross_log_likelihood(y: np.ndarray, inner: Sequence[Scm], xi: Intervention) -> np.ndarray:
    """ll[i, k, l] = log p(y[i, k] | inner[l], do(xi))."""
    c_o, m, d = y.shape
    flat = y.reshape(-1, d)
    cols = [p.log_prob(flat, xi.target).reshape(c_o, m) for p in inner]
    return np.stack(cols, axis=-1)


def _log_mean_exp(ll: np.ndarray) -> np.ndarray:
    top = ll.max(axis=-1, keepdims=True)
    safe = np.where(np.isfinite(top), top, 0.0)
    out = safe + np.log(np.mean(np.exp(ll - safe), axis=-1, keepdims=True))
    return out[..., 0]


def _own_log_likelihood(y, outer, inner, ll_cross, xi) -> np.ndarray:
    if inner is outer:
        c = len(outer)
        return ll_cross[np.arange(c), :, np.arange(c)]
    return np.stack([p.log_prob(y[i], xi.target) for i, p in enumerate(outer)])


def _marginal_from(ll_cross: np.ndarray) -> float:
    return -float(np.mean(_log_mean_exp(ll_cross)))


def _marginal_lb_from(ll_cross: np.ndarray) -> float:
    return -float(np.mean(ll_cross))


def _conditional_from(ll_own: np.ndarray) -> float:
    return -float(np.mean(ll_own))


def marginal_entropy_mc(
    particles: Sequence[Scm],
    xi: Intervention,
    m: int,
    rng: np.random.Generator,
    inner: Sequence[Scm] | None = None,
) -> float:
    """Nested Monte Carlo estimate of H(Y | xi, D); ``inner`` defaults to ``particles``."""
    inner = particles if inner is None else inner
    y = draw_outcomes(particles, xi, m, rng)
    return _marginal_from(cross_log_likelihood(y, inner, xi))


def marginal_entropy_lb(
    particles: Sequence[Scm],
    xi: Intervention,
    m: int,
    rng: np.random.Generator,
    inner: Sequence[Scm] | None = None,
) -> float:
    """Jensen-bound variant: average of -log p over every (outer draw, inner particle) pair."""
    inner = particles if inner is None else inner
    y = draw_outcomes(particles, xi, m, rng)
    return _marginal_lb_from(cross_log_likelihood(y, inner, xi))


def conditional_entropy_mc(particles: Sequence[Scm], xi: Intervention, m: int, rng: np.random.Generator) -> float:
    """Each outcome is scored under the particle that generated it."""
    y = draw_outcomes(particles, xi, m, rng)
    ll = np.stack([p.log_prob(y[i], xi.target) for i, p in enumerate(particles)])
    return _conditional_from(ll)


def mi_single(
    post: PosteriorParticles,
    xi: Intervention,
    c_o: int | None = None,
    c_in: int | None = None,
    m: int = 32,
    rng: np.random.Generator | None = None,
    entropy: str = "mc",
) -> MiEstimate:
    """I(Y; Phi | xi, D) as marginal minus conditional outcome entropy.

    ``c_o`` / ``c_in`` of None use the full particle list for that role.
    The outer particles double as the inner set when ``c_in`` is None or
    both roles resolve to the full list of a uniform posterior.  The raw
    estimate can dip below zero from Monte Carlo noise and is not clamped.
    """
    rng = np.random.default_rng() if rng is None else rng
    outer = select_particles(post, c_o, rng)
    if c_in is None or (_full_list(post, c_o) and _full_list(post, c_in) and post.is_uniform):
        inner = outer
    else:
        inner = sample_particles(post, c_in, rng)
    y = draw_outcomes(outer, xi, m, rng)
    ll = cross_log_likelihood(y, inner, xi)
    own = _own_log_likelihood(y, outer, inner, ll, xi)
    if entropy == "mc":
        h_marg = _marginal_from(ll)
    elif entropy == "lb":
        h_marg = _marginal_lb_from(ll)
    else:
        raise InvalidArgumentError(f"unknown entropy estimator {entropy!r}")
    h_cond = _conditional_from(own)
    return MiEstimate(h_marg - h_cond, len(outer), len(inner), m, h_marg, h_cond)


def mi_batch(
    post: PosteriorParticles,
    batch,
    c_o: int | None = None,
    c_in: int | None = None,
    m: int = 32,
    rng: np.random.Generator | None = None,
    entropy: str = "mc",
) -> MiEstimate:
    """Additive batch MI: one ``mi_single`` per design, consuming ``rng`` in batch order."""
    rng = np.random.default_rng() if rng is None else rng
    designs = list(getattr(batch, "interventions", batch))
    if not designs:
        raise InvalidArgumentError("batch must be non-empty")
    terms = tuple(mi_single(post, xi, c_o, c_in, m, rng, entropy) for xi in designs)
    total = math.fsum(t.value for t in terms)
    first = terms[0]
    return MiEstimate(total, first.n_outer, first.n_inner, m, terms=terms)


def _gaussian_log_weights(y: np.ndarray, particles: Sequence[Scm], target: int) -> np.ndarray:
    # independent density path: scipy.stats over the free coordinates
    c_o, m, d = y.shape
    flat = y.reshape(-1, d)
    free = [i for i in range(d) if i != target]
    out = np.empty((c_o * m, len(particles)))
    for l, p in enumerate(particles):
        means = p.node_means(flat)
        out[:, l] = stats.norm.logpdf(flat[:, free], loc=means[:, free], scale=np.sqrt(p.noise_vars[free])).sum(axis=1)
    return out.reshape(c_o, m, len(particles))


def mi_wis(
    post: PosteriorParticles,
    xi: Intervention,
    c_o: int | None = None,
    m: int = 32,
    rng: np.random.Generator | None = None,
) -> MiEstimate:
    """Weighted-importance-sampling form with weights w(phi) = p(y | phi, xi).

    mean_i E_y[log w(phi_i)] - E_y[log mean_l w(phi_l)], expectations
    replaced by the outcome draws of each outer particle.
    """
    rng = np.random.default_rng() if rng is None else rng
    particles = select_particles(post, c_o, rng)
    y = draw_outcomes(particles, xi, m, rng)
    logw = _gaussian_log_weights(y, particles, xi.target)
    c = len(particles)
    self_term = np.mean([np.mean(logw[i, :, i]) for i in range(c)])
    evidence = np.mean(logsumexp(logw, axis=-1) - math.log(c))
    return MiEstimate(float(self_term - evidence), c, c, m)


def ait_outcomes(
    post: PosteriorParticles,
    target: int,
    value: float = 0.0,
    c_o: int | None = None,
    m: int = 32,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Outcomes under do(X_target = value) with noise shared across graphs; shape (c, m, d)."""
    rng = np.random.default_rng() if rng is None else rng
    graphs = select_particles(post, c_o, rng)
    xi = Intervention(target, value)
    eps = rng.standard_normal((m, graphs[0].d))
    return np.stack([sample_with_noise(g, xi, eps) for g in graphs])


def discrepancy(y: np.ndarray, target: int) -> AitScore:
    """Between-graph over within-graph sum of squares, pooled over free coordinates."""
    free = [i for i in range(y.shape[2]) if i != target]
    block = y[:, :, free]
    graph_means = block.mean(axis=1)
    grand = graph_means.mean(axis=0)
    between = float(np.sum((graph_means - grand) ** 2))
    within = float(np.sum((block - graph_means[:, None, :]) ** 2))
    if within <= 0.0:
        return AitScore(math.inf, between, within, True)
    return AitScore(between / within, between, within, False)


def ait_score(
    post: PosteriorParticles,
    target: int,
    c_o: int | None = None,
    m: int = 32,
    rng: np.random.Generator | None = None,
    value: float = 0.0,
) -> AitScore:
    return discrepancy(ait_outcomes(post, target, value, c_o, m, rng), target)
