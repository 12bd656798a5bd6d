"""Posterior-quality metrics against a known true graph."""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata

from .errors import InvalidArgumentError, UndefinedMetricError
from .graphs import Dag

__all__ = ["shd", "expected_shd", "edge_marginals", "auroc", "auprc"]


def shd(g: Dag, truth: Dag) -> int:
    """Insertions + deletions + reversals, with a reversal counting as one edit."""
    if g.d != truth.d:
        raise InvalidArgumentError(f"dimension mismatch: {g.d} vs {truth.d}")
    a = g.adjacency.astype(bool)
    b = truth.adjacency.astype(bool)
    # collapse each unordered pair to a single comparison
    diff = (a != b) | (a.T != b.T)
    return int(np.triu(diff, 1).sum())


def _graph_distribution(post):
    """(dags, weights) from either particles or an exact graph posterior."""
    exact = getattr(post, "graph_posterior", None)
    src = exact if exact is not None else post
    return src.dags, np.asarray(src.weights, float)


def expected_shd(post, truth: Dag) -> float:
    dags, w = _graph_distribution(post)
    return float(sum(wi * shd(g, truth) for g, wi in zip(dags, w) if wi > 0))


def edge_marginals(post) -> np.ndarray:
    dags, w = _graph_distribution(post)
    d = dags[0].d
    p = np.zeros((d, d))
    for g, wi in zip(dags, w):
        p += wi * g.adjacency
    np.fill_diagonal(p, 0.0)
    return np.clip(p, 0.0, 1.0)


def _slots(marginals, truth: Dag) -> tuple[np.ndarray, np.ndarray]:
    m = np.asarray(marginals, float)
    if m.shape != (truth.d, truth.d):
        raise InvalidArgumentError(f"marginals shape {m.shape} does not match d={truth.d}")
    off = ~np.eye(truth.d, dtype=bool)
    return m[off], truth.adjacency.astype(bool)[off]


def _auroc(scores: np.ndarray, labels: np.ndarray) -> float:
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUROC needs both present and absent edges")
    ranks = rankdata(scores)
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


def _auprc(scores: np.ndarray, labels: np.ndarray) -> float:
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise UndefinedMetricError("AUPRC needs at least one true edge")
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], labels[order]
    tp = np.cumsum(y)
    # evaluate only at the last index of each run of tied scores
    last = np.r_[s[1:] != s[:-1], True]
    tp, k = tp[last], np.flatnonzero(last) + 1
    precision = tp / k
    recall_step = np.diff(np.r_[0, tp]) / n_pos
    return float(np.sum(recall_step * precision))


def auroc(marginals, truth: Dag) -> float:
    return _auroc(*_slots(marginals, truth))


def auprc(marginals, truth: Dag) -> float:
    return _auprc(*_slots(marginals, truth))
