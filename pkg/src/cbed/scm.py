"""Additive-Gaussian-noise SCMs: mechanisms, ancestral sampling, likelihoods."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

import numpy as np

from .errors import InvalidArgumentError
from .graphs import Dag, GraphFamily, generate_dag

__all__ = [
    "MechanismKind",
    "LinearMechanism",
    "RandomFeatureMechanism",
    "Scm",
    "Intervention",
    "Sample",
    "Dataset",
    "sample",
    "sample_with_noise",
    "log_likelihood",
    "generate_ground_truth",
    "scm_to_json",
    "scm_from_json",
]

LOG_2PI = math.log(2.0 * math.pi)
OBSERVATIONAL = -1


class MechanismKind(str, enum.Enum):
    LINEAR = "linear"
    RANDOM_FEATURE = "random_feature"


@dataclass(frozen=True, eq=False)
class LinearMechanism:
    """f(x_pa) = weights . x_pa + bias."""

    weights: np.ndarray
    bias: float = 0.0

    kind = MechanismKind.LINEAR

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))

    @property
    def n_parents(self) -> int:
        return self.weights.size

    def mean(self, xpa: np.ndarray) -> np.ndarray:
        if self.weights.size == 0:
            return np.full(xpa.shape[0], self.bias)
        return xpa @ self.weights + self.bias


@dataclass(frozen=True, eq=False)
class RandomFeatureMechanism:
    """f(x_pa) = output_weights . tanh(x_pa @ feature_weights + feature_bias).

    ``feature_weights`` has shape (parents, n_features); for a root it is
    (0, n_features) and the mean is the constant readout of tanh(bias).
    """

    feature_weights: np.ndarray
    feature_bias: np.ndarray
    output_weights: np.ndarray

    kind = MechanismKind.RANDOM_FEATURE

    def __post_init__(self):
        fb = np.asarray(self.feature_bias, dtype=float).reshape(-1)
        fw = np.asarray(self.feature_weights, dtype=float).reshape(-1, fb.size)
        ow = np.asarray(self.output_weights, dtype=float).reshape(-1)
        if fb.size < 1:
            raise InvalidArgumentError("random-feature mechanism needs n_features >= 1")
        if ow.size != fb.size:
            raise InvalidArgumentError("output_weights must match n_features")
        for a in (fw, fb, ow):
            a.setflags(write=False)
        object.__setattr__(self, "feature_weights", fw)
        object.__setattr__(self, "feature_bias", fb)
        object.__setattr__(self, "output_weights", ow)

    @property
    def n_parents(self) -> int:
        return self.feature_weights.shape[0]

    @property
    def n_features(self) -> int:
        return self.feature_bias.size

    def features(self, xpa: np.ndarray) -> np.ndarray:
        return np.tanh(xpa @ self.feature_weights + self.feature_bias)

    def mean(self, xpa: np.ndarray) -> np.ndarray:
        return self.features(xpa) @ self.output_weights


Mechanism = Union[LinearMechanism, RandomFeatureMechanism]


@dataclass(frozen=True)
class Intervention:
    """Perfect atomic intervention do(X_target = value)."""

    target: int
    value: float

    def __post_init__(self):
        object.__setattr__(self, "target", int(self.target))
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True, eq=False)
class Scm:
    dag: Dag
    mechanisms: tuple
    noise_vars: np.ndarray

    def __post_init__(self):
        nv = np.asarray(self.noise_vars, dtype=float).reshape(-1)
        d = self.dag.node_count
        if nv.size != d or len(self.mechanisms) != d:
            raise InvalidArgumentError("need one mechanism and one noise variance per node")
        if not np.all(nv > 0):
            raise InvalidArgumentError("noise variances must be positive")
        for i, mech in enumerate(self.mechanisms):
            if mech.n_parents != len(self.dag.parents[i]):
                raise InvalidArgumentError(f"mechanism {i} does not match its parent set")
        nv.setflags(write=False)
        object.__setattr__(self, "noise_vars", nv)
        object.__setattr__(self, "mechanisms", tuple(self.mechanisms))

    @property
    def d(self) -> int:
        return self.dag.node_count

    def node_mean(self, i: int, x: np.ndarray) -> np.ndarray:
        return self.mechanisms[i].mean(x[:, list(self.dag.parents[i])])

    def node_means(self, x: np.ndarray) -> np.ndarray:
        """Conditional means f_i(x_pa(i)) for every row of ``x`` and node."""
        x = np.atleast_2d(x)
        return np.stack([self.node_mean(i, x) for i in range(self.d)], axis=1)

    def log_prob(self, x: np.ndarray, target: int = OBSERVATIONAL) -> np.ndarray:
        """Row-wise log density of ``x`` under the (possibly intervened) SCM."""
        x = np.atleast_2d(x)
        resid = x - self.node_means(x)
        terms = -0.5 * (LOG_2PI + np.log(self.noise_vars) + resid**2 / self.noise_vars)
        if target != OBSERVATIONAL:
            terms[:, target] = 0.0
        return terms.sum(axis=1)

    def linear_weight_matrix(self) -> np.ndarray:
        """Dense W with W[i, j] the weight of edge i -> j (linear SCMs only)."""
        W = np.zeros((self.d, self.d))
        for j, mech in enumerate(self.mechanisms):
            if mech.kind is not MechanismKind.LINEAR:
                raise TypeError("weight matrix is only defined for linear mechanisms")
            W[list(self.dag.parents[j]), j] = mech.weights
        return W


@dataclass(frozen=True, eq=False)
class Sample:
    values: np.ndarray
    intervention: Intervention | None = None

    @property
    def is_observational(self) -> bool:
        return self.intervention is None


class Dataset:
    """Rows of samples with their regime.

    ``targets[r]`` is the intervened node of row ``r`` or -1 for an
    observational row; the intervention value is ``values[r, targets[r]]``.
    """

    def __init__(self, values=None, targets=None, d: int | None = None):
        if values is None:
            if d is None:
                raise InvalidArgumentError("empty Dataset needs d")
            values = np.zeros((0, d))
        values = np.atleast_2d(np.asarray(values, dtype=float))
        if targets is None:
            targets = np.full(values.shape[0], OBSERVATIONAL, dtype=int)
        targets = np.asarray(targets, dtype=int).reshape(-1)
        if targets.size != values.shape[0]:
            raise InvalidArgumentError("one target per row required")
        if d is not None and values.shape[1] != d:
            raise InvalidArgumentError("dimension mismatch")
        self.values = values
        self.targets = targets

    @classmethod
    def from_samples(cls, samples: Sequence[Sample], d: int | None = None) -> "Dataset":
        if not samples:
            return cls(d=d)
        vals = np.stack([np.asarray(s.values, dtype=float) for s in samples])
        tg = [OBSERVATIONAL if s.intervention is None else s.intervention.target for s in samples]
        return cls(vals, tg)

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, r: int) -> Sample:
        t = int(self.targets[r])
        iv = None if t == OBSERVATIONAL else Intervention(t, self.values[r, t])
        return Sample(self.values[r].copy(), iv)

    def __iter__(self) -> Iterator[Sample]:
        for r in range(len(self)):
            yield self[r]

    def concat(self, other: "Dataset") -> "Dataset":
        if other.d != self.d:
            raise InvalidArgumentError("dimension mismatch")
        return Dataset(np.vstack([self.values, other.values]), np.concatenate([self.targets, other.targets]))

    def subset(self, rows) -> "Dataset":
        return Dataset(self.values[rows], self.targets[rows], d=self.d)

    def observational(self) -> "Dataset":
        return self.subset(self.targets == OBSERVATIONAL)

    def n_interventional(self) -> int:
        return int(np.count_nonzero(self.targets != OBSERVATIONAL))

    def not_intervened(self, node: int) -> np.ndarray:
        """Boolean row mask of samples in which ``node`` was not clamped."""
        return self.targets != node


def _regime_target(regime) -> tuple[int, float]:
    if regime is None:
        return OBSERVATIONAL, 0.0
    return regime.target, regime.value


def sample_with_noise(scm: Scm, regime: Intervention | None, eps: np.ndarray) -> np.ndarray:
    """Ancestral sampling from standard-normal noise ``eps`` of shape (n, d)."""
    target, value = _regime_target(regime)
    if target != OBSERVATIONAL and not 0 <= target < scm.d:
        raise InvalidArgumentError(f"intervention target {target} out of range")
    eps = np.atleast_2d(eps)
    x = np.zeros_like(eps, dtype=float)
    sd = np.sqrt(scm.noise_vars)
    for i in scm.dag.order:
        if i == target:
            x[:, i] = value
        else:
            x[:, i] = scm.node_mean(i, x) + sd[i] * eps[:, i]
    return x


def sample(scm: Scm, regime: Intervention | None, n: int, rng: np.random.Generator) -> Dataset:
    """Draw ``n`` samples observationally (``regime=None``) or under an intervention."""
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    x = sample_with_noise(scm, regime, rng.standard_normal((n, scm.d)))
    target, _ = _regime_target(regime)
    return Dataset(x, np.full(n, target, dtype=int))


def log_likelihood(scm: Scm, s: Sample) -> float:
    """Truncated-factorization log density of a single sample."""
    values = np.asarray(s.values, dtype=float)
    if values.size != scm.d:
        raise InvalidArgumentError("sample dimension does not match the SCM")
    target = OBSERVATIONAL if s.intervention is None else s.intervention.target
    return float(scm.log_prob(values[None, :], target)[0])


def _uniform_signed(rng: np.random.Generator, size, low=0.5, high=2.0) -> np.ndarray:
    mag = rng.uniform(low, high, size=size)
    sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
    return mag * sign


def generate_ground_truth(
    family: GraphFamily,
    d: int,
    mechanism_kind: MechanismKind | str,
    rng: np.random.Generator,
    noise_var: float = 0.1,
    n_features: int = 32,
) -> Scm:
    dag = generate_dag(family, d, rng)
    kind = MechanismKind(mechanism_kind)
    mechs = []
    for i in range(d):
        p = len(dag.parents[i])
        if kind is MechanismKind.LINEAR:
            mechs.append(LinearMechanism(_uniform_signed(rng, p)))
        else:
            mechs.append(
                RandomFeatureMechanism(
                    rng.standard_normal((p, n_features)),
                    rng.standard_normal(n_features),
                    rng.standard_normal(n_features),
                )
            )
    return Scm(dag, tuple(mechs), np.full(d, noise_var))


def _mech_to_dict(m: Mechanism) -> dict:
    if m.kind is MechanismKind.LINEAR:
        return {"weights": m.weights.tolist(), "bias": m.bias}
    return {
        "feature_weights": m.feature_weights.tolist(),
        "feature_bias": m.feature_bias.tolist(),
        "output_weights": m.output_weights.tolist(),
    }


def scm_to_json(scm: Scm) -> str:
    kinds = {m.kind.value for m in scm.mechanisms}
    doc = {
        "dag": {"d": scm.d, "edges": [list(e) for e in scm.dag.edges]},
        "mechanism": kinds.pop() if len(kinds) == 1 else "mixed",
        "nodes": [dict(kind=m.kind.value, **_mech_to_dict(m)) for m in scm.mechanisms],
        "noise_vars": scm.noise_vars.tolist(),
    }
    # json renders floats with repr(), which round-trips IEEE-754 doubles
    return json.dumps(doc)


def scm_from_json(text: str) -> Scm:
    doc = json.loads(text)
    dag = Dag(doc["dag"]["d"], tuple(tuple(e) for e in doc["dag"]["edges"]))
    mechs = []
    for i, node in enumerate(doc["nodes"]):
        if node["kind"] == MechanismKind.LINEAR.value:
            mechs.append(LinearMechanism(np.array(node["weights"], dtype=float), node["bias"]))
        else:
            fb = np.array(node["feature_bias"], dtype=float)
            fw = np.array(node["feature_weights"], dtype=float).reshape(len(dag.parents[i]), fb.size)
            mechs.append(RandomFeatureMechanism(fw, fb, np.array(node["output_weights"], dtype=float)))
    return Scm(dag, tuple(mechs), np.array(doc["noise_vars"], dtype=float))
