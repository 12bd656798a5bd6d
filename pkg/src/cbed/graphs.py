"""DAGs, random graph families and graph surgery."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import CorruptGraphError, InvalidArgumentError

__all__ = [
    "Dag",
    "GraphKind",
    "GraphFamily",
    "generate_dag",
    "mutilate",
    "topological_order",
    "enumerate_dags",
    "dag_to_text",
    "dag_from_text",
]


def _kahn(d: int, edges: Iterable[tuple[int, int]]) -> list[int] | None:
    indeg = [0] * d
    children: list[list[int]] = [[] for _ in range(d)]
    for i, j in edges:
        indeg[j] += 1
        children[i].append(j)
    for c in children:
        c.sort()
    # smallest available index first keeps the order stable
    ready = [i for i in range(d) if indeg[i] == 0]
    order = []
    while ready:
        ready.sort()
        node = ready.pop(0)
        order.append(node)
        for ch in children[node]:
            indeg[ch] -= 1
            if indeg[ch] == 0:
                ready.append(ch)
    if len(order) != d:
        return None
    return order


@dataclass(frozen=True)
class Dag:
    """Immutable directed acyclic graph on nodes ``0..d-1``.

    The sorted edge tuple is canonical; ``parents`` and ``adjacency`` are
    derived views.
    """

    node_count: int
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.node_count < 1:
            raise InvalidArgumentError("a DAG needs at least one node")
        canon = tuple(sorted({(int(i), int(j)) for i, j in self.edges}))
        if len(canon) != len(self.edges):
            raise InvalidArgumentError("duplicate edges")
        for i, j in canon:
            if not (0 <= i < self.node_count and 0 <= j < self.node_count):
                raise InvalidArgumentError(f"edge ({i}, {j}) out of range")
            if i == j:
                raise InvalidArgumentError(f"self-loop on node {i}")
        if _kahn(self.node_count, canon) is None:
            raise InvalidArgumentError("edges contain a directed cycle")
        object.__setattr__(self, "edges", canon)

    @classmethod
    def from_adjacency(cls, adj) -> "Dag":
        adj = np.asarray(adj)
        rows, cols = np.nonzero(adj)
        return cls(adj.shape[0], tuple(zip(rows.tolist(), cols.tolist())))

    @property
    def d(self) -> int:
        return self.node_count

    @cached_property
    def parents(self) -> tuple[tuple[int, ...], ...]:
        pa: list[list[int]] = [[] for _ in range(self.node_count)]
        for i, j in self.edges:
            pa[j].append(i)
        return tuple(tuple(sorted(p)) for p in pa)

    @cached_property
    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.node_count, self.node_count), dtype=np.int8)
        for i, j in self.edges:
            adj[i, j] = 1
        adj.setflags(write=False)
        return adj

    @cached_property
    def order(self) -> tuple[int, ...]:
        return tuple(topological_order(self))

    def has_edge(self, i: int, j: int) -> bool:
        return j in self.children_of(i)

    def children_of(self, i: int) -> tuple[int, ...]:
        return tuple(j for a, j in self.edges if a == i)

    def __len__(self) -> int:
        return len(self.edges)


class GraphKind(str, enum.Enum):
    ERDOS_RENYI = "er"
    SCALE_FREE = "sf"


@dataclass(frozen=True)
class GraphFamily:
    """Random graph family.

    ``edge_prob`` overrides the Erdos-Renyi inclusion probability derived
    from ``expected_edges_per_vertex``; it is mostly useful in tests.
    """

    kind: GraphKind = GraphKind.ERDOS_RENYI
    expected_edges_per_vertex: float = 1.0
    edge_prob: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", GraphKind(self.kind))
        if not self.expected_edges_per_vertex > 0:
            raise InvalidArgumentError("expected_edges_per_vertex must be positive")
        if self.edge_prob is not None and not 0.0 <= self.edge_prob <= 1.0:
            raise InvalidArgumentError("edge_prob must lie in [0, 1]")

    def er_probability(self, d: int) -> float:
        if self.edge_prob is not None:
            return self.edge_prob
        p = self.expected_edges_per_vertex * d / (d * (d - 1) / 2)
        return min(p, 1.0)


def _erdos_renyi(d: int, p: float, rng: np.random.Generator) -> Dag:
    perm = rng.permutation(d)
    iu, ju = np.triu_indices(d, k=1)
    keep = rng.random(iu.size) < p
    edges = zip(perm[iu[keep]].tolist(), perm[ju[keep]].tolist())
    return Dag(d, tuple(edges))


def _scale_free(d: int, m: int, rng: np.random.Generator) -> Dag:
    # preferential attachment with unit zero-appeal; edges point old -> new
    perm = rng.permutation(d)
    degree = np.zeros(d)
    edges = []
    for t in range(1, d):
        k = min(m, t)
        w = degree[:t] + 1.0
        targets = rng.choice(t, size=k, replace=False, p=w / w.sum())
        for s in targets:
            edges.append((int(perm[s]), int(perm[t])))
            degree[s] += 1
            degree[t] += 1
    return Dag(d, tuple(edges))


def generate_dag(family: GraphFamily, d: int, rng: np.random.Generator) -> Dag:
    """Draw a random DAG on ``d`` nodes from ``family``."""
    if d < 2:
        raise InvalidArgumentError("generate_dag needs d >= 2")
    if family.kind is GraphKind.ERDOS_RENYI:
        return _erdos_renyi(d, family.er_probability(d), rng)
    m = max(1, int(round(family.expected_edges_per_vertex)))
    return _scale_free(d, m, rng)


def mutilate(g: Dag, target: int) -> Dag:
    """Remove every incoming edge of ``target``."""
    if not 0 <= target < g.node_count:
        raise InvalidArgumentError(f"target {target} out of range for d={g.node_count}")
    return Dag(g.node_count, tuple(e for e in g.edges if e[1] != target))


def topological_order(g: Dag) -> list[int]:
    order = _kahn(g.node_count, g.edges)
    if order is None:
        raise CorruptGraphError("cycle detected")
    return order


@lru_cache(maxsize=None)
def _dags_on(nodes: frozenset) -> tuple[tuple[tuple[int, int], ...], ...]:
    # Unique decomposition by source set S: the rest is a DAG on V \ S, and
    # each of its sources must take >= 1 parent from S (else it would be in S).
    if not nodes:
        return ((),)
    out = []
    node_list = sorted(nodes)
    n = len(node_list)
    for mask in range(1, 1 << n):
        sources = [node_list[b] for b in range(n) if mask >> b & 1]
        rest = frozenset(nodes.difference(sources))
        for sub in _dags_on(rest):
            has_parent = {j for _, j in sub}
            per_node_choices = []
            for v in sorted(rest):
                subsets = _nonempty_subsets(sources) if v not in has_parent else _all_subsets(sources)
                per_node_choices.append([(s, v) for s in subsets])
            for combo in _product(per_node_choices):
                edges = list(sub)
                for parents, v in combo:
                    edges.extend((p, v) for p in parents)
                out.append(tuple(sorted(edges)))
    return tuple(out)


def _all_subsets(items):
    n = len(items)
    return [tuple(items[b] for b in range(n) if mask >> b & 1) for mask in range(1 << n)]


def _nonempty_subsets(items):
    return _all_subsets(items)[1:]


def _product(choice_lists):
    if not choice_lists:
        yield ()
        return
    head, *tail = choice_lists
    for h in head:
        for t in _product(tail):
            yield (h,) + t


@lru_cache(maxsize=8)
def enumerate_dags(d: int) -> tuple[Dag, ...]:
    """All labelled DAGs on ``d`` nodes (1, 3, 25, 543, 29281 for d = 1..5)."""
    if d < 1:
        raise InvalidArgumentError("d must be positive")
    edge_sets = _dags_on(frozenset(range(d)))
    return tuple(Dag(d, e) for e in sorted(edge_sets, key=lambda e: (len(e), e)))


def dag_to_text(g: Dag) -> str:
    lines = [f"# dag d={g.node_count}"]
    lines += [f"{i}\t{j}" for i, j in g.edges]
    return "\n".join(lines) + "\n"


def dag_from_text(text: str) -> Dag:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("# dag d="):
        raise InvalidArgumentError("missing '# dag d=<n>' header")
    d = int(lines[0].split("=", 1)[1])
    edges = []
    for ln in lines[1:]:
        a, b = ln.split("\t")
        edges.append((int(a), int(b)))
    return Dag(d, tuple(edges))


def save_dag(g: Dag, path) -> None:
    Path(path).write_text(dag_to_text(g))


def load_dag(path) -> Dag:
    return dag_from_text(Path(path).read_text())
