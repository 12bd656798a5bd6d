import numpy as np
import pytest

import oracles
from cbed.errors import InvalidArgumentError
from cbed.graphs import (
    Dag,
    GraphFamily,
    GraphKind,
    dag_from_text,
    dag_to_text,
    enumerate_dags,
    generate_dag,
    load_dag,
    mutilate,
    topological_order,
)


def test_dag_rejects_cycles_loops_duplicates():
    with pytest.raises(InvalidArgumentError):
        Dag(3, ((0, 1), (1, 2), (2, 0)))
    with pytest.raises(InvalidArgumentError):
        Dag(2, ((1, 1),))
    with pytest.raises(InvalidArgumentError):
        Dag(2, ((0, 1), (0, 1)))
    with pytest.raises(InvalidArgumentError):
        Dag(2, ((0, 2),))


def test_dag_views():
    g = Dag(3, ((1, 2), (0, 2)))
    assert g.edges == ((0, 2), (1, 2))
    assert g.parents == ((), (), (0, 1))
    assert g.adjacency[0, 2] == 1 and g.adjacency.sum() == 2
    assert g.has_edge(0, 2) and not g.has_edge(2, 0)
    assert g == Dag.from_adjacency(g.adjacency)
    assert hash(g) == hash(Dag(3, ((0, 2), (1, 2))))


def test_er_forced_probabilities(rng):
    full = generate_dag(GraphFamily(GraphKind.ERDOS_RENYI, edge_prob=1.0), 3, rng)
    assert len(full) == 3
    empty = generate_dag(GraphFamily(GraphKind.ERDOS_RENYI, edge_prob=0.0), 5, rng)
    assert len(empty) == 0


def test_er_mean_edge_count():
    rng = np.random.default_rng(7)
    fam = GraphFamily(GraphKind.ERDOS_RENYI, 1.0)
    counts = np.array([len(generate_dag(fam, 20, rng)) for _ in range(10_000)])
    p = fam.er_probability(20)
    se = np.sqrt(190 * p * (1 - p) / counts.size)
    assert abs(counts.mean() - 20) < 3 * se


def test_scale_free_is_acyclic_and_connected_in_expectation(rng):
    for d in (2, 5, 30):
        g = generate_dag(GraphFamily(GraphKind.SCALE_FREE), d, rng)
        assert len(g) == d - 1
        order = topological_order(g)
        pos = {v: k for k, v in enumerate(order)}
        assert all(pos[i] < pos[j] for i, j in g.edges)


def test_generate_dag_needs_two_nodes(rng):
    with pytest.raises(InvalidArgumentError):
        generate_dag(GraphFamily(), 1, rng)


def test_family_rejects_nonpositive_degree():
    with pytest.raises(InvalidArgumentError):
        GraphFamily(GraphKind.ERDOS_RENYI, 0.0)


@pytest.mark.parametrize(
    "edges, target, expected",
    [(((0, 1), (1, 2)), 1, ((1, 2),)), ((), 0, ()), (((0, 2), (1, 2)), 2, ())],
)
def test_mutilate(edges, target, expected):
    d = 3
    assert mutilate(Dag(d, edges), target).edges == expected


def test_mutilate_out_of_range():
    with pytest.raises(InvalidArgumentError):
        mutilate(Dag(2), 2)


def test_topological_order_examples():
    assert topological_order(Dag(3, ((0, 1), (1, 2)))) == [0, 1, 2]
    assert topological_order(Dag(3)) == [0, 1, 2]


@pytest.mark.parametrize("d, count", [(1, 1), (2, 3), (3, 25), (4, 543), (5, 29281)])
def test_enumeration_counts(d, count):
    assert len(enumerate_dags(d)) == count


@pytest.mark.parametrize("d", [2, 3, 4])
def test_enumeration_matches_bruteforce(d):
    ours = {frozenset(g.edges) for g in enumerate_dags(d)}
    assert ours == set(oracles.all_dags_bruteforce(d))


def test_text_round_trip(tmp_path, rng):
    g = generate_dag(GraphFamily(), 6, rng)
    assert dag_from_text(dag_to_text(g)) == g
    path = tmp_path / "g.tsv"
    path.write_text(dag_to_text(g))
    assert load_dag(path) == g
