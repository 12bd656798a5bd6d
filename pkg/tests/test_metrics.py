import numpy as np
import pytest
from sklearn.metrics import average_precision_score, roc_auc_score

from conftest import pair_scm
from cbed.errors import InvalidArgumentError, UndefinedMetricError
from cbed.graphs import Dag, GraphFamily, generate_dag
from cbed.metrics import _auprc, _auroc, auprc, auroc, edge_marginals, expected_shd, shd
from cbed.posterior import PosteriorParticles
from cbed.scm import LinearMechanism, Scm


def particles(dags, weights=None):
    scms = [Scm(g, tuple(LinearMechanism(np.ones(len(g.parents[i]))) for i in range(g.d)), np.ones(g.d)) for g in dags]
    if weights is None:
        return PosteriorParticles.uniform(scms)
    return PosteriorParticles(tuple(scms), weights)


def test_shd_conventions():
    assert shd(Dag(2, ((0, 1),)), Dag(2, ((1, 0),))) == 1
    assert shd(Dag(3), Dag(3, ((0, 1), (1, 2)))) == 2
    assert shd(Dag(3, ((0, 2),)), Dag(3, ((0, 1),))) == 2
    with pytest.raises(InvalidArgumentError):
        shd(Dag(2), Dag(3))


def test_expected_shd_examples():
    truth = Dag(2, ((0, 1),))
    assert expected_shd(particles([truth]), truth) == 0.0
    assert expected_shd(particles([Dag(2, ((1, 0),))]), truth) == 1.0
    t3 = Dag(3, ((0, 1), (1, 2)))
    assert expected_shd(particles([t3, Dag(3)], [0.5, 0.5]), t3) == 1.0


def test_expected_shd_zero_iff_all_mass_on_truth(rng):
    truth = generate_dag(GraphFamily(), 4, rng)
    other = Dag(4)
    assert expected_shd(particles([truth, other], [1.0, 0.0]), truth) == 0.0
    assert expected_shd(particles([truth, other], [0.9, 0.1]), truth) > 0.0


def test_edge_marginals():
    post = particles([Dag(3, ((0, 1),)), Dag(3, ((0, 1), (1, 2)))])
    p = edge_marginals(post)
    assert p[0, 1] == 1.0 and p[1, 2] == 0.5 and np.all(np.diag(p) == 0)


def test_auroc_examples():
    truth = Dag(3, ((0, 1), (1, 2)))
    assert auroc(truth.adjacency.astype(float), truth) == 1.0
    assert auroc(np.full((3, 3), 0.3), truth) == 0.5
    assert _auroc(np.array([0.9, 0.4, 0.1]), np.array([1, 0, 1], bool)) == 0.5
    with pytest.raises(UndefinedMetricError):
        auroc(np.zeros((2, 2)), Dag(2))
    with pytest.raises(UndefinedMetricError):
        auprc(np.zeros((2, 2)), Dag(2))
    with pytest.raises(InvalidArgumentError):
        auroc(np.zeros((3, 3)), Dag(2, ((0, 1),)))


def test_auprc_examples():
    truth = Dag(3, ((0, 1), (1, 2)))
    assert auprc(truth.adjacency.astype(float), truth) == 1.0
    assert _auprc(np.array([0.9, 0.1, 0.2, 0.05]), np.array([1, 0, 0, 0], bool)) == 1.0
    assert _auprc(np.array([0.9, 0.4, 0.1]), np.array([1, 0, 1], bool)) == pytest.approx(5 / 6)


def test_against_sklearn():
    rng = np.random.default_rng(0)
    for _ in range(300):
        n = int(rng.integers(3, 40))
        s = rng.integers(0, 5, n) / 4
        y = rng.random(n) < 0.4
        if y.all() or not y.any():
            continue
        assert _auroc(s, y) == pytest.approx(roc_auc_score(y, s), abs=1e-12)
        assert _auprc(s, y) == pytest.approx(average_precision_score(y, s), abs=1e-12)


def test_rank_properties():
    rng = np.random.default_rng(1)
    s = rng.random(30)
    y = rng.random(30) < 0.5
    assert _auroc(-s, y) == pytest.approx(1 - _auroc(s, y))
    assert _auroc(np.exp(3 * s), y) == pytest.approx(_auroc(s, y))
    assert _auprc(s**3 + 1, y) == pytest.approx(_auprc(s, y))


def test_exact_graph_distribution_is_used(rng):
    from cbed.posterior import exact_posterior
    from cbed.scm import sample

    data = sample(pair_scm(1.5, 0.1), None, 200, rng)
    post = exact_posterior(data, rng=rng, n_particles=3)
    truth = Dag(2, ((0, 1),))
    # the Markov-equivalent pair splits evenly, so E-SHD is about 1/2
    assert expected_shd(post, truth) == pytest.approx(0.5, abs=1e-6)
