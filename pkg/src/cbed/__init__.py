"""Batch Bayesian experimental design for causal discovery."""

from .errors import (
    CorruptGraphError,
    InvalidArgumentError,
    NumericalDegeneracyError,
    UndefinedMetricError,
    UnsupportedScaleError,
)
from .graphs import Dag, GraphFamily, GraphKind, generate_dag, mutilate, topological_order
from .scm import OBSERVATIONAL, Dataset, Intervention, MechanismKind, Scm, generate_ground_truth, sample
from .posterior import PosteriorParticles, PriorConfig, bootstrap_posterior, exact_posterior
from .infogain import ait_score, mi_batch, mi_single, mi_wis
from .valueopt import SearchDomain, gp_predict, optimize_value
from .policy import POLICIES, VALUE_STRATEGIES, DesignBatch, soft_topk_sample
from .metrics import auprc, auroc, edge_marginals, expected_shd, shd

__version__ = "0.1.0"
