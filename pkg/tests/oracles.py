"""Independent reference computations used to freeze expected values.

Nothing here imports from ``cbed``; each routine recomputes its quantity
from first principles (quadrature, brute-force enumeration, dense solves).
"""

import itertools
import math

import numpy as np
from scipy import integrate


def gaussian_pdf(y, mean, var):
    return np.exp(-0.5 * (y - mean) ** 2 / var) / np.sqrt(2.0 * np.pi * var)


def mixture_entropy_1d(means, variances, weights=None):
    """Differential entropy (nats) of a 1-D Gaussian mixture by adaptive quadrature."""
    means = np.asarray(means, dtype=float)
    variances = np.asarray(variances, dtype=float)
    if weights is None:
        weights = np.full(means.shape, 1.0 / means.size)

    def density(y):
        return float(np.sum(weights * gaussian_pdf(y, means, variances)))

    def integrand(y):
        p = density(y)
        return -p * math.log(p) if p > 0 else 0.0

    # integrate component by component so quad never misses a narrow bump
    sd = np.sqrt(variances.max())
    breaks = sorted(set(np.round(means, 12)))
    lo, hi = min(breaks) - 12 * sd, max(breaks) + 12 * sd
    points = [lo] + [b for b in breaks] + [hi]
    total = 0.0
    for a, b in zip(points[:-1], points[1:]):
        if b > a:
            val, _ = integrate.quad(integrand, a, b, limit=400, epsabs=1e-12, epsrel=1e-12)
            total += val
    return total


def gaussian_entropy(var):
    return 0.5 * math.log(2.0 * math.pi * math.e * var)


def sign_pair_mi(v, noise_var=1.0):
    """True MI between the root-intervention outcome and a 2-hypothesis (w=+1/-1) posterior."""
    h_marg = mixture_entropy_1d([v, -v], [noise_var, noise_var])
    return h_marg - gaussian_entropy(noise_var)


def sign_pair_joint_mi(values, noise_var=1.0, half_width=None, n_grid=None):
    """Joint MI I(Y_1..Y_b; W) for b <= 2 do(X_0 = v_i) designs on the w=+1/-1 pair.

    Outcomes are conditionally independent given the hypothesis, so the
    conditional entropy is b times the single-node Gaussian entropy; the
    marginal entropy is integrated on a dense tensor grid with Simpson's rule.
    """
    values = list(values)
    if not values:
        return 0.0
    h_cond = len(values) * gaussian_entropy(noise_var)
    sd = math.sqrt(noise_var)
    span = max(abs(v) for v in values) + 12 * sd if half_width is None else half_width
    n = n_grid or 2001
    grid = np.linspace(-span, span, n)
    if len(values) == 1:
        p = 0.5 * (gaussian_pdf(grid, values[0], noise_var) + gaussian_pdf(grid, -values[0], noise_var))
        f = np.where(p > 0, -p * np.log(np.where(p > 0, p, 1.0)), 0.0)
        return integrate.simpson(f, x=grid) - h_cond
    if len(values) == 2:
        y1, y2 = np.meshgrid(grid, grid, indexing="ij")
        p_plus = gaussian_pdf(y1, values[0], noise_var) * gaussian_pdf(y2, values[1], noise_var)
        p_minus = gaussian_pdf(y1, -values[0], noise_var) * gaussian_pdf(y2, -values[1], noise_var)
        p = 0.5 * (p_plus + p_minus)
        f = np.where(p > 0, -p * np.log(np.where(p > 0, p, 1.0)), 0.0)
        inner = integrate.simpson(f, x=grid, axis=1)
        return integrate.simpson(inner, x=grid) - h_cond
    raise ValueError("oracle supports batches of size <= 2")


def all_dags_bruteforce(d):
    """Every DAG on d nodes as a frozenset of edges, by filtering all digraphs."""
    slots = [(i, j) for i in range(d) for j in range(d) if i != j]
    out = []
    for bits in itertools.product((0, 1), repeat=len(slots)):
        edges = [s for s, b in zip(slots, bits) if b]
        adj = np.zeros((d, d), dtype=int)
        for i, j in edges:
            adj[i, j] = 1
        # nilpotent adjacency <=> acyclic
        power = np.eye(d, dtype=int)
        acyclic = True
        for _ in range(d):
            power = power @ adj
        if power.any():
            acyclic = False
        if acyclic:
            out.append(frozenset(edges))
    return out


def matern52(a, b, length_scale=1.0):
    r = np.abs(np.subtract.outer(a, b)) / length_scale
    s5 = math.sqrt(5.0)
    return (1.0 + s5 * r + 5.0 * r ** 2 / 3.0) * np.exp(-s5 * r)


def gp_dense_predict(x_obs, u_obs, x_new, jitter=1e-6):
    """Predictive mean / variance via a plain dense solve (no Cholesky)."""
    x_obs = np.asarray(x_obs, dtype=float)
    K = matern52(x_obs, x_obs) + jitter * np.eye(x_obs.size)
    k_star = matern52(x_obs, np.atleast_1d(x_new)).ravel()
    k_star = k_star + jitter * (x_obs == x_new)
    A = K + np.eye(x_obs.size)
    mean = k_star @ np.linalg.solve(A, u_obs)
    var = (1.0 + jitter) - k_star @ np.linalg.solve(A, k_star)
    return mean, var


def scaled_discrepancy_ratio(y, m):
    """m^2 * sum_k (mean_k - grand/m)^2 / sum_{i,k} (y_ik - mean_k)^2.

    ``y`` has shape (graphs, m, coords); the ratio is formed per coordinate
    sums, numerator and denominator accumulated over coordinates separately.
    Index k runs over graphs and i over the m samples of a graph.
    """
    y = np.asarray(y, dtype=float)
    c = y.shape[0]
    num = 0.0
    den = 0.0
    for coord in range(y.shape[2]):
        block = y[:, :, coord]
        grand = 0.0
        for k in range(c):
            for i in range(m):
                grand += block[k, i]
        grand /= c * m
        for k in range(c):
            mean_k = 0.0
            for i in range(m):
                mean_k += block[k, i] / m
            num += m ** 2 * (mean_k - grand / m) ** 2
            for i in range(m):
                den += (block[k, i] - mean_k) ** 2
    return num, den


def sign_test_pvalue(wins, losses):
    """One-sided exact sign test P(X >= wins) for X ~ Binomial(wins + losses, 1/2)."""
    n = wins + losses
    return sum(math.comb(n, k) for k in range(wins, n + 1)) / 2 ** n


def bge_sequential_log_marginal(x, alpha_mu, alpha_w, t):
    """Normal-Wishart evidence of the rows of ``x`` by the chain rule.

    Each row's predictive is a multivariate t; prior mean 0, prior scale
    matrix ``t * I``.  Accumulated one observation at a time.
    """
    from scipy import stats

    x = np.asarray(x, dtype=float)
    n, d = x.shape
    nu = np.zeros(d)
    T = t * np.eye(d)
    a_mu, a_w = float(alpha_mu), float(alpha_w)
    total = 0.0
    for r in range(n):
        df = a_w - d + 1
        shape = T * (a_mu + 1) / (a_mu * df)
        total += stats.multivariate_t(loc=nu, shape=shape, df=df).logpdf(x[r])
        diff = x[r] - nu
        T = T + a_mu / (a_mu + 1) * np.outer(diff, diff)
        nu = (a_mu * nu + x[r]) / (a_mu + 1)
        a_mu += 1
        a_w += 1
    return total


def gaussian_regression_log_evidence(y, phi, noise_var, weight_var):
    """log N(y; 0, s2 I + t2 Phi Phi^T) by a dense covariance."""
    from scipy import stats

    n = y.size
    cov = noise_var * np.eye(n) + weight_var * phi @ phi.T
    return stats.multivariate_normal(np.zeros(n), cov).logpdf(y)
