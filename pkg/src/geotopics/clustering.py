"""K-means, structured-covariance Gaussian mixtures, elbow and gap analyses.

Points are rows of an N x D array whose first two columns are spatial
(miles) and the remaining columns are scaled topic weights.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp
from scipy.spatial.distance import cdist

VARIANCE_FLOOR = 1e-6


class NumericalError(ArithmeticError):
    """Raised when an iterative fit produces non-finite values."""


@dataclass
class KMeansResult:
    centroids: np.ndarray
    assignments: np.ndarray
    inertia: float
    iterations_run: int
    inertia_trace: list[float] = field(default_factory=list)
    converged: bool = True


@dataclass
class GaussianComponent:
    weight: float
    mean: np.ndarray
    spatial_cov: np.ndarray
    topic_var: np.ndarray


@dataclass
class GmmResult:
    components: list[GaussianComponent]
    responsibilities: np.ndarray
    log_likelihood_trace: list[float]
    converged: bool

    @property
    def assignments(self):
        return np.argmax(self.responsibilities, axis=1)

    @property
    def weights(self):
        return np.array([c.weight for c in self.components])


@dataclass
class GapReport:
    candidate_Cs: list[int]
    log_wk: np.ndarray
    ref_log_wk_mean: np.ndarray
    ref_log_wk_sd: np.ndarray
    gap: np.ndarray
    optimal_C: int
    optimal_C_se_rule: int
    n_refs: int = 10

    @property
    def standard_error(self):
        return self.ref_log_wk_sd * math.sqrt(1.0 + 1.0 / self.n_refs)


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def assign(points, centroids):
    """Index of the nearest centroid (squared Euclidean; ties to the lower index)."""
    d = cdist(np.asarray(points, dtype=np.float64), np.asarray(centroids, dtype=np.float64),
              "sqeuclidean")
    return np.argmin(d, axis=1)


def _kmeans_pp(points, C, rng):
    n = points.shape[0]
    centers = [points[rng.integers(n)]]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for _ in range(1, C):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centers.append(points[idx])
        d2 = np.minimum(d2, np.sum((points - points[idx]) ** 2, axis=1))
    return np.array(centers)


def _update_centroids(points, labels, dists, C, old):
    centroids = old.copy()
    counts = np.bincount(labels, minlength=C)
    sums = np.zeros_like(old)
    np.add.at(sums, labels, points)
    nonempty = counts > 0
    centroids[nonempty] = sums[nonempty] / counts[nonempty, None]
    if not nonempty.all():
        # reseed each empty centroid at the point worst served by its own centroid
        own = dists[np.arange(points.shape[0]), labels].copy()
        for j in np.flatnonzero(~nonempty):
            i = int(np.argmax(own))
            centroids[j] = points[i]
            own[i] = -1.0
    return centroids


def _lloyd(points, centroids, max_iters):
    C = centroids.shape[0]
    labels = None
    trace = []
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        dists = cdist(points, centroids, "sqeuclidean")
        new = np.argmin(dists, axis=1)
        trace.append(float(dists[np.arange(points.shape[0]), new].sum()))
        if labels is not None and np.array_equal(new, labels):
            converged = True
            break
        labels = new
        centroids = _update_centroids(points, labels, dists, C, centroids)
    if not converged:
        labels = np.argmin(cdist(points, centroids, "sqeuclidean"), axis=1)
    inertia = float(np.sum((points - centroids[labels]) ** 2))
    return KMeansResult(centroids, labels, inertia, it, trace, converged)


def kmeans(points, C, max_iters=300, seed=None, n_init=1):
    """Lloyd's algorithm with k-means++ seeding; best of ``n_init`` restarts."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError("points must be an N x D array")
    if C < 1 or points.shape[0] < C:
        raise ValueError(f"need 1 <= C <= N, got C={C}, N={points.shape[0]}")
    rng = _rng(seed)
    best = None
    for _ in range(n_init):
        res = _lloyd(points, _kmeans_pp(points, C, rng), max_iters)
        if best is None or res.inertia < best.inertia:
            best = res
    return best


def _clip_spatial(cov, floor):
    vals, vecs = np.linalg.eigh(cov)
    vals = np.maximum(vals, floor)
    out = (vecs * vals) @ vecs.T
    return 0.5 * (out + out.T)


def _component_log_density(points, comp):
    d = points[:, :2] - comp.mean[:2]
    cov = comp.spatial_cov
    det = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
    if not det > 0:
        raise NumericalError(f"spatial covariance is not positive definite: {cov.tolist()}")
    inv = np.array([[cov[1, 1], -cov[0, 1]], [-cov[1, 0], cov[0, 0]]]) / det
    maha = np.einsum("ni,ij,nj->n", d, inv, d)
    logp = -math.log(2 * math.pi) - 0.5 * math.log(det) - 0.5 * maha
    if points.shape[1] > 2:
        t = points[:, 2:] - comp.mean[2:]
        v = comp.topic_var
        logp = logp - 0.5 * np.sum(np.log(2 * math.pi * v)) - 0.5 * np.sum(t * t / v, axis=1)
    return logp


def _moments(points, resp, floor):
    nk = resp.sum(axis=0)
    safe = np.maximum(nk, 10 * np.finfo(float).tiny)
    means = (resp.T @ points) / safe[:, None]
    comps = []
    total = points.shape[0]
    for c in range(resp.shape[1]):
        r = resp[:, c]
        diff = points - means[c]
        sp = (r[:, None] * diff[:, :2]).T @ diff[:, :2] / safe[c]
        tv = (r @ (diff[:, 2:] ** 2)) / safe[c]
        comps.append(GaussianComponent(float(nk[c] / total), means[c],
                                       _clip_spatial(sp, floor), np.maximum(tv, floor)))
    return comps


def _e_step(points, comps):
    with np.errstate(divide="ignore"):
        log_w = np.log([c.weight for c in comps])
    log_r = np.column_stack([_component_log_density(points, c) for c in comps]) + log_w
    norm = logsumexp(log_r, axis=1)
    ll = float(norm.sum())
    if not math.isfinite(ll):
        raise NumericalError(f"non-finite log-likelihood ({ll}) in Gaussian mixture E-step")
    return ll, np.exp(log_r - norm[:, None])


def log_likelihood(points, components):
    return _e_step(np.asarray(points, dtype=np.float64), components)[0]


def gmm_em(points, C, max_iters=200, tol=1e-6, seed=None, floor=VARIANCE_FLOOR):
    """Gaussian mixture fitted by EM, initialized from k-means.

    Each component has a full 2x2 covariance over the spatial columns and
    independent variances over the topic columns, all floored at ``floor``.
    Iteration stops once the mean per-point log-likelihood gain is below
    ``tol``.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] < 2:
        raise ValueError("points must be N x D with D >= 2")
    N = points.shape[0]
    if C < 1 or N < C:
        raise ValueError(f"need 1 <= C <= N, got C={C}, N={N}")
    init = kmeans(points, C, seed=seed)
    resp = np.zeros((N, C))
    resp[np.arange(N), init.assignments] = 1.0
    comps = _moments(points, resp, floor)
    trace = []
    converged = False
    for _ in range(max_iters):
        ll, resp = _e_step(points, comps)
        trace.append(ll)
        if len(trace) > 1 and (trace[-1] - trace[-2]) / N < tol:
            converged = True
            break
        comps = _moments(points, resp, floor)
    return GmmResult(comps, resp, trace, converged)


def wk(points, assignments, C=None):
    """Pooled within-cluster dispersion ``W_k = sum_r D_r / (2 n_r)``.

    Computed as the within-cluster sum of squares about the centroids,
    which equals the pairwise form. Returns ``(W_k, log W_k)``; the log is
    ``-inf`` when every cluster is a single point.
    """
    points = np.asarray(points, dtype=np.float64)
    assignments = np.asarray(assignments)
    if points.shape[0] == 0:
        raise ValueError("empty clustering")
    total = 0.0
    for r in np.unique(assignments):
        members = points[assignments == r]
        total += float(np.sum((members - members.mean(axis=0)) ** 2))
    return total, (math.log(total) if total > 0 else -math.inf)


def wk_pairwise(points, assignments):
    points = np.asarray(points, dtype=np.float64)
    assignments = np.asarray(assignments)
    total = 0.0
    for r in np.unique(assignments):
        members = points[assignments == r]
        total += cdist(members, members, "sqeuclidean").sum() / (2 * len(members))
    return total


def _best_log_wk(points, C, rng, n_init):
    res = kmeans(points, C, seed=rng, n_init=n_init)
    return wk(points, res.assignments)[1]


def elbow_curve(points, C_range, seed=None, n_init=10):
    """``(C, log W_k)`` for each C; ``-inf`` flags a zero-dispersion fit."""
    points = np.asarray(points, dtype=np.float64)
    rng = _rng(seed)
    return [(int(C), _best_log_wk(points, int(C), rng, n_init)) for C in C_range]


def gap_statistic(points, C_range, B=10, seed=None, n_init=10):
    """Gap statistic against B uniform references over the data's bounding box.

    ``optimal_C`` maximizes the gap; ``optimal_C_se_rule`` is the smallest C
    with ``Gap(C) >= Gap(C+1) - s_{C+1}``.
    """
    points = np.asarray(points, dtype=np.float64)
    Cs = [int(C) for C in C_range]
    rng = _rng(seed)
    lo, hi = points.min(axis=0), points.max(axis=0)
    refs = [rng.uniform(lo, hi, size=points.shape) for _ in range(B)]
    log_wk = np.array([_best_log_wk(points, C, rng, n_init) for C in Cs])
    ref = np.array([[_best_log_wk(r, C, rng, n_init) for C in Cs] for r in refs])
    with np.errstate(invalid="ignore"):
        ref_mean = ref.mean(axis=0)
        ref_sd = ref.std(axis=0)
        gap = ref_mean - log_wk
    finite = np.isfinite(gap)
    if not finite.any():
        raise ValueError("gap statistic undefined for every candidate C")
    best = int(np.argmax(np.where(finite, gap, -np.inf)))
    s = ref_sd * math.sqrt(1.0 + 1.0 / B)
    se_choice = Cs[best]
    for i in range(len(Cs) - 1):
        if finite[i] and finite[i + 1] and gap[i] >= gap[i + 1] - s[i + 1]:
            se_choice = Cs[i]
            break
    return GapReport(Cs, log_wk, ref_mean, ref_sd, gap, Cs[best], se_choice, B)
