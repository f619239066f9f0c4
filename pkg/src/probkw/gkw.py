"""Generalized Kruskal-Wallis test for probabilistic group membership.

Each subject ``j`` carries a probability vector ``p[j, :]`` over ``k`` groups
instead of a known label.  The test compares the probability-weighted
rank-sums ``R*_i = sum_j p[j, i] * r_j`` with their conditional null moments
given ``p`` and combines ``k - 1`` standardized rank-sums into a quadratic
form that is asymptotically chi-square with ``k - 1`` degrees of freedom.
With one-hot probabilities the statistic is exactly the Kruskal-Wallis H.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .dist import chi2_sf, make_rng
from .errors import (
    DegenerateGroup,
    DimensionMismatch,
    InvalidProbMatrix,
    SingularCorrelation,
)
from .ranking import RankedResponse, rank_midrank

ROW_SUM_TOL = 1e-6
DEGENERATE_TOL = 1e-12
PIVOT_TOL = 1e-10
MIN_EFFECTIVE_SIZE = 5.0
P_FLOOR = 1e-300


class Method(str, enum.Enum):
    GKW = "gkw"
    KW = "kw"
    BG_KW = "bgkw"
    BG_LM = "bglm"
    BG_ANOVA = "bganova"
    DOSAGE = "dosage"


@dataclass(frozen=True)
class SmallEffectiveGroup:
    """Chi-square reference may be poor: a group's summed probability is < 5."""

    group: int
    effective_size: float

    def __str__(self):
        return f"small_effective_group({self.group})"


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df: int
    p_value: float
    method: Method
    warnings: tuple = ()
    tie_corrected: bool = False
    df2: int | None = None

    __test__ = False  # not a pytest class

    @property
    def neg_log10_p(self) -> float:
        return -math.log10(max(self.p_value, P_FLOOR))


def floor_p(p: float) -> float:
    return max(float(p), P_FLOOR)


class ProbMatrix:
    """Row-stochastic N x k matrix of group-membership probabilities.

    Rows are stored subject-major: ``p[j, i]`` is the probability that subject
    ``j`` belongs to group ``i``.  Rows whose sums are within ``tol`` of one
    are renormalized; anything further off is rejected.
    """

    def __init__(self, p, tol: float = ROW_SUM_TOL):
        p = np.array(p, dtype=float)
        if p.ndim != 2:
            raise InvalidProbMatrix(f"expected a 2-D array, got shape {p.shape}")
        n, k = p.shape
        if k < 2:
            raise InvalidProbMatrix("need at least two groups")
        if n < k:
            raise InvalidProbMatrix(f"need N >= k, got N={n}, k={k}")
        if not np.all(np.isfinite(p)):
            raise InvalidProbMatrix("probabilities must be finite")
        if np.any(p < 0) or np.any(p > 1):
            raise InvalidProbMatrix("probabilities must lie in [0, 1]")
        s = p.sum(axis=1)
        bad = np.flatnonzero(np.abs(s - 1.0) > tol)
        if bad.size:
            j = int(bad[0])
            raise InvalidProbMatrix(f"row {j} sums to {s[j]!r}, not 1")
        p /= s[:, None]
        p.flags.writeable = False
        self.p = p

    @classmethod
    def one_hot(cls, groups, k: int | None = None) -> ProbMatrix:
        g = np.asarray(groups, dtype=np.int64)
        k = int(g.max()) + 1 if k is None else k
        p = np.zeros((g.size, k))
        p[np.arange(g.size), g] = 1.0
        return cls(p)

    @property
    def n(self) -> int:
        return self.p.shape[0]

    @property
    def k(self) -> int:
        return self.p.shape[1]

    @cached_property
    def moments(self) -> GroupMoments:
        return GroupMoments.from_probs(self.p)

    def __repr__(self):
        return f"ProbMatrix(n={self.n}, k={self.k})"


def as_prob_matrix(pm) -> ProbMatrix:
    return pm if isinstance(pm, ProbMatrix) else ProbMatrix(pm)


def as_ranked(rr) -> RankedResponse:
    return rr if isinstance(rr, RankedResponse) else rank_midrank(rr)


@dataclass(frozen=True)
class GroupMoments:
    col_sums: np.ndarray
    col_means: np.ndarray
    centered_ss: np.ndarray
    centered_cross: np.ndarray

    @classmethod
    def from_probs(cls, p: np.ndarray) -> GroupMoments:
        col_sums = p.sum(axis=0)
        col_means = col_sums / p.shape[0]
        c = p - col_means
        cross = c.T @ c
        cross = 0.5 * (cross + cross.T)
        return cls(col_sums, col_means, np.diag(cross).copy(), cross)


def _check_dims(pm: ProbMatrix, n: int):
    if pm.n != n:
        raise DimensionMismatch(f"probability matrix has {pm.n} subjects, response has {n}")


def rank_variance_scale(n: int, tie_sum, tie_correct: bool = True):
    """Factor multiplying the centered sums in Var/Cov of R*.

    ``N(N+1)/12``, reduced by ``sum(T) / (12 (N - 1))`` when correcting for ties.
    """
    scale = n * (n + 1) / 12.0
    if tie_correct:
        scale = scale - np.asarray(tie_sum, dtype=float) / (12.0 * (n - 1))
    return scale


def weighted_rank_sums(pm, rr) -> np.ndarray:
    """Probability-weighted rank-sums ``R*_i = sum_j p_ij r_j``."""
    pm, rr = as_prob_matrix(pm), as_ranked(rr)
    _check_dims(pm, rr.n)
    return rr.ranks @ pm.p


def conditional_moments(pm, rr, tie_correct: bool = True):
    """Null mean vector and covariance matrix of ``R*`` given the probabilities."""
    pm, rr = as_prob_matrix(pm), as_ranked(rr)
    _check_dims(pm, rr.n)
    m = pm.moments
    n = pm.n
    mu = (n + 1) / 2.0 * m.col_sums
    cov = rank_variance_scale(n, rr.tie_sum, tie_correct) * m.centered_cross
    return mu, cov


def correlation_from_cov(cov: np.ndarray) -> np.ndarray:
    sd = np.sqrt(np.diag(cov))
    return cov / np.outer(sd, sd)


def default_drop_group(pm) -> int:
    """Group left out of the quadratic form: the one with the largest summed probability."""
    return int(np.argmax(as_prob_matrix(pm).moments.col_sums))


def small_group_warnings(col_sums, threshold: float = MIN_EFFECTIVE_SIZE) -> tuple:
    return tuple(
        SmallEffectiveGroup(i, float(s)) for i, s in enumerate(col_sums) if s < threshold
    )


def _prepare(moments: GroupMoments, drop_group: int | None):
    k = moments.col_sums.size
    drop = int(np.argmax(moments.col_sums)) if drop_group is None else int(drop_group)
    if not 0 <= drop < k:
        raise DimensionMismatch(f"drop_group {drop} outside 0..{k - 1}")
    keep = np.array([i for i in range(k) if i != drop])
    ss = moments.centered_ss[keep]
    for i, v in zip(keep, ss):
        if not v > DEGENERATE_TOL:
            raise DegenerateGroup(int(i), float(v))
    sd = np.sqrt(ss)
    corr = moments.centered_cross[np.ix_(keep, keep)] / np.outer(sd, sd)
    try:
        chol = np.linalg.cholesky(corr)
    except np.linalg.LinAlgError:
        raise SingularCorrelation("correlation matrix of retained groups is not positive definite") from None
    if np.min(np.diag(chol)) ** 2 < PIVOT_TOL:
        raise SingularCorrelation("correlation matrix of retained groups is numerically singular")
    return keep, sd, chol


def _statistics(p, moments, ranks, tie_sums, tie_correct, drop_group):
    n = p.shape[0]
    keep, sd, chol = _prepare(moments, drop_group)
    rsum = ranks @ p
    dev = rsum[:, keep] - (n + 1) / 2.0 * moments.col_sums[keep]
    scale = np.broadcast_to(rank_variance_scale(n, tie_sums, tie_correct), (ranks.shape[0],))
    positive = scale > 0
    root = np.sqrt(np.where(positive, scale, 1.0))
    z = dev / (root[:, None] * sd)
    w = np.linalg.solve(chol, z.T)
    stat = np.einsum("ij,ij->j", w, w)
    # every response tied: no rank information
    return np.where(positive, stat, 0.0)


def gkw_statistics(pm, ranks, tie_sums=0.0, tie_correct: bool = True,
                   drop_group: int | None = None) -> np.ndarray:
    """Statistic for many rank vectors (rows of ``ranks``) sharing one matrix."""
    pm = as_prob_matrix(pm)
    ranks = np.atleast_2d(np.asarray(ranks, dtype=float))
    _check_dims(pm, ranks.shape[1])
    return _statistics(pm.p, pm.moments, ranks, tie_sums, tie_correct, drop_group)


def gkw_statistic(pm, rr, tie_correct: bool = True,
                  drop_group: int | None = None) -> TestResult:
    """Generalized Kruskal-Wallis test.

    Parameters
    ----------
    pm : ProbMatrix or array_like
        N x k membership probabilities.
    rr : RankedResponse or array_like
        Ranked responses (raw values are ranked on the fly).
    tie_correct : bool
        Apply the mid-rank variance reduction.  A no-op without ties.
    drop_group : int, optional
        Group omitted from the quadratic form.  The statistic does not depend
        on this choice; the default drops the group with the largest summed
        probability.

    Returns
    -------
    TestResult
        ``df = k - 1``, chi-square p-value, and a ``SmallEffectiveGroup``
        warning for every group whose summed probability is below five.
    """
    pm, rr = as_prob_matrix(pm), as_ranked(rr)
    _check_dims(pm, rr.n)
    stat = float(_statistics(pm.p, pm.moments, rr.ranks[None, :], rr.tie_sum,
                             tie_correct, drop_group)[0])
    df = pm.k - 1
    return TestResult(
        statistic=stat,
        df=df,
        p_value=floor_p(chi2_sf(stat, df)),
        method=Method.GKW,
        warnings=small_group_warnings(pm.moments.col_sums),
        tie_corrected=bool(tie_correct and rr.tie_sum > 0),
    )


OK, DEGENERATE, SINGULAR = 0, 1, 2


def gkw_statistics_records(P: np.ndarray, ranks: np.ndarray, tie_sum: float = 0.0,
                           tie_correct: bool = True):
    """Statistic for many probability matrices (``P[b]``) sharing one response.

    ``P`` has shape ``(B, N, k)`` with row-stochastic slices.  Each record
    drops its own largest group.  Returns ``(statistics, col_sums, status)``
    where ``status`` is ``OK``, ``DEGENERATE`` or ``SINGULAR`` per record and
    the statistic is ``nan`` wherever status is not ``OK``.
    """
    B, n, k = P.shape
    col_sums = P.sum(axis=1)
    centered = P - (col_sums / n)[:, None, :]
    cross = np.einsum("bji,bjl->bil", centered, centered)
    rsum = np.einsum("j,bji->bi", ranks, P)
    drop = np.argmax(col_sums, axis=1)
    keep = np.array([[i for i in range(k) if i != d] for d in range(k)])[drop]
    m = k - 1
    rows = np.arange(B)[:, None]
    ss = cross[rows, keep, keep]
    status = np.where((ss > DEGENERATE_TOL).all(axis=1), OK, DEGENERATE)
    sd = np.sqrt(np.where(ss > DEGENERATE_TOL, ss, 1.0))
    corr = cross[rows[:, :, None], keep[:, :, None], keep[:, None, :]] / (sd[:, :, None] * sd[:, None, :])
    dev = np.take_along_axis(rsum, keep, axis=1) - (n + 1) / 2.0 * np.take_along_axis(col_sums, keep, axis=1)
    scale = float(rank_variance_scale(n, tie_sum, tie_correct))
    if scale <= 0:
        return np.where(status == OK, 0.0, np.nan), col_sums, status
    z = dev / (math.sqrt(scale) * sd)
    # Cholesky of the (k-1) x (k-1) correlation blocks, vectorized over records
    L = np.zeros_like(corr)
    for j in range(m):
        piv = corr[:, j, j] - np.sum(L[:, j, :j] ** 2, axis=1)
        bad = ~(piv >= PIVOT_TOL)
        status = np.where(bad & (status == OK), SINGULAR, status)
        L[:, j, j] = np.sqrt(np.where(bad, 1.0, piv))
        for i in range(j + 1, m):
            L[:, i, j] = (corr[:, i, j] - np.sum(L[:, i, :j] * L[:, j, :j], axis=1)) / L[:, j, j]
    w = np.empty_like(z)
    for i in range(m):
        w[:, i] = (z[:, i] - np.sum(L[:, i, :i] * w[:, :i], axis=1)) / L[:, i, i]
    stat = np.sum(w * w, axis=1)
    return np.where(status == OK, stat, np.nan), col_sums, status


def gkw_pvalue_under_null_mc(pm, n_perm: int, seed: int, drop_group: int | None = None,
                             chunk: int = 1000) -> np.ndarray:
    """Statistics of ``n_perm`` uniformly permuted rank vectors 1..N.

    Gives a Monte Carlo reference distribution when the chi-square
    approximation is in doubt.  Deterministic given ``seed``.
    """
    if n_perm < 1:
        raise ValueError("n_perm must be >= 1")
    pm = as_prob_matrix(pm)
    rng = make_rng(seed)
    base = np.arange(1, pm.n + 1, dtype=float)
    out = []
    for start in range(0, n_perm, chunk):
        m = min(chunk, n_perm - start)
        ranks = rng.permuted(np.broadcast_to(base, (m, pm.n)), axis=1)
        out.append(_statistics(pm.p, pm.moments, ranks, 0.0, False, drop_group))
    return np.concatenate(out)


def mc_pvalue(observed: float, null_stats) -> float:
    null_stats = np.asarray(null_stats)
    return (1.0 + np.count_nonzero(null_stats >= observed)) / (1.0 + null_stats.size)
