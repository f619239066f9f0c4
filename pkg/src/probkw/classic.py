"""Comparator tests: Kruskal-Wallis, best-guess calls, dosage regression, ANOVA."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dist import chi2_sf, f_sf, t_sf2
from .errors import (
    ConstantPredictor,
    DimensionMismatch,
    EmptyGroup,
    InsufficientSample,
    ZeroWithinVariance,
)
from .gkw import Method, ProbMatrix, TestResult, as_prob_matrix, as_ranked, floor_p


@dataclass(frozen=True)
class HardCallVector:
    calls: np.ndarray
    ambiguous_count: int


@dataclass(frozen=True)
class DosageVector:
    dosages: np.ndarray


def hard_call(pm) -> HardCallVector:
    """Most probable group per subject; exact ties go to the smallest index."""
    p = as_prob_matrix(pm).p
    calls = np.argmax(p, axis=1)
    rowmax = p[np.arange(p.shape[0]), calls]
    ambiguous = int(np.count_nonzero((p == rowmax[:, None]).sum(axis=1) > 1))
    return HardCallVector(calls, ambiguous)


def dosage(pm) -> DosageVector:
    """Expected group code ``sum_i i * p_ij`` per subject."""
    p = as_prob_matrix(pm).p
    return DosageVector(p @ np.arange(p.shape[1], dtype=float))


def _group_sizes(groups: np.ndarray, k: int | None) -> tuple[np.ndarray, int]:
    if groups.size and groups.min() < 0:
        raise EmptyGroup(int(groups.min()))
    k = int(groups.max()) + 1 if k is None else int(k)
    sizes = np.bincount(groups, minlength=k)
    if sizes.size > k:
        raise DimensionMismatch(f"group label {sizes.size - 1} outside 0..{k - 1}")
    empty = np.flatnonzero(sizes == 0)
    if empty.size:
        raise EmptyGroup(int(empty[0]))
    return sizes, k


def kruskal_wallis(groups, rr, k: int | None = None, tie_correct: bool = True,
                   method: Method = Method.KW) -> TestResult:
    """Classical Kruskal-Wallis H test.

    ``H = 12 / (N (N+1)) * sum(R_i**2 / n_i) - 3 (N+1)``, divided by
    ``1 - sum(T) / (N**3 - N)`` when ties are present.  Completely tied data
    give ``H = 0``.
    """
    g = np.asarray(groups, dtype=np.int64)
    rr = as_ranked(rr)
    if g.size != rr.n:
        raise DimensionMismatch(f"{g.size} group labels for {rr.n} responses")
    sizes, k = _group_sizes(g, k)
    n = rr.n
    rsum = np.bincount(g, weights=rr.ranks, minlength=k)
    h = 12.0 / (n * (n + 1)) * np.sum(rsum**2 / sizes) - 3.0 * (n + 1)
    corrected = False
    if tie_correct and rr.tie_sum > 0:
        denom = 1.0 - rr.tie_sum / (n**3 - n)
        if denom <= 0:
            h = 0.0
        else:
            h /= denom
        corrected = True
    h = max(float(h), 0.0)
    return TestResult(h, k - 1, floor_p(chi2_sf(h, k - 1)), method, tie_corrected=corrected)


def ols_slope_t2(x, Y) -> np.ndarray:
    """Squared slope t statistics of each row of ``Y`` regressed on ``x``.

    Rows with zero residual sum of squares give ``inf``.
    """
    x = np.asarray(x, dtype=float)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n = x.size
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if not sxx > 0:
        raise ConstantPredictor("predictor is constant")
    Yc = Y - Y.mean(axis=1, keepdims=True)
    beta = (Yc @ xc) / sxx
    resid = Yc - beta[:, None] * xc
    rss = np.einsum("ij,ij->i", resid, resid)
    num = beta * beta * sxx * (n - 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(rss > 0, num / np.where(rss > 0, rss, 1.0), np.inf)


def ols_slope_test(x, y, method: Method = Method.BG_LM) -> TestResult:
    """Two-sided t test of the least-squares slope of ``y`` on ``x``.

    The statistic is reported as ``t**2`` with ``N - 2`` degrees of freedom.
    A perfect fit gives an infinite statistic and the floored p-value.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionMismatch("x and y must be 1-D of equal length")
    n = x.size
    if n < 3:
        raise InsufficientSample(f"slope test needs N >= 3, got {n}")
    t2 = float(ols_slope_t2(x, y)[0])
    df = n - 2
    return TestResult(t2, df, floor_p(t_sf2(math.sqrt(t2), df)), method)


def anova_f(groups, Y, k: int) -> np.ndarray:
    """One-way ANOVA F statistic for each row of ``Y`` with fixed ``groups``.

    Rows with zero within-group variation give ``nan``.
    """
    g = np.asarray(groups, dtype=np.int64)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n = g.size
    sizes = np.bincount(g, minlength=k).astype(float)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), g] = 1.0
    means = (Y @ onehot) / sizes
    grand = Y.mean(axis=1, keepdims=True)
    resid = Y - means[:, g]
    within = np.einsum("ij,ij->i", resid, resid)
    between = ((means - grand) ** 2) @ sizes
    with np.errstate(divide="ignore", invalid="ignore"):
        f = (between / (k - 1)) / (within / (n - k))
    return np.where(within > 0, f, np.nan)


def one_way_anova(groups, y, k: int | None = None,
                  method: Method = Method.BG_ANOVA) -> TestResult:
    """One-way ANOVA F test on ``(k - 1, N - k)`` degrees of freedom."""
    g = np.asarray(groups, dtype=np.int64)
    y = np.asarray(y, dtype=float)
    if g.shape != y.shape:
        raise DimensionMismatch("groups and y must have equal length")
    sizes, k = _group_sizes(g, k)
    n = y.size
    if n <= k:
        raise InsufficientSample(f"ANOVA needs N > k, got N={n}, k={k}")
    f = float(anova_f(g, y, k)[0])
    if math.isnan(f):
        raise ZeroWithinVariance("all residuals are zero")
    return TestResult(f, k - 1, floor_p(f_sf(f, k - 1, n - k)), method, df2=n - k)


# best-guess / dosage wrappers on a probability matrix

def bg_kruskal_wallis(pm, rr, tie_correct: bool = True) -> TestResult:
    pm = as_prob_matrix(pm)
    return kruskal_wallis(hard_call(pm).calls, rr, k=pm.k, tie_correct=tie_correct,
                          method=Method.BG_KW)


def bg_linear_model(pm, y) -> TestResult:
    return ols_slope_test(hard_call(pm).calls.astype(float), y, method=Method.BG_LM)


def bg_anova(pm, y) -> TestResult:
    pm = as_prob_matrix(pm)
    return one_way_anova(hard_call(pm).calls, y, k=pm.k, method=Method.BG_ANOVA)


def dosage_test(pm, y) -> TestResult:
    return ols_slope_test(dosage(pm).dosages, y, method=Method.DOSAGE)


def is_one_hot(pm: ProbMatrix) -> bool:
    p = pm.p
    return bool(np.all((p == 0) | (p == 1)))
