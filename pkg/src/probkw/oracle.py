"""Exact null distribution of the weighted rank-sums by full enumeration.

Under the null hypothesis every assignment of the ranks 1..N to subjects is
equally likely, so for small N the mean and covariance of ``R*`` and the
distribution of the statistic can be computed exactly by visiting all N!
permutations.  This is independent of the closed-form moments in
:mod:`probkw.gkw` and is used to check them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .dist import chi2_isf
from .errors import NumericalError, TooLargeForEnumeration
from .gkw import _statistics, as_prob_matrix

MAX_N = 9
MOMENT_TOL = 1e-9


@dataclass
class ExactNull:
    exact_mean: np.ndarray
    exact_cov: np.ndarray
    statistic_values: np.ndarray | None
    tail_probs: dict = field(default_factory=dict)
    undefined_reason: str | None = None

    def tail_prob(self, threshold: float) -> float:
        """Exact ``P(H* >= threshold)``."""
        if self.statistic_values is None:
            raise NumericalError(self.undefined_reason or "statistic undefined")
        slack = 1e-9 * max(1.0, abs(threshold))
        return float(np.mean(self.statistic_values >= threshold - slack))


def all_rank_permutations(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(1, n + 1))), dtype=float)


def enumerate_null(pm, max_n: int = MAX_N, levels=(0.10, 0.05, 0.01)) -> ExactNull:
    """Enumerate all N! rank assignments (untied responses).

    ``tail_probs`` maps each chi-square critical value at ``levels`` to the
    exact tail probability of the statistic.
    """
    pm = as_prob_matrix(pm)
    if pm.n > max_n:
        raise TooLargeForEnumeration(
            f"N={pm.n} exceeds enumeration cap {max_n} ({math.factorial(pm.n)} permutations)"
        )
    perms = all_rank_permutations(pm.n)
    rsum = perms @ pm.p
    mean = rsum.mean(axis=0)
    dev = rsum - mean
    cov = dev.T @ dev / rsum.shape[0]
    try:
        stats = _statistics(pm.p, pm.moments, perms, 0.0, False, None)
        reason = None
    except NumericalError as exc:
        stats, reason = None, str(exc)
    result = ExactNull(mean, cov, stats, undefined_reason=reason)
    if stats is not None:
        df = pm.k - 1
        for a in levels:
            c = chi2_isf(a, df)
            result.tail_probs[c] = result.tail_prob(c)
    return result


@dataclass
class MomentReport:
    max_mean_error: float
    max_cov_error: float
    passed: bool
    one_hot_checks: dict | None = None

    def lines(self):
        yield f"max_mean_error\t{self.max_mean_error:.3e}"
        yield f"max_cov_error\t{self.max_cov_error:.3e}"
        if self.one_hot_checks:
            for key, val in self.one_hot_checks.items():
                yield f"{key}\t{val:.3e}"
        yield f"passed\t{self.passed}"


def verify_moment_identities(pm, tol: float = MOMENT_TOL) -> MomentReport:
    """Compare enumerated moments of ``R*`` with the closed forms.

    For one-hot matrices the classical Kruskal-Wallis moments (group-size
    variances and the correlation ``-sqrt(n_i n_i' / ((N-n_i)(N-n_i')))``) are
    checked as well.
    """
    pm = as_prob_matrix(pm)
    exact = enumerate_null(pm)
    n = pm.n
    m = pm.moments
    mu = (n + 1) / 2.0 * m.col_sums
    cov = n * (n + 1) / 12.0 * m.centered_cross
    mean_err = float(np.max(np.abs(exact.exact_mean - mu)))
    cov_err = float(np.max(np.abs(exact.exact_cov - cov)))
    errors = [mean_err, cov_err]
    extra = None
    p = pm.p
    if np.all((p == 0) | (p == 1)):
        sizes = m.col_sums
        var_kw = sizes * (n + 1) * (n - sizes) / 12.0
        var_err = float(np.max(np.abs(np.diag(exact.exact_cov) - var_kw)))
        extra = {"max_kw_variance_error": var_err}
        errors.append(var_err)
        ok = (sizes > 0) & (sizes < n)
        idx = np.flatnonzero(ok)
        if idx.size >= 2:
            sd = np.sqrt(np.diag(exact.exact_cov)[idx])
            corr = exact.exact_cov[np.ix_(idx, idx)] / np.outer(sd, sd)
            r = sizes[idx] / (n - sizes[idx])
            corr_kw = -np.sqrt(np.outer(r, r))
            off = ~np.eye(idx.size, dtype=bool)
            corr_err = float(np.max(np.abs(corr - corr_kw)[off]))
            extra["max_kw_correlation_error"] = corr_err
            errors.append(corr_err)
    return MomentReport(mean_err, cov_err, max(errors) <= tol, extra)
