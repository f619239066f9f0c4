import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from conftest import random_probs
from probkw.errors import NumericalError, TooLargeForEnumeration
from probkw.gkw import ProbMatrix, gkw_statistic
from probkw.oracle import all_rank_permutations, enumerate_null, verify_moment_identities


def _kw_exact_distribution(sizes):
    """Exact null distribution of H by assigning rank sets to groups.

    Written independently of the library: exact rational arithmetic over
    set partitions of 1..N.
    """
    n = sum(sizes)
    counts = {}

    def rec(remaining, i, rsums):
        if i == len(sizes):
            h = Fraction(12, n * (n + 1)) * sum(Fraction(r * r, s) for r, s in zip(rsums, sizes)) - 3 * (n + 1)
            counts[h] = counts.get(h, 0) + 1
            return
        for combo in itertools.combinations(remaining, sizes[i]):
            rest = tuple(x for x in remaining if x not in combo)
            rec(rest, i + 1, rsums + [sum(combo)])

    rec(tuple(range(1, n + 1)), 0, [])
    total = sum(counts.values())
    return {h: Fraction(c, total) for h, c in counts.items()}


def _tail(distn, t):
    return float(sum(p for h, p in distn.items() if h >= Fraction(t) - Fraction(1, 10**9)))


def test_kw_222_exact_distribution_matches_enumeration():
    distn = _kw_exact_distribution((2, 2, 2))
    assert len(distn) > 1
    hmax = max(distn)
    # only the 3! orderings of {1,2},{3,4},{5,6} reach the maximum
    assert hmax == Fraction(32, 7)
    assert distn[hmax] == Fraction(6, 90)
    ex = enumerate_null(ProbMatrix.one_hot([0, 0, 1, 1, 2, 2], 3))
    for h in sorted(distn):
        assert ex.tail_prob(float(h)) == pytest.approx(_tail(distn, h), abs=1e-12)
    # no attainable value reaches the 10% chi-square critical value 4.605
    assert all(v == 0.0 for v in ex.tail_probs.values())


def test_kw_exact_distribution_unbalanced():
    sizes = (3, 2, 2)
    distn = _kw_exact_distribution(sizes)
    g = np.repeat(np.arange(3), sizes)
    ex = enumerate_null(ProbMatrix.one_hot(g, 3))
    for h in list(distn)[::3]:
        assert ex.tail_prob(float(h)) == pytest.approx(_tail(distn, h), abs=1e-12)


def test_enumerated_moments_match_closed_form(rng):
    for n, k in [(4, 2), (6, 3), (7, 3), (8, 2)]:
        p = random_probs(rng, n, k)
        rep = verify_moment_identities(p)
        assert rep.passed, list(rep.lines())
        assert rep.max_mean_error < 1e-9 and rep.max_cov_error < 1e-9


def test_one_hot_extra_identities():
    rep = verify_moment_identities(ProbMatrix.one_hot([0, 0, 1, 1, 1, 2, 2], 3))
    assert rep.passed
    assert set(rep.one_hot_checks) == {"max_kw_variance_error", "max_kw_correlation_error"}
    assert "passed\tTrue" in list(rep.lines())


def test_enumerated_statistics_match_library(rng):
    p = random_probs(rng, 5, 3)
    ex = enumerate_null(p)
    perms = all_rank_permutations(5)
    assert perms.shape == (120, 5)
    for i in (0, 17, 119):
        assert ex.statistic_values[i] == pytest.approx(gkw_statistic(p, perms[i]).statistic, rel=1e-12)


def test_exact_mean_of_statistic_is_df(rng):
    # E[z' C^{-1} z] = trace(I) = k - 1 exactly under the permutation null
    p = random_probs(rng, 7, 3)
    ex = enumerate_null(p)
    assert ex.statistic_values.mean() == pytest.approx(2.0, rel=1e-10)


def test_cap_and_undefined_statistic():
    with pytest.raises(TooLargeForEnumeration):
        enumerate_null(random_probs(np.random.default_rng(0), 10, 2))
    p = np.column_stack([np.full(5, 0.2), [0.8, 0.8, 0, 0, 0.8], [0, 0, 0.8, 0.8, 0]])
    ex = enumerate_null(p)
    assert ex.statistic_values is None
    assert ex.undefined_reason
    with pytest.raises(NumericalError):
        ex.tail_prob(1.0)
    assert math.isfinite(ex.exact_mean.sum())
