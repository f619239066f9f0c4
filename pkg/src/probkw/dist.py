"""Reference distributions, a one-sample KS test and seeded samplers.

The survival functions are computed in-house from the regularized incomplete
gamma and beta functions, so p-values do not depend on any particular SciPy
build.  Random variates come from :class:`numpy.random.Generator` streams that
are derived deterministically from ``(seed, *key)`` so that independent
replicates or scan records can be generated in any order.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import (
    InvalidProbVector,
    NegativeStatistic,
    NonPositiveAlpha,
    NonPositiveSigma,
    OutOfRange,
)

_EPS = 1e-16
_TINY = 1e-300
_MAXITER = 10_000


# ---------------------------------------------------------------------------
# incomplete gamma
# ---------------------------------------------------------------------------

def _gamma_p_series(a: float, x: float) -> float:
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAXITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_contfrac(a: float, x: float) -> float:
    # modified Lentz
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAXITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gammaincc(a: float, x: float) -> float:
    """Regularized upper incomplete gamma function Q(a, x)."""
    if x <= 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return 1.0 - _gamma_p_series(a, x)
    return _gamma_q_contfrac(a, x)


def chi2_sf(x: float, df: int) -> float:
    """Upper tail probability of the chi-square distribution."""
    if x < 0:
        raise NegativeStatistic(f"chi-square statistic must be >= 0, got {x}")
    if df <= 0:
        raise OutOfRange(f"df must be positive, got {df}")
    if x == 0:
        return 1.0
    return min(1.0, max(0.0, gammaincc(0.5 * df, 0.5 * x)))


def chi2_isf(q: float, df: int) -> float:
    """Critical value ``c`` with ``chi2_sf(c, df) = q`` (bisection)."""
    if not 0 < q < 1:
        raise OutOfRange(f"tail probability must be in (0, 1), got {q}")
    lo, hi = 0.0, max(1.0, float(df))
    while chi2_sf(hi, df) > q:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if chi2_sf(mid, df) > q:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * hi:
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# incomplete beta
# ---------------------------------------------------------------------------

def _betacf(a: float, b: float, x: float) -> float:
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAXITER):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf2(t: float, df: int) -> float:
    """Two-sided tail probability P(|T| >= |t|) for Student's t."""
    if df <= 0:
        raise OutOfRange(f"df must be positive, got {df}")
    if math.isinf(t):
        return 0.0
    if t == 0:
        return 1.0
    return min(1.0, max(0.0, betainc(0.5 * df, 0.5, df / (df + t * t))))


def f_sf(f: float, df1: int, df2: int) -> float:
    """Upper tail probability of the F distribution."""
    if f < 0:
        raise NegativeStatistic(f"F statistic must be >= 0, got {f}")
    if df1 <= 0 or df2 <= 0:
        raise OutOfRange("degrees of freedom must be positive")
    if f == 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    return min(1.0, max(0.0, betainc(0.5 * df2, 0.5 * df1, df2 / (df2 + df1 * f))))


def norm_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov against Uniform(0, 1)
# ---------------------------------------------------------------------------

def kolmogorov_sf(lam: float, max_terms: int = 200) -> float:
    """P(K > lam) for the limiting Kolmogorov distribution."""
    if lam <= 0:
        return 1.0
    if lam < 1.0:
        # theta-function form converges fast for small lam
        s = 0.0
        c = -math.pi ** 2 / (8.0 * lam * lam)
        for j in range(1, max_terms + 1):
            term = math.exp(c * (2 * j - 1) ** 2)
            s += term
            if term < 1e-16:
                break
        cdf = math.sqrt(2.0 * math.pi) / lam * s
        return min(1.0, max(0.0, 1.0 - cdf))
    s = 0.0
    for j in range(1, max_terms + 1):
        term = math.exp(-2.0 * j * j * lam * lam)
        s += term if j % 2 else -term
        if term < 1e-12 * max(abs(s), _TINY) or term < 1e-300:
            break
    return min(1.0, max(0.0, 2.0 * s))


def ks_uniform(pvals) -> tuple[float, float]:
    """One-sample Kolmogorov-Smirnov test of ``pvals`` against Uniform(0, 1).

    Returns the sup-distance ``D`` and its asymptotic p-value.
    """
    u = np.sort(np.asarray(pvals, dtype=float).ravel())
    n = u.size
    if n == 0:
        raise OutOfRange("ks_uniform needs at least one value")
    if not np.all((u >= 0) & (u <= 1)):
        raise OutOfRange("p-values must lie in [0, 1]")
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - u)
    d_minus = np.max(u - (i - 1) / n)
    d = float(max(d_plus, d_minus))
    return d, kolmogorov_sf(math.sqrt(n) * d)


# ---------------------------------------------------------------------------
# random streams and samplers
# ---------------------------------------------------------------------------

def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for stream ``key`` under master ``seed``.

    The same ``(seed, key)`` always yields the same stream, regardless of which
    other streams were created before it.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def split(rng: np.random.Generator, n: int) -> list[np.random.Generator]:
    return rng.spawn(n)


def sample_gamma(shape, rng: np.random.Generator, size=None, log=False):
    """Gamma(shape, 1) variates; shape < 1 goes through the boost identity.

    ``G(shape) = G(shape + 1) * U ** (1 / shape)``.  With ``log=True`` the
    logarithm is returned, which stays finite for very small shapes.
    """
    shape = np.asarray(shape, dtype=float)
    if np.any(shape <= 0):
        raise NonPositiveAlpha("gamma shape must be positive")
    small = shape < 1.0
    g = rng.standard_gamma(np.where(small, shape + 1.0, shape), size=size)
    logg = np.log(g)
    if np.any(small):
        u = rng.random(size=np.shape(g))
        logg = logg + np.where(small, np.log(u) / np.where(small, shape, 1.0), 0.0)
    return logg if log else np.exp(logg)


def sample_dirichlet(alpha, rng: np.random.Generator, size=None) -> np.ndarray:
    """Dirichlet draws as normalized independent gamma variates.

    ``size`` is the number of vectors; the result has shape ``(size, k)`` or
    ``(k,)`` when ``size`` is None.
    """
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1 or alpha.size < 2:
        raise NonPositiveAlpha("alpha must be a vector of length >= 2")
    if np.any(~(alpha > 0)):
        raise NonPositiveAlpha(f"all concentration parameters must be > 0: {alpha}")
    shape = alpha.shape if size is None else (int(size), alpha.size)
    logg = sample_gamma(np.broadcast_to(alpha, shape), rng, size=shape, log=True)
    logg = logg - logg.max(axis=-1, keepdims=True)
    g = np.exp(logg)
    return g / g.sum(axis=-1, keepdims=True)


def sample_normal(mu, sigma: float, rng: np.random.Generator, size=None):
    if not sigma > 0:
        raise NonPositiveSigma(f"sigma must be > 0, got {sigma}")
    return rng.normal(mu, sigma, size=size)


def sample_multinomial_index(probs, rng: np.random.Generator, size=None):
    """Category index drawn with probabilities ``probs``."""
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise InvalidProbVector(f"not a probability vector: {probs}")
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    u = rng.random(size=size)
    idx = np.searchsorted(cdf, u, side="right")
    return idx if size is not None else int(idx)


def sample_uniform_permutation(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random permutation of ``0..n-1`` (Fisher-Yates)."""
    return rng.permutation(n)
