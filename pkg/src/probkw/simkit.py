"""Simulation study: genotype uncertainty, type 1 error, power and coverage.

A simulation cell fixes the sample size, minor allele frequency ``maf``, the
Dirichlet concentration ``a`` put on each subject's true genotype, the
phenotype model and the replicate counts.  One set of genotypes and one
probability matrix is drawn per cell and reused for every replicate; only the
responses are re-simulated.  Every random stream is derived from
``(seed, key)`` so the results do not depend on the order or number of
workers.
"""

from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import classic
from .dist import (
    chi2_sf,
    f_sf,
    ks_uniform,
    make_rng,
    sample_dirichlet,
    sample_multinomial_index,
    sample_normal,
    t_sf2,
)
from .errors import InvalidA, InvalidMaf, NonPositiveAlpha, NonPositiveSigma, ProbKWError
from .gkw import Method, ProbMatrix, gkw_statistics
from .ranking import rank_midrank

# column order of the comparison tables
TEST_ORDER = (Method.BG_LM, Method.BG_ANOVA, Method.BG_KW, Method.DOSAGE, Method.GKW)
TEST_LABELS = {
    Method.BG_LM: "BG-LM",
    Method.BG_ANOVA: "BG-ANOVA",
    Method.BG_KW: "BG-KW",
    Method.DOSAGE: "Dosage",
    Method.GKW: "GKW",
}

# stream keys
_GENOTYPES, _MATRIX, _NULL, _ALT = 0, 1, 2, 3


class Model(str, enum.Enum):
    NORMAL_ADDITIVE = "normal_additive"
    NONNORMAL = "nonnormal"
    NONADDITIVE = "nonadditive"


@dataclass(frozen=True)
class SimConfig:
    n: int = 1000
    maf: float = 0.2
    a: float = 1.0
    means: tuple = (1.75, 2.0, 2.25)
    sigma: float = 1.0
    alpha: float = 0.01
    m_null: int = 2000
    m_alt: int = 1000
    model: Model = Model.NORMAL_ADDITIVE
    seed: int = 2013
    fresh_matrix: bool = False
    tie_correct: bool = True

    def __post_init__(self):
        if not 0 < self.maf < 0.5:
            raise InvalidMaf(f"maf must be in (0, 0.5), got {self.maf}")
        if not 0 < self.a <= 1:
            raise InvalidA(f"a must be in (0, 1], got {self.a}")
        if not self.sigma > 0:
            raise NonPositiveSigma(f"sigma must be > 0, got {self.sigma}")
        if self.n < 10:
            raise ValueError(f"n must be >= 10, got {self.n}")
        if len(self.means) != 3:
            raise ValueError("means must have three entries")
        if not 0 < self.alpha < 1:
            raise NonPositiveAlpha(f"alpha must be in (0, 1), got {self.alpha}")
        object.__setattr__(self, "means", tuple(float(m) for m in self.means))
        object.__setattr__(self, "model", Model(self.model))

    def alternative_means(self) -> tuple:
        if self.model is Model.NONADDITIVE:
            # heterozygote effect exceeds the minor homozygote
            m = self.means
            return (m[0], m[2], m[1])
        return self.means

    def null_mean(self) -> float:
        return float(np.mean(self.means))

    def with_(self, **changes) -> SimConfig:
        return replace(self, **changes)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def hwe_probs(maf: float) -> np.ndarray:
    """Genotype frequencies ``((1-q)^2, 2q(1-q), q^2)`` under Hardy-Weinberg."""
    if not 0 < maf < 0.5:
        raise InvalidMaf(f"maf must be in (0, 0.5), got {maf}")
    q = float(maf)
    return np.array([(1 - q) ** 2, 2 * q * (1 - q), q * q])


def gen_genotypes(n: int, maf: float, rng) -> np.ndarray:
    return sample_multinomial_index(hwe_probs(maf), rng, size=n).astype(np.int64)


# column c of a row with genotype g takes Dirichlet component _PLACE[g][c]
_PLACE = np.array([[0, 1, 2], [1, 0, 2], [1, 2, 0]])


def gen_prob_matrix(genotypes, a: float, rng) -> ProbMatrix:
    """Genotype probabilities from Dirichlet(a, (1-a)/2, (1-a)/2).

    The ``a`` component lands on the true genotype.  ``a = 1`` gives exact
    one-hot rows.
    """
    g = np.asarray(genotypes, dtype=np.int64)
    if not 0 < a <= 1:
        raise InvalidA(f"a must be in (0, 1], got {a}")
    if a == 1:
        return ProbMatrix.one_hot(g, k=3)
    b = (1.0 - a) / 2.0
    x = sample_dirichlet([a, b, b], rng, size=g.size)
    p = np.take_along_axis(x, _PLACE[g], axis=1)
    return ProbMatrix(p)


def gen_phenotype(genotypes, cfg: SimConfig, null_model: bool, rng) -> np.ndarray:
    """Normal responses with group means (null: all equal the average mean)."""
    g = np.asarray(genotypes, dtype=np.int64)
    if null_model:
        mu = cfg.null_mean()
    else:
        mu = np.asarray(cfg.alternative_means())[g]
    y = sample_normal(mu, cfg.sigma, rng, size=g.size)
    if cfg.model is Model.NONNORMAL:
        y = np.exp(y)
    return y


# ---------------------------------------------------------------------------
# the five tests over a batch of replicate responses
# ---------------------------------------------------------------------------

@dataclass
class Design:
    """Everything about a cell that stays fixed across response replicates."""

    genotypes: np.ndarray
    pm: ProbMatrix
    calls: np.ndarray
    dosages: np.ndarray

    @classmethod
    def draw(cls, cfg: SimConfig, rng_genotypes, rng_matrix) -> Design:
        g = gen_genotypes(cfg.n, cfg.maf, rng_genotypes)
        pm = gen_prob_matrix(g, cfg.a, rng_matrix)
        return cls(g, pm, classic.hard_call(pm).calls, classic.dosage(pm).dosages)


def _safe(fn, m):
    try:
        return fn()
    except (ProbKWError, np.linalg.LinAlgError):
        return np.full(m, np.nan)


def replicate_statistics(design: Design, Y: np.ndarray, tie_correct: bool = True) -> dict:
    """Statistics of the five tests for each row of ``Y``.

    A test that is undefined for the design (e.g. an empty best-guess group)
    yields ``nan`` for every replicate.  BG-KW is computed as the generalized
    statistic on the one-hot best-guess matrix, which equals the classical
    Kruskal-Wallis H.
    """
    Y = np.atleast_2d(Y)
    m = Y.shape[0]
    ranked = [rank_midrank(y) for y in Y]
    ranks = np.stack([r.ranks for r in ranked])
    ties = np.array([r.tie_sum for r in ranked])
    k = design.pm.k

    def bgkw():
        if np.bincount(design.calls, minlength=k).min() == 0:
            return np.full(m, np.nan)
        return gkw_statistics(ProbMatrix.one_hot(design.calls, k), ranks, ties, tie_correct)

    def bganova():
        if np.bincount(design.calls, minlength=k).min() == 0:
            return np.full(m, np.nan)
        return classic.anova_f(design.calls, Y, k)

    return {
        Method.GKW: _safe(lambda: gkw_statistics(design.pm, ranks, ties, tie_correct), m),
        Method.BG_KW: _safe(bgkw, m),
        Method.BG_LM: _safe(lambda: classic.ols_slope_t2(design.calls.astype(float), Y), m),
        Method.DOSAGE: _safe(lambda: classic.ols_slope_t2(design.dosages, Y), m),
        Method.BG_ANOVA: _safe(bganova, m),
    }


def statistic_pvalues(method: Method, stats: np.ndarray, n: int, k: int = 3) -> np.ndarray:
    """Reference-distribution p-values for an array of statistics."""
    def one(s):
        if math.isnan(s):
            return math.nan
        if method in (Method.GKW, Method.BG_KW, Method.KW):
            return chi2_sf(s, k - 1)
        if method in (Method.BG_LM, Method.DOSAGE):
            return t_sf2(math.sqrt(s), n - 2)
        return f_sf(s, k - 1, n - k)
    return np.array([one(float(s)) for s in stats])


def _responses(design: Design, cfg: SimConfig, null_model: bool, key: int, start: int, stop: int):
    return np.stack([
        gen_phenotype(design.genotypes, cfg, null_model, make_rng(cfg.seed, key, i))
        for i in range(start, stop)
    ])


def _run_replicates(cfg: SimConfig, null_model: bool, m: int, workers: int, block: int = 250):
    """Statistics for ``m`` replicates; blocks may run on several threads."""
    key = _NULL if null_model else _ALT
    if cfg.fresh_matrix:
        def job(bounds):
            start, stop = bounds
            parts = []
            for i in range(start, stop):
                rng = make_rng(cfg.seed, key, i)
                design = Design.draw(cfg, rng, rng)
                y = gen_phenotype(design.genotypes, cfg, null_model, rng)
                parts.append(replicate_statistics(design, y[None, :], cfg.tie_correct))
            return {t: np.concatenate([p[t] for p in parts]) for t in TEST_ORDER}
    else:
        design = cell_design(cfg)

        def job(bounds):
            Y = _responses(design, cfg, null_model, key, *bounds)
            return replicate_statistics(design, Y, cfg.tie_correct)

    bounds = [(s, min(s + block, m)) for s in range(0, m, block)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(job, bounds))
    else:
        parts = [job(b) for b in bounds]
    return {t: np.concatenate([p[t] for p in parts]) for t in TEST_ORDER}


def cell_design(cfg: SimConfig) -> Design:
    return Design.draw(cfg, make_rng(cfg.seed, _GENOTYPES), make_rng(cfg.seed, _MATRIX))


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

@dataclass
class Type1Report:
    replicates: int
    rates: dict
    thresholds: dict
    failures: dict
    ks_gkw: tuple
    statistics: dict = field(repr=False, default_factory=dict)
    pvalues: dict = field(repr=False, default_factory=dict)


@dataclass
class PowerReport:
    replicates: int
    power: dict
    relative_efficiency: dict
    thresholds: dict
    failures: dict
    statistics: dict = field(repr=False, default_factory=dict)


@dataclass
class CoverageReport:
    rows: int
    average: float
    per_group: tuple


def _rate(x: np.ndarray) -> float:
    ok = ~np.isnan(x)
    return float(np.mean(x[ok])) if ok.any() else math.nan


def run_type1(cfg: SimConfig, workers: int = 1) -> Type1Report:
    """Null replicates: rejection rates at ``alpha`` and empirical thresholds.

    The stored threshold of each test is the empirical ``1 - alpha`` quantile
    of its null statistic, used later to calibrate power comparisons.
    """
    stats = _run_replicates(cfg, True, cfg.m_null, workers)
    pvals, rates, thresholds, failures = {}, {}, {}, {}
    for t in TEST_ORDER:
        s = stats[t]
        p = statistic_pvalues(t, s, cfg.n)
        ok = ~np.isnan(s)
        pvals[t] = p
        failures[t] = int(np.count_nonzero(~ok))
        rates[t] = _rate(np.where(ok, p <= cfg.alpha, np.nan))
        thresholds[t] = float(np.quantile(s[ok], 1 - cfg.alpha)) if ok.any() else math.nan
    g = pvals[Method.GKW]
    g = g[~np.isnan(g)]
    ks = ks_uniform(g) if g.size else (math.nan, math.nan)
    return Type1Report(cfg.m_null, rates, thresholds, failures, ks, stats, pvals)


def run_power(cfg: SimConfig, thresholds: dict | None = None, workers: int = 1) -> PowerReport:
    """Alternative replicates rejected at the empirical null thresholds."""
    if thresholds is None:
        thresholds = run_type1(cfg, workers).thresholds
    stats = _run_replicates(cfg, False, cfg.m_alt, workers)
    power, failures = {}, {}
    for t in TEST_ORDER:
        s = stats[t]
        ok = ~np.isnan(s)
        failures[t] = int(np.count_nonzero(~ok))
        thr = thresholds.get(t, math.nan)
        power[t] = _rate(np.where(ok, s > thr, np.nan)) if not math.isnan(thr) else math.nan
    base = power[Method.GKW]
    rel = {t: (power[t] / base if base > 0 else math.nan) for t in TEST_ORDER}
    return PowerReport(cfg.m_alt, power, rel, dict(thresholds), failures, stats)


def run_coverage(cfg: SimConfig, rows: int | None = None) -> CoverageReport:
    """Share of subjects whose most probable genotype is the true one."""
    rows = max(cfg.n, 100_000) if rows is None else int(rows)
    g = gen_genotypes(rows, cfg.maf, make_rng(cfg.seed, _GENOTYPES, 1))
    pm = gen_prob_matrix(g, cfg.a, make_rng(cfg.seed, _MATRIX, 1))
    hit = classic.hard_call(pm).calls == g
    per = tuple(float(np.mean(hit[g == i])) if np.any(g == i) else math.nan for i in range(3))
    return CoverageReport(rows, float(np.mean(hit)), per)


@dataclass
class SimReport:
    config: SimConfig
    type1: Type1Report | None = None
    power: PowerReport | None = None
    coverage: CoverageReport | None = None

    def summary(self) -> dict:
        out = {"config": {f.name: _plain(getattr(self.config, f.name)) for f in fields(self.config)}}
        if self.type1:
            t = self.type1
            out["type1"] = {
                "replicates": t.replicates,
                "rates": _by_label(t.rates),
                "thresholds": _by_label(t.thresholds),
                "failures": _by_label(t.failures),
                "ks_gkw": {"D": t.ks_gkw[0], "p": t.ks_gkw[1]},
            }
        if self.power:
            p = self.power
            out["power"] = {
                "replicates": p.replicates,
                "power": _by_label(p.power),
                "relative_efficiency": _by_label(p.relative_efficiency),
                "thresholds": _by_label(p.thresholds),
                "failures": _by_label(p.failures),
            }
        if self.coverage:
            out["coverage"] = asdict(self.coverage)
        return out

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True, allow_nan=True)


def _plain(v):
    if isinstance(v, enum.Enum):
        return v.value
    if isinstance(v, tuple):
        return list(v)
    return v


def _by_label(d: dict) -> dict:
    return {TEST_LABELS.get(k, str(k)): v for k, v in d.items()}


def run_cell(cfg: SimConfig, type1=True, power=False, coverage=False, workers: int = 1) -> SimReport:
    rep = SimReport(cfg)
    if type1 or power:
        rep.type1 = run_type1(cfg, workers)
    if power:
        rep.power = run_power(cfg, rep.type1.thresholds, workers)
    if coverage:
        rep.coverage = run_coverage(cfg)
    return rep


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------

def _fmt(x, digits=4):
    return "NA" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.{digits}f}"


def cell_label(cfg: SimConfig) -> str:
    return f"maf={cfg.maf:g},a={cfg.a:g}"


def type1_table(reports) -> str:
    """Tests as rows, (maf, a) cells as columns, empirical type 1 error rates."""
    reports = list(reports)
    lines = ["test\t" + "\t".join(cell_label(r.config) for r in reports)]
    for t in TEST_ORDER:
        lines.append(TEST_LABELS[t] + "\t" + "\t".join(_fmt(r.type1.rates[t]) for r in reports))
    lines.append("KS_p(GKW)\t" + "\t".join(_fmt(r.type1.ks_gkw[1], 3) for r in reports))
    return "\n".join(lines) + "\n"


def power_table(reports) -> str:
    """Power and relative efficiency versus GKW for each cell."""
    reports = list(reports)
    lines = ["test\tquantity\t" + "\t".join(cell_label(r.config) for r in reports)]
    for t in TEST_ORDER:
        lines.append(f"{TEST_LABELS[t]}\tpower\t"
                     + "\t".join(_fmt(r.power.power[t], 3) for r in reports))
    for t in TEST_ORDER:
        lines.append(f"{TEST_LABELS[t]}\trelative_efficiency\t"
                     + "\t".join(_fmt(r.power.relative_efficiency[t], 3) for r in reports))
    return "\n".join(lines) + "\n"


def coverage_table(reports) -> str:
    lines = ["maf\ta\taverage\tG=0\tG=1\tG=2"]
    for r in reports:
        c = r.coverage
        lines.append(f"{r.config.maf:g}\t{r.config.a:g}\t{_fmt(c.average, 3)}\t"
                     + "\t".join(_fmt(x, 3) for x in c.per_group))
    return "\n".join(lines) + "\n"


def pvalue_table(report: SimReport) -> str:
    """Per-replicate null p-values, one column per test."""
    pv = report.type1.pvalues
    lines = ["replicate\t" + "\t".join(t.value for t in TEST_ORDER)]
    for i in range(report.type1.replicates):
        lines.append(f"{i}\t" + "\t".join(repr(float(pv[t][i])) for t in TEST_ORDER))
    return "\n".join(lines) + "\n"
