"""Acceptance checks, one test per numbered criterion.

Each test records a ``criterion N: PASS|FAIL`` line; the lines are printed in
the pytest terminal summary, and also when this file is run directly::

    python tests/test_acceptance.py
"""

import hashlib
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import random_groups, tied_response  # noqa: E402
from probkw import classic, dist, fileio, simkit  # noqa: E402
from probkw.gkw import (  # noqa: E402
    Method,
    ProbMatrix,
    conditional_moments,
    correlation_from_cov,
    gkw_statistic,
)
from probkw.oracle import verify_moment_identities  # noqa: E402
from probkw.ranking import rank_midrank  # noqa: E402
from probkw.scan import scan, write_scan  # noqa: E402
from probkw.simkit import SimConfig  # noqa: E402

RESULTS = {}

A_VALUES = (1.0, 0.9, 0.8, 0.7)
DESK = SimConfig(n=1000, m_null=2000, m_alt=1000, alpha=0.01, seed=2013)


def record(num, passed, detail):
    line = f"criterion {num:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    RESULTS[num] = line
    print(line)
    assert passed, line


def _type1_cells():
    if not hasattr(_type1_cells, "cache"):
        _type1_cells.cache = {
            (maf, a): simkit.run_type1(DESK.with_(maf=maf, a=a))
            for maf in (0.1, 0.2) for a in A_VALUES
        }
    return _type1_cells.cache


def test_c01_reduction_identity():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(1000):
        n = int(rng.integers(10, 201))
        k = int(rng.integers(2, 6))
        g = random_groups(rng, n, k)
        y = tied_response(rng, n, int(rng.integers(2, 8))) if i % 2 else rng.normal(size=n)
        rr = rank_midrank(y)
        h_star = gkw_statistic(ProbMatrix.one_hot(g, k), rr).statistic
        h = classic.kruskal_wallis(g, rr, k=k).statistic
        worst = max(worst, abs(h_star - h))
    elapsed = time.perf_counter() - t0
    record(1, worst <= 1e-10 and elapsed < 10,
           f"max |GKW - KW| = {worst:.2e} (<= 1e-10) over 1000 one-hot instances, {elapsed:.1f}s (< 10s)")


def test_c02_moment_oracle():
    rng = np.random.default_rng(102)
    t0 = time.perf_counter()
    worst_mean = worst_cov = 0.0
    for _ in range(200):
        k = int(rng.integers(2, 4))
        n = int(rng.integers(max(k, 3), 9))
        rep = verify_moment_identities(rng.dirichlet(np.ones(k), size=n))
        worst_mean = max(worst_mean, rep.max_mean_error)
        worst_cov = max(worst_cov, rep.max_cov_error)
    elapsed = time.perf_counter() - t0
    record(2, max(worst_mean, worst_cov) <= 1e-9 and elapsed < 60,
           f"enumerated vs closed-form moments: mean err {worst_mean:.2e}, cov err {worst_cov:.2e} "
           f"(<= 1e-9), 200 instances N<=8, {elapsed:.1f}s (< 60s)")


def test_c03_drop_group_invariance():
    rng = np.random.default_rng(103)
    worst = 0.0
    for i in range(500):
        k = int(rng.integers(3, 6))
        n = int(rng.integers(k + 5, 200))
        p = rng.dirichlet(np.full(k, rng.uniform(0.3, 3.0)), size=n)
        y = tied_response(rng, n) if i % 2 else rng.normal(size=n)
        rr = rank_midrank(y)
        vals = [gkw_statistic(p, rr, drop_group=d).statistic for d in range(k)]
        worst = max(worst, float(np.ptp(vals)))
    record(3, worst <= 1e-8, f"max spread over omitted group = {worst:.2e} (<= 1e-8), 500 instances")


def test_c04_two_group_symmetry():
    rng = np.random.default_rng(104)
    worst = 0.0
    for i in range(500):
        n = int(rng.integers(5, 200))
        p = rng.dirichlet([1.0, 1.0], size=n)
        y = tied_response(rng, n) if i % 2 else rng.normal(size=n)
        rr = rank_midrank(y)
        a = gkw_statistic(p, rr, drop_group=1).statistic
        b = gkw_statistic(p, rr, drop_group=0).statistic
        worst = max(worst, abs(a - b))
    record(4, worst <= 1e-12, f"max |H*(group 1) - H*(group 2)| = {worst:.2e} (<= 1e-12), 500 instances")


def test_c05_tie_correction_correlations():
    rng = np.random.default_rng(105)
    worst = 0.0
    for _ in range(500):
        k = int(rng.integers(2, 6))
        n = int(rng.integers(k + 3, 150))
        p = rng.dirichlet(np.ones(k), size=n)
        rr = rank_midrank(tied_response(rng, n, int(rng.integers(2, 6))))
        assert rr.has_ties
        c_on = correlation_from_cov(conditional_moments(p, rr, tie_correct=True)[1])
        c_off = correlation_from_cov(conditional_moments(p, rr, tie_correct=False)[1])
        off = ~np.eye(k, dtype=bool)
        worst = max(worst, float(np.max(np.abs(c_on - c_off)[off])))
    record(5, worst <= 1e-12, f"max off-diagonal correlation change = {worst:.2e} (<= 1e-12), 500 tied instances")


def test_c06_type1_error():
    lo, hi = 0.0033, 0.0167
    cells = _type1_cells()
    bad = []
    lo_seen, hi_seen = 1.0, 0.0
    for (maf, a), rep in cells.items():
        for t in simkit.TEST_ORDER:
            r = rep.rates[t]
            lo_seen, hi_seen = min(lo_seen, r), max(hi_seen, r)
            if not lo <= r <= hi:
                bad.append(f"{simkit.TEST_LABELS[t]}@maf={maf},a={a}:{r:.4f}")
    record(6, not bad,
           f"type 1 rates in [{lo_seen:.4f}, {hi_seen:.4f}] for 5 tests x 8 cells "
           f"(allowed [{lo}, {hi}], N=1000, M=2000)" + (f"; out: {bad}" if bad else ""))


@pytest.fixture(scope="module")
def null_scan_pvalues(tmp_path_factory):
    d = tmp_path_factory.mktemp("nullscan")
    fileio.write_synthetic_scan(d / "p.tsv", d / "y.tsv", 10_000, 400, seed=7)
    res = scan(d / "p.tsv", d / "y.tsv", permute=2013)
    return np.array([r.results[Method.GKW].p_value for r in res if r.tested])


def test_c07_null_uniformity(null_scan_pvalues):
    cells = _type1_cells()
    ks = {key: rep.ks_gkw[1] for key, rep in cells.items()}
    d, p_scan = dist.ks_uniform(null_scan_pvalues)
    ok = all(p > 0.01 for p in ks.values()) and p_scan > 0.01
    worst_cell = min(ks, key=ks.get)
    record(7, ok,
           f"GKW null KS p-values: min over 8 cells {ks[worst_cell]:.3f} at maf={worst_cell[0]},a={worst_cell[1]}; "
           f"permuted scan of {null_scan_pvalues.size} records p={p_scan:.3f} (all > 0.01)")


def test_c08_coverage():
    target = dict(zip(A_VALUES, (1.00, 0.93, 0.83, 0.74)))
    got = {a: simkit.run_coverage(SimConfig(maf=0.2, a=a), rows=200_000).average for a in A_VALUES}
    ok = all(abs(got[a] - target[a]) <= 0.01 for a in A_VALUES)
    record(8, ok, "hard-call coverage " + ", ".join(f"a={a}: {got[a]:.3f} (ref {target[a]:.2f})"
                                                    for a in A_VALUES) + " (+-0.01, 2e5 rows)")


def test_c09_equivalence_at_full_certainty():
    same_kw = same_lm = True
    worst_classic = 0.0
    for maf in (0.1, 0.2):
        cfg = DESK.with_(maf=maf, a=1.0)
        s = _type1_cells()[(maf, 1.0)].statistics
        same_kw &= bool(np.array_equal(s[Method.GKW], s[Method.BG_KW]))
        same_lm &= bool(np.array_equal(s[Method.DOSAGE], s[Method.BG_LM]))
        alt = simkit.run_power(cfg).statistics
        same_kw &= bool(np.array_equal(alt[Method.GKW], alt[Method.BG_KW]))
        same_lm &= bool(np.array_equal(alt[Method.DOSAGE], alt[Method.BG_LM]))
        # BG-KW goes through the generalized code path; cross-check it
        # against the textbook H on the hard calls for a few replicates
        design = simkit.cell_design(cfg)
        for i in range(50):
            y = simkit.gen_phenotype(design.genotypes, cfg, True, dist.make_rng(cfg.seed, 2, i))
            h = classic.kruskal_wallis(design.calls, y, k=3).statistic
            worst_classic = max(worst_classic, abs(h - s[Method.BG_KW][i]))
    record(9, same_kw and same_lm and worst_classic <= 1e-10,
           f"a=1 replicate statistics: GKW == BG-KW {same_kw}, Dosage == BG-LM {same_lm} "
           f"(exact, null and alternative); BG-KW vs textbook H max diff {worst_classic:.1e}")


def test_c10_relative_efficiency():
    cells = _type1_cells()
    sure = simkit.run_power(DESK.with_(maf=0.2, a=1.0), cells[(0.2, 1.0)].thresholds)
    unsure = simkit.run_power(DESK.with_(maf=0.1, a=0.7), cells[(0.1, 0.7)].thresholds)
    d_sure, g_sure = sure.power[Method.DOSAGE], sure.power[Method.GKW]
    re = unsure.relative_efficiency[Method.DOSAGE]
    ok = d_sure >= g_sure and 0.45 <= re <= 0.75
    record(10, ok,
           f"maf=0.2,a=1: dosage power {d_sure:.3f} >= GKW {g_sure:.3f}; "
           f"maf=0.1,a=0.7: dosage/GKW power {unsure.power[Method.DOSAGE]:.3f}/{unsure.power[Method.GKW]:.3f} "
           f"= {re:.3f} (in [0.45, 0.75])")


def test_c11_robustness_nonnormal():
    cfg = DESK.with_(maf=0.2, a=1.0, model="nonnormal")
    rep = simkit.run_cell(cfg, power=True).power
    m = rep.replicates
    g = rep.power[Method.GKW]
    parts, ok = [], True
    for t in (Method.BG_LM, Method.BG_ANOVA, Method.DOSAGE):
        c = rep.power[t]
        se = math.sqrt((g * (1 - g) + c * (1 - c)) / m)
        ok &= g >= c - 3 * se
        parts.append(f"{simkit.TEST_LABELS[t]} {c:.3f}")
    record(11, ok, f"non-normal, a=1: GKW power {g:.3f} vs " + ", ".join(parts) + " (3-SE margin)")


def test_c12_special_functions():
    x = np.linspace(0.0, 60.0, 1000)
    err_chi = max(abs(dist.chi2_sf(v, 2) - math.exp(-v / 2)) / math.exp(-v / 2) for v in x)
    err_ft = 0.0
    for d in (1, 2, 3, 5, 10, 30, 100, 998):
        for t in np.linspace(0.0, 8.0, 81):
            err_ft = max(err_ft, abs(dist.f_sf(t * t, 1, d) - dist.t_sf2(t, d)))
    record(12, err_chi <= 1e-12 and err_ft <= 1e-10,
           f"chi2_sf(x,2) vs exp(-x/2) max rel err {err_chi:.2e} (<= 1e-12, 1000 points); "
           f"F(1,d) vs t(d)^2 max err {err_ft:.2e} (<= 1e-10)")


def _digest(prob, pheno, workers):
    h = hashlib.sha256()

    class _Sink:
        def write(self, s):
            h.update(s.encode())

    t0 = time.perf_counter()
    write_scan(scan(prob, pheno, workers=workers), (Method.GKW,), _Sink())
    return h.hexdigest(), time.perf_counter() - t0


@pytest.mark.slow
def test_c13_scan_performance(tmp_path):
    import os

    prob, pheno = tmp_path / "p.tsv", tmp_path / "y.tsv"
    fileio.write_synthetic_scan(prob, pheno, 100_000, 1300, seed=13, pool=500)
    digest4, elapsed = _digest(prob, pheno, 4)
    digest1, _ = _digest(prob, pheno, 1)
    cores = os.cpu_count()
    ok = elapsed < 60 and digest1 == digest4
    record(13, ok,
           f"100,000 records x N=1300 in {elapsed:.1f}s with 4 workers on {cores} core(s) (< 60s); "
           f"workers=1 and workers=4 outputs identical: {digest1 == digest4}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
