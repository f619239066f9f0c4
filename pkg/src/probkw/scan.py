"""Batch scan: one phenotype against many probabilistic-group records.

The phenotype is ranked once.  Records are read in fixed-size blocks, each
block is parsed and tested independently (optionally on a thread pool), and
results are written back in input order, so the output never depends on the
number of workers.
"""

from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dist import chi2_sf, make_rng
from .errors import LineError, ProbKWError, SubjectMismatch
from .fileio import ProbFileReader, check_block, parse_phenotype_file, parse_record_values
from .gkw import (
    MIN_EFFECTIVE_SIZE,
    OK,
    Method,
    ProbMatrix,
    TestResult,
    floor_p,
    gkw_statistic,
    gkw_statistics_records,
    small_group_warnings,
)
from .methods import run_method
from .ranking import RankedResponse, rank_midrank

BLOCK = 256


@dataclass
class ScanResult:
    index: int
    id: str
    status: str
    results: dict = field(default_factory=dict)
    warnings: tuple = ()

    @property
    def tested(self) -> bool:
        return self.status == "tested"


@dataclass(frozen=True)
class ScanContext:
    """Read-only state shared by all workers."""

    ranked: RankedResponse
    n: int
    k: int
    methods: tuple
    min_group_sum: float
    tie_correct: bool


def _skip_status(col_sums, threshold) -> str | None:
    small = [i for i, v in enumerate(col_sums) if v < threshold]
    if small:
        return "skipped:small_group(" + ",".join(map(str, small)) + ")"
    return None


def _test_block(ids, indices, P, ctx: ScanContext) -> list:
    """Filter and test a stack of ``(B, N, k)`` row-stochastic records."""
    col_sums = P.sum(axis=1)
    skip = [_skip_status(c, ctx.min_group_sum) for c in col_sums]
    live = np.array([s is None for s in skip], dtype=bool)
    gkw = {}
    if Method.GKW in ctx.methods and live.any():
        rr = ctx.ranked
        stats, _, status = gkw_statistics_records(P[live], rr.ranks, rr.tie_sum, ctx.tie_correct)
        gkw = dict(zip(np.flatnonzero(live), zip(stats, status)))
    tied = bool(ctx.tie_correct and ctx.ranked.tie_sum > 0)
    df = ctx.k - 1
    out = []
    for b, (index, rid) in enumerate(zip(indices, ids)):
        if skip[b] is not None:
            out.append(ScanResult(index, rid, skip[b]))
            continue
        warnings = small_group_warnings(col_sums[b], MIN_EFFECTIVE_SIZE)
        results, errors = {}, []
        pm = None
        for m in ctx.methods:
            try:
                if m is Method.GKW:
                    stat, code = gkw[b]
                    if code != OK:
                        # the per-record path raises the detailed error
                        gkw_statistic(ProbMatrix(P[b]), ctx.ranked, ctx.tie_correct)
                    results[m] = TestResult(float(stat), df, floor_p(chi2_sf(stat, df)),
                                            Method.GKW, warnings, tied)
                else:
                    if pm is None:
                        pm = ProbMatrix(P[b])
                    results[m] = run_method(m, pm, ctx.ranked, ctx.tie_correct)
            except ProbKWError as exc:
                results[m] = None
                errors.append(f"{m.value}={type(exc).__name__}")
        status = "tested" if not errors else "error:" + ",".join(errors)
        out.append(ScanResult(index, rid, status, results, warnings))
    return out


def test_record(index: int, rid: str, p: np.ndarray, ctx: ScanContext) -> ScanResult:
    """Filter one N x k record on effective group size, then run the requested tests."""
    p = np.asarray(p, dtype=float)
    p = p / p.sum(axis=1, keepdims=True)
    return _test_block([rid], [index], p[None], ctx)[0]


def _process_block(block, n, k, ctx: ScanContext):
    values = np.empty((len(block), n * k))
    ids, indices, lines = [], [], []
    for b, (index, line_no, raw) in enumerate(block):
        rid, values[b], _ = parse_record_values(raw, line_no, n * k, decimals=False)
        ids.append(rid)
        indices.append(index)
        lines.append(line_no)
    P = check_block(values, n, k, lines)
    P /= P.sum(axis=2, keepdims=True)
    return _test_block(ids, indices, P, ctx)


def prepare_phenotype(prob_subjects, pheno_ids, values, permute_seed=None) -> np.ndarray:
    """Phenotype values aligned to the probability-file subject order.

    With ``permute_seed`` the values are first shuffled across subjects (in
    phenotype-file order), which destroys any association.
    """
    if set(prob_subjects) != set(pheno_ids) or len(prob_subjects) != len(pheno_ids):
        missing = sorted(set(prob_subjects) ^ set(pheno_ids))[:5]
        raise SubjectMismatch(f"subject sets differ between files (e.g. {missing})")
    values = np.asarray(values, dtype=float)
    if permute_seed is not None:
        values = values[make_rng(permute_seed, 7).permutation(values.size)]
    pos = {sid: i for i, sid in enumerate(pheno_ids)}
    return values[[pos[s] for s in prob_subjects]]


def scan(prob_path, pheno_path, methods=(Method.GKW,), min_group_sum: float = 5.0,
         permute=None, workers: int = 1, tie_correct: bool = True, block: int = BLOCK):
    """Stream :class:`ScanResult` objects, one per record, in file order.

    Parameters
    ----------
    methods : iterable of Method
        Tests to run on every record that passes the filter.
    min_group_sum : float
        Records with any group's summed probability below this are skipped.
    permute : int, optional
        Seed for shuffling the phenotype before ranking (null scan).
    workers : int
        Threads used for parsing and testing.  Output is identical for any value.
    """
    ids, values = parse_phenotype_file(pheno_path)
    methods = tuple(Method(m) for m in methods)
    with ProbFileReader(prob_path) as reader:
        y = prepare_phenotype(reader.subjects, ids, values, permute)
        ranked = rank_midrank(y)
        chunks = reader.raw_chunks(block)
        try:
            first = next(chunks, None)
        except LineError as exc:
            raise exc.with_path(prob_path) from None
        if first is None:
            return
        ctx = ScanContext(ranked, reader.n, reader.k, methods, float(min_group_sum), tie_correct)
        try:
            yield from _run_blocks(first, chunks, reader, ctx, max(1, int(workers)))
        except LineError as exc:
            raise exc.with_path(prob_path) from None


def _indexed(first, chunks):
    i = 0
    for chunk in _chain(first, chunks):
        yield [(i + j, line_no, raw) for j, (line_no, raw) in enumerate(chunk)]
        i += len(chunk)


def _chain(first, rest):
    yield first
    yield from rest


def _run_blocks(first, chunks, reader, ctx, workers):
    blocks = _indexed(first, chunks)
    n, k = reader.n, reader.k
    if workers == 1:
        for b in blocks:
            yield from _process_block(b, n, k, ctx)
        return
    with ThreadPoolExecutor(workers) as ex:
        pending = deque()
        for b in blocks:
            pending.append(ex.submit(_process_block, b, n, k, ctx))
            if len(pending) >= 2 * workers:
                yield from pending.popleft().result()
        while pending:
            yield from pending.popleft().result()


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _g(x: float) -> str:
    return f"{x:.6g}"


def header_line(methods) -> str:
    cols = ["index", "id", "status"]
    for m in methods:
        v = m.value
        cols += [f"{v}_stat", f"{v}_df", f"{v}_p", f"{v}_p_full", f"{v}_neglog10p"]
    cols.append("warnings")
    return "\t".join(cols) + "\n"


def format_result(res: ScanResult, methods) -> str:
    cols = [str(res.index), res.id, res.status]
    for m in methods:
        r = res.results.get(m)
        if r is None:
            cols += ["NA"] * 5
        else:
            df = str(r.df) if r.df2 is None else f"{r.df},{r.df2}"
            cols += [repr(float(r.statistic)), df, _g(r.p_value), repr(float(r.p_value)),
                     _g(r.neg_log10_p)]
    cols.append(",".join(str(w) for w in res.warnings) or ".")
    return "\t".join(cols) + "\n"


def write_scan(results, methods, fh) -> dict:
    """Write TSV rows; returns counts of tested/skipped/error records."""
    methods = tuple(Method(m) for m in methods)
    fh.write(header_line(methods))
    counts = {"tested": 0, "skipped": 0, "error": 0}
    for res in results:
        fh.write(format_result(res, methods))
        counts[res.status.split(":", 1)[0]] += 1
    return counts


def read_scan_pvalues(path, column: str = "gkw_p_full") -> np.ndarray:
    """P-values of one column from a scan or simulation TSV (``NA`` skipped)."""
    with open(path, encoding="utf-8") as fh:
        header = None
        vals = []
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            parts = line.rstrip("\r\n").split("\t")
            if parts == header:
                continue  # repeated header of a concatenated table
            if header is None:
                header = parts
                if column not in header:
                    raise KeyError(f"column {column!r} not in {path}")
                idx = header.index(column)
                continue
            v = parts[idx]
            if v not in ("NA", "nan", ""):
                vals.append(float(v))
    return np.array(vals)


def qq_points(pvals) -> tuple[np.ndarray, np.ndarray]:
    """Expected and observed ``-log10 p`` quantiles, expected ascending."""
    p = np.sort(np.asarray(pvals, dtype=float))[::-1]
    n = p.size
    expected = -np.log10((np.arange(n, 0, -1) - 0.5) / n)
    observed = -np.log10(np.maximum(p, 1e-300))
    return expected, observed
