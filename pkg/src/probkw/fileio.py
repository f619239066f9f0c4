"""Probability, phenotype and simulation-config file formats.

Probability files are record-major TSV::

    #k<TAB>3
    #subjects<TAB>id1<TAB>id2<TAB>...
    rs123<TAB>p_1,0<TAB>p_1,1<TAB>p_1,2<TAB>p_2,0<TAB>...

one line per record (e.g. a SNP) holding the N x k probabilities in subject
order.  Other ``#`` lines are comments.  Phenotype files have two columns,
``subject_id<TAB>value``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numba
import numpy as np

from .dist import make_rng
from .errors import (
    ConfigError,
    DuplicateSubject,
    LineError,
    MalformedHeader,
    MalformedRecord,
    NonNumericValue,
    RowSumViolation,
    SubjectCountMismatch,
)
from .gkw import ROW_SUM_TOL

_TAB, _NL, _CR, _DOT = 9, 10, 13, 46
_POW10 = 10.0 ** np.arange(23)


@numba.njit(cache=True, nogil=True)
def _parse_decimals(buf, start, out, decs):
    """Parse tab-separated plain decimals (``123.456``) from ``buf[start:]``.

    Returns the number of fields, or -1 if any field is not a plain decimal
    with at most 15 significant digits (the caller then falls back to
    ``float``).  Results equal ``float(field)``: the mantissa is exact and the
    single division by a power of ten is correctly rounded.
    """
    n = buf.size
    i = start
    k = 0
    while i < n:
        c = buf[i]
        if c == _NL or c == _CR:
            break
        mant = 0.0
        dec = 0
        ndig = 0
        seen_dot = False
        while i < n:
            c = buf[i]
            if c >= 48 and c <= 57:
                mant = mant * 10.0 + (c - 48)
                ndig += 1
                if seen_dot:
                    dec += 1
            elif c == _DOT and not seen_dot:
                seen_dot = True
            elif c == _TAB or c == _NL or c == _CR:
                break
            else:
                return -1
            i += 1
        if ndig == 0 or ndig > 15 or k >= out.size:
            return -1
        out[k] = mant / _POW10[dec]
        decs[k] = dec if seen_dot else -1
        k += 1
        if i < n and buf[i] == _TAB:
            i += 1
            if i == n or buf[i] == _NL or buf[i] == _CR:
                return -1  # trailing empty field
    return k


@dataclass
class ScanRecord:
    """One record: identifier and its N x k probability block (as parsed)."""

    id: str
    probs: np.ndarray
    line: int = 0
    decimals: int | None = None


@dataclass(frozen=True)
class ProbFileHeader:
    subjects: tuple
    k: int | None
    data_line: int  # 1-based line number of the first line after the header


def _split_record(raw: bytes, line_no: int) -> tuple[str, int]:
    tab = raw.find(b"\t")
    if tab <= 0:
        raise MalformedRecord(line_no, "expected '<record_id><TAB><probabilities>'")
    return raw[:tab].decode("utf-8"), tab + 1


def parse_record_values(raw: bytes, line_no: int, expected: int, decimals: bool = True):
    """Numeric fields of a record line -> (id, values, fixed decimal count or None)."""
    rid, start = _split_record(raw, line_no)
    out = np.empty(expected, dtype=float)
    decs = np.empty(expected, dtype=np.int8)
    buf = np.frombuffer(raw, dtype=np.uint8)
    count = _parse_decimals(buf, start, out, decs)
    if count == expected:
        if not decimals:
            return rid, out, None
        d0 = int(decs[0])
        fixed = d0 if d0 >= 0 and np.all(decs == d0) else None
        return rid, out, fixed
    # slow path: exponents, signs, NA, wrong field count
    parts = raw[start:].rstrip(b"\r\n").split(b"\t")
    if len(parts) != expected:
        raise SubjectCountMismatch(
            line_no, f"record {rid!r} has {len(parts)} probabilities, expected {expected}")
    try:
        vals = np.array([float(x) for x in parts])
    except ValueError:
        bad = next(x for x in parts if not _is_float(x))
        raise NonNumericValue(line_no, f"non-numeric probability {bad.decode(errors='replace')!r}") from None
    return rid, vals, None


def _is_float(x) -> bool:
    try:
        float(x)
        return True
    except ValueError:
        return False


def check_rows(values: np.ndarray, n: int, k: int, line_no: int, tol: float = ROW_SUM_TOL) -> np.ndarray:
    p = values.reshape(n, k)
    if not np.all(np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        j = int(np.flatnonzero(~((p >= 0) & (p <= 1)).all(axis=1))[0])
        raise RowSumViolation(line_no, f"subject {j}: probabilities outside [0, 1]")
    s = p.sum(axis=1)
    bad = np.flatnonzero(np.abs(s - 1.0) > tol)
    if bad.size:
        j = int(bad[0])
        raise RowSumViolation(line_no, f"subject {j}: probabilities sum to {s[j]:.6g}")
    return p


def check_block(values: np.ndarray, n: int, k: int, line_nos, tol: float = ROW_SUM_TOL) -> np.ndarray:
    """Row checks for a stack of records; reports the first bad line."""
    P = values.reshape(-1, n, k)
    inside = np.isfinite(P) & (P >= 0) & (P <= 1)
    s = P.sum(axis=2)
    ok = inside.all(axis=(1, 2)) & (np.abs(s - 1.0) <= tol).all(axis=1)
    if not ok.all():
        b = int(np.flatnonzero(~ok)[0])
        check_rows(values[b], n, k, line_nos[b], tol)
    return P


class ProbFileReader:
    """Streaming reader for record-major probability files.

    Use as a context manager; iterate for :class:`ScanRecord` objects or call
    :meth:`raw_chunks` to receive unparsed lines in blocks.
    """

    def __init__(self, path):
        self.path = path
        self._fh = open(path, "rb")
        self.header = self._read_header()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def close(self):
        self._fh.close()

    @property
    def subjects(self) -> tuple:
        return self.header.subjects

    @property
    def n(self) -> int:
        return len(self.header.subjects)

    def _read_header(self) -> ProbFileHeader:
        k = None
        line_no = 0
        for raw in self._fh:
            line_no += 1
            text = raw.rstrip(b"\r\n")
            if not text.strip():
                continue
            if not text.startswith(b"#"):
                break
            fields_ = text.decode("utf-8").split("\t")
            tag = fields_[0]
            if tag == "#k":
                try:
                    k = int(fields_[1])
                except (IndexError, ValueError):
                    raise MalformedHeader(f"{self.path}:{line_no}: bad '#k' line") from None
                if k < 2:
                    raise MalformedHeader(f"{self.path}:{line_no}: k must be >= 2")
            elif tag == "#subjects":
                subjects = tuple(fields_[1:])
                if not subjects or any(not s for s in subjects):
                    raise MalformedHeader(f"{self.path}:{line_no}: empty subject list")
                if len(set(subjects)) != len(subjects):
                    raise MalformedHeader(f"{self.path}:{line_no}: duplicate subject IDs")
                return ProbFileHeader(subjects, k, line_no + 1)
        raise MalformedHeader(f"{self.path}: missing '#subjects' header line")

    def _lines(self):
        line_no = self.header.data_line - 1
        for raw in self._fh:
            line_no += 1
            if raw.startswith(b"#") or not raw.strip():
                continue
            yield line_no, raw

    def _infer_k(self, raw: bytes, line_no: int) -> int:
        _, start = _split_record(raw, line_no)
        nf = raw[start:].rstrip(b"\r\n").count(b"\t") + 1
        if nf % self.n or nf // self.n < 2:
            raise SubjectCountMismatch(
                line_no, f"{nf} probabilities is not a multiple of {self.n} subjects")
        return nf // self.n

    def raw_chunks(self, size: int):
        """Yield lists of ``(line_no, raw_bytes)`` with at most ``size`` records."""
        chunk = []
        for line_no, raw in self._lines():
            if self.k is None:
                self.k = self._infer_k(raw, line_no)
            chunk.append((line_no, raw))
            if len(chunk) == size:
                yield chunk
                chunk = []
        if chunk:
            yield chunk

    @property
    def k(self):
        return getattr(self, "_k", None) or self.header.k

    @k.setter
    def k(self, value):
        self._k = value

    def parse(self, line_no: int, raw: bytes) -> ScanRecord:
        n, k = self.n, self.k
        rid, vals, fixed = parse_record_values(raw, line_no, n * k)
        p = check_rows(vals, n, k, line_no)
        return ScanRecord(rid, p, line_no, fixed)

    def __iter__(self):
        try:
            for chunk in self.raw_chunks(256):
                for line_no, raw in chunk:
                    yield self.parse(line_no, raw)
        except LineError as exc:
            raise exc.with_path(self.path) from None


def parse_prob_file(path):
    """Header and record stream of a probability file.

    Returns ``(header, records)``; ``records`` is a generator that keeps the
    file open until exhausted.
    """
    reader = ProbFileReader(path)

    def records():
        with reader:
            yield from reader

    return reader.header, records()


def read_prob_file(path) -> tuple[ProbFileHeader, list[ScanRecord]]:
    header, records = parse_prob_file(path)
    return header, list(records)


def format_record(rec: ScanRecord) -> str:
    vals = rec.probs.ravel()
    if rec.decimals is not None:
        d = rec.decimals
        body = "\t".join(f"{v:.{d}f}" for v in vals)
    else:
        body = "\t".join(repr(float(v)) for v in vals)
    return f"{rec.id}\t{body}\n"


def format_header(subjects, k: int) -> str:
    return f"#k\t{k}\n#subjects\t" + "\t".join(subjects) + "\n"


def write_prob_file(path, subjects, records, k: int | None = None):
    records = list(records)
    if k is None:
        k = records[0].probs.shape[1]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_header(subjects, k))
        for rec in records:
            fh.write(format_record(rec))


# ---------------------------------------------------------------------------
# phenotype file
# ---------------------------------------------------------------------------

def parse_phenotype_file(path) -> tuple[list[str], np.ndarray]:
    """Two-column TSV ``subject_id<TAB>value``; file order is subject order."""
    try:
        return _parse_phenotype(path)
    except LineError as exc:
        raise exc.with_path(path) from None


def _parse_phenotype(path):
    ids, values, seen = [], [], {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            text = line.rstrip("\r\n")
            if not text.strip() or text.startswith("#"):
                continue
            parts = text.split("\t")
            if len(parts) != 2:
                raise MalformedRecord(line_no, "expected 'subject_id<TAB>value'")
            sid, raw = parts[0].strip(), parts[1].strip()
            if sid in seen:
                raise DuplicateSubject(line_no, f"subject {sid!r} already on line {seen[sid]}")
            try:
                v = float(raw)
            except ValueError:
                raise NonNumericValue(line_no, f"non-numeric phenotype {raw!r}") from None
            if not math.isfinite(v):
                raise NonNumericValue(line_no, f"non-finite phenotype {raw!r}")
            seen[sid] = line_no
            ids.append(sid)
            values.append(v)
    return ids, np.array(values, dtype=float)


def write_phenotype_file(path, ids, values):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for sid, v in zip(ids, values):
            fh.write(f"{sid}\t{float(v)!r}\n")


# ---------------------------------------------------------------------------
# synthetic data
# ---------------------------------------------------------------------------

def round_rows_fixed(p: np.ndarray, decimals: int = 3) -> np.ndarray:
    """Round each row to ``decimals`` places keeping the exact row total of one.

    Largest-remainder rounding on integer units of ``10**-decimals``.
    """
    unit = 10 ** decimals
    scaled = p * unit
    base = np.floor(scaled).astype(np.int64)
    short = unit - base.sum(axis=-1)
    frac = scaled - base
    order = np.argsort(-frac, axis=-1, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(p.shape[-1])[None, :].repeat(p.shape[0], 0), axis=-1)
    base += ranks < short[:, None]
    return base


def format_fixed_block(units: np.ndarray, decimals: int = 3) -> bytes:
    """Tab-joined ``d.ddd`` text for integer units in ``[0, 10**decimals]``."""
    u = units.ravel()
    width = decimals + 3  # "d." + digits + tab
    out = np.empty((u.size, width), dtype=np.uint8)
    out[:, 0] = 48 + u // 10 ** decimals
    out[:, 1] = _DOT
    rem = u % 10 ** decimals
    for i in range(decimals):
        out[:, 2 + i] = 48 + (rem // 10 ** (decimals - 1 - i)) % 10
    out[:, -1] = _TAB
    return out.tobytes()[:-1]


def write_synthetic_scan(prob_path, pheno_path, n_records: int, n_subjects: int,
                         seed: int = 0, a_values=(1.0, 0.9, 0.8, 0.7),
                         maf_range=(0.05, 0.5), pool: int | None = None):
    """Write a synthetic genome-scan pair of files.

    Each record draws its own minor allele frequency and uncertainty level
    ``a``; genotypes follow Hardy-Weinberg and probabilities the Dirichlet
    model, rounded to three decimals.  The phenotype is standard normal and
    independent of every record.  With ``pool`` set, only that many distinct
    probability blocks are generated and reused cyclically (fast, for
    throughput tests).
    """
    from .simkit import gen_genotypes, gen_prob_matrix

    subjects = [f"s{i}" for i in range(n_subjects)]
    y = make_rng(seed, 0).normal(size=n_subjects)
    write_phenotype_file(pheno_path, subjects, y)
    distinct = n_records if pool is None else min(pool, n_records)
    blocks = []
    with open(prob_path, "wb") as fh:
        fh.write(format_header(subjects, 3).encode())
        for r in range(n_records):
            if r < distinct:
                rng = make_rng(seed, 1, r)
                maf = rng.uniform(maf_range[0], min(maf_range[1], 0.4999))
                a = a_values[int(rng.integers(len(a_values)))]
                g = gen_genotypes(n_subjects, maf, rng)
                p = gen_prob_matrix(g, a, rng).p
                body = format_fixed_block(round_rows_fixed(p))
                if pool is not None:
                    blocks.append(body)
            else:
                body = blocks[r % distinct]
            fh.write(f"rec{r}\t".encode())
            fh.write(body)
            fh.write(b"\n")
    return subjects, y


# ---------------------------------------------------------------------------
# simulation config
# ---------------------------------------------------------------------------

def load_sim_config(path) -> list:
    """Read ``key=value`` lines into one SimConfig per (maf, a) combination.

    Keys are SimConfig field names.  ``maf`` and ``a`` may hold
    comma-separated lists, which expand into a grid (maf-major).  ``means`` is
    a comma-separated triple.
    """
    from .simkit import SimConfig

    types = {f.name: f.type for f in fields(SimConfig)}
    raw = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{line_no}: expected key=value")
            key, val = (s.strip() for s in text.split("=", 1))
            if key not in types:
                raise ConfigError(f"{path}:{line_no}: unknown key {key!r}")
            raw[key] = val

    def conv(key, val):
        try:
            if key in ("n", "m_null", "m_alt", "seed"):
                return int(val)
            if key in ("fresh_matrix", "tie_correct"):
                if val.lower() not in ("true", "false", "1", "0", "yes", "no", "on", "off"):
                    raise ValueError(val)
                return val.lower() in ("true", "1", "yes", "on")
            if key == "means":
                return tuple(float(x) for x in val.split(","))
            if key == "model":
                return val.lower()
            return float(val)
        except ValueError:
            raise ConfigError(f"bad value for {key}: {val!r}") from None

    mafs = [conv("maf", v) for v in raw.pop("maf", "0.2").split(",")]
    avals = [conv("a", v) for v in raw.pop("a", "1").split(",")]
    base = {k: conv(k, v) for k, v in raw.items()}
    try:
        return [SimConfig(maf=m, a=a, **base) for m in mafs for a in avals]
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
