import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from probkw import fileio
from probkw.errors import (
    ConfigError,
    DuplicateSubject,
    MalformedHeader,
    MalformedRecord,
    NonNumericValue,
    RowSumViolation,
    SubjectCountMismatch,
)

THREE_SUBJECTS = (
    "#k\t3\n"
    "#subjects\tS1\tS2\tS3\n"
    "rs1\t0.925\t0.045\t0.030\t0.156\t0.102\t0.742\t0.375\t0.410\t0.215\n"
)


def _write(tmp_path, text, name="p.tsv"):
    path = tmp_path / name
    path.write_bytes(text.encode())
    return path


def test_three_subject_round_trip(tmp_path):
    src = _write(tmp_path, THREE_SUBJECTS)
    header, records = fileio.read_prob_file(src)
    assert header.subjects == ("S1", "S2", "S3") and header.k == 3
    (rec,) = records
    assert rec.id == "rs1" and rec.decimals == 3 and rec.line == 3
    np.testing.assert_array_equal(rec.probs[1], [0.156, 0.102, 0.742])
    out = tmp_path / "out.tsv"
    fileio.write_prob_file(out, header.subjects, records)
    assert out.read_bytes() == src.read_bytes()


def test_round_trip_full_precision(tmp_path):
    p = np.random.default_rng(0).dirichlet([1, 1, 1], size=4)
    rec = fileio.ScanRecord("x", p)
    path = tmp_path / "a.tsv"
    fileio.write_prob_file(path, ["a", "b", "c", "d"], [rec])
    _, (back,) = fileio.read_prob_file(path)
    np.testing.assert_array_equal(back.probs, p)
    again = tmp_path / "b.tsv"
    fileio.write_prob_file(again, ["a", "b", "c", "d"], [back])
    assert again.read_bytes() == path.read_bytes()


def test_k_inferred_without_header_line(tmp_path):
    text = "# comment\n#subjects\ta\tb\nr\t0.5\t0.5\t1\t0\n"
    header, (rec,) = fileio.read_prob_file(_write(tmp_path, text))
    assert header.k is None and rec.probs.shape == (2, 2)


def test_row_sum_violation_reports_line(tmp_path):
    text = THREE_SUBJECTS + "rs2\t0.5\t0.3\t0.1\t0.156\t0.102\t0.742\t0.375\t0.410\t0.215\n"
    with pytest.raises(RowSumViolation) as exc:
        fileio.read_prob_file(_write(tmp_path, text))
    assert exc.value.line == 4
    assert "p.tsv:4" in str(exc.value)


def test_empty_file_is_malformed_header(tmp_path):
    with pytest.raises(MalformedHeader):
        fileio.read_prob_file(_write(tmp_path, ""))
    with pytest.raises(MalformedHeader):
        fileio.read_prob_file(_write(tmp_path, "#subjects\ta\ta\n"))
    with pytest.raises(MalformedHeader):
        fileio.read_prob_file(_write(tmp_path, "#k\tx\n#subjects\ta\n"))


def test_record_errors(tmp_path):
    head = "#k\t2\n#subjects\ta\tb\n"
    with pytest.raises(SubjectCountMismatch) as exc:
        fileio.read_prob_file(_write(tmp_path, head + "r\t0.5\t0.5\t1\n"))
    assert exc.value.line == 3
    with pytest.raises(NonNumericValue):
        fileio.read_prob_file(_write(tmp_path, head + "r\t0.5\tNA\t1\t0\n"))
    with pytest.raises(MalformedRecord):
        fileio.read_prob_file(_write(tmp_path, head + "justanid\n"))


def test_scientific_notation_falls_back(tmp_path):
    head = "#k\t2\n#subjects\ta\tb\n"
    _, (rec,) = fileio.read_prob_file(_write(tmp_path, head + "r\t5e-1\t0.5\t1.0E0\t0\n"))
    np.testing.assert_array_equal(rec.probs, [[0.5, 0.5], [1.0, 0.0]])
    assert rec.decimals is None


@given(st.lists(st.decimals(min_value=0, max_value=1, places=6, allow_nan=False),
                min_size=1, max_size=30))
@settings(max_examples=200, deadline=None)
def test_fast_parser_equals_float(values):
    text = "\t".join(str(v) for v in values)
    raw = b"r\t" + text.encode()
    _, out, _ = fileio.parse_record_values(raw, 1, len(values))
    assert [float(x) for x in out] == [float(str(v)) for v in values]


@given(st.integers(0, 10**15 - 1), st.integers(0, 15))
@settings(max_examples=500, deadline=None)
def test_fast_parser_correct_rounding(mant, dec):
    s = str(mant)
    if dec:
        s = s.rjust(dec + 1, "0")
        s = s[:-dec] + "." + s[-dec:]
    _, out, _ = fileio.parse_record_values(b"r\t" + s.encode(), 1, 1)
    assert out[0] == float(s)


def test_phenotype_file(tmp_path):
    ids, y = fileio.parse_phenotype_file(_write(tmp_path, "s2\t1.5\n# note\ns1\t-2\ns3\t0.25\n"))
    assert ids == ["s2", "s1", "s3"]
    np.testing.assert_array_equal(y, [1.5, -2.0, 0.25])


def test_phenotype_errors(tmp_path):
    with pytest.raises(DuplicateSubject):
        fileio.parse_phenotype_file(_write(tmp_path, "a\t1\nb\t2\na\t3\n"))
    with pytest.raises(NonNumericValue) as exc:
        fileio.parse_phenotype_file(_write(tmp_path, "a\t1\nb\tNA\n"))
    assert exc.value.line == 2
    with pytest.raises(MalformedRecord):
        fileio.parse_phenotype_file(_write(tmp_path, "a\t1\t2\n"))


def test_phenotype_round_trip(tmp_path):
    y = np.random.default_rng(1).normal(size=5)
    path = tmp_path / "y.tsv"
    fileio.write_phenotype_file(path, list("abcde"), y)
    ids, back = fileio.parse_phenotype_file(path)
    assert ids == list("abcde")
    np.testing.assert_array_equal(back, y)


def test_round_rows_fixed_keeps_unit_sums():
    p = np.random.default_rng(4).dirichlet([0.3, 0.3, 0.3], size=5000)
    units = fileio.round_rows_fixed(p)
    assert np.all(units.sum(axis=1) == 1000)
    assert np.max(np.abs(units / 1000 - p)) < 1e-3 + 1e-12
    text = fileio.format_fixed_block(units[:2]).decode()
    assert text == "\t".join(f"{u / 1000:.3f}" for u in units[:2].ravel())


def test_synthetic_scan_files(tmp_path):
    subjects, y = fileio.write_synthetic_scan(tmp_path / "p.tsv", tmp_path / "y.tsv", 20, 50, seed=2)
    header, recs = fileio.read_prob_file(tmp_path / "p.tsv")
    assert header.subjects == tuple(subjects) and len(recs) == 20
    assert all(r.decimals == 3 for r in recs)
    ids, back = fileio.parse_phenotype_file(tmp_path / "y.tsv")
    np.testing.assert_array_equal(back, y)


def test_load_sim_config_grid(tmp_path):
    path = _write(tmp_path, "n=500  # subjects\nmaf=0.1,0.2\na=1,0.8\nmeans=1,2,3\nmodel=nonnormal\n"
                  "tie_correct=off\n", "cfg.txt")
    cfgs = fileio.load_sim_config(path)
    assert [(c.maf, c.a) for c in cfgs] == [(0.1, 1.0), (0.1, 0.8), (0.2, 1.0), (0.2, 0.8)]
    assert cfgs[0].n == 500 and cfgs[0].means == (1.0, 2.0, 3.0)
    assert cfgs[0].model.value == "nonnormal" and cfgs[0].tie_correct is False


@pytest.mark.parametrize("text", ["bogus=1\n", "n\n", "n=abc\n", "maf=0.7\n", "model=weird\n"])
def test_load_sim_config_errors(tmp_path, text):
    with pytest.raises(ConfigError):
        fileio.load_sim_config(_write(tmp_path, text, "cfg.txt"))
