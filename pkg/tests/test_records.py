import json
import math
import os

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from tasfem.exceptions import RecordParseError, RecordValidationError, SchemaVersionError
from tasfem.records import RecordFile, infer_format, read_records, write_records
from tasfem.tascore import BenchmarkRecord, derive_series

HEADER = "label,family,degree,dim,h,n_dofs,l2_error,time_seconds,n_procs"
DEALII_CG1 = [(10, 121, 1.71), (20, 441, 2.31), (40, 1681, 2.92), (80, 6561, 3.52), (160, 25921, 4.12), (320, 103041, 4.72)]


def synthetic(k=3):
    return [
        BenchmarkRecord("CG1 quadrilateral", "CG", 1, 2, 1 / (10 * 2**i), (10 * 2**i + 1) ** 2,
                        0.0194536 / 4**i, 0.001 * 3.3**i, extra={"iterations": 23 * 2**i, "note": "run, a"})
        for i in range(k)
    ]


def test_single_csv_row(tmp_path):
    p = tmp_path / "one.csv"
    p.write_text(HEADER + "\nCG1,CG,1,2,0.1,121,0.0194,0.01,1\n")
    rf = read_records(p)
    assert len(rf.records) == 1 and rf.records[0].n_dofs == 121


def test_zero_error_rejected(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text(HEADER + "\nCG1,CG,1,2,0.1,121,0.0194,0.01,1\nCG1,CG,1,2,0.05,441,0,0.02,1\n")
    with pytest.raises(RecordValidationError) as e:
        read_records(p)
    assert e.value.diagnostics == [(3, "err must be positive")]
    rf = read_records(p, strict=False)
    assert len(rf.records) == 1 and rf.rejected == [(3, "err must be positive")]


def test_dealii_cg1_csv_slope(tmp_path):
    p = tmp_path / "dealii_cg1.csv"
    rows = [f"deal.II quads,CG,1,2,{1 / n!r},{N},{10 ** -a!r},1.0,1" for n, N, a in DEALII_CG1]
    p.write_text(HEADER + "\n" + "\n".join(rows) + "\n")
    s = derive_series(read_records(p).records)
    assert s.convergence_slope == pytest.approx(1.03, abs=0.01)


@pytest.mark.parametrize("suffix", [".jsonl", ".csv"])
def test_round_trip(tmp_path, suffix):
    rf = RecordFile(synthetic(), {"machine": "test box", "toolkit_version": "0"})
    p = tmp_path / f"r{suffix}"
    write_records(rf, p)
    back = read_records(p)
    assert back.records == rf.records
    assert back.metadata == rf.metadata
    assert back.records[0].extra == {"iterations": 23, "note": "run, a"}


@pytest.mark.parametrize("suffix", [".jsonl", ".csv"])
def test_empty_file_valid(tmp_path, suffix):
    p = tmp_path / f"e{suffix}"
    write_records(RecordFile([], {}), p)
    assert read_records(p).records == []


def test_unknown_keys_preserved(tmp_path):
    p = tmp_path / "x.jsonl"
    line = {"label": "fenics", "family": "DG", "degree": 1, "dim": 2, "h": 0.1, "n_dofs": 600,
            "l2_error": 0.03, "time_seconds": 0.2, "solver": "hypre", "ksp": {"its": 7, "rtol": 1e-7}}
    p.write_text(json.dumps(line) + "\n")
    r = read_records(p).records[0]
    assert r.extra == {"solver": "hypre", "ksp": {"its": 7, "rtol": 1e-7}}
    assert r.n_procs == 1
    for out in ("y.jsonl", "y.csv"):
        write_records(RecordFile([r]), tmp_path / out)
        assert read_records(tmp_path / out).records[0].extra == r.extra


finite = st.floats(1e-300, 1e300, allow_nan=False, allow_infinity=False)
rec_st = st.builds(
    BenchmarkRecord,
    label=st.text(st.characters(blacklist_categories=("Cs", "Cc")), min_size=1, max_size=12),
    family=st.sampled_from(["CG", "DG", "other"]),
    degree=st.integers(0, 5),
    dim=st.integers(1, 3),
    h=finite,
    n_dofs=st.integers(2, 2**62),
    l2_error=finite,
    time_seconds=finite,
    n_procs=st.integers(1, 4096),
    extra=st.dictionaries(st.sampled_from(["a", "b", "its"]), st.one_of(st.integers(-5, 5), st.text(max_size=5), finite)),
)


@settings(suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.lists(rec_st, max_size=5), st.sampled_from([".jsonl", ".csv"]))
def test_round_trip_property(tmp_path, recs, suffix):
    p = tmp_path / f"prop{suffix}"
    write_records(RecordFile(recs, {"k": "v"}), p)
    back = read_records(p).records
    assert back == recs
    for a, b in zip(back, recs):
        assert a.h == b.h and a.l2_error == b.l2_error and a.time_seconds == b.time_seconds


def test_parse_errors(tmp_path):
    p = tmp_path / "broken.jsonl"
    p.write_text('{"schema_version": 1}\n{"label": "a",\n')
    with pytest.raises(RecordParseError) as e:
        read_records(p)
    assert e.value.line == 2 and e.value.column is not None
    c = tmp_path / "broken.csv"
    c.write_text(HEADER + "\na,CG,1,2,0.1\n")
    with pytest.raises(RecordParseError) as e:
        read_records(c)
    assert e.value.line == 2


def test_schema_version(tmp_path):
    p = tmp_path / "v9.jsonl"
    p.write_text('{"schema_version": 9, "metadata": {}}\n')
    with pytest.raises(SchemaVersionError):
        read_records(p)
    c = tmp_path / "v9.csv"
    c.write_text("# schema_version=9\n" + HEADER + "\n")
    with pytest.raises(SchemaVersionError):
        read_records(c)


def test_bad_values_diagnosed(tmp_path):
    c = tmp_path / "vals.csv"
    c.write_text(HEADER + "\na,CG,one,2,0.1,121,0.01,1,1\na,XX,1,2,0.1,121,0.01,1,1\n")
    rf = read_records(c, strict=False)
    assert rf.records == []
    lines = [line for line, _ in rf.rejected]
    assert lines == [2, 3]


def test_format_inference(tmp_path):
    assert infer_format("a.csv") == "csv" and infer_format("a.jsonl") == "json-lines"
    with pytest.raises(ValueError):
        infer_format("a.txt")


def test_atomic_write(tmp_path, monkeypatch):
    p = tmp_path / "keep.jsonl"
    write_records(RecordFile(synthetic(1)), p)
    before = p.read_bytes()

    def boom(*a, **k):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", boom)
    with pytest.raises(OSError):
        write_records(RecordFile(synthetic(3)), p)
    assert p.read_bytes() == before
    assert sorted(os.listdir(tmp_path)) == ["keep.jsonl"]


def test_shortest_decimal_text(tmp_path):
    r = BenchmarkRecord("x", "CG", 1, 2, 0.1, 121, 0.1 + 0.2, 1 / 3)
    p = tmp_path / "d.csv"
    write_records(RecordFile([r]), p)
    text = p.read_text()
    assert "0.30000000000000004" in text and repr(1 / 3) in text
    assert math.isclose(read_records(p).records[0].time_seconds, 1 / 3, rel_tol=0)
