import math
import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tasfem.report import DIAGRAM_KINDS, DiagramSpec, linear_ticks, log_ticks, nice_step, render_svg, render_table
from tasfem.tascore import BenchmarkRecord, ModelParams, derive_series, model_records

NS = {"s": "http://www.w3.org/2000/svg"}


def series(label="s", ks=(2, 3, 4, 5), slope=1.0, t0=1e-3):
    return derive_series(
        [BenchmarkRecord(label, "CG", 1, 2, 10.0**(-k / 2), 10**k, 10.0 ** (-slope * k), t0 * 10**k) for k in ks]
    )


def polylines(svg):
    root = ET.fromstring(svg)
    return [
        [tuple(map(float, p.split(","))) for p in pl.get("points").split()]
        for pl in root.iter("{http://www.w3.org/2000/svg}polyline")
    ]


def to_user(svg, pt):
    root = ET.fromstring(svg)
    g = root.find("s:g[@class='plot-area']", NS)
    x0, x1 = map(float, g.get("data-xlim").split())
    y0, y1 = map(float, g.get("data-ylim").split())
    left, top, w, h = map(float, g.get("data-box").split())
    u = x0 + (pt[0] - left) / w * (x1 - x0)
    v = y0 + (top + h - pt[1]) / h * (y1 - y0)
    return u, v


def test_slope_one_polyline():
    svg = render_svg(DiagramSpec("mesh_convergence", [series()]))
    (pl,) = polylines(svg)
    (xa, ya), (xb, yb) = to_user(svg, pl[0]), to_user(svg, pl[-1])
    assert (yb - ya) / (xb - xa) == pytest.approx(1.0, abs=2e-3)
    assert "slope 1.00" in svg


def test_model_doe_flat():
    s = derive_series(model_records(ModelParams(C=10, W=0.1, alpha=2, d=2)))
    (pl,) = polylines(render_svg(DiagramSpec("doe", [s])))
    assert len({y for _, y in pl}) == 1


def test_legend_order_and_determinism():
    a, b = series("alpha"), series("beta", slope=1.5)
    one = render_svg(DiagramSpec("static_scaling", [b, a]))
    two = render_svg(DiagramSpec("static_scaling", [a, b]))
    assert one == two
    root = ET.fromstring(one)
    legend = root.find("s:g[@class='legend']", NS)
    labels = [t.text for t in legend.findall("s:text", NS)]
    assert labels == ["alpha", "beta"]
    assert [g.get("data-label") for g in root.findall("s:g[@class='series']", NS)] == ["alpha", "beta"]


@pytest.mark.parametrize("kind", DIAGRAM_KINDS)
def test_valid_svg_every_kind(kind):
    svg = render_svg(DiagramSpec(kind, [series("a"), series("b", slope=2.0)], guides=[1.0, 1.5]))
    root = ET.fromstring(svg)
    assert root.tag == "{http://www.w3.org/2000/svg}svg" and root.get("version") == "1.1"
    assert len(polylines(svg)) == 2


def test_axes_follow_kind():
    spec = DiagramSpec("doe", [series()])
    assert spec.x_log and not spec.y_log
    spec = DiagramSpec("mesh_convergence", [series()])
    assert not spec.x_log and not spec.y_log
    with pytest.raises(ValueError):
        DiagramSpec("histogram", [series()])


def test_empty_series_rejected():
    with pytest.raises(ValueError):
        render_svg(DiagramSpec("doe", []))


def test_out_of_domain_records():
    recs = [BenchmarkRecord("x", "CG", 1, 2, 0.5, 9, 2.0, 0.001)] + list(series("x").records)
    s = derive_series(recs)
    digit = render_svg(DiagramSpec("mesh_convergence", [s]))
    assert len(polylines(digit)[0]) == 4 and "omitted" in digit
    raw = render_svg(DiagramSpec("static_scaling", [s]))
    assert len(polylines(raw)[0]) == 5 and "omitted" not in raw


def test_tick_ladder():
    for lo, hi in [(0, 1), (1.3, 7.9), (-0.02, 0.03), (100, 12345)]:
        step = nice_step(hi - lo)
        mant = step / 10 ** math.floor(math.log10(step))
        assert round(mant, 9) in (1.0, 2.0, 5.0)
        ticks = linear_ticks(lo, hi)
        assert ticks[0] >= lo - 1e-9 and ticks[-1] <= hi + 1e-9
    for v in log_ticks(-3.2, -2.1) + log_ticks(0, 12):
        mant = v / 10 ** math.floor(math.log10(v) + 1e-12)
        assert round(mant, 9) in (1.0, 2.0, 5.0)


def test_table_single_row_and_rounding():
    r = BenchmarkRecord("x", "CG", 1, 2, 0.1, 121, 10**-1.711, 0.01)
    text = render_table([derive_series([r])])
    rows = [line for line in text.splitlines() if line.strip().startswith("1/10")]
    assert len(rows) == 1
    assert rows[0].split()[1:] == ["121", "2.08", "1.71", "0.82"]


def test_table_full_columns():
    text = render_table([series()], style="full")
    header = text.splitlines()[1]
    for col in ("DoF", "DoS", "DoA", "DoA/DoS", "T (s)", "N/T", "DoE", "true N/T"):
        assert col in header
    with pytest.raises(ValueError):
        render_table([series()], style="wide")


@given(st.lists(st.tuples(st.integers(2, 10**9), st.floats(1e-12, 0.99)), min_size=1, max_size=6, unique_by=lambda t: t[0]))
def test_table_ratio_matches_unrounded(rows):
    recs = [BenchmarkRecord("p", "CG", 1, 2, 1 / math.sqrt(n), n, e, 1.0) for n, e in rows]
    s = derive_series(recs)
    text = render_table([s])
    body = text.splitlines()[3 : 3 + len(recs)]
    for line, i in zip(body, range(len(recs))):
        printed = line.split()[4]
        assert printed == f"{round(s.doa[i] / s.dos[i], 2):.2f}"
    assert render_table([s]) == text
