import math
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tasfem.exceptions import DomainError, GroupingError
from tasfem.tascore import (
    BenchmarkRecord,
    ModelParams,
    RecordInvariantError,
    derive_series,
    doe,
    doe_slope_prediction,
    fit_slope,
    group_records,
    model_curves,
    model_records,
    true_static_scaling_point,
)

DEALII_CG1_N = [121, 441, 1681, 6561, 25921, 103041]
DEALII_CG1_DOA = [1.71, 2.31, 2.92, 3.52, 4.12, 4.72]


def rec(n, err, t, label="m", h=None, **kw):
    kw.setdefault("family", "CG")
    kw.setdefault("degree", 1)
    kw.setdefault("dim", 2)
    return BenchmarkRecord(label, h=h or 1 / math.sqrt(n), n_dofs=n, l2_error=err, time_seconds=t, **kw)


def test_doe_examples():
    assert doe(1e-3, 10) == pytest.approx(2.0)
    assert doe(0.1, 10) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(DomainError):
        doe(0, 1)
    with pytest.raises(DomainError):
        doe(1, 0)


def test_doe_zero_when_alpha_equals_d():
    for h in (0.1, 1 / 37, 1e-3, 1e-7):
        err, T = 10 * h**2, 0.1 * h**-2
        assert doe(err, T) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("alpha,d,slope", [(2, 2, 0), (3, 2, -1), (4, 3, -1)])
def test_doe_slope_prediction(alpha, d, slope):
    assert doe_slope_prediction(alpha, d) == slope


def test_slope_one_series():
    rs = [rec(10**k, 10.0**-k, 1.0) for k in (2, 3, 4, 5)]
    assert derive_series(rs).convergence_slope == pytest.approx(1.0, abs=1e-12)


def test_dealii_cg1_slope():
    rs = [rec(n, 10**-a, 1.0) for n, a in zip(DEALII_CG1_N, DEALII_CG1_DOA)]
    s = derive_series(rs)
    ref = np.polyfit(np.log10(DEALII_CG1_N), DEALII_CG1_DOA, 1)[0]
    assert s.convergence_slope == pytest.approx(ref, rel=1e-12)
    # the quoted 1.027 is the endpoint quotient; least squares over all six rows gives 1.0256
    assert (4.72 - 1.71) / (5.01 - 2.08) == pytest.approx(1.027, abs=5e-4)
    assert s.convergence_slope == pytest.approx(1.027, abs=2e-3)
    assert derive_series(rs, finest_k=3).convergence_slope == pytest.approx(
        np.polyfit(np.log10(DEALII_CG1_N[-3:]), DEALII_CG1_DOA[-3:], 1)[0], rel=1e-12
    )


def test_single_record():
    s = derive_series([rec(121, 0.02, 0.5)])
    assert s.convergence_slope is None and s.doe_slope is None
    assert "not-enough-points" in s.notes
    assert s.doa[0] == pytest.approx(-math.log10(0.02))


def test_true_static_scaling_point():
    assert true_static_scaling_point(rec(100, 0.01, 1.0)) == pytest.approx(100.0)
    r = rec(121, 10**-1.71, 0.25)
    assert true_static_scaling_point(r) == pytest.approx(1.71 / math.log10(121) * 121 / 0.25)


def test_true_static_scaling_asymptote_closed_form():
    # alpha=d=2, C=10, D=4, W=1e-5: (DoA/DoS)(D/W) with DoA = -2 log h - 1, DoS = -2 log h + log 4
    p = ModelParams(C=10, W=1e-5, D=4, alpha=2, d=2, h_values=(1e-3, 1e-6))
    rate = model_curves(p)["columns"]["true_rate"][-1]
    expected = (12 - 1) / (12 + math.log10(4)) * 4e5
    assert rate == pytest.approx(expected, rel=1e-12)
    # converges towards (alpha/d) * D/W only logarithmically
    assert abs(rate / 4e5 - 1) > 0.02


def test_model_examples():
    flat = model_curves(ModelParams())
    np.testing.assert_allclose(flat["columns"]["doe"], 0.0, atol=1e-12)
    np.testing.assert_array_equal(flat["columns"]["rate"], 10.0)
    assert all(y == 10.0 for _, y in flat["static_scaling"])
    c = model_curves(ModelParams(alpha=3))["columns"]
    assert np.all(np.diff(c["doe"]) > 0)
    assert fit_slope(c["log10_h"], c["doe"]) == pytest.approx(-1.0, abs=1e-12)
    assert set(flat) >= {"mesh_convergence", "static_scaling", "doe", "true_static_scaling"}


def test_model_params_validation():
    with pytest.raises(ValueError):
        ModelParams(C=-1)
    with pytest.raises(ValueError):
        ModelParams(d=4)
    with pytest.raises(ValueError):
        ModelParams(h_values=(0.1, 0.2))
    with pytest.raises(ValueError):
        ModelParams(h_values=())


@pytest.mark.parametrize("alpha,d", [(2, 2), (3, 2), (4, 2), (2, 3), (3, 3)])
def test_model_measure_agreement(alpha, d):
    s = derive_series(model_records(ModelParams(alpha=alpha, d=d)))
    assert s.convergence_slope == pytest.approx(alpha / d, abs=1e-9)


@pytest.mark.parametrize("alpha,d", [(2, 2), (3, 2), (2, 3)])
def test_true_rate_monotone_limit(alpha, d):
    h = tuple(10.0**-k for k in range(2, 40))
    c = model_curves(ModelParams(C=10, W=1e-5, D=4, alpha=alpha, d=d, h_values=h))["columns"]
    tr = c["true_rate"]
    limit = alpha / d * 4 / 1e-5
    assert np.all(np.abs(np.diff(tr - limit)) >= 0) and np.all(np.diff(np.abs(tr - limit)) < 0)


def test_record_invariants():
    with pytest.raises(RecordInvariantError) as e:
        rec(1, 0.5, 1.0)
    assert "N must be greater than 1" in e.value.problems
    assert BenchmarkRecord.problems(dict(label="a", family="CG", degree=1, dim=2, h=0.1, n_dofs=4,
                                         l2_error=0.0, time_seconds=1.0, n_procs=1)) == ["err must be positive"]
    with pytest.raises(RecordInvariantError):
        rec(10, 0.1, -1.0)
    with pytest.raises(RecordInvariantError):
        rec(10, 0.1, 1.0, family="FV")


def test_out_of_domain_records_excluded():
    s = derive_series([rec(100, 2.0, 1.0), rec(400, 0.1, 2.0), rec(1600, 0.01, 4.0)])
    assert s.excluded and s.excluded[0][0] == 0
    assert math.isnan(s.doa[0]) and math.isnan(s.true_rate[0])
    assert s.rate[0] == 100.0 and math.isfinite(s.doe[0])
    assert s.convergence_slope == pytest.approx(1.0 / math.log10(4))


def test_grouping():
    a = [rec(100, 0.1, 1.0, label="a"), rec(400, 0.01, 2.0, label="a")]
    b = [rec(100, 0.1, 1.0, label="b", degree=2)]
    with pytest.raises(GroupingError):
        derive_series(a + b)
    with pytest.raises(GroupingError):
        derive_series([])
    groups = group_records(b + a)
    assert [g.label for g in groups] == ["a", "b"]


# -- randomized identities -------------------------------------------------

valid_err = st.floats(1e-14, 0.999)
valid_n = st.integers(2, 10**10)
valid_t = st.floats(1e-6, 1e6)


@given(st.lists(st.tuples(valid_n, valid_err, valid_t), min_size=1, max_size=8, unique_by=lambda x: x[0]))
def test_derived_columns_recomputable(rows):
    s = derive_series([rec(n, e, t) for n, e, t in rows])
    for i, r in enumerate(s.records):
        a, d = -math.log10(r.l2_error), math.log10(r.n_dofs)
        assert s.doa[i] == a and s.dos[i] == d
        assert s.doe[i] == doe(r.l2_error, r.time_seconds)
        assert s.rate[i] == r.n_dofs / r.time_seconds
        assert s.true_rate[i] == a / d * (r.n_dofs / r.time_seconds)
        assert abs(s.doe[i] - (a - math.log10(r.time_seconds))) <= 1e-12 * max(1.0, abs(s.doe[i]))


@given(st.lists(st.tuples(valid_n, valid_err, valid_t), min_size=2, max_size=8, unique_by=lambda x: x[0]),
       st.randoms())
def test_order_independent(rows, rnd):
    recs = [rec(n, e, t) for n, e, t in rows]
    shuffled = recs[:]
    rnd.shuffle(shuffled)
    a, b = derive_series(recs), derive_series(shuffled)
    assert a.records == b.records
    np.testing.assert_array_equal(a.doe, b.doe)
    assert a.convergence_slope == b.convergence_slope


@given(st.lists(st.tuples(valid_n, valid_err, valid_t), min_size=3, max_size=8, unique_by=lambda x: x[0]),
       st.floats(1e-3, 1e3))
def test_time_rescaling(rows, k):
    s = derive_series([rec(n, e, t) for n, e, t in rows])
    sk = derive_series([rec(n, e, t * k) for n, e, t in rows])
    np.testing.assert_allclose(sk.doe, s.doe - math.log10(k), rtol=1e-12, atol=1e-12)
    assert sk.convergence_slope == s.convergence_slope


@given(valid_n, valid_err, valid_t)
def test_rate_composition(n, err, t):
    lhs = (1 / err / n) * (n / t / t)
    rhs = 1 / (err * t) / t
    assert lhs == pytest.approx(rhs, rel=1e-12)
