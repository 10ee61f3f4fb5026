import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import date_seq, two_pass_pearson
from epicorr.errors import DegenerateSeriesError, NumericError, PlanError
from epicorr.panel import TimeSeriesPanel
from epicorr.returns import (
    ReturnsPanel,
    compute_returns,
    correlation_series,
    pearson_matrix,
    pearson_stack,
    plan_epochs,
)

D0 = dt.date(2020, 2, 27)


def panel_of(values):
    values = np.atleast_2d(np.asarray(values, dtype=float))
    names = tuple(f"R{i}" for i in range(values.shape[0]))
    return TimeSeriesPanel(names, tuple(date_seq(D0, values.shape[1])), values)


def returns_of(values):
    values = np.asarray(values, dtype=float)
    names = tuple(f"R{i}" for i in range(values.shape[0]))
    return ReturnsPanel(names, tuple(date_seq(D0, values.shape[1])), values)


# ---- returns

def test_simple_returns():
    r = compute_returns(panel_of([[2, 4, 3], [1, 1, 1]]))
    np.testing.assert_array_equal(r.values[0], [1.0, -0.25])
    assert r.dates == (D0 + dt.timedelta(days=1), D0 + dt.timedelta(days=2))


def test_guard_on_zero_day():
    r = compute_returns(panel_of([[0, 5], [1, 1]]), guard=1e-6)
    assert r.values[0, 0] == pytest.approx(5e6, rel=1e-15)


def test_absolute_returns():
    r = compute_returns(panel_of([[2, 4, 3], [1, 1, 1]]), absolute=True)
    np.testing.assert_array_equal(r.values[0], [1.0, 0.25])


def test_returns_errors():
    with pytest.raises(NumericError):
        compute_returns(panel_of([[1.0], [2.0]]))
    with pytest.raises(NumericError):
        compute_returns(panel_of([[1.0, 2.0], [1.0, 2.0]]), guard=0)


y_values = st.lists(st.floats(1.0, 1e6, allow_nan=False), min_size=6, max_size=6)


@settings(max_examples=60, deadline=None)
@given(y_values, st.integers(-20, 20))
def test_scale_invariance_power_of_two_exact(vals, e):
    y = np.array(vals).reshape(2, 3)
    a = 2.0**e
    ry = compute_returns(panel_of(y)).values
    np.testing.assert_array_equal(compute_returns(panel_of(a * y)).values, ry)


@settings(max_examples=60, deadline=None)
@given(y_values, st.floats(1e-3, 1e3))
def test_scale_invariance_general(vals, a):
    # arbitrary scales round differently in numerator and denominator
    y = np.array(vals).reshape(2, 3)
    np.testing.assert_allclose(compute_returns(panel_of(a * y)).values, compute_returns(panel_of(y)).values, rtol=1e-12, atol=1e-12)


# ---- epoch plan

@pytest.mark.parametrize(
    "length,count,last",
    [(1021, 62, 976), (1020, 62, 976), (33, 1, 0), (49, 2, 16)],
)
def test_plan_examples(length, count, last):
    plan = plan_epochs(length, 33, 17)
    assert plan.stride == 16
    assert plan.epoch_count == count
    assert plan.epoch_starts == list(range(0, last + 1, 16))
    assert plan.epoch_starts[-1] + plan.window <= length


@pytest.mark.parametrize("args", [(32, 33, 17), (100, 1, 0), (100, 10, 10), (100, 10, -1)])
def test_plan_errors(args):
    with pytest.raises(PlanError):
        plan_epochs(*args)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 400), st.data())
def test_plan_formula(window, data):
    overlap = data.draw(st.integers(0, window - 1))
    length = data.draw(st.integers(window, 2000))
    plan = plan_epochs(length, window, overlap)
    starts = plan.epoch_starts
    assert len(starts) == (length - window) // (window - overlap) + 1
    assert starts[-1] + window <= length < starts[-1] + plan.stride + window


# ---- Pearson

def test_identical_and_opposite_series():
    x = np.random.default_rng(0).standard_normal(33)
    c = pearson_matrix(returns_of([x, x, -x]), 0, 33).entries
    assert c[0, 1] == 1.0
    assert c[0, 2] == -1.0


def test_matches_two_pass_oracle():
    x = np.random.default_rng(7).standard_normal((3, 33))
    c = pearson_matrix(returns_of(x), 0, 33).entries
    np.testing.assert_allclose(c, two_pass_pearson(x), rtol=0, atol=1e-12)


def test_sixty_two_matrices():
    x = np.random.default_rng(1).standard_normal((32, 1020))
    mats = correlation_series(returns_of(x), plan_epochs(1020, 33, 17))
    assert len(mats) == 62
    assert all(m.entries.shape == (32, 32) for m in mats)
    assert [m.epoch_start_day for m in mats] == list(range(0, 977, 16))
    # batched path agrees with the one-epoch path
    single = pearson_matrix(returns_of(x), 976, 33, epoch_index=61).entries
    np.testing.assert_array_equal(mats[-1].entries, single)


def test_two_identical_regions_give_ones():
    x = np.random.default_rng(2).standard_normal(100)
    for m in correlation_series(returns_of([x, x]), plan_epochs(100, 33, 17)):
        np.testing.assert_array_equal(m.entries, np.ones((2, 2)))


def test_matrix_invariants():
    x = np.random.default_rng(3).standard_normal((200, 32, 33))
    c, _ = pearson_stack(x)
    assert np.array_equal(c, np.swapaxes(c, 1, 2))
    assert np.all(np.diagonal(c, axis1=1, axis2=2) == 1.0)
    assert np.all(np.abs(c) <= 1.0)
    assert np.all(np.trace(c, axis1=1, axis2=2) == 32.0)
    ev = np.linalg.eigvalsh(c)
    assert ev.min() >= -1e-8
    np.testing.assert_allclose(ev.sum(axis=1), 32.0, atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100), st.floats(-100, 100))
def test_affine_invariance(seed, a, b):
    x = np.random.default_rng(seed).standard_normal((4, 33))
    y = x.copy()
    y[1] = a * x[1] + b
    c0 = pearson_stack(x)[0]
    c1 = pearson_stack(y)[0]
    np.testing.assert_allclose(c1, c0, rtol=0, atol=1e-12)


def test_rank_deficient_regime():
    rng = np.random.default_rng(4)
    for _ in range(20):
        c = pearson_stack(rng.standard_normal((32, 16)))[0]
        assert np.linalg.matrix_rank(c, tol=1e-9) <= 15


def test_full_rank_regime():
    rng = np.random.default_rng(5)
    for _ in range(20):
        c = pearson_stack(rng.standard_normal((32, 33)))[0]
        assert np.linalg.eigvalsh(c)[0] > 0


def test_zero_variance_policies():
    x = np.random.default_rng(6).standard_normal((3, 33))
    x[1] = 0.25
    r = returns_of(x)
    with pytest.raises(DegenerateSeriesError) as exc:
        pearson_matrix(r, 0, 33, epoch_index=5)
    assert exc.value.region == "R1" and exc.value.epoch_index == 5
    with pytest.warns(RuntimeWarning):
        c = pearson_matrix(r, 0, 33, zero_variance="zero").entries
    np.testing.assert_array_equal(c[1], [0.0, 1.0, 0.0])
    np.testing.assert_array_equal(c[:, 1], [0.0, 1.0, 0.0])


def test_epoch_out_of_range():
    with pytest.raises(PlanError):
        pearson_matrix(returns_of(np.ones((2, 10))), 0, 33)
    with pytest.raises(PlanError):
        correlation_series(returns_of(np.ones((2, 40))), plan_epochs(50, 33, 17))
