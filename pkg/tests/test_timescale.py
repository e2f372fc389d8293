import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsdelay import GridFunction, Interval, Point, Side, build_timescale, integers
from tsdelay.errors import EmptyInterval, NotInTimescale, OutOfDomain, OverlapError, StepError


@pytest.fixture
def gappy():
    return build_timescale([[0, 1], {2}, [3, 4]], 0.5)


def test_build_three_components(gappy):
    assert len(gappy.components) == 3
    assert gappy.components[1] == Point(2.0)


def test_touching_intervals_merge():
    ts = build_timescale([[0, 1], [1, 2]], 0.5)
    assert ts.components == (Interval(0.0, 2.0),)


def test_point_inside_interval_overlaps():
    with pytest.raises(OverlapError):
        build_timescale([[0, 1], {0.5}], 0.1)


def test_unsorted_input_is_normalized():
    ts = build_timescale([{5}, [0, 1], {3}], 0.25)
    assert [c.start for c in ts.components] == [0.0, 3.0, 5.0]


@pytest.mark.parametrize("step", [0, -1, 2.0, "x"])
def test_bad_step(step):
    with pytest.raises(StepError):
        build_timescale([[0, 1]], step)


def test_sigma_examples(gappy):
    assert gappy.sigma(1) == 2
    assert gappy.sigma(0.5) == 0.5
    assert gappy.sigma(4) == 4


def test_rho_examples():
    ts = build_timescale([[0, 1], {2}], 0.5)
    assert ts.rho(2) == 1
    assert ts.rho(0) == 0
    assert ts.rho(0.7) == 0.7


def test_mu_examples():
    ts = build_timescale([[0, 1], {2}], 0.5)
    assert ts.mu(1) == 1
    assert ts.mu(0.3) == 0
    assert integers(0, 5).mu(3) == 1


def test_classify_examples():
    ts = build_timescale([[0, 1], {2}], 0.5)
    assert ts.classify(1) == (Side.DENSE, Side.SCATTERED)
    assert ts.classify(2) == (Side.SCATTERED, Side.BOUNDARY)
    assert ts.classify(0.5) == (Side.DENSE, Side.DENSE)
    assert integers(0, 3).classify(1).isolated


def test_not_in_timescale(gappy):
    for op in (gappy.sigma, gappy.rho, gappy.mu, gappy.classify):
        with pytest.raises(NotInTimescale):
            op(1.5)


def test_grid_examples():
    ts = build_timescale([[0, 1], {2}], 0.5)
    np.testing.assert_array_equal(ts.grid(0, 2), [0, 0.5, 1, 2])
    np.testing.assert_array_equal(ts.grid(2, 2), [2])
    np.testing.assert_array_equal(integers(0, 5).grid(1, 4), [1, 2, 3, 4])
    with pytest.raises(EmptyInterval):
        ts.grid(1, 0)


def test_grid_step_never_exceeds_dense_step():
    ts = build_timescale([[0, 1]], 0.3)
    g = ts.grid(0, 1)
    assert np.all(np.diff(g) <= 0.3 + 1e-15)
    np.testing.assert_allclose(np.diff(g), np.diff(g)[0])


def test_kappa_truncate_examples():
    assert build_timescale([[0, 1], {2}], 0.5).kappa_truncate(0, 2) == (0, 1)
    assert build_timescale([[0, 1]], 0.5).kappa_truncate(0, 1) == (0, 1)
    assert integers(0, 5).kappa_truncate(0, 5) == (0, 4)


def test_membership_tolerance():
    ts = build_timescale([[0, 1]], 0.5)
    assert 1 + 1e-13 in ts
    assert 1 + 1e-9 not in ts


def test_gridfunction_lookup(gappy):
    f = GridFunction.sample(gappy, 0, 4, lambda t: t ** 2)
    assert f(2) == 4.0
    assert f.value_shape == ()
    with pytest.raises(OutOfDomain):
        f(1.25)
    with pytest.raises(ValueError):
        f.values[0] = 1.0


# ------------------------------------------------------------ properties


@st.composite
def timescales(draw):
    """Random unions of intervals and points on a bounded window."""
    n = draw(st.integers(1, 5))
    cuts = sorted(draw(st.lists(st.integers(0, 200), min_size=2 * n, max_size=2 * n, unique=True)))
    comps = []
    for a, b in zip(cuts[::2], cuts[1::2]):
        if draw(st.booleans()) and b - a >= 2:
            comps.append([a / 10, b / 10])
        else:
            comps.append({a / 10})
    return build_timescale(comps, 0.1)


@settings(max_examples=60, deadline=None)
@given(timescales())
def test_jump_invariants(ts):
    pts = ts.points
    sig = np.array([ts.sigma(t) for t in pts])
    rho = np.array([ts.rho(t) for t in pts])
    mu = np.array([ts.mu(t) for t in pts])
    assert np.all(rho <= pts) and np.all(pts <= sig)
    assert np.all(mu >= 0)
    assert np.all(np.diff(sig) >= 0) and np.all(np.diff(rho) >= 0)
    for t, m in zip(pts, mu):
        assert (ts.classify(t).right is Side.SCATTERED) == (m > 0)
        assert t in ts


@settings(max_examples=60, deadline=None)
@given(timescales())
def test_grid_closed_under_sigma(ts):
    g = ts.grid(ts.min, ts.max)
    assert g[0] == ts.min and g[-1] == ts.max
    assert np.all(np.diff(g) > 0)
    for t, nxt in zip(g[:-1], g[1:]):
        if ts.mu(t) > 0:
            assert ts.sigma(t) == nxt
        else:
            assert nxt - t <= ts.dense_step + 1e-12
