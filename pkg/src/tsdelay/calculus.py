"""Delta calculus on sampled time scales.

Integrals sum ``mu(u) f(u)`` over gaps and use the composite trapezoid rule on
dense segments; derivatives are exact forward quotients at right-scattered
points and second-order finite differences on dense segments.  On purely
discrete scales every operation here is exact up to floating-point rounding.
"""

from __future__ import annotations

import enum
import math
from typing import Callable, Union

import numpy as np

from .errors import (
    BranchError,
    EmptyInterval,
    KappaViolation,
    OutOfDomain,
    RegressivityError,
)
from .timescale import MEMBER_TOL, GridFunction, TimeScale

#: |1 + mu f| below this counts as zero
REGRESSIVE_TOL = 1e-12

FunctionLike = Union[GridFunction, Callable, float]


class RegressivityClass(enum.Enum):
    POSITIVELY_REGRESSIVE = "positively regressive"
    NEGATIVELY_REGRESSIVE = "negatively regressive"
    REGRESSIVE = "regressive"
    NOT_REGRESSIVE = "not regressive"

    @property
    def is_regressive(self) -> bool:
        return self is not RegressivityClass.NOT_REGRESSIVE


def sample(fn: FunctionLike, points: np.ndarray) -> np.ndarray:
    """Values of a grid function, callable or constant at ``points``."""
    if isinstance(fn, GridFunction):
        return np.array([fn.values[fn.index(p)] for p in points])
    if callable(fn):
        return np.array([np.asarray(fn(float(p)), dtype=float) for p in points])
    value = np.asarray(fn, dtype=float)
    return np.broadcast_to(value, points.shape + value.shape).copy()


def graininess(ts: TimeScale, points: np.ndarray) -> np.ndarray:
    """``mu`` at each point of a sample set that contains every scattered point."""
    points = np.asarray(points, dtype=float)
    mu = np.zeros(points.size)
    if points.size > 1:
        gaps = ~ts.dense_pairs(points)
        mu[:-1] = np.where(gaps, np.diff(points), 0.0)
    mu[-1] = ts.mu(points[-1])
    return mu


def pair_contributions(points: np.ndarray, values: np.ndarray, dense: np.ndarray,
                       left_limits: np.ndarray | None = None) -> np.ndarray:
    """Integral of the sampled function over each consecutive pair of points.

    ``left_limits`` optionally replaces the value at the right end of dense
    pairs (for integrands with a jump exactly at a grid point).
    """
    width = np.diff(points).reshape((-1,) + (1,) * (values.ndim - 1))
    d = dense.reshape(width.shape)
    ends = values if left_limits is None else left_limits
    trap = 0.5 * width * (values[:-1] + ends[1:])
    return np.where(d, trap, width * values[:-1])


def cumulative_integral(points, values, dense, initial=0.0, left_limits=None) -> np.ndarray:
    """``initial + int_{points[0]}^{points[j]} f`` for every ``j``.

    Accumulation is strictly left to right, so on discrete scales the result
    reproduces ``x[j+1] = x[j] + mu[j] * f[j]`` bit for bit.
    """
    values = np.asarray(values, dtype=float)
    contrib = pair_contributions(np.asarray(points, dtype=float), values, np.asarray(dense),
                                 left_limits)
    start = np.broadcast_to(np.asarray(initial, dtype=float), values.shape[1:])[None]
    return np.cumsum(np.concatenate([start, contrib]), axis=0)


def delta_integral(ts: TimeScale, f: FunctionLike, s, t):
    """Cauchy delta integral of ``f`` from ``s`` to ``t`` (``s <= t``)."""
    s, t = ts.snap(s), ts.snap(t)
    if s > t + MEMBER_TOL:
        raise EmptyInterval(f"integration requires s <= t, got s={s}, t={t}")
    if isinstance(f, GridFunction):
        if s < f.a - 1e-9 or t > f.b + 1e-9:
            raise OutOfDomain(f"[{s}, {t}] is outside the grid function domain [{f.a}, {f.b}]")
        i, j = f.index(s), f.index(t)
        points, values = f.points[i:j + 1], f.values[i:j + 1]
    else:
        points = ts.grid(s, t)
        values = sample(f, points)
    if points.size == 1:
        return np.zeros(values.shape[1:]) if values.ndim > 1 else 0.0
    dense = ts.dense_pairs(points)
    total = pair_contributions(points, values, dense,
                               _left_limits(ts, points, values, dense)).sum(axis=0)
    return float(total) if np.ndim(total) == 0 else total


def _left_limits(ts: TimeScale, points, values, dense):
    """Values with left limits at left-dense, right-scattered points.

    An rd-continuous integrand may jump there (a delta derivative does), and
    the integral over the dense part must not see the jump; the limit is
    extrapolated linearly from the two preceding samples.
    """
    out = None
    for j in np.flatnonzero(dense) + 1:
        right_scattered = (j < dense.size and not dense[j]) or (j == dense.size and ts.mu(points[j]) > 0)
        if not right_scattered:
            continue
        if out is None:
            out = values.copy()
        out[j] = 2 * values[j - 1] - values[j - 2] if j >= 2 and dense[j - 2] else values[j - 1]
    return out


def _dense_run(dense: np.ndarray, i: int) -> tuple[int, int]:
    lo = i
    while lo > 0 and dense[lo - 1]:
        lo -= 1
    hi = i
    while hi < dense.size and dense[hi]:
        hi += 1
    return lo, hi


def delta_derivative(ts: TimeScale, f: GridFunction, t):
    """Delta derivative of a grid function at one of its sample points."""
    i = f.index(t)
    p, v = f.points, f.values
    last = p.size - 1
    dense = ts.dense_pairs(p) if p.size > 1 else np.zeros(0, dtype=bool)
    if i < last and not dense[i]:
        out = (v[i + 1] - v[i]) / (p[i + 1] - p[i])
        return float(out) if np.ndim(out) == 0 else out
    if i == last:
        if i > 0 and ts.is_left_scattered(p[i]):
            raise KappaViolation(f"{p[i]} is a left-scattered right end; "
                                 "the derivative lives on the kappa-truncation")
        if ts.is_right_scattered(p[i]):
            raise OutOfDomain(f"f(sigma({p[i]})) is not sampled")
        if i == 0 or not dense[i - 1]:
            raise OutOfDomain(f"no dense neighbourhood of {p[i]} is sampled")
        lo, hi = _dense_run(dense, i - 1)
    else:
        lo, hi = _dense_run(dense, i)
    run = slice(lo, hi + 1)
    h = (p[hi] - p[lo]) / (hi - lo)  # dense runs are sampled uniformly
    grad = np.gradient(v[run], h, axis=0, edge_order=2 if hi - lo >= 2 else 1)
    out = grad[i - lo]
    return float(out) if np.ndim(out) == 0 else out


def hk_values(ts: TimeScale, k: int, s, t) -> tuple[np.ndarray, np.ndarray]:
    """Grid of ``[s, t]`` and ``h_k(., s)`` on it, by iterated delta integration."""
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    points = ts.grid(s, t)
    dense = ts.dense_pairs(points) if points.size > 1 else np.zeros(0, dtype=bool)
    h = np.ones(points.size)
    for _ in range(k):
        h = cumulative_integral(points, h, dense, left_limits=_left_limits(ts, points, h, dense))
    return points, h


def hk_polynomial(ts: TimeScale, k: int, t, s) -> float:
    """Generalized polynomial ``h_k(t, s)`` for ``t >= s``."""
    if t < s - MEMBER_TOL:
        raise OutOfDomain(f"h_k(t, s) is computed for t >= s only, got t={t}, s={s}")
    return float(hk_values(ts, k, s, t)[1][-1])


def cylinder(h: float, z: float) -> float:
    """Real branch of the cylinder transformation ``xi_h(z)``."""
    if h < 0:
        raise ValueError(f"graininess must be nonnegative, got {h}")
    if h == 0:
        return float(z)
    arg = 1.0 + h * z
    if arg <= 0:
        raise BranchError(f"1 + h z = {arg} <= 0; no real logarithm (h={h}, z={z})")
    return math.log1p(h * z) / h


def _step_factors(ts: TimeScale, f: FunctionLike, s, t):
    points = ts.grid(s, t)
    if points.size == 1:
        return points, np.zeros(0)
    values = sample(f, points)
    if values.ndim != 1:
        raise ValueError("the exponential function is scalar-valued")
    dense = ts.dense_pairs(points)
    width = np.diff(points)
    one_plus = 1.0 + width * values[:-1]
    gaps = ~dense
    if np.any(gaps & (np.abs(one_plus) < REGRESSIVE_TOL)):
        u = points[:-1][gaps & (np.abs(one_plus) < REGRESSIVE_TOL)][0]
        raise RegressivityError(f"1 + mu f = 0 at t={u}: f is not regressive")
    if np.any(gaps & (one_plus < 0)) and dense.any():
        raise RegressivityError("sign-changing exponential across a dense segment; f must be positively regressive")
    trap = 0.5 * width * (values[:-1] + values[1:])
    factors = np.where(dense, np.exp(trap), one_plus)
    return points, factors


def exp_values(ts: TimeScale, f: FunctionLike, s, t) -> tuple[np.ndarray, np.ndarray]:
    """Grid of ``[s, t]`` and ``e_f(., s)`` on it."""
    points, factors = _step_factors(ts, f, s, t)
    return points, np.cumprod(np.concatenate(([1.0], factors)))


def exp_function(ts: TimeScale, f: FunctionLike, t, s) -> float:
    """Generalized exponential ``e_f(t, s)`` for ``s <= t``.

    Gaps contribute ``1 + mu f`` (the exponential of ``mu * xi_mu(f)``),
    dense segments ``exp`` of the trapezoid integral of ``f``.  Negatively
    regressive ``f`` is accepted only on purely scattered stretches.
    """
    if float(t) < float(s) - MEMBER_TOL:
        raise EmptyInterval(f"e_f(t, s) is computed for s <= t, got t={t}, s={s}")
    _, factors = _step_factors(ts, f, s, t)
    return float(np.prod(factors)) if factors.size else 1.0


def regressivity_class(ts: TimeScale, f: FunctionLike, a, b) -> RegressivityClass:
    """Sign pattern of ``1 + mu f`` over the kappa-truncation of ``[a, b]``."""
    lo, hi = ts.kappa_truncate(a, b)
    points = ts.grid(lo, hi)
    values = sample(f, points)
    w = 1.0 + graininess(ts, points) * values
    if np.any(np.abs(w) < REGRESSIVE_TOL):
        return RegressivityClass.NOT_REGRESSIVE
    if np.all(w > 0):
        return RegressivityClass.POSITIVELY_REGRESSIVE
    if np.all(w < 0):
        return RegressivityClass.NEGATIVELY_REGRESSIVE
    return RegressivityClass.REGRESSIVE
