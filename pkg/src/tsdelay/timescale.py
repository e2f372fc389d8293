"""Concrete time scales: finite unions of closed intervals and isolated points.

A :class:`TimeScale` is the closed set on which every other part of the
package lives.  Dense intervals are sampled on a uniform grid of width at most
``dense_step``; isolated points are always sample points.  Jump operators,
graininess and point classification are exact (they are properties of the set,
not of the sampling).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence, Union

import numpy as np

from .errors import EmptyInterval, NotInTimescale, OutOfDomain, OverlapError, StepError

#: absolute tolerance for membership tests and grid snapping
MEMBER_TOL = 1e-12


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise OverlapError(f"interval endpoints must be finite, got [{self.a}, {self.b}]")
        if not self.a < self.b:
            raise OverlapError(f"interval requires a < b, got [{self.a}, {self.b}]")

    @property
    def start(self) -> float:
        return self.a

    @property
    def end(self) -> float:
        return self.b


@dataclass(frozen=True)
class Point:
    t: float

    def __post_init__(self):
        if not math.isfinite(self.t):
            raise OverlapError(f"point must be finite, got {self.t}")

    @property
    def start(self) -> float:
        return self.t

    @property
    def end(self) -> float:
        return self.t


Component = Union[Interval, Point]


class Side(str, enum.Enum):
    DENSE = "dense"
    SCATTERED = "scattered"
    BOUNDARY = "boundary"


class PointClass(NamedTuple):
    """Left/right character of a point: dense, scattered, or the boundary of the scale."""

    left: Side
    right: Side

    @property
    def isolated(self) -> bool:
        return self.left != Side.DENSE and self.right != Side.DENSE


def _as_component(c) -> Component:
    if isinstance(c, (Interval, Point)):
        return c
    if isinstance(c, (set, frozenset)):
        if len(c) != 1:
            raise OverlapError(f"point component must hold exactly one value, got {c!r}")
        return Point(float(next(iter(c))))
    if isinstance(c, (int, float, np.integer, np.floating)):
        return Point(float(c))
    if isinstance(c, (list, tuple)) and len(c) == 2:
        return Interval(float(c[0]), float(c[1]))
    raise TypeError(f"cannot interpret {c!r} as a time scale component")


def _normalize(components: Iterable) -> list[Component]:
    comps = sorted((_as_component(c) for c in components), key=lambda c: (c.start, c.end))
    if not comps:
        raise OverlapError("a time scale needs at least one component")
    out: list[Component] = [comps[0]]
    for c in comps[1:]:
        prev = out[-1]
        if c.start > prev.end + MEMBER_TOL:
            out.append(c)
            continue
        if c.start < prev.end - MEMBER_TOL:
            raise OverlapError(f"components {prev} and {c} intersect")
        # touching: closed-set union
        if isinstance(prev, Point) and isinstance(c, Point):
            continue
        if isinstance(prev, Point):
            out[-1] = c
        elif isinstance(c, Point):
            continue
        else:
            out[-1] = Interval(prev.a, max(prev.b, c.b))
    return out


@dataclass(frozen=True, eq=False)
class TimeScale:
    """Validated time scale with a cached sampling grid.

    Build instances with :func:`build_timescale`; the constructor expects
    components that are already sorted and disjoint.
    """

    components: tuple
    dense_step: float
    _points: np.ndarray = field(init=False, repr=False)
    _comp: np.ndarray = field(init=False, repr=False)
    _starts: np.ndarray = field(init=False, repr=False)
    _ends: np.ndarray = field(init=False, repr=False)
    _is_interval: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        h = self.dense_step
        if not (isinstance(h, (int, float)) and math.isfinite(h) and h > 0):
            raise StepError(f"dense_step must be a positive finite number, got {h!r}")
        lengths = [c.b - c.a for c in self.components if isinstance(c, Interval)]
        if lengths and h > min(lengths) + MEMBER_TOL:
            raise StepError(f"dense_step {h} exceeds the shortest interval length {min(lengths)}")

        pts, comp = [], []
        for k, c in enumerate(self.components):
            if isinstance(c, Point):
                seg = np.array([c.t])
            else:
                n = max(1, math.ceil((c.b - c.a) / h - 1e-9))
                seg = np.linspace(c.a, c.b, n + 1)
            pts.append(seg)
            comp.append(np.full(seg.size, k))
        points = np.concatenate(pts)
        points.setflags(write=False)
        object.__setattr__(self, "_points", points)
        object.__setattr__(self, "_comp", np.concatenate(comp))
        object.__setattr__(self, "_starts", np.array([c.start for c in self.components]))
        object.__setattr__(self, "_ends", np.array([c.end for c in self.components]))
        object.__setattr__(self, "_is_interval",
                           np.array([isinstance(c, Interval) for c in self.components]))

    def __repr__(self):
        parts = [f"[{c.a:g},{c.b:g}]" if isinstance(c, Interval) else f"{{{c.t:g}}}"
                 for c in self.components]
        return f"TimeScale({' ∪ '.join(parts)}, dense_step={self.dense_step:g})"

    # -- basic set queries -----------------------------------------------------

    @property
    def min(self) -> float:
        return float(self._starts[0])

    @property
    def max(self) -> float:
        return float(self._ends[-1])

    @property
    def points(self) -> np.ndarray:
        """All sample points of the scale (read-only)."""
        return self._points

    @property
    def is_discrete(self) -> bool:
        return not self._is_interval.any()

    def component_index(self, t) -> np.ndarray | int:
        """Index of the component containing ``t`` (``-1`` when outside).

        Accepts scalars or arrays.
        """
        t_arr = np.asarray(t, dtype=float)
        k = np.searchsorted(self._starts, t_arr + MEMBER_TOL, side="right") - 1
        kc = np.clip(k, 0, len(self.components) - 1)
        inside = (k >= 0) & (t_arr <= self._ends[kc] + MEMBER_TOL) & (t_arr >= self._starts[kc] - MEMBER_TOL)
        out = np.where(inside, kc, -1)
        return int(out) if out.ndim == 0 else out

    def __contains__(self, t) -> bool:
        try:
            return self.component_index(float(t)) >= 0
        except (TypeError, ValueError):
            return False

    def _check(self, t) -> tuple[float, int]:
        t = float(t)
        k = self.component_index(t)
        if k < 0:
            raise NotInTimescale(f"{t!r} is not in {self!r}")
        return t, k

    def dense_pairs(self, points) -> np.ndarray:
        """For consecutive sample points, whether the pair lies inside one dense interval.

        ``False`` marks a gap: the left point is right-scattered and its forward
        jump is the right point.
        """
        k = self.component_index(np.asarray(points, dtype=float))
        if np.any(k < 0):
            raise NotInTimescale("sample points outside the time scale")
        return (k[1:] == k[:-1]) & self._is_interval[k[:-1]]

    # -- jump operators ----------------------------------------------------------

    def sigma(self, t) -> float:
        t, k = self._check(t)
        c = self.components[k]
        if isinstance(c, Interval) and t < c.b - MEMBER_TOL:
            return t
        if k + 1 < len(self.components):
            return float(self._starts[k + 1])
        return float(self._ends[k])

    def rho(self, t) -> float:
        t, k = self._check(t)
        c = self.components[k]
        if isinstance(c, Interval) and t > c.a + MEMBER_TOL:
            return t
        if k > 0:
            return float(self._ends[k - 1])
        return float(self._starts[k])

    def mu(self, t) -> float:
        s, t = self.sigma(t), float(t)
        return s - t if s > t + MEMBER_TOL else 0.0

    def classify(self, t) -> PointClass:
        t, k = self._check(t)
        if abs(t - self.max) <= MEMBER_TOL:
            right = Side.BOUNDARY
        else:
            right = Side.SCATTERED if self.sigma(t) > t + MEMBER_TOL else Side.DENSE
        if abs(t - self.min) <= MEMBER_TOL:
            left = Side.BOUNDARY
        else:
            left = Side.SCATTERED if self.rho(t) < t - MEMBER_TOL else Side.DENSE
        return PointClass(left, right)

    def is_right_scattered(self, t) -> bool:
        return self.sigma(t) > float(t) + MEMBER_TOL

    def is_left_scattered(self, t) -> bool:
        return self.rho(t) < float(t) - MEMBER_TOL

    # -- sampling ------------------------------------------------------------------

    def snap(self, t) -> float:
        """Replace ``t`` by the sample point it matches within tolerance, if any."""
        t, _ = self._check(t)
        i = int(np.searchsorted(self._points, t))
        for j in (i - 1, i):
            if 0 <= j < self._points.size and abs(self._points[j] - t) <= MEMBER_TOL:
                return float(self._points[j])
        return t

    def grid(self, a, b) -> np.ndarray:
        """Sample points of ``[a, b]`` on the scale, strictly increasing, from ``a`` to ``b``."""
        a = self.snap(a)
        b = self.snap(b)
        if a > b + MEMBER_TOL:
            raise EmptyInterval(f"empty interval [{a}, {b}]")
        if abs(b - a) <= MEMBER_TOL:
            return np.array([a])
        p = self._points
        inner = p[(p > a + MEMBER_TOL) & (p < b - MEMBER_TOL)]
        return np.concatenate(([a], inner, [b]))

    def kappa_truncate(self, a, b) -> tuple[float, float]:
        """Drop a left-scattered right end: ``[a, b]`` becomes ``[a, rho(b)]``."""
        a = self.snap(a)
        b = self.snap(b)
        if a > b + MEMBER_TOL:
            raise EmptyInterval(f"empty interval [{a}, {b}]")
        if b > a and self.is_left_scattered(b):
            return a, self.rho(b)
        return a, b

    def max_in(self, a, b) -> float:
        """``max [a, b]_T`` for ``a`` in the scale and any real ``b >= a``."""
        a, _ = self._check(a)
        if b < a:
            raise EmptyInterval(f"empty interval [{a}, {b}]")
        k = int(np.searchsorted(self._starts, b + MEMBER_TOL, side="right") - 1)
        return float(min(b, self._ends[k]))


def build_timescale(components: Sequence, dense_step: float = 1.0) -> TimeScale:
    """Validate and normalize components into a :class:`TimeScale`.

    ``components`` may mix :class:`Interval`/:class:`Point` objects with the
    shorthand ``[a, b]`` (interval), ``{t}`` or a bare number (point).  Touching
    components are merged; intersecting ones raise :class:`OverlapError`.
    """
    try:
        step = float(dense_step)
    except (TypeError, ValueError):
        raise StepError(f"dense_step must be a number, got {dense_step!r}") from None
    return TimeScale(tuple(_normalize(components)), step)


def integers(lo: int, hi: int) -> TimeScale:
    """The discrete scale ``Z ∩ [lo, hi]``."""
    return build_timescale([Point(float(k)) for k in range(int(lo), int(hi) + 1)], 1.0)


class GridFunction:
    """Samples of a scalar-, vector- or matrix-valued function on a point set of a time scale.

    ``points`` defaults to ``timescale.grid(a, b)``; all values share one shape.
    """

    def __init__(self, timescale: TimeScale, values, points=None, *, a=None, b=None):
        if points is None:
            if a is None or b is None:
                raise TypeError("give either points or the interval ends a, b")
            points = timescale.grid(a, b)
        points = np.asarray(points, dtype=float)
        values = np.asarray(values, dtype=float)
        if points.ndim != 1 or points.size == 0:
            raise ValueError("points must be a nonempty 1-d array")
        if np.any(np.diff(points) <= 0):
            raise ValueError("points must be strictly increasing")
        if values.shape[:1] != points.shape:
            raise ValueError(f"{values.shape[0] if values.ndim else 0} values for {points.size} points")
        if np.any(timescale.component_index(points) < 0):
            raise NotInTimescale("grid function sampled off the time scale")
        self.timescale = timescale
        self.points = points
        self.values = values
        self.points.setflags(write=False)
        self.values.setflags(write=False)

    @classmethod
    def sample(cls, timescale: TimeScale, a, b, fn: Callable, points=None) -> "GridFunction":
        pts = timescale.grid(a, b) if points is None else np.asarray(points, dtype=float)
        return cls(timescale, np.array([np.asarray(fn(t), dtype=float) for t in pts]), pts)

    @property
    def a(self) -> float:
        return float(self.points[0])

    @property
    def b(self) -> float:
        return float(self.points[-1])

    @property
    def value_shape(self) -> tuple:
        return self.values.shape[1:]

    def __len__(self):
        return self.points.size

    def index(self, t, tol: float = 1e-9) -> int:
        i = int(np.searchsorted(self.points, t))
        for j in (i, i - 1):
            if 0 <= j < self.points.size and abs(self.points[j] - t) <= tol:
                return j
        raise OutOfDomain(f"{t!r} is not a sample point of the grid function on [{self.a}, {self.b}]")

    def __call__(self, t):
        v = self.values[self.index(t)]
        return float(v) if v.ndim == 0 else v

    def restrict(self, a, b) -> "GridFunction":
        i, j = self.index(a), self.index(b)
        return GridFunction(self.timescale, self.values[i:j + 1], self.points[i:j + 1])

    def __repr__(self):
        return (f"GridFunction([{self.a:g}, {self.b:g}], {self.points.size} samples, "
                f"shape={self.value_shape})")
