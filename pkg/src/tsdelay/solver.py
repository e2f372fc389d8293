"""Picard iteration for delay dynamic equations and global solving by steps.

The state space is R^d with the max-norm; matrix coefficients use the induced
(max row sum) norm.  Everything is computed on one fixed point set covering
``[alpha, gamma]`` (the time-scale grid, plus ``beta``), and delayed arguments
are snapped onto that set once, up front.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .calculus import cumulative_integral, hk_polynomial
from .errors import (
    BallExit,
    DomainError,
    EnvelopeViolation,
    EvaluationError,
    MissingBound,
    NoConvergence,
    NotInTimescale,
    SnapError,
    WindowTooSmall,
)
from .timescale import MEMBER_TOL, GridFunction, TimeScale

#: tolerance used when snapping delayed arguments and checking tau(t) <= t
DELAY_TOL = 1e-9
#: safety factor applied to a sampled bound of |f|
M_SAFETY = 1.1


# --------------------------------------------------------------------------- data


@dataclass
class DelayIVP:
    """``x^Δ(t) = f(t, x(τ_1(t)), ..., x(τ_n(t)))`` on ``[β, γ]^κ``, ``x = φ`` on ``[α, β]``.

    ``rhs(t, u_1, ..., u_n)`` receives each delayed state as an array of shape
    ``(dim,)`` and returns something of the same shape.  ``history`` may be a
    :class:`GridFunction`, a callable of ``t`` or a constant.  ``lipschitz_L``
    and ``bound_M`` may be left as ``None`` (unknown).
    """

    timescale: TimeScale
    alpha: float
    beta: float
    gamma: float
    rhs: Callable
    delays: Sequence[Callable]
    history: object
    dim: int = 1
    lipschitz_L: Optional[float] = None
    bound_M: Optional[float] = None
    epsilon: float = 1.0

    @property
    def n_delays(self) -> int:
        return len(self.delays)


@dataclass
class LinearDelaySystem:
    """``x^Δ(t) = Σ p_i(t) x(τ_i(t)) + q(t)`` with history ``φ`` on ``[α, β]``.

    Coefficients are callables returning ``d x d`` matrices (a number is taken
    as a multiple of the identity); ``forcing`` returns a ``d``-vector.
    """

    timescale: TimeScale
    alpha: float
    beta: float
    gamma: float
    coeffs: Sequence[Callable]
    delays: Sequence[Callable]
    history: object
    forcing: object = 0.0
    dim: int = 1

    @property
    def n_delays(self) -> int:
        return len(self.delays)

    def rhs(self, t, *u):
        """The right-hand side as a function of ``(t, u_1, ..., u_n)``."""
        acc = _matrix(self.coeffs[0], t, self.dim) @ np.asarray(u[0], dtype=float)
        for p, ui in zip(self.coeffs[1:], u[1:]):
            acc = acc + _matrix(p, t, self.dim) @ np.asarray(ui, dtype=float)
        return acc + _vector(self.forcing, t, self.dim)

    def as_ivp(self, **kwargs) -> DelayIVP:
        return DelayIVP(self.timescale, self.alpha, self.beta, self.gamma, self.rhs,
                        list(self.delays), self.history, dim=self.dim, **kwargs)


@dataclass
class Diagnostics:
    iterations: int = 0
    final_sup_diff: float = 0.0
    window_delta: Optional[float] = None
    zeta: Optional[float] = None
    partition: list = field(default_factory=list)
    cell_iterations: list = field(default_factory=list)
    bound_M: Optional[float] = None
    iterates: Optional[list] = None


@dataclass
class Solution:
    """Solution values on ``[α, end]`` together with solver diagnostics."""

    values: GridFunction
    end: float
    diagnostics: Diagnostics

    def __call__(self, t):
        return self.values(t)

    @property
    def points(self) -> np.ndarray:
        return self.values.points


# ------------------------------------------------------------------------ helpers


def _call(fn, t):
    return fn(t) if callable(fn) else fn


def _matrix(p, t, d) -> np.ndarray:
    m = np.asarray(_call(p, t), dtype=float)
    if m.ndim == 0:
        return m * np.eye(d)
    return m.reshape(d, d)


def _vector(q, t, d) -> np.ndarray:
    v = np.asarray(_call(q, t), dtype=float)
    if v.ndim == 0:
        return np.full(d, float(v))
    return v.reshape(d)


def _norm(x) -> float:
    """Max-norm of a vector, or the induced norm (max row sum) of a matrix."""
    x = np.asarray(x, dtype=float)
    if x.ndim <= 1:
        return float(np.max(np.abs(x))) if x.size else 0.0
    return float(np.max(np.abs(x).sum(axis=-1)))


class _Layout:
    """Point set of ``[α, γ]`` (always containing ``β``) with snapped delay indices."""

    def __init__(self, ts: TimeScale, alpha, beta, gamma, delays: Sequence[Callable]):
        for name, v in (("alpha", alpha), ("beta", beta), ("gamma", gamma)):
            if v not in ts:
                raise NotInTimescale(f"{name}={v} is not in {ts!r}")
        alpha, beta, gamma = ts.snap(alpha), ts.snap(beta), ts.snap(gamma)
        if not alpha <= beta <= gamma:
            raise DomainError(f"need alpha <= beta <= gamma, got {alpha}, {beta}, {gamma}")
        if not delays:
            raise DomainError("at least one delay is required")
        self.ts = ts
        left = ts.grid(alpha, beta)
        self.points = np.concatenate([left, ts.grid(beta, gamma)[1:]])
        self.jb = left.size - 1
        self.dense = ts.dense_pairs(self.points) if self.points.size > 1 else np.zeros(0, bool)
        self.mu = np.zeros(self.points.size)
        self.mu[:-1] = np.where(self.dense, 0.0, np.diff(self.points))
        self.mu[-1] = ts.mu(self.points[-1])
        self.delay_idx = self._snap_delays(delays)

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def last(self) -> int:
        return self.points.size - 1

    def index(self, t) -> int:
        i = int(np.searchsorted(self.points, t))
        for j in (i, i - 1):
            if 0 <= j < self.size and abs(self.points[j] - t) <= DELAY_TOL:
                return j
        raise DomainError(f"{t} is not a stored sample point")

    def _snap_delays(self, delays) -> np.ndarray:
        p, ts = self.points, self.ts
        idx = np.tile(np.arange(self.size), (len(delays), 1))
        kappa_end = self.last
        if self.last > self.jb and ts.is_left_scattered(p[-1]):
            kappa_end = self.last - 1
        for i, tau in enumerate(delays):
            for j in range(self.jb, self.size):
                t = float(p[j])
                try:
                    v = float(tau(t))
                except Exception as exc:  # noqa: BLE001 - user callable
                    raise DomainError(f"delay {i + 1} failed at t={t}: {exc}") from exc
                if not math.isfinite(v):
                    raise DomainError(f"delay {i + 1} is not finite at t={t}")
                if v > t + DELAY_TOL:
                    raise DomainError(f"tau_{i + 1}(t) <= t violated at t={t} (tau={v})")
                if j > kappa_end:
                    continue
                if v < p[0] - DELAY_TOL:
                    raise DomainError(f"alpha <= tau_{i + 1}(t) violated at t={t} (tau={v}, alpha={p[0]})")
                k = int(np.searchsorted(p, v + DELAY_TOL, side="right")) - 1
                k = max(k, 0)
                if v - p[k] > DELAY_TOL and (v not in ts or v - p[k] > ts.dense_step + MEMBER_TOL):
                    raise SnapError(f"tau_{i + 1}({t}) = {v} does not snap onto the time scale grid")
                idx[i, j] = k
        return idx


def _history_values(history, layout: _Layout, dim: int, stop: int) -> np.ndarray:
    pts = layout.points[:stop + 1]
    out = np.empty((pts.size, dim))
    for j, t in enumerate(pts):
        if isinstance(history, GridFunction):
            v = history.values[history.index(t)]
        else:
            v = _call(history, float(t))
        v = np.asarray(v, dtype=float)
        if v.size != dim:
            raise DomainError(f"history value at t={t} has {v.size} entries, expected {dim}")
        out[j] = v.reshape(dim)
    if not np.all(np.isfinite(out)):
        raise DomainError("history is not finite on [alpha, beta]")
    return out


class _CallableRhs:
    """Point-by-point evaluation of a user right-hand side."""

    def __init__(self, fn, layout: _Layout, dim: int, envelope=None):
        self.fn = fn
        self.layout = layout
        self.dim = dim
        self.envelope = envelope  # (P (n, G), Q (G,)) nonnegative growth coefficients

    def __call__(self, X: np.ndarray, lo: int, hi: int) -> np.ndarray:
        lay = self.layout
        g = np.empty((hi - lo + 1, self.dim))
        for r, j in enumerate(range(lo, hi + 1)):
            u = [X[k] for k in lay.delay_idx[:, j]]
            t = float(lay.points[j])
            try:
                v = np.asarray(self.fn(t, *u), dtype=float)
            except (ArithmeticError, ValueError) as exc:
                raise DomainError(f"right-hand side failed at t={t}: {exc}") from exc
            if v.size != self.dim or not np.all(np.isfinite(v)):
                raise DomainError(f"right-hand side returned {v!r} at t={t}")
            g[r] = v.reshape(self.dim)
            if self.envelope is not None:
                P, Q = self.envelope
                cap = sum(P[i, j] * _norm(ui) for i, ui in enumerate(u)) + Q[j]
                if _norm(g[r]) > cap * (1 + 1e-12) + 1e-12:
                    raise EnvelopeViolation(
                        f"|f| = {_norm(g[r])} exceeds the growth envelope {cap} at t={t}")
        return g


class _LinearRhs:
    """Vectorized ``Σ p_i x(τ_i) + q`` for vector or matrix-valued states.

    ``jump`` marks a layout index where the state jumps from zero (the start
    of a principal solution); delayed reads that reach it from below at the
    right end of a dense cell then use the zero left limit.
    """

    def __init__(self, P: np.ndarray, Q: Optional[np.ndarray], layout: _Layout,
                 jump: Optional[int] = None):
        self.P = P  # (n, G, d, d)
        self.Q = Q  # (G, d) or None
        self.layout = layout
        self.jump = jump

    def left_limits(self, X: np.ndarray, lo: int, hi: int, g: np.ndarray) -> Optional[np.ndarray]:
        s = self.jump
        if s is None or lo == 0:
            return None
        idx = self.layout.delay_idx[:, lo:hi + 1]
        prev = self.layout.delay_idx[:, lo - 1:hi]
        crossing = (idx == s) & (prev < s)
        if not crossing.any():
            return None
        out = g.copy()
        for i, rows in zip(*np.nonzero(crossing)):
            out[rows] = out[rows] - self.P[i, lo + rows] @ X[s]
        return out

    def __call__(self, X: np.ndarray, lo: int, hi: int) -> np.ndarray:
        idx = self.layout.delay_idx[:, lo:hi + 1]
        extra = X.ndim - 2
        acc = None
        for i in range(self.P.shape[0]):
            Pi = self.P[i, lo:hi + 1]
            Pi = Pi.reshape(Pi.shape + (1,) * extra)
            term = (Pi * X[idx[i]][:, None]).sum(axis=2)
            acc = term if acc is None else acc + term
        if self.Q is not None:
            acc = acc + self.Q[lo:hi + 1].reshape((hi - lo + 1, -1) + (1,) * extra)
        return acc


# ---------------------------------------------------------------- window / bound


def existence_window(ivp: DelayIVP, bound_M: Optional[float] = None) -> tuple[float, float]:
    """``δ = min{γ-β, ε/M}`` and ``ζ = max [β, β+δ]_T``."""
    ts = ivp.timescale
    beta, gamma = ts.snap(ivp.beta), ts.snap(ivp.gamma)
    if gamma <= beta:
        raise DomainError("the existence window needs gamma > beta")
    M = ivp.bound_M if bound_M is None else bound_M
    if M is None:
        M = estimate_M(ivp)
    return _window(beta, gamma, ivp.epsilon, M, ts)


def _window(beta, gamma, eps, M, ts):
    if eps <= 0:
        raise DomainError(f"epsilon must be positive, got {eps}")
    delta = gamma - beta if M <= 0 else min(gamma - beta, eps / M)
    return delta, ts.max_in(beta, beta + delta)


def _sample_indices(lo: int, hi: int, count: int) -> np.ndarray:
    return np.unique(np.linspace(lo, hi, min(count, hi - lo + 1)).round().astype(int))


def _estimate_M(fn, layout: _Layout, X, jb: int, jcap: int, eps: float, n: int) -> float:
    hist = X[_sample_indices(0, jb, 20)]
    hist = np.vstack([hist, X[jb][None]])
    d = X.shape[1]
    corners = np.array(np.meshgrid(*[[-1.0, 0.0, 1.0]] * d, indexing="ij")).reshape(d, -1).T
    cands = (hist[:, None, :] + eps * corners[None]).reshape(-1, d)
    kappa = jcap - 1 if jcap > jb and layout.ts.is_left_scattered(layout.points[jcap]) else jcap
    best = 0.0
    ok = False
    for j in _sample_indices(jb, max(kappa, jb), 25):
        t = float(layout.points[j])
        for u in cands:
            try:
                v = np.asarray(fn(t, *([u] * n)), dtype=float)
            except (ArithmeticError, ValueError):
                continue
            if np.all(np.isfinite(v)):
                ok = True
                best = max(best, _norm(v))
    return best * M_SAFETY if ok else math.inf


def estimate_M(ivp: DelayIVP) -> float:
    """Sampled bound of ``|f|`` over ``[β, γ]^κ × I(φ, ε)``, times a 1.1 safety factor.

    Evaluates ``f`` at sampled grid times with every delayed argument set to
    the same candidate: sampled history values and the corners and face
    centres of the ε-cube around them.
    """
    lay = _Layout(ivp.timescale, ivp.alpha, ivp.beta, ivp.gamma, ivp.delays)
    X = _history_values(ivp.history, lay, ivp.dim, lay.jb)
    M = _estimate_M(ivp.rhs, lay, X, lay.jb, lay.last, ivp.epsilon, ivp.n_delays)
    if not math.isfinite(M):
        raise MissingBound("could not bound |f| on the epsilon-neighbourhood of the history")
    return M


def iterate_error_bound(M: float, L: float, k: int, ts: TimeScale, t, beta) -> float:
    """``M L^{k-1} h_k(t, β)``: a bound on ``|x_k(t) - x_{k-1}(t)|`` for Picard iterates."""
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    return M * L ** (k - 1) * hk_polynomial(ts, k, t, beta)


# ------------------------------------------------------------------ Picard core


@dataclass
class _CellResult:
    end: int
    zeta: int
    delta: float
    iterations: int
    sup_diff: float
    iterates: Optional[list]


def _picard_cell(rhs, layout: _Layout, X: np.ndarray, jb: int, jcap: int, M: float, eps: float,
                 tol: float, max_iter: int, initial=None, record=False, cell=None) -> _CellResult:
    """Solve on ``[p[jb], ζ]`` by Picard iteration, then step to ``σ(ζ)`` if ζ is right-scattered.

    ``X`` holds the history/solution up to ``jb`` and is filled in place.
    """
    p = layout.points
    beta = p[jb]
    if jcap == jb:
        return _CellResult(jb, jb, 0.0, 0, 0.0, [] if record else None)
    delta = (p[jcap] - beta) if M <= 0 else min(p[jcap] - beta, eps / M)
    jz = int(np.searchsorted(p, beta + delta + MEMBER_TOL, side="right")) - 1
    jz = min(max(jz, jb), jcap)
    if jz == jb and layout.dense[jb]:
        raise WindowTooSmall(
            f"existence window delta={delta:.3g} at beta={beta} is shorter than the first grid "
            f"step {p[jb + 1] - beta:.3g}; use a smaller dense_step or a larger epsilon")

    cell_pts = p[jb:jz + 1]
    cell_dense = layout.dense[jb:jz]
    x_beta = X[jb].copy()
    if initial is not None:
        X[jb + 1:jz + 1] = initial
    else:
        X[jb + 1:jz + 1] = x_beta
    iterates = [X[jb:jz + 1].copy()] if record else None

    # on a purely scattered cell iterate k fixes the first k points, so run to
    # exact stabilization
    exact = not cell_dense.any()
    cap = max(max_iter, jz - jb + 1) if exact else max_iter
    diff = 0.0
    it = 0
    for it in range(1, cap + 1):
        g = rhs(X, jb, jz)
        limits = rhs.left_limits(X, jb, jz, g) if hasattr(rhs, "left_limits") else None
        new = cumulative_integral(cell_pts, g, cell_dense, initial=x_beta, left_limits=limits)
        dev = float(np.max(np.abs(new - x_beta))) if new.size else 0.0
        if dev > eps * (1 + 1e-12):
            raise BallExit(f"iterate {it} left B(x(beta), eps={eps:g}) (distance {dev:g}) "
                           f"on [{beta}, {p[jz]}]" + (f", cell {cell}" if cell is not None else ""))
        diff = float(np.max(np.abs(new - X[jb:jz + 1])))
        scale = max(1.0, float(np.max(np.abs(new))))
        X[jb:jz + 1] = new
        if record:
            iterates.append(new.copy())
        if diff == 0.0 or (not exact and diff <= tol * scale):
            break
    else:
        raise NoConvergence(f"Picard iteration did not converge in {max_iter} iterations "
                            f"(last sup difference {diff:.3g})"
                            + (f" in cell {cell}" if cell is not None else ""),
                            cell=cell, iterations=max_iter, sup_diff=diff)

    end = jz
    if jz < jcap and not layout.dense[jz]:
        g = rhs(X, jz, jz)[0]
        X[jz + 1] = X[jz] + layout.mu[jz] * g
        end = jz + 1
    return _CellResult(end, jz, float(delta), it, diff, iterates)


def _package(layout: _Layout, X: np.ndarray, end: int, diag: Diagnostics, squeeze: bool) -> Solution:
    vals = X[:end + 1]
    if squeeze and vals.ndim == 2 and vals.shape[1] == 1:
        vals = vals[:, 0]
    gf = GridFunction(layout.ts, vals.copy(), layout.points[:end + 1])
    return Solution(gf, float(layout.points[end]), diag)


def picard_solve(ivp: DelayIVP, tol: float = 1e-10, max_iter: int = 200, *,
                 initial_guess=None, record_iterates: bool = False) -> Solution:
    """Local solution on ``[α, σ(ζ)]`` by successive approximation.

    Iteration starts from ``x_0 = φ(β)`` on ``[β, ζ]`` unless ``initial_guess``
    (a callable of ``t`` or an array over the window grid) is given, and stops
    when consecutive iterates differ by at most ``tol`` in the sup norm (scaled
    by ``max(1, |x|)``).  With ``record_iterates`` every iterate on the window
    is kept in ``diagnostics.iterates``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    lay = _Layout(ivp.timescale, ivp.alpha, ivp.beta, ivp.gamma, ivp.delays)
    X = np.zeros((lay.size, ivp.dim))
    X[:lay.jb + 1] = _history_values(ivp.history, lay, ivp.dim, lay.jb)
    if lay.jb == lay.last:
        return _package(lay, X, lay.jb, Diagnostics(window_delta=0.0, zeta=float(lay.points[lay.jb]),
                                                     iterates=[] if record_iterates else None), True)
    M = ivp.bound_M
    if M is None:
        M = _estimate_M(ivp.rhs, lay, X, lay.jb, lay.last, ivp.epsilon, ivp.n_delays)
        if not math.isfinite(M):
            raise MissingBound("could not bound |f| on the epsilon-neighbourhood of the history")
    init = None
    if initial_guess is not None:
        delta, _ = _window(lay.points[lay.jb], lay.points[-1], ivp.epsilon, M, lay.ts)
        jz = int(np.searchsorted(lay.points, lay.points[lay.jb] + delta + MEMBER_TOL, side="right")) - 1
        pts = lay.points[lay.jb + 1:jz + 1]
        if callable(initial_guess):
            init = np.array([_vector(initial_guess, float(t), ivp.dim) for t in pts]).reshape(-1, ivp.dim)
        else:
            init = np.asarray(initial_guess, dtype=float).reshape(-1, ivp.dim)[-pts.size:] if pts.size else None
    rhs = _CallableRhs(ivp.rhs, lay, ivp.dim)
    res = _picard_cell(rhs, lay, X, lay.jb, lay.last, M, ivp.epsilon, tol, max_iter,
                       initial=init, record=record_iterates)
    diag = Diagnostics(iterations=res.iterations, final_sup_diff=res.sup_diff,
                       window_delta=res.delta, zeta=float(lay.points[res.zeta]),
                       partition=[float(lay.points[lay.jb]), float(lay.points[res.end])],
                       cell_iterations=[res.iterations], bound_M=M, iterates=res.iterates)
    return _package(lay, X, res.end, diag, True)


def solve_steps(ivp: DelayIVP, tol: float = 1e-10, max_iter: int = 200) -> Solution:
    """Apply the local existence step repeatedly, each local solution becoming the next history.

    The ε of the problem is kept; an unknown ``M`` is re-estimated from the
    current history at every step.  On scales made of isolated points each
    step advances at least one point, so the whole of ``[α, γ]`` is reached.
    """
    lay = _Layout(ivp.timescale, ivp.alpha, ivp.beta, ivp.gamma, ivp.delays)
    X = np.zeros((lay.size, ivp.dim))
    X[:lay.jb + 1] = _history_values(ivp.history, lay, ivp.dim, lay.jb)
    rhs = _CallableRhs(ivp.rhs, lay, ivp.dim)
    diag = Diagnostics(partition=[float(lay.points[lay.jb])])
    jb = lay.jb
    while jb < lay.last:
        M = ivp.bound_M
        if M is None:
            M = _estimate_M(ivp.rhs, lay, X, jb, lay.last, ivp.epsilon, ivp.n_delays)
            if not math.isfinite(M):
                raise MissingBound(f"could not bound |f| near the solution at t={lay.points[jb]}")
        res = _picard_cell(rhs, lay, X, jb, lay.last, M, ivp.epsilon, tol, max_iter,
                           cell=len(diag.cell_iterations))
        diag.cell_iterations.append(res.iterations)
        diag.iterations += res.iterations
        diag.final_sup_diff = max(diag.final_sup_diff, res.sup_diff)
        jb = res.end
        diag.partition.append(float(lay.points[jb]))
    return _package(lay, X, lay.last, diag, True)


# -------------------------------------------------------------- linear systems


def _linear_arrays(sys: LinearDelaySystem, layout: _Layout, forcing=True):
    n, d = sys.n_delays, sys.dim
    if len(sys.coeffs) != n:
        raise DomainError(f"{len(sys.coeffs)} coefficients for {n} delays")
    P = np.zeros((n, layout.size, d, d))
    Q = np.zeros((layout.size, d))
    for j in range(layout.jb, layout.size):
        t = float(layout.points[j])
        try:
            for i, p in enumerate(sys.coeffs):
                P[i, j] = _matrix(p, t, d)
            if forcing:
                Q[j] = _vector(sys.forcing, t, d)
        except (ArithmeticError, ValueError, TypeError) as exc:
            raise EvaluationError(f"coefficients could not be evaluated at t={t}: {exc}") from exc
    if not (np.all(np.isfinite(P)) and np.all(np.isfinite(Q))):
        raise EvaluationError("coefficients or forcing are not finite on [beta, gamma]")
    return P, Q


def _bounds_from_arrays(P, Q, jb):
    M1 = float(np.max(np.abs(P[:, jb:]).sum(axis=-1).max(axis=-1).sum(axis=0)))
    M2 = float(np.max(np.abs(Q[jb:]).max(axis=-1)))
    return M1, M2


def estimate_bounds(sys: LinearDelaySystem) -> tuple[float, float]:
    """``M1 = max Σ_i |p_i(t)|`` and ``M2 = max |q(t)|`` over the grid of ``[β, γ]``."""
    lay = _Layout(sys.timescale, sys.alpha, sys.beta, sys.gamma, sys.delays)
    P, Q = _linear_arrays(sys, lay)
    return _bounds_from_arrays(P, Q, lay.jb)


def _partition(layout: _Layout, jb: int, jend: int, M1: float) -> list[int]:
    p = layout.points
    if M1 <= 0:
        return [jb, jend] if jend > jb else [jb]
    w = 1.0 / (2.0 * M1)
    out = [jb]
    k = jb
    while k < jend:
        if layout.mu[k] > w:
            nxt = k + 1
        else:
            nxt = min(int(np.searchsorted(p, p[k] + w, side="right")) - 1, jend)
            if nxt <= k:
                raise WindowTooSmall(
                    f"dense_step {p[k + 1] - p[k]:.3g} exceeds the admissible step 1/(2 M1) = {w:.3g} "
                    f"at t={p[k]}; refine the grid")
        out.append(nxt)
        k = nxt
    return out


def make_partition(sys: LinearDelaySystem, M1: float) -> list[float]:
    """``β = β_0 < ... < β_k0 = γ``: single jumps where ``μ > 1/(2 M1)``, else steps of width ``<= 1/(2 M1)``."""
    if not M1 > 0:
        raise ValueError(f"M1 must be positive, got {M1}")
    lay = _Layout(sys.timescale, sys.alpha, sys.beta, sys.gamma, sys.delays)
    return [float(lay.points[k]) for k in _partition(lay, lay.jb, lay.last, M1)]


def _choose_epsilon(nu: float, M1: float, M2: float, width: float) -> float:
    if not math.isfinite(nu):
        raise DomainError("solution is no longer finite")
    eps = nu + 1.0
    while True:
        M = M1 * (eps + nu) + M2
        if M <= 0 or eps / M >= width:
            return eps
        eps *= 2.0


def _solve_by_steps(rhs, layout: _Layout, X: np.ndarray, jb: int, M1: float, M2: float,
                    tol: float, max_iter: int, diag: Diagnostics) -> None:
    """Method of steps on ``[p[jb], γ]`` with the per-cell bounds ``M_k = M1 (ε_k + ν_k) + M2``."""
    cells = _partition(layout, jb, layout.last, M1)
    width = 1.0 / (2.0 * M1) if M1 > 0 else layout.points[-1] - layout.points[jb]
    diag.partition = [float(layout.points[k]) for k in cells]
    for c, (k0, k1) in enumerate(zip(cells[:-1], cells[1:])):
        nu = float(np.max(np.abs(X[:k0 + 1])))
        eps = _choose_epsilon(nu, M1, M2, width)
        M = M1 * (eps + nu) + M2
        res = _picard_cell(rhs, layout, X, k0, k1, M, eps, tol, max_iter, cell=c)
        if res.end != k1:
            raise DomainError(f"cell {c} reached {layout.points[res.end]} instead of {layout.points[k1]}")
        diag.cell_iterations.append(res.iterations)
        diag.iterations += res.iterations
        diag.final_sup_diff = max(diag.final_sup_diff, res.sup_diff)


def solve_global(sys: LinearDelaySystem, tol: float = 1e-10, max_iter: int = 200) -> Solution:
    """Unique solution of the linear system on all of ``[α, γ]`` by the method of steps."""
    lay = _Layout(sys.timescale, sys.alpha, sys.beta, sys.gamma, sys.delays)
    P, Q = _linear_arrays(sys, lay)
    M1, M2 = _bounds_from_arrays(P, Q, lay.jb)
    X = np.zeros((lay.size, sys.dim))
    X[:lay.jb + 1] = _history_values(sys.history, lay, sys.dim, lay.jb)
    diag = Diagnostics(bound_M=None)
    _solve_by_steps(_LinearRhs(P, Q, lay), lay, X, lay.jb, M1, M2, tol, max_iter, diag)
    return _package(lay, X, lay.last, diag, True)


def solve_global_nonlinear(ivp: DelayIVP, growth: Sequence, tol: float = 1e-10,
                           max_iter: int = 200) -> Solution:
    """Global solution when ``|f(t, u)| <= Σ p_i(t) |u_i| + q(t)``.

    ``growth`` lists the ``n + 1`` nonnegative envelope coefficients
    ``p_1, ..., p_n, q`` (callables or constants).  Every evaluation of ``f``
    is checked against the envelope.
    """
    n = ivp.n_delays
    if len(growth) != n + 1:
        raise ValueError(f"growth needs {n + 1} coefficients (p_1..p_n, q), got {len(growth)}")
    lay = _Layout(ivp.timescale, ivp.alpha, ivp.beta, ivp.gamma, ivp.delays)
    env = np.zeros((n + 1, lay.size))
    for j in range(lay.jb, lay.size):
        t = float(lay.points[j])
        env[:, j] = [float(_call(g, t)) for g in growth]
    if np.any(env < 0) or not np.all(np.isfinite(env)):
        raise ValueError("growth coefficients must be finite and nonnegative")
    M1 = float(env[:n, lay.jb:].sum(axis=0).max())
    M2 = float(env[n, lay.jb:].max())
    X = np.zeros((lay.size, ivp.dim))
    X[:lay.jb + 1] = _history_values(ivp.history, lay, ivp.dim, lay.jb)
    rhs = _CallableRhs(ivp.rhs, lay, ivp.dim, envelope=(env[:n], env[n]))
    diag = Diagnostics()
    _solve_by_steps(rhs, lay, X, lay.jb, M1, M2, tol, max_iter, diag)
    return _package(lay, X, lay.last, diag, True)
