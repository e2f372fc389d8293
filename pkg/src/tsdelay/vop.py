"""Principal solutions and the variation-of-parameters representation.

For the linear system ``x^Δ = Σ p_i x(τ_i) + q`` the solution is

    x(t) = X(t, β) φ(β) + ∫_β^t X(t, σ(η)) [q(η) + Σ_i p_i(η) χ_{[α,β)}(τ_i(η)) φ(τ_i(η))] Δη

where ``X(·, s)`` is the principal solution started at ``s``.  One principal
solve is done per source point and cached.  The representation integral uses
the same gap sums and trapezoid rule as the solver; on dense segments the
history gate is taken as its one-sided limit at each end of a grid cell, so a
delay crossing ``β`` exactly at a grid point is integrated without a jump error.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, OutOfDomain
from .solver import (
    Diagnostics,
    LinearDelaySystem,
    _bounds_from_arrays,
    _history_values,
    _Layout,
    _linear_arrays,
    _LinearRhs,
    _solve_by_steps,
    solve_global,
)
from .timescale import GridFunction, TimeScale


@dataclass(frozen=True)
class CharacteristicSet:
    """A real interval with open or closed ends, optionally intersected with a time scale."""

    lo: float = -math.inf
    hi: float = math.inf
    closed_lo: bool = True
    closed_hi: bool = True
    timescale: Optional[TimeScale] = None

    @classmethod
    def singleton(cls, z: float, timescale: Optional[TimeScale] = None) -> "CharacteristicSet":
        return cls(z, z, True, True, timescale)

    def __contains__(self, t) -> bool:
        t = float(t)
        above = t >= self.lo if self.closed_lo else t > self.lo
        below = t <= self.hi if self.closed_hi else t < self.hi
        if not (above and below):
            return False
        return self.timescale is None or t in self.timescale


def characteristic(U: CharacteristicSet, t) -> int:
    """Indicator ``χ_U(t)``."""
    return 1 if t in U else 0


@dataclass
class PrincipalSolution:
    """``X(·, ζ)`` on ``[α, γ]``: zero before ζ, identity at ζ, homogeneous equation after."""

    sys: LinearDelaySystem
    zeta: float
    values: GridFunction

    def __call__(self, t) -> np.ndarray:
        return self.values(t)


class Representation:
    """Variation-of-parameters evaluation for one linear system.

    Principal solutions are computed on demand, one per source grid point, and
    cached; distinct sources may be filled from several threads.
    """

    def __init__(self, sys: LinearDelaySystem, tol: float = 1e-10, max_iter: int = 200):
        self.sys = sys
        self.tol = tol
        self.max_iter = max_iter
        self.layout = _Layout(sys.timescale, sys.alpha, sys.beta, sys.gamma, sys.delays)
        self.P, self.Q = _linear_arrays(sys, self.layout)
        self.M1, _ = _bounds_from_arrays(self.P, self.Q, self.layout.jb)
        self.history = _history_values(sys.history, self.layout, sys.dim, self.layout.jb)
        self._cache: dict[int, np.ndarray] = {}
        self._lock = threading.Lock()
        self._weights = None

    # -- principal solutions -----------------------------------------------------

    def principal_values(self, j: int) -> np.ndarray:
        """``X(t_k, t_j)`` for every layout index ``k`` (array of shape ``(G, d, d)``)."""
        cached = self._cache.get(j)
        if cached is not None:
            return cached
        lay, d = self.layout, self.sys.dim
        if not lay.jb <= j <= lay.last:
            raise OutOfDomain(f"principal solutions start in [beta, gamma]; got index {j}")
        X = np.zeros((lay.size, d, d))
        X[j] = np.eye(d)
        if j < lay.last:
            _solve_by_steps(_LinearRhs(self.P, None, lay, jump=j), lay, X, j, self.M1, 0.0,
                            self.tol, self.max_iter, Diagnostics())
        X.setflags(write=False)
        with self._lock:
            return self._cache.setdefault(j, X)

    def principal(self, zeta) -> PrincipalSolution:
        j = self.layout.index(zeta)
        return PrincipalSolution(self.sys, float(self.layout.points[j]),
                                 GridFunction(self.sys.timescale, self.principal_values(j),
                                              self.layout.points))

    # -- representation integrand -------------------------------------------------

    def _gated_history(self, j: int, gate: np.ndarray) -> np.ndarray:
        idx = self.layout.delay_idx[:, j]
        acc = np.zeros(self.sys.dim)
        for i in np.flatnonzero(gate):
            acc = acc + self.P[i, j] @ self.history[idx[i]]
        return acc

    def weights(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-source weights: ``right[s]`` applies for ``t >= t_s``, ``left[s]`` for ``t > t_s``."""
        if self._weights is not None:
            return self._weights
        lay, d = self.layout, self.sys.dim
        jb, p = lay.jb, lay.points
        right = np.zeros((lay.size, d))
        left = np.zeros((lay.size, d))
        for j in range(jb, lay.last):
            idx = lay.delay_idx[:, j]
            in_solution = idx >= jb          # I(t)
            in_history = idx < jb            # J(t)
            assert not np.any(in_solution & in_history) and np.all(in_solution | in_history)
            w = self.Q[j] + self._gated_history(j, in_history)
            width = p[j + 1] - p[j]
            if not lay.dense[j]:
                right[j + 1] += width * w
                continue
            # one-sided limit of the gate at the right end of the cell
            nxt = lay.delay_idx[:, j + 1]
            gate_minus = (nxt < jb) | ((nxt == jb) & (idx < jb))
            w_minus = self.Q[j + 1] + self._gated_history(j + 1, gate_minus)
            left[j] += 0.5 * width * w
            right[j + 1] += 0.5 * width * w_minus
        self._weights = (right, left)
        return self._weights

    def evaluate_all(self) -> np.ndarray:
        """Representation values at every grid point of ``[β, γ]`` (shape ``(G_β, d)``)."""
        lay = self.layout
        jb = lay.jb
        right, left = self.weights()
        x = np.einsum("kab,b->ka", self.principal_values(jb)[jb:], self.history[jb])
        for s in range(jb, lay.size):
            has_r = np.any(right[s])
            has_l = np.any(left[s])
            if not (has_r or has_l):
                continue
            X = self.principal_values(s)
            if has_r:
                x[s - jb:] += np.einsum("kab,b->ka", X[s:], right[s])
            if has_l and s < lay.last:
                x[s - jb + 1:] += np.einsum("kab,b->ka", X[s + 1:], left[s])
        return x

    def evaluate(self, t):
        lay = self.layout
        k = lay.index(t)
        if k < lay.jb:
            raise OutOfDomain(f"the representation holds on [beta, gamma]; got t={t}")
        right, left = self.weights()
        x = self.principal_values(lay.jb)[k] @ self.history[lay.jb]
        for s in range(lay.jb, k + 1):
            if np.any(right[s]):
                x = x + self.principal_values(s)[k] @ right[s]
            if s < k and np.any(left[s]):
                x = x + self.principal_values(s)[k] @ left[s]
        return float(x[0]) if self.sys.dim == 1 else x


def principal_solution(sys: LinearDelaySystem, zeta, tol: float = 1e-10,
                       max_iter: int = 200) -> PrincipalSolution:
    """Principal solution ``X(·, ζ)`` of the homogeneous system on ``[α, γ]``."""
    ts = sys.timescale
    if zeta not in ts or not (ts.snap(sys.beta) <= ts.snap(zeta) <= ts.snap(sys.gamma)):
        raise OutOfDomain(f"zeta={zeta} must lie in [beta, gamma] on the time scale")
    return Representation(sys, tol, max_iter).principal(zeta)


def vop_evaluate(sys: LinearDelaySystem, t, representation: Optional[Representation] = None):
    """Solution value at ``t`` from the variation-of-parameters formula."""
    rep = representation or Representation(sys)
    return rep.evaluate(t)


@dataclass
class RepresentationReport:
    sup: float
    argmax: float
    tol: float
    passed: bool
    points: np.ndarray
    representation: np.ndarray
    solution: np.ndarray

    def __str__(self):
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict}: sup |vop - solve| = {self.sup:.3e} at t={self.argmax:g} (tol {self.tol:g})"


def verify_representation(sys: LinearDelaySystem, tol: float = 1e-9,
                          solver_tol: float = 1e-10) -> RepresentationReport:
    """Compare the representation formula with :func:`solve_global` on the grid of ``[β, γ]``."""
    sol = solve_global(sys, tol=solver_tol)
    rep = Representation(sys, tol=solver_tol)
    lay = rep.layout
    if sol.points.size != lay.size:
        raise DomainError("solver and representation grids differ")
    x_rep = rep.evaluate_all()
    x_sol = sol.values.values[lay.jb:].reshape(x_rep.shape)
    err = np.max(np.abs(x_rep - x_sol), axis=1)
    k = int(np.argmax(err))
    sup = float(err[k])
    return RepresentationReport(sup, float(lay.points[lay.jb + k]), tol, bool(sup <= tol),
                                lay.points[lay.jb:].copy(), x_rep, x_sol)
