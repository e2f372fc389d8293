"""Independent reference computations used by the tests.

Everything here is written with plain Python floats and loops, without the
package, so that agreement with the library is meaningful.
"""

from __future__ import annotations

import math
import random


def forward_recursion(ts_points, alpha_idx, beta_idx, coeff_tables, delay_shifts, history, forcing, d):
    """Direct recursion ``x(t+1) = x(t) + Σ_i p_i(t) x(t - k_i) + q(t)`` on consecutive integers.

    ``coeff_tables[i][t]`` is a ``d x d`` nested list, ``forcing[t]`` a list of
    length ``d``, ``history[t]`` a list of length ``d``; ``t`` indexes
    ``ts_points``.  The term order matches the natural reading of the sum.
    """
    x = {t: list(history[t]) for t in ts_points[alpha_idx:beta_idx + 1]}
    for j in range(beta_idx, len(ts_points) - 1):
        t = ts_points[j]
        g = None
        for tab, k in zip(coeff_tables, delay_shifts):
            p = tab[t]
            u = x[t - k]
            term = []
            for a in range(d):
                s = p[a][0] * u[0]
                for b in range(1, d):
                    s = s + p[a][b] * u[b]
                term.append(s)
            g = term if g is None else [g[a] + term[a] for a in range(d)]
        g = [g[a] + forcing[t][a] for a in range(d)]
        x[ts_points[j + 1]] = [x[t][a] + 1.0 * g[a] for a in range(d)]
    return x


def random_discrete_system(rng: random.Random, lo=-2, hi=50, coef=2.0):
    """Random integer-delay system data on ``{lo..hi}``: ``(d, shifts, P, Q, H)``."""
    d = rng.choice([1, 2])
    n = rng.choice([1, 2])
    shifts = [rng.randint(0, -lo) for _ in range(n)]
    ts = list(range(lo, hi + 1))
    P = [{t: [[rng.uniform(-coef, coef) for _ in range(d)] for _ in range(d)] for t in ts}
         for _ in range(n)]
    Q = {t: [rng.uniform(-coef, coef) for _ in range(d)] for t in ts}
    H = {t: [rng.uniform(-coef, coef) for _ in range(d)] for t in ts if t <= 0}
    return d, shifts, P, Q, H


def binomial(n: int, k: int) -> float:
    return float(math.comb(n, k)) if n >= k else 0.0


def iterated_sum_hk(k: int, t: int, s: int) -> float:
    """``h_k(t, s)`` on the integers by brute-force iterated sums."""
    if k == 0:
        return 1.0
    return sum(iterated_sum_hk(k - 1, u, s) for u in range(s, t))


def ordinary_closed_form(x0: float, p: float, q: float, t: float) -> float:
    """Solution of ``x' = p x + q``, ``x(0) = x0`` on the reals."""
    return (x0 + q / p) * math.exp(p * t) - q / p


def exp_by_cylinder(points, mus, fvals, dense_flags):
    """``exp(Σ μ ξ_μ(f))`` over gaps and ``exp(trapezoid f)`` over dense pairs, term by term."""
    total = 0.0
    for j in range(len(points) - 1):
        w = points[j + 1] - points[j]
        if dense_flags[j]:
            total += 0.5 * w * (fvals[j] + fvals[j + 1])
        else:
            total += w * (math.log(1.0 + w * fvals[j]) / w)
    return math.exp(total)
