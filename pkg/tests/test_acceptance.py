"""Acceptance suite: one test per criterion, each reported as a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py`` (the summary section lists
the criteria) or as a script.
"""

import math
import random
import sys
import time
from pathlib import Path

import numpy as np
import pytest

import oracles
from tsdelay import (
    DelayIVP,
    LinearDelaySystem,
    Representation,
    build_timescale,
    estimate_bounds,
    exp_function,
    exp_values,
    existence_window,
    hk_polynomial,
    integers,
    iterate_error_bound,
    make_partition,
    picard_solve,
    solve_global,
    verify_representation,
)
from tsdelay.cli import run_command

DATA = Path(__file__).parent / "data"


def ident(t):
    return t


def _table_fn(table, d, kind):
    if kind == "matrix":
        return lambda t: np.array(table[int(round(t))], dtype=float).reshape(d, d)
    return lambda t: np.array(table[int(round(t))], dtype=float).reshape(d)


def _discrete_system(rng, coef, lo=-2, hi=50):
    d, shifts, P, Q, H = oracles.random_discrete_system(rng, lo, hi, coef)
    sys_ = LinearDelaySystem(integers(lo, hi), lo, 0, hi,
                             [_table_fn(p, d, "matrix") for p in P],
                             [(lambda k: lambda t: t - k)(k) for k in shifts],
                             _table_fn(H, d, "vector"), forcing=_table_fn(Q, d, "vector"), dim=d)
    return sys_, (d, shifts, P, Q, H)


@pytest.mark.criterion(1, "discrete oracle equivalence (25 systems, abs err <= 1e-9, < 10 s)")
def test_discrete_oracle_equivalence():
    rng = random.Random(20240601)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(25):
        sys_, (d, shifts, P, Q, H) = _discrete_system(rng, 2.0)
        sol = solve_global(sys_)
        pts = list(range(-2, 51))
        ref = oracles.forward_recursion(pts, 0, 2, P, shifts, H, Q, d)
        got = np.asarray(sol.values.values, dtype=float).reshape(len(pts), d)
        for j, t in enumerate(pts):
            worst = max(worst, max(abs(got[j][a] - ref[t][a]) for a in range(d)))
    elapsed = time.perf_counter() - start
    assert worst <= 1e-9, worst
    assert elapsed < 10, elapsed


@pytest.mark.criterion(2, "ordinary closed form (dense rel 1e-3, integers exact)")
def test_ordinary_closed_form():
    x0 = 0.5
    ts = build_timescale([[0, 1]], 1e-3)
    sys_ = LinearDelaySystem(ts, 0, 0, 1, [1.0], [ident], x0, forcing=1.0)
    sol = solve_global(sys_)
    rep = Representation(sys_).evaluate_all().ravel()
    exact = np.array([oracles.ordinary_closed_form(x0, 1.0, 1.0, t) for t in sol.points])
    assert np.max(np.abs(sol.values.values - exact) / np.abs(exact)) <= 1e-3
    assert np.max(np.abs(rep - exact) / np.abs(exact)) <= 1e-3

    z = integers(0, 10)
    sys_ = LinearDelaySystem(z, 0, 0, 10, [1.0], [ident], x0, forcing=1.0)
    ref = [x0]
    for _ in range(10):
        ref.append(ref[-1] + (ref[-1] + 1.0))
    assert np.max(np.abs(solve_global(sys_).values.values - ref)) <= 1e-9
    assert np.max(np.abs(Representation(sys_).evaluate_all().ravel() - ref)) <= 1e-9


@pytest.mark.criterion(3, "iterate error bound M L^(k-1) h_k(t, beta), k <= 6")
def test_iterate_error_bound():
    z = integers(0, 8)
    M, L = 0.8, 0.5
    # |f| <= 0.5 + 0.3 and f is 0.5-Lipschitz in u
    ivp = DelayIVP(z, 0, 0, 8, lambda t, u: 0.5 * np.sin(u) + 0.3, [lambda t: max(t - 1, 0)], 0.0,
                   lipschitz_L=L, bound_M=M, epsilon=10.0)
    sol = picard_solve(ivp, record_iterates=True)
    its = sol.diagnostics.iterates
    pts = z.grid(0, sol.diagnostics.zeta)
    assert sol.diagnostics.zeta == 8 and sol.diagnostics.final_sup_diff == 0.0
    # the scattered run stops at an exact fixed point, so later iterates repeat the last
    its = list(its) + [its[-1]] * max(0, 7 - len(its))
    for k in range(1, 7):
        diff = np.abs(its[k] - its[k - 1])
        for t, dv in zip(pts, diff):
            assert dv <= iterate_error_bound(M, L, k, z, t, 0) + 1e-9, (k, t)
            # the bound's polynomial factor is the binomial coefficient on the integers
            assert hk_polynomial(z, k, t, 0) == oracles.binomial(int(t), k)


WINDOW_CASES = [
    # components, step, beta, gamma, eps, M
    ([[0, 1]], 0.05, 0.0, 1.0, 0.5, 2.0),
    ([[0, 1]], 0.05, 0.0, 1.0, 5.0, 2.0),
    ([{k} for k in range(6)], 1.0, 0.0, 5.0, 0.5, 2.0),
    ([{k} for k in range(6)], 1.0, 1.0, 5.0, 3.0, 1.0),
    ([[0, 1], {2}, [3, 4]], 0.1, 0.0, 4.0, 1.5, 1.0),
    ([[0, 1], {2}, [3, 4]], 0.1, 0.5, 4.0, 3.0, 1.0),
    ([[0, 1], {2}, [3, 4]], 0.1, 1.0, 4.0, 0.9, 1.0),
    ([[0, 1], {2}, [3, 4]], 0.1, 2.0, 3.5, 1.3, 1.0),
    ([{0}, {0.3}, [1, 2]], 0.01, 0.0, 2.0, 0.7, 0.5),
    ([{0}, {0.3}, [1, 2]], 0.01, 0.3, 1.5, 2.0, 3.0),
]


@pytest.mark.criterion(4, "existence window delta = min{gamma-beta, eps/M}, zeta = max[beta, beta+delta]")
@pytest.mark.parametrize("comps,step,beta,gamma,eps,M", WINDOW_CASES)
def test_window_formula(comps, step, beta, gamma, eps, M):
    ts = build_timescale(comps, step)
    ivp = DelayIVP(ts, ts.min, beta, gamma, lambda t, u: u, [ident], 1.0, epsilon=eps, bound_M=M)
    delta, zeta = existence_window(ivp)
    assert delta == min(gamma - beta, eps / M)
    grid = ts.grid(ts.min, ts.max)
    assert zeta == max(p for p in grid if beta <= p <= beta + delta)


def _periodic_scale(step):
    return build_timescale([c for k in (-1, 0, 1) for c in ([k, k + 0.2], {k + 0.6})], step)


MIXED_SYSTEMS = [
    dict(coeffs=[lambda t: 0.5 + 0.3 * np.sin(t), -0.7], delays=[ident, lambda t: t - 1],
         history=np.cos, forcing=lambda t: 0.2 * t),
    dict(coeffs=[-0.9], delays=[lambda t: t - 1], history=lambda t: 1 + t, forcing=0.3),
    dict(coeffs=[lambda t: np.cos(3 * t)], delays=[ident], history=2.0, forcing=lambda t: np.sin(t)),
    dict(coeffs=[0.4, lambda t: -0.5 * t], delays=[ident, lambda t: t - 1],
         history=lambda t: np.exp(t), forcing=0.0),
    dict(coeffs=[lambda t: [[0.2, 1.0], [-1.0, 0.1]], -0.3], delays=[ident, lambda t: t - 1],
         history=lambda t: [np.cos(t), np.sin(t)], forcing=lambda t: [0.1 * t, 0.0], dim=2),
]


@pytest.mark.criterion(5, "representation formula (25 discrete <= 1e-9, 5 mixed <= 1e-4, < 60 s)")
def test_representation_formula():
    start = time.perf_counter()
    rng = random.Random(7)
    for _ in range(25):
        sys_, _ = _discrete_system(rng, 0.5, hi=30)
        rep = verify_representation(sys_, tol=1e-9)
        assert rep.passed, str(rep)
    ts = _periodic_scale(1e-3)
    gated = 0
    for kw in MIXED_SYSTEMS:
        sys_ = LinearDelaySystem(ts, -1, 0, 1.6, **kw)
        gated += any(tau(0.1) < 0 for tau in sys_.delays)
        rep = verify_representation(sys_, tol=1e-4)
        assert rep.passed, str(rep)
    assert gated >= 3
    elapsed = time.perf_counter() - start
    assert elapsed < 60, elapsed


EXP_SCALES = [
    build_timescale([[0, 1], {1.5}, {2}, [2.5, 3]], 1e-3),
    build_timescale([{0}, {0.25}, {1}, [1.5, 2], {4}], 1e-3),
    integers(0, 12),
    build_timescale([{k * 0.5} for k in range(10)], 1.0),
]


@pytest.mark.criterion(6, "exponential: e(s,s)=1, semigroup, e_L >= 1, scattered IVP identity")
def test_exponential_properties():
    rng = random.Random(99)
    for case in range(20):
        ts = EXP_SCALES[case % len(EXP_SCALES)]
        if case % 2:
            c = rng.uniform(0.05, 2.0)
            f = (lambda c: lambda t: c)(c)
        else:
            a, b = rng.uniform(0.2, 1.0), rng.uniform(-0.15, 0.15)
            f = (lambda a, b: lambda t: a + b * np.sin(3 * t))(a, b)
        pts = ts.points
        r, s, t = pts[0], pts[len(pts) // 3], pts[-1]
        assert exp_function(ts, f, s, s) == 1.0
        lhs = exp_function(ts, f, t, r)
        rhs = exp_function(ts, f, t, s) * exp_function(ts, f, s, r)
        tol = 1e-9 if ts.is_discrete else 1e-5
        assert abs(lhs - rhs) <= tol * abs(lhs)
        # cylinder-transformation route, summed term by term
        grid = ts.grid(r, t)
        fv = [float(f(u)) for u in grid]
        dense = [bool(x) for x in ts.dense_pairs(grid)]
        ref = oracles.exp_by_cylinder(list(grid), None, fv, dense)
        assert lhs == pytest.approx(ref, rel=tol)
        L = rng.uniform(0.01, 3.0)
        _, eL = exp_values(ts, L, r, t)
        assert np.all(eL >= 1.0)
        grid, e = exp_values(ts, f, r, t)
        for j in range(grid.size - 1):
            mu = ts.mu(grid[j])
            if mu > 0:
                assert e[j + 1] == e[j] * (1.0 + mu * float(f(grid[j])))


@pytest.mark.criterion(7, "h_k: binomial on integers (1e-9), (t-s)^k/k! on sampled reals (1e-4)")
def test_hk_oracles():
    z = integers(-3, 20)
    for k in range(6):
        for s in (-3, 0, 4):
            for t in range(s, 21):
                assert abs(hk_polynomial(z, k, t, s) - oracles.binomial(t - s, k)) <= 1e-9
                if t - s <= 6:
                    assert oracles.iterated_sum_hk(k, t, s) == oracles.binomial(t - s, k)
    ts = build_timescale([[0, 2]], 1e-3)
    for k in range(6):
        for s, t in ((0, 2), (0.5, 1.7), (1.2, 1.2)):
            assert abs(hk_polynomial(ts, k, t, s) - (t - s) ** k / math.factorial(k)) <= 1e-4


@pytest.mark.criterion(8, "perturbed-start Picard runs agree within 10 tol (10 problems)")
def test_perturbed_start_uniqueness():
    rng = np.random.default_rng(5)
    tol = 1e-10
    scales = [build_timescale([[0, 0.5]], 1e-3), build_timescale([[0, 0.2], {0.3}, [0.4, 0.6]], 1e-3),
              integers(0, 6)]
    for case in range(10):
        ts = scales[case % 3]
        a, b, x0 = rng.uniform(-1, 1, 3)
        ivp = DelayIVP(ts, 0, 0, ts.max, (lambda a, b: lambda t, u: a * np.sin(u) + b * np.cos(t))(a, b),
                       [ident], x0, bound_M=2.2, epsilon=1.0)
        base = picard_solve(ivp, tol=tol)
        n = ts.grid(0, base.diagnostics.zeta).size - 1
        guess = x0 + rng.uniform(-0.5, 0.5, n)
        other = picard_solve(ivp, tol=tol, initial_guess=guess)
        assert other.end == base.end
        assert np.max(np.abs(other.values.values - base.values.values)) <= 10 * tol


@pytest.mark.criterion(9, "partition cells: single jump with mu > 1/(2 M1) or width <= 1/(2 M1)")
def test_partition_correctness():
    scales = [build_timescale([[0, 1], {1.3}, {2}, [2.5, 4]], 0.01), integers(0, 4),
              build_timescale([{0}, {0.1}, {0.2}, [1, 2], {3}, {4}], 0.005)]
    for ts in scales:
        for M1 in (0.1, 0.3, 0.55, 1.0, 2.0, 4.9, 7.0, 40.0):
            sys_ = LinearDelaySystem(ts, 0, 0, 4, [M1], [ident], 1.0)
            assert estimate_bounds(sys_)[0] == M1
            cells = make_partition(sys_, M1)
            assert cells[0] == 0 and cells[-1] == 4
            w = 1 / (2 * M1)
            for a, b in zip(cells[:-1], cells[1:]):
                assert b > a
                assert (ts.mu(a) > w and b == ts.sigma(a)) or b - a <= w + 1e-12


@pytest.mark.criterion(10, "CLI end to end: Fibonacci rows through t = 20, exit codes on bad specs")
def test_cli_end_to_end(tmp_path, capsys):
    out = tmp_path / "fib.csv"
    assert run_command(["solve", str(DATA / "fib.cfg"), "-o", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "t,x1"
    fib = [1, 1]
    while len(fib) < 22:
        fib.append(fib[-1] + fib[-2])
    assert rows[1:] == [f"{t},{v}" for t, v in zip(range(-1, 21), fib)]
    good = (DATA / "fib.cfg").read_text()
    bad = {
        "ahead.cfg": good.replace("tau1 = t - 1", "tau1 = t + 1"),
        "syntax.cfg": good.replace("p1 = 1", "p1 = 2*^t"),
        "alpha.cfg": good.replace("alpha = -1", "alpha = 0"),
    }
    for name, text in bad.items():
        path = tmp_path / name
        path.write_text(text)
        assert run_command(["solve", str(path)]) == 1, name
    capsys.readouterr()


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
