"""Problem files: ``[section]`` headers with ``key = value`` lines and ``#`` comments.

Example (a Fibonacci-type recursion on the integers)::

    [timescale]
    components = {-1..20}

    [problem]
    kind = linear
    alpha = -1
    beta = 0
    gamma = 20
    tau1 = t - 1
    p1 = 1
    history = 1

Sections and keys
-----------------
``[timescale]``
    ``components``: comma separated list of ``[a, b]`` intervals, ``{a}`` or
    ``{a, b, ...}`` isolated points and ``{a..b}`` integer runs.
    ``dense_step``: sampling step on intervals (required when there are any).
``[problem]``
    ``kind`` (``linear`` or ``nonlinear``), ``dim`` (default 1), ``alpha``,
    ``beta``, ``gamma``, delays ``tau1 .. taun`` (expressions in ``t``),
    ``history`` (``d`` expressions in ``t`` separated by ``;``) or
    ``history_table`` (``t: value`` pairs separated by ``;``, vector entries
    by ``,``).  Linear problems give ``p1 .. pn`` (matrix rows separated by
    ``;``, entries by ``,``; a single expression means a multiple of the
    identity) and optional ``q``.  Nonlinear problems give ``rhs`` with
    ``d`` expressions in ``t`` and the delayed states (``u1 .. un`` when
    ``d = 1``, components ``u<i>_<k>`` otherwise), and optionally the growth
    envelope ``envelope_p1 .. envelope_pn``, ``envelope_q``.
``[solver]``
    ``tol``, ``max_iter``, ``epsilon``, ``lipschitz``, ``bound``,
    ``verify_tol`` and ``method`` (nonlinear only: ``local``, ``steps`` or
    ``envelope``).
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ExprError, ParseError, SolverError, TimeScaleError, ValidationError
from .expr import Expr, compile_expression, eval_expression, free_variables, parse_expression
from .solver import DelayIVP, LinearDelaySystem, _Layout
from .timescale import GridFunction, Interval, Point, TimeScale, build_timescale

_KEYS = {
    "timescale": {"components", "dense_step"},
    "problem": {"kind", "dim", "alpha", "beta", "gamma", "history", "history_table", "q", "rhs",
                "envelope_q"},
    "solver": {"tol", "max_iter", "epsilon", "lipschitz", "bound", "verify_tol", "method"},
}
_INDEXED = re.compile(r"(tau|p|envelope_p)([1-9]\d*)$")
_METHODS = ("local", "steps", "envelope")


@dataclass
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 200
    epsilon: float = 1.0
    lipschitz: Optional[float] = None
    bound: Optional[float] = None
    verify_tol: float = 1e-9
    method: Optional[str] = None


@dataclass
class ProblemSpec:
    """Validated problem description; see the module docstring for the file format."""

    timescale: TimeScale
    kind: str
    dim: int
    alpha: float
    beta: float
    gamma: float
    delays: list[Expr]
    history: object                      # list of Expr, or {t: vector} table
    coeffs: list[list[list[Expr]]] = field(default_factory=list)
    forcing: Optional[list[Expr]] = None
    rhs: Optional[list[Expr]] = None
    envelope: Optional[list[Expr]] = None
    options: SolverOptions = field(default_factory=SolverOptions)

    @property
    def n_delays(self) -> int:
        return len(self.delays)

    @property
    def state_names(self) -> tuple[str, ...]:
        n, d = self.n_delays, self.dim
        if d == 1:
            return tuple(f"u{i}" for i in range(1, n + 1))
        return tuple(f"u{i}_{k}" for i in range(1, n + 1) for k in range(1, d + 1))

    # -- callables ------------------------------------------------------------

    def delay_functions(self) -> list:
        return [compile_expression(e) for e in self.delays]

    def history_function(self):
        if isinstance(self.history, dict):
            ts = self.timescale
            pts = ts.grid(self.alpha, self.beta)
            vals = np.array([self.history[_key(t)] for t in pts])
            return GridFunction(ts, vals[:, 0] if self.dim == 1 else vals, pts)
        return _vector_function(self.history, self.dim)

    def forcing_function(self):
        return 0.0 if self.forcing is None else _vector_function(self.forcing, self.dim)

    def coefficient_functions(self) -> list:
        return [_matrix_function(rows, self.dim) for rows in self.coeffs]

    def rhs_function(self):
        names = ("t",) + self.state_names
        fns = [compile_expression(e, names) for e in self.rhs]

        def f(t, *u):
            flat = np.concatenate([np.atleast_1d(np.asarray(ui, dtype=float)) for ui in u])
            args = (t, *flat.tolist())
            return np.array([fn(*args) for fn in fns])

        return f

    def growth(self) -> Optional[list]:
        if self.envelope is None:
            return None
        return [compile_expression(e) for e in self.envelope]

    def to_system(self) -> LinearDelaySystem:
        if self.kind != "linear":
            raise ValidationError("this operation needs a linear problem (kind = linear)")
        return LinearDelaySystem(self.timescale, self.alpha, self.beta, self.gamma,
                                 self.coefficient_functions(), self.delay_functions(),
                                 self.history_function(), self.forcing_function(), self.dim)

    def to_ivp(self) -> DelayIVP:
        o = self.options
        if self.kind == "linear":
            return self.to_system().as_ivp(lipschitz_L=o.lipschitz, bound_M=o.bound,
                                           epsilon=o.epsilon)
        return DelayIVP(self.timescale, self.alpha, self.beta, self.gamma, self.rhs_function(),
                        self.delay_functions(), self.history_function(), dim=self.dim,
                        lipschitz_L=o.lipschitz, bound_M=o.bound, epsilon=o.epsilon)


def _key(t: float) -> float:
    return round(float(t), 9)


def _vector_function(exprs: list[Expr], d: int):
    fns = [compile_expression(e) for e in exprs]
    if d == 1:
        return fns[0]
    return lambda t: np.array([fn(t) for fn in fns])


def _matrix_function(rows: list[list[Expr]], d: int):
    if len(rows) == 1 and len(rows[0]) == 1:
        fn = compile_expression(rows[0][0])
        return fn if d == 1 else (lambda t: fn(t) * np.eye(d))
    fns = [[compile_expression(e) for e in row] for row in rows]
    return lambda t: np.array([[fn(t) for fn in row] for row in fns])


# ------------------------------------------------------------------ text parsing


def split_top_level(text: str, sep: str = ",") -> list[str]:
    """Split at ``sep`` outside any ``()``, ``[]`` or ``{}`` nesting."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts]


def _expr(text: str, where: str) -> Expr:
    if not text.strip():
        raise ParseError(f"{where}: empty expression")
    try:
        return parse_expression(text)
    except ExprError as exc:
        raise ParseError(f"{where}: {exc}") from exc


def _constant(text: str, where: str) -> float:
    e = _expr(text, where)
    if free_variables(e):
        raise ValidationError(f"{where}: must be a constant, found variable(s) "
                              f"{', '.join(sorted(free_variables(e)))}")
    try:
        v = eval_expression(e, {})
    except ExprError as exc:
        raise ValidationError(f"{where}: {exc}") from exc
    if not math.isfinite(v):
        raise ValidationError(f"{where}: value {v} is not finite")
    return v


def parse_components(text: str) -> list:
    """Components of a time scale from ``[a, b], {p}, {a..b}`` notation."""
    out = []
    for item in split_top_level(text):
        if not item:
            raise ParseError("components: empty item")
        if item[0] == "[" and item[-1] == "]":
            ends = split_top_level(item[1:-1])
            if len(ends) != 2:
                raise ParseError(f"components: interval {item!r} needs two end points")
            a, b = (_constant(x, f"components {item}") for x in ends)
            if not a < b:
                raise ValidationError(f"components: interval {item} needs a < b")
            out.append(Interval(a, b))
        elif item[0] == "{" and item[-1] == "}":
            body = item[1:-1]
            if ".." in body:
                lo_txt, hi_txt = body.split("..", 1)
                lo, hi = (_constant(x, f"components {item}") for x in (lo_txt, hi_txt))
                if lo != int(lo) or hi != int(hi) or lo > hi:
                    raise ValidationError(f"components: {item} needs integer ends lo <= hi")
                out.extend(Point(float(k)) for k in range(int(lo), int(hi) + 1))
            else:
                out.extend(Point(_constant(x, f"components {item}")) for x in split_top_level(body))
        else:
            raise ParseError(f"components: cannot read {item!r}; use [a, b], {{p}} or {{a..b}}")
    if not out:
        raise ParseError("components: no components given")
    return out


def _read(text: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",),
                                   inline_comment_prefixes=("#",), strict=True)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ParseError(str(exc).replace("\n", " ")) from exc
    for section in cp.sections():
        if section not in _KEYS:
            raise ParseError(f"unknown section [{section}]")
        for key in cp[section]:
            if key not in _KEYS[section] and not (section == "problem" and _INDEXED.match(key)):
                raise ParseError(f"unknown key {key!r} in [{section}]")
    for section in ("timescale", "problem"):
        if section not in cp:
            raise ParseError(f"missing section [{section}]")
    return cp


def _indexed(sec, prefix: str) -> list[str]:
    found = {int(m.group(2)): sec[k] for k in sec
             if (m := _INDEXED.match(k)) and m.group(1) == prefix}
    if found and sorted(found) != list(range(1, len(found) + 1)):
        raise ParseError(f"{prefix}1..{prefix}{max(found)} must be numbered without gaps")
    return [found[i] for i in range(1, len(found) + 1)]


def _require(sec, key: str, name: str) -> str:
    if key not in sec:
        raise ParseError(f"missing key {key!r} in [{name}]")
    return sec[key]


def _vector_exprs(text: str, d: int, where: str) -> list[Expr]:
    parts = split_top_level(text, ";")
    if len(parts) != d:
        raise ValidationError(f"{where}: expected {d} component(s) separated by ';', got {len(parts)}")
    return [_expr(p, where) for p in parts]


def _matrix_exprs(text: str, d: int, where: str) -> list[list[Expr]]:
    rows = [split_top_level(r) for r in split_top_level(text, ";")]
    if len(rows) == 1 and len(rows[0]) == 1:
        return [[_expr(rows[0][0], where)]]
    if len(rows) != d or any(len(r) != d for r in rows):
        raise ValidationError(f"{where}: expected a {d}x{d} matrix (rows separated by ';')")
    return [[_expr(x, where) for x in r] for r in rows]


def _check_vars(exprs, allowed: set[str], where: str):
    for e in exprs:
        extra = free_variables(e) - allowed
        if extra:
            raise ValidationError(f"{where}: unknown variable(s) {', '.join(sorted(extra))}; "
                                  f"allowed: {', '.join(sorted(allowed))}")


def _history_table(text: str, d: int) -> dict:
    table = {}
    for entry in split_top_level(text, ";"):
        if not entry:
            continue
        if ":" not in entry:
            raise ParseError(f"history_table: entry {entry!r} is not of the form 't: value'")
        t_txt, v_txt = entry.split(":", 1)
        t = _constant(t_txt, "history_table")
        vals = [_constant(v, "history_table") for v in split_top_level(v_txt)]
        if len(vals) != d:
            raise ValidationError(f"history_table: entry at t={t:g} has {len(vals)} value(s), expected {d}")
        table[_key(t)] = vals
    return table


def _solver_options(cp) -> SolverOptions:
    o = SolverOptions()
    if "solver" not in cp:
        return o
    sec = cp["solver"]
    for key in ("tol", "epsilon", "lipschitz", "bound", "verify_tol"):
        if key in sec:
            v = _constant(sec[key], f"[solver] {key}")
            if not v > 0:
                raise ValidationError(f"[solver] {key} must be positive, got {v}")
            setattr(o, key, v)
    if "max_iter" in sec:
        v = _constant(sec["max_iter"], "[solver] max_iter")
        if v != int(v) or v < 1:
            raise ValidationError(f"[solver] max_iter must be a positive integer, got {v}")
        o.max_iter = int(v)
    if "method" in sec:
        m = sec["method"].strip()
        if m not in _METHODS:
            raise ValidationError(f"[solver] method must be one of {', '.join(_METHODS)}")
        o.method = m
    return o


def parse_config(text: str) -> ProblemSpec:
    """Parse and validate a problem file.

    Raises :class:`ParseError` for malformed text and :class:`ValidationError`
    when the problem violates an invariant (the message names the invariant
    and a witness point).
    """
    cp = _read(text)
    tsec, psec = cp["timescale"], cp["problem"]

    comps = parse_components(_require(tsec, "components", "timescale"))
    has_interval = any(isinstance(c, Interval) for c in comps)
    if "dense_step" in tsec:
        step = _constant(tsec["dense_step"], "[timescale] dense_step")
    elif has_interval:
        raise ParseError("missing key 'dense_step' in [timescale] (the time scale has intervals)")
    else:
        step = 1.0
    try:
        ts = build_timescale(comps, step if has_interval else 1.0)
    except TimeScaleError as exc:
        raise ValidationError(f"time scale: {exc}") from exc

    kind = _require(psec, "kind", "problem").strip()
    if kind not in ("linear", "nonlinear"):
        raise ValidationError(f"kind must be 'linear' or 'nonlinear', got {kind!r}")
    dim_v = _constant(psec.get("dim", "1"), "dim")
    if dim_v != int(dim_v) or dim_v < 1:
        raise ValidationError(f"dim must be a positive integer, got {dim_v}")
    d = int(dim_v)
    alpha, beta, gamma = (_constant(_require(psec, k, "problem"), k) for k in ("alpha", "beta", "gamma"))
    for name, v in (("alpha", alpha), ("beta", beta), ("gamma", gamma)):
        if v not in ts:
            raise ValidationError(f"{name}={v:g} is not a point of the time scale")
    if not alpha <= beta <= gamma:
        raise ValidationError(f"alpha <= beta <= gamma violated (alpha={alpha:g}, beta={beta:g}, gamma={gamma:g})")
    alpha, beta, gamma = ts.snap(alpha), ts.snap(beta), ts.snap(gamma)

    delay_txt = _indexed(psec, "tau")
    if not delay_txt:
        raise ParseError("at least one delay tau1 is required")
    delays = [_expr(x, f"tau{i + 1}") for i, x in enumerate(delay_txt)]
    _check_vars(delays, {"t"}, "delays")
    n = len(delays)

    if ("history" in psec) == ("history_table" in psec):
        raise ParseError("give exactly one of 'history' or 'history_table'")
    if "history" in psec:
        history = _vector_exprs(psec["history"], d, "history")
        _check_vars(history, {"t"}, "history")
    else:
        history = _history_table(psec["history_table"], d)

    spec = ProblemSpec(ts, kind, d, alpha, beta, gamma, delays, history,
                       options=_solver_options(cp))
    p_txt = _indexed(psec, "p")
    env_txt = _indexed(psec, "envelope_p")
    if kind == "linear":
        if "rhs" in psec or env_txt or "envelope_q" in psec:
            raise ParseError("linear problems take p1..pn and q, not rhs or envelope keys")
        if len(p_txt) != n:
            raise ValidationError(f"{n} delay(s) but {len(p_txt)} coefficient(s) p1..p{len(p_txt)}")
        spec.coeffs = [_matrix_exprs(x, d, f"p{i + 1}") for i, x in enumerate(p_txt)]
        _check_vars([e for m in spec.coeffs for r in m for e in r], {"t"}, "coefficients")
        if "q" in psec:
            spec.forcing = _vector_exprs(psec["q"], d, "q")
            _check_vars(spec.forcing, {"t"}, "q")
    else:
        if p_txt or "q" in psec:
            raise ParseError("nonlinear problems take rhs, not p1..pn or q")
        spec.rhs = _vector_exprs(_require(psec, "rhs", "problem"), d, "rhs")
        _check_vars(spec.rhs, {"t", *spec.state_names}, "rhs")
        if env_txt or "envelope_q" in psec:
            if len(env_txt) != n or "envelope_q" not in psec:
                raise ValidationError(f"the growth envelope needs envelope_p1..envelope_p{n} and envelope_q")
            spec.envelope = [_expr(x, f"envelope_p{i + 1}") for i, x in enumerate(env_txt)]
            spec.envelope.append(_expr(psec["envelope_q"], "envelope_q"))
            _check_vars(spec.envelope, {"t"}, "envelope")
        if spec.options.method == "envelope" and spec.envelope is None:
            raise ValidationError("method = envelope needs envelope_p1..envelope_pn and envelope_q")
    _validate(spec)
    return spec


def _evaluate_on(fn, points, what: str):
    for t in points:
        try:
            v = np.asarray(fn(float(t)), dtype=float)
        except ExprError as exc:
            raise ValidationError(f"{what} cannot be evaluated at t={t:g}: {exc}") from exc
        if not np.all(np.isfinite(v)):
            raise ValidationError(f"{what} is not finite at t={t:g}")


def _validate(spec: ProblemSpec) -> None:
    """Eager check of every invariant the solvers rely on."""
    ts = spec.timescale
    sol_pts = ts.grid(spec.beta, spec.gamma)
    kappa_end = ts.kappa_truncate(spec.beta, spec.gamma)[1] if spec.gamma > spec.beta else spec.beta
    for i, e in enumerate(spec.delays, start=1):
        for t in sol_pts:
            try:
                v = eval_expression(e, {"t": float(t)})
            except ExprError as exc:
                raise ValidationError(f"tau{i} cannot be evaluated at t={t:g}: {exc}") from exc
            if not math.isfinite(v):
                raise ValidationError(f"tau{i} is not finite at t={t:g}")
            if v > t + 1e-9:
                raise ValidationError(f"τ(t) ≤ t violated at t={t:g}: tau{i}(t) = {v:g}")
            if t <= kappa_end + 1e-12 and v < spec.alpha - 1e-9:
                raise ValidationError(f"α ≤ inf τ_i violated: tau{i}({t:g}) = {v:g} < alpha = {spec.alpha:g}")

    hist_pts = ts.grid(spec.alpha, spec.beta)
    if isinstance(spec.history, dict):
        missing = [t for t in hist_pts if _key(t) not in spec.history]
        if missing:
            raise ValidationError(f"history_table has no value at grid point t={missing[0]:g}")
    else:
        _evaluate_on(spec.history_function(), hist_pts, "history")

    if spec.kind == "linear":
        for i, fn in enumerate(spec.coefficient_functions(), start=1):
            _evaluate_on(fn, sol_pts, f"p{i}")
        if spec.forcing is not None:
            _evaluate_on(spec.forcing_function(), sol_pts, "q")
    elif spec.envelope is not None:
        for k, fn in enumerate(spec.growth()):
            name = f"envelope_p{k + 1}" if k < spec.n_delays else "envelope_q"
            for t in sol_pts:
                try:
                    v = fn(float(t))
                except ExprError as exc:
                    raise ValidationError(f"{name} cannot be evaluated at t={t:g}: {exc}") from exc
                if not (math.isfinite(v) and v >= 0):
                    raise ValidationError(f"{name} must be finite and nonnegative; got {v:g} at t={t:g}")

    try:
        _Layout(ts, spec.alpha, spec.beta, spec.gamma, spec.delay_functions())
    except SolverError as exc:
        raise ValidationError(str(exc)) from exc
