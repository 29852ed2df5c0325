"""Incomplete search for witnesses of nonlinear real obligations.

The search runs in three stages:

1. stratified random sampling over boxes read off the simple bound
   conjuncts (``0 < alpha``, ``alpha < 1`` ...), with log-uniform magnitudes
   for unbounded directions;
2. coordinate-wise descent on the summed constraint residuals, started from
   the best samples;
3. snapping of float candidates to small-denominator rationals followed by an
   exact re-check and, when a program is given, a full replay.

Only stage 3 can produce a ``violated`` verdict, so float error can cost
completeness but never soundness.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from esmck.ir.ast import And, Arith, BoolConst, Cmp, Const, Neg, Not, Or, Pow, Symbol, symbols_of
from esmck.ir.errors import EvalError
from esmck.ir.evaluate import eval_expr
from esmck.symexec.simplify import substitute

from .replay import ReplayError, Witness, replay
from .verdict import UNKNOWN, VIOLATED, Verdict

log = logging.getLogger(__name__)

OPEN_MARGIN = 2.0**-20
LOG_MIN, LOG_MAX = 2.0**-10, 2.0**10
SNAP_DENOMINATORS = (100, 10**4, 10**6)
UNCONSTRAINED_DEFAULT = Fraction(1)

_FLIP = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "==": None}


@dataclass
class Box:
    lo: float | None = None
    hi: float | None = None
    integer: bool = False

    def sample(self, u: np.ndarray) -> np.ndarray:
        """Map uniforms in (0, 1) to values in the box."""
        lo, hi = self.lo, self.hi
        if lo is not None and hi is not None:
            if hi < lo:
                return np.full_like(u, np.nan)
            m = OPEN_MARGIN * (hi - lo)
            x = lo + m + u * max(hi - lo - 2 * m, 0.0)
        elif lo is not None:
            x = lo + _log_uniform(u)
        elif hi is not None:
            x = hi - _log_uniform(u)
        else:
            sign = np.where(u < 0.5, -1.0, 1.0)
            x = sign * _log_uniform((2 * u) % 1.0)
        if self.integer:
            x = np.round(x)
        return x


def _log_uniform(u):
    return np.exp(np.log(LOG_MIN) + u * (np.log(LOG_MAX) - np.log(LOG_MIN)))


def eliminate_equalities(constraints):
    """Solve ``sym == e`` conjuncts by substitution.

    Returns the remaining constraints and the definitions, in an order in
    which each definition only mentions free symbols.
    """
    defs: dict[str, object] = {}
    todo = list(constraints)
    changed = True
    while changed:
        changed = False
        for idx, c in enumerate(todo):
            if not (isinstance(c, Cmp) and c.op == "=="):
                continue
            for lhs, rhs in ((c.left, c.right), (c.right, c.left)):
                if isinstance(lhs, Symbol) and lhs.sort == "real" and lhs.name not in symbols_of(rhs):
                    sub = {lhs.name: rhs}
                    defs = {k: substitute(v, sub) for k, v in defs.items()}
                    defs[lhs.name] = rhs
                    todo = [substitute(x, sub) for j, x in enumerate(todo) if j != idx]
                    changed = True
                    break
            if changed:
                break
    return todo, defs


def _bounds_from(constraints, free):
    boxes = {name: Box(integer=(sym.sort == "int")) for name, sym in free.items()}
    for c in constraints:
        if not isinstance(c, Cmp) or c.op == "==":
            continue
        op, a, b = c.op, c.left, c.right
        if isinstance(a, Const) and isinstance(b, Symbol):
            op, a, b = {"<": ">", "<=": ">=", ">": "<", ">=": "<="}[op], b, a
        if not (isinstance(a, Symbol) and isinstance(b, Const)) or a.name not in boxes:
            continue
        box, v = boxes[a.name], float(b.value)
        if op in (">", ">="):
            box.lo = v if box.lo is None else max(box.lo, v)
        else:
            box.hi = v if box.hi is None else min(box.hi, v)
    return boxes


class _Compiled:
    """Vectorized float evaluation of a set of constraints."""

    def __init__(self, constraints, names):
        self.constraints = constraints
        self.col = {n: i for i, n in enumerate(names)}

    def _arith(self, e, X, memo):
        key = id(e)
        if key in memo:
            return memo[key]
        if isinstance(e, Const):
            v = np.full(X.shape[0], float(e.value))
        elif isinstance(e, Symbol):
            v = X[:, self.col[e.name]]
        elif isinstance(e, Neg):
            v = -self._arith(e.arg, X, memo)
        elif isinstance(e, Arith):
            a, b = self._arith(e.left, X, memo), self._arith(e.right, X, memo)
            if e.op == "+":
                v = a + b
            elif e.op == "-":
                v = a - b
            elif e.op == "*":
                v = a * b
            else:
                v = a / b
        elif isinstance(e, Pow):
            v = self._arith(e.base, X, memo) ** e.exp
        else:
            raise TypeError(f"unexpected node {type(e).__name__}")
        memo[key] = v
        return v

    def residual(self, e, X, memo, negate=False):
        """Nonnegative violation measure; zero exactly where ``e`` (or its negation) holds."""
        if isinstance(e, BoolConst):
            holds = e.value != negate
            return np.zeros(X.shape[0]) if holds else np.full(X.shape[0], np.inf)
        if isinstance(e, Not):
            return self.residual(e.arg, X, memo, not negate)
        if isinstance(e, (And, Or)):
            l = self.residual(e.left, X, memo, negate)
            r = self.residual(e.right, X, memo, negate)
            conj = isinstance(e, And) != negate
            return l + r if conj else np.minimum(l, r)
        if isinstance(e, Cmp):
            a, b = self._arith(e.left, X, memo), self._arith(e.right, X, memo)
            op = e.op
            if negate:
                op = _FLIP[op]
                if op is None:
                    # a != b: violated only when equal
                    r = np.where(a == b, 1.0, 0.0)
                    return np.where(np.isfinite(a) & np.isfinite(b), r, np.inf)
            d = a - b
            if op == "<":
                r = np.where(d < 0, 0.0, d + 1e-12 * (1 + np.abs(a)))
            elif op == "<=":
                r = np.maximum(d, 0.0)
            elif op == ">":
                r = np.where(d > 0, 0.0, -d + 1e-12 * (1 + np.abs(a)))
            elif op == ">=":
                r = np.maximum(-d, 0.0)
            else:
                r = np.abs(d)
            return np.where(np.isfinite(r), r, np.inf)
        raise TypeError(f"unexpected node {type(e).__name__}")

    def total(self, X):
        memo: dict = {}
        with np.errstate(all="ignore"):
            out = np.zeros(X.shape[0])
            for c in self.constraints:
                out = out + self.residual(c, X, memo)
        return np.where(np.isnan(out), np.inf, out)


def _stratified(rng, n, dims):
    """Latin-hypercube uniforms: each column hits every 1/n stratum once."""
    u = (np.argsort(rng.random((dims, n)), axis=1) + rng.random((dims, n))) / n
    return np.clip(u.T, 1e-15, 1 - 1e-15)


def snap(x: float, max_den: int) -> Fraction:
    return Fraction(float(x)).limit_denominator(max_den)


def _size(q: Fraction) -> int:
    return len(str(abs(q.numerator))) + len(str(q.denominator))


def _simpler(v: Fraction, integral: bool) -> list[Fraction]:
    """Candidate replacements for ``v`` with smaller numerator and denominator, simplest first."""
    cands = {Fraction(1), Fraction(-1), Fraction(2), Fraction(1, 2), Fraction(10), Fraction(round(v))}
    if not integral:
        cands.update(v.limit_denominator(d) for d in (2, 4, 10, 100))
    if v != 0:
        mag = abs(v)
        exp = len(str(int(mag))) - 1 if mag >= 1 else -len(str(int(1 / mag)))
        for digits in (1, 2):
            unit = Fraction(10) ** (exp - digits + 1)
            cands.add(round(v / unit) * unit)
    if integral:
        cands = {c for c in cands if c.denominator == 1}
    return sorted((c for c in cands if _size(c) < _size(v)), key=lambda c: (_size(c), abs(c - v)))


def check_exact(ob, assignment) -> bool:
    try:
        return all(eval_expr(c, assignment) is True for c in ob.constraints)
    except (EvalError, ZeroDivisionError):
        return False


class Falsifier:
    def __init__(self, ob, program=None, bounds=None):
        self.ob = ob
        self.program = program
        self.bounds = dict(bounds or {})
        remaining, self.defs = eliminate_equalities(list(ob.constraints))
        self.constraints = remaining
        free = {}
        for c in remaining:
            free.update(symbols_of(c))
        # creation order keeps runs reproducible
        order = [n for n in ob.symbols if n in free] + sorted(n for n in free if n not in ob.symbols)
        self.names = order
        self.free = {n: free[n] for n in order}
        self.boxes = _bounds_from(remaining, self.free)
        self.compiled = _Compiled(remaining, order)
        self.tried: set = set()

    def sample(self, rng, n):
        U = _stratified(rng, n, len(self.names))
        cols = [self.boxes[name].sample(U[:, i]) for i, name in enumerate(self.names)]
        return np.column_stack(cols) if cols else np.zeros((n, 0))

    def try_point(self, x) -> Witness | None:
        for den in SNAP_DENOMINATORS:
            values = {}
            for name, v in zip(self.names, x):
                q = snap(v, den)
                if self.free[name].sort == "int":
                    q = Fraction(round(q))
                values[name] = q
            key = tuple(values.values())
            if key in self.tried:
                continue
            self.tried.add(key)
            w = self._complete(values)
            if w is not None:
                return self.shrink(values, w)
        return None

    def shrink(self, values, w: Witness, passes: int = 2) -> Witness:
        """Greedily swap each free value for a simpler rational that still validates."""
        values = dict(values)
        for _ in range(passes):
            changed = False
            for name in self.names:
                cur = values[name]
                for q in _simpler(cur, self.free[name].sort == "int"):
                    trial = dict(values, **{name: q})
                    w2 = self._complete(trial)
                    if w2 is not None:
                        values, w, changed = trial, w2, True
                        break
            if not changed:
                break
        return w

    def _complete(self, values) -> Witness | None:
        assignment = dict(values)
        try:
            for name, e in self.defs.items():
                assignment[name] = eval_expr(e, assignment)
        except (EvalError, ZeroDivisionError):
            return None
        for name in self.ob.symbols:
            assignment.setdefault(name, UNCONSTRAINED_DEFAULT)
        if not check_exact(self.ob, assignment):
            return None
        ordered = {n: assignment[n] for n in self.ob.symbols}
        ordered.update({n: v for n, v in assignment.items() if n not in ordered})
        w = Witness(ordered, self.ob.label, self.bounds, self.ob.choices, self.ob.assert_index)
        if self.program is not None and not validate(self.program, w, self.ob):
            return None
        return w


def validate(program, witness: Witness, ob) -> bool:
    """True iff replaying ``witness`` violates exactly the obligation's assert."""
    try:
        trace = replay(program, witness, stop_after=ob.assert_index)
    except ReplayError as e:
        log.debug("witness rejected: %s", e)
        return False
    if not trace.violates(ob.assert_index, ob.label):
        return False
    return trace.asserts[ob.assert_index].location == ob.location


def _descend(f: Falsifier, starts, budget, used):
    """Coordinate moves on the residual, run from all starts in lockstep.

    Yields each point that reaches zero residual; that start is then
    retired.  ``used[0]`` tracks evaluations spent.
    """
    d = len(f.names)
    X = np.array(starts, dtype=float)
    fx = f.compiled.total(X)
    spent = len(X)
    used[0] = spent
    step = np.full(len(X), 0.5)
    active = np.isfinite(fx)
    ints = [i for i, name in enumerate(f.names) if f.free[name].sort == "int"]
    rows = np.arange(4 * d)
    coord = rows // 4
    while spent < budget and active.any():
        idx = np.flatnonzero(active)
        base = X[idx]
        # moves[a, m] is start a with coordinate m // 4 nudged four ways
        moves = np.repeat(base[:, None, :], 4 * d, axis=1)
        cur = base[:, coord]
        scale = np.maximum(np.abs(cur), 1e-3) * step[idx, None]
        kind = rows % 4
        new = np.where(kind == 0, cur + scale,
              np.where(kind == 1, cur - scale,
              np.where(kind == 2, cur * (1 + step[idx, None]), cur * (1 - step[idx, None]))))
        moves[:, rows, coord] = new
        flat = moves.reshape(-1, d)
        if ints:
            flat[:, ints] = np.round(flat[:, ints])
        r = f.compiled.total(flat).reshape(len(idx), 4 * d)
        spent += flat.shape[0]
        used[0] = spent
        best = np.argmin(r, axis=1)
        best_r = r[np.arange(len(idx)), best]
        for a, k, rk in zip(idx, best, best_r):
            if rk < fx[a]:
                X[a], fx[a] = moves[np.searchsorted(idx, a), k], rk
                step[a] = min(step[a] * 2, 4.0)
                if rk == 0:
                    active[a] = False
                    yield X[a].copy()
            else:
                step[a] /= 4
                if step[a] < 1e-9:
                    active[a] = False


def falsify(ob, budget: int = 100_000, *, program=None, bounds=None, seed: int = 0,
            batch: int = 8192, max_candidates: int = 64) -> Verdict:
    """Search for a rational assignment violating ``ob``.

    Returns ``violated`` with a validated witness, or ``unknown``; never
    claims the obligation holds.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    f = Falsifier(ob, program, bounds)
    if any(isinstance(c, BoolConst) and not c.value for c in f.constraints):
        return Verdict(UNKNOWN, backend="builtin", spent=0, detail="constraints are trivially false")
    rng = np.random.default_rng([seed, ob.index])
    state = {"spent": 0, "candidates": 0}
    pool_X = pool_r = None

    def sample_until(limit):
        nonlocal pool_X, pool_r
        while state["spent"] < limit:
            n = min(batch, limit - state["spent"])
            X = f.sample(rng, n)
            r = f.compiled.total(X) if f.constraints else np.zeros(n)
            state["spent"] += n
            for idx in np.flatnonzero(r == 0):
                if state["candidates"] >= max_candidates:
                    break
                state["candidates"] += 1
                w = f.try_point(X[idx])
                if w is not None:
                    return w
            keep = np.argsort(r, kind="stable")[:16]
            allX = X[keep] if pool_X is None else np.vstack([pool_X, X[keep]])
            allr = r[keep] if pool_r is None else np.concatenate([pool_r, r[keep]])
            order = np.argsort(allr, kind="stable")[:16]
            pool_X, pool_r = allX[order], allr[order]
        return None

    if not f.names:
        w = sample_until(1)
        if w is not None:
            return Verdict(VIOLATED, w, "builtin", 1, "constant obligation")
        return Verdict(UNKNOWN, backend="builtin", spent=1, detail="no violation found")
    w = sample_until(budget // 2)
    if w is not None:
        return Verdict(VIOLATED, w, "builtin", state["spent"], "found by sampling")
    starts = [x for x, rr in zip(pool_X, pool_r) if np.isfinite(rr)]
    base = state["spent"]
    if starts:
        used = [0]
        for x in _descend(f, starts, budget - base, used):
            w = f.try_point(x)
            if w is not None:
                return Verdict(VIOLATED, w, "builtin", base + used[0], "found by local descent")
        state["spent"] = base + used[0]
    # descent stalled early: spend what is left on fresh samples
    w = sample_until(budget)
    if w is not None:
        return Verdict(VIOLATED, w, "builtin", state["spent"], "found by sampling")
    return Verdict(UNKNOWN, backend="builtin", spent=state["spent"], detail="no violation found")
