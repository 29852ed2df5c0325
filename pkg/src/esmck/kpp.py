"""K-profile parameterization case study.

Exact-rational reference versions of the model's update functions (used as
an oracle independent of the HSL interpreter), builders for the defective
and repaired HSL models, and the positivity certificate for the repaired
shape function::

    G(s, -2 + 3r, 1 - r) = s * ((1 - s)**2 + r*s*(3 - s))

where ``r = nu / (h*w)``.  Both terms are positive for ``0 < s <= 1`` and
``r > 0``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from fractions import Fraction
from importlib import resources

from esmck.ir.ast import (
    And, Arith, Assert, Assign, Assume, Call, Cmp, Const, CountedLoop, Evolve, Havoc, InputDecl,
    Neg, Pow, Print, Program, Var, VarDecl,
)


class Variant(enum.Enum):
    DEFECTIVE = "defective"
    REPAIRED = "repaired"


@dataclass(frozen=True)
class KppParams:
    dt: Fraction
    zw: Fraction
    D: Fraction
    w: Fraction

    def __post_init__(self):
        for name in ("dt", "zw", "D", "w"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))

    def satisfies_assumptions(self) -> bool:
        return 0 < self.dt < 1 and self.D > 0 and self.D > self.zw and self.zw > 0 and self.w > 0


@dataclass(frozen=True)
class KppState:
    t: Fraction = Fraction(0)
    nu: Fraction = Fraction(1)
    dnu: Fraction = Fraction(0)
    h: Fraction = Fraction(1)
    sigma: Fraction = Fraction(1)
    alpha: Fraction = Fraction(1, 2)
    zCr: Fraction = Fraction(1)
    K: Fraction = Fraction(1)
    a2: Fraction = Fraction(0)
    a3: Fraction = Fraction(0)

    def invariant(self, params: KppParams) -> dict[str, bool]:
        return {"K>0": self.K > 0, "zw>=zCr": params.zw >= self.zCr, "zCr>0": self.zCr > 0}


def g_shape(sigma, a2, a3) -> Fraction:
    sigma, a2, a3 = Fraction(sigma), Fraction(a2), Fraction(a3)
    return sigma + a2 * sigma**2 + a3 * sigma**3


def compute_bld(state: KppState, params: KppParams, alpha) -> KppState:
    h = params.D - state.zCr
    if h == 0:
        raise ZeroDivisionError("boundary layer thickness D - zCr is zero")
    return replace(state, h=h, sigma=(params.D - params.zw) / h, alpha=Fraction(alpha),
                   zCr=Fraction(alpha) * state.zCr)


def compute_nu(state: KppState, nu, dnu) -> KppState:
    return replace(state, nu=Fraction(nu), dnu=Fraction(dnu))


def shape_coefficients(state: KppState, params: KppParams, variant: Variant) -> tuple[Fraction, Fraction]:
    r = state.nu / (state.h * params.w)
    a2 = -2 + 3 * r
    a3 = 1 - r
    if variant is Variant.DEFECTIVE:
        d = state.dnu / params.w
        a2, a3 = a2 + d, a3 - d
    return a2, a3


def compute_k(state: KppState, params: KppParams, variant: Variant) -> KppState:
    a2, a3 = shape_coefficients(state, params, variant)
    K = state.h * params.w * g_shape(state.sigma, a2, a3)
    return replace(state, a2=a2, a3=a3, K=K)


def euler_decay(zCr, dt, m: int) -> Fraction:
    """``m`` forward-Euler steps of ``zCr' = -zCr``: ``zCr * (1 - dt)**m``."""
    if m < 0:
        raise ValueError("step count must be nonnegative")
    return Fraction(zCr) * (1 - Fraction(dt)) ** m


def g_repaired_lower_bound(sigma, r) -> Fraction:
    """``G / sigma`` for the repaired coefficients; positive on ``0 < sigma <= 1``, ``r > 0``."""
    sigma, r = Fraction(sigma), Fraction(r)
    return (1 - sigma) ** 2 + r * sigma * (3 - sigma)


def defective_dnu_threshold(sigma, r) -> Fraction:
    """Value of ``dnu / w`` below which the defective ``K`` turns negative (``0 < sigma < 1``).

    With ``d = dnu / w`` the defective shape function is
    ``G = sigma * (L + d * sigma * (1 - sigma))`` where ``L`` is the repaired
    bound, so ``G < 0`` exactly when ``d < -L / (sigma * (1 - sigma))``.
    """
    sigma, r = Fraction(sigma), Fraction(r)
    if not 0 < sigma < 1:
        raise ValueError("sigma must lie strictly between 0 and 1")
    return -g_repaired_lower_bound(sigma, r) / (sigma * (1 - sigma))


@dataclass(frozen=True)
class IterationInput:
    """Nondeterministic values consumed by one outer iteration."""

    alpha: Fraction
    nu: Fraction
    dnu: Fraction
    m: int


def reference_run(params: KppParams, initial: KppState, iterations, variant: Variant):
    """Run the model directly in Python; returns ``(states, invariant outcomes)``.

    ``states[k]`` is the state at the start of iteration ``k`` (the last one
    is the final state) and each invariant outcome is a dict label -> bool.
    """
    state = replace(initial, zCr=params.zw)
    states, checks = [], []
    for it in iterations:
        states.append(state)
        checks.append(state.invariant(params))
        state = compute_bld(state, params, it.alpha)
        state = compute_nu(state, it.nu, it.dnu)
        state = compute_k(state, params, variant)
        z, t = state.zCr, state.t
        for _ in range(it.m):
            t = t + params.dt
            z = z + -z * params.dt
        state = replace(state, zCr=z, t=t)
    states.append(state)
    checks.append(state.invariant(params))
    return states, checks


# HSL models ------------------------------------------------------------------

def _c(x) -> Const:
    return Const(Fraction(x))


def _v(name) -> Var:
    return Var(name)


def _op(op, a, b):
    return Arith(op, a, b)


def _all(*conds):
    out = conds[0]
    for c in conds[1:]:
        out = And(out, c)
    return out


def shape_function_expr(sigma, a2, a3):
    """``sigma + a2*sigma^2 + a3*sigma^3`` as an HSL expression."""
    return _op("+", _op("+", sigma, _op("*", a2, Pow(sigma, 2))), _op("*", a3, Pow(sigma, 3)))


def _compute_k_body(variant: Variant) -> tuple:
    nu, dnu, h, w = _v("nu"), _v("dnu"), _v("h"), _v("w")
    hw = _op("*", h, w)
    a2 = _op("+", _c(-2), _op("/", _op("*", _c(3), nu), hw))
    a3 = _op("-", _c(1), _op("/", nu, hw))
    if variant is Variant.DEFECTIVE:
        a2 = _op("+", a2, _op("/", dnu, w))
        a3 = _op("-", a3, _op("/", dnu, w))
    K = _op("*", _op("*", h, w), shape_function_expr(_v("sigma"), _v("a2"), _v("a3")))
    return (Assign("a2", a2), Assign("a3", a3), Assign("K", K))


STATE_VARS = ("nu", "dnu", "h", "sigma", "alpha", "zCr", "K", "a2", "a3")


def build_kpp_model(variant: Variant) -> Program:
    """The KPP model as an (unlowered) HSL program."""
    dt, zw, D, w = _v("dt"), _v("zw"), _v("D"), _v("w")
    inputs = (
        InputDecl("N", "int"),
        InputDecl("M", "int"),
        InputDecl("dt", "real", And(Cmp("<", _c(0), dt), Cmp("<", dt, _c(1)))),
        InputDecl("zw", "real"),
        InputDecl("D", "real"),
        InputDecl("w", "real", _all(
            Cmp(">", D, _c(0)), Cmp(">", D, zw), Cmp(">", zw, _c(0)), Cmp(">", w, _c(0)),
        )),
    )
    globals_ = (VarDecl("t", "real", _c(0)),) + tuple(VarDecl(n, "real") for n in STATE_VARS)
    zCr = _v("zCr")
    functions = (
        ("computeNu", (Havoc("nu"), Assume(Cmp(">", _v("nu"), _c(0))), Havoc("dnu"))),
        ("computeBLD", (
            Assign("h", _op("-", D, zCr)),
            Assign("sigma", _op("/", _op("-", D, zw), _v("h"))),
            Havoc("alpha"),
            Assume(And(Cmp("<", _c(0), _v("alpha")), Cmp("<", _v("alpha"), _c(1)))),
            Assign("zCr", _op("*", _v("alpha"), zCr)),
        )),
        ("computeK", _compute_k_body(variant)),
        ("invariant", (
            Assert(Cmp(">", _v("K"), _c(0)), "K>0"),
            Assert(Cmp(">=", zw, zCr), "zw>=zCr"),
            Assert(Cmp(">", zCr, _c(0)), "zCr>0"),
        )),
        ("initialConditions", tuple(Havoc(n) for n in STATE_VARS) + (
            Assume(And(Cmp("<", _c(0), _v("nu")), Cmp(">", _v("K"), _c(0)))),
            Assume(Cmp("==", zCr, zw)),
        )),
    )
    main = (
        Print(),
        Call("initialConditions"),
        CountedLoop("i", _v("N"), (
            Print(),
            Call("invariant"),
            Call("computeBLD"),
            Call("computeNu"),
            Call("computeK"),
            Evolve((("zCr", Neg(zCr)),), "dt", _v("M")),
        )),
        Print(),
        Call("invariant"),
    )
    return Program(inputs, globals_, functions, main)


def corpus_text(variant: Variant) -> str:
    return resources.files("esmck.corpus").joinpath(f"kpp_{variant.value}.hsl").read_text()
