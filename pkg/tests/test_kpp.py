from __future__ import annotations

from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esmck.ir import eval_expr, parse_program
from esmck.kpp import (
    IterationInput, KppParams, KppState, Variant, build_kpp_model, compute_bld, compute_k,
    corpus_text, defective_dnu_threshold, euler_decay, g_repaired_lower_bound, g_shape,
    reference_run, shape_function_expr,
)
from esmck.ir.ast import Var

pos = st.fractions(min_value=F(1, 1000), max_value=1000)
unit_open = st.fractions(min_value=F(1, 10**4), max_value=1 - F(1, 10**4))
unit_half_open = st.fractions(min_value=F(1, 10**4), max_value=1)


def test_g_shape_examples():
    assert g_shape(0, 17, -3) == 0
    assert g_shape(1, -99, 100) == 2
    assert g_shape(F(2, 3), -100, F(301, 3)) == F(-1138, 81)


def test_shape_expr_matches_function():
    e = shape_function_expr(Var("s"), Var("a"), Var("b"))
    env = {"s": F(2, 3), "a": F(-100), "b": F(301, 3)}
    assert eval_expr(e, env) == g_shape(*env.values())


def test_compute_bld_examples():
    p = KppParams(F(1, 2), 1, 2, 1)
    s = compute_bld(KppState(zCr=F(1, 2)), p, F(1, 2))
    assert (s.h, s.sigma, s.zCr) == (F(3, 2), F(2, 3), F(1, 4))
    s = compute_bld(KppState(zCr=F(1)), p, F(1, 2))
    assert (s.h, s.sigma, s.zCr) == (1, 1, F(1, 2))


def test_compute_bld_rejects_zero_thickness():
    with pytest.raises(ZeroDivisionError):
        compute_bld(KppState(zCr=F(2)), KppParams(F(1, 2), 1, 2, 1), F(1, 2))


def test_compute_k_documented_state():
    p = KppParams(F(1, 2), 1, 2, 1)
    s = KppState(h=F(3, 2), sigma=F(2, 3), nu=F(1), dnu=F(-100))
    d = compute_k(s, p, Variant.DEFECTIVE)
    assert (d.a2, d.a3, d.K) == (-100, F(301, 3), F(-569, 27))
    r = compute_k(s, p, Variant.REPAIRED)
    assert (r.a2, r.a3, r.K) == (0, F(1, 3), F(31, 27))


@given(nu=pos, dnu=st.fractions(min_value=-1000, max_value=1000), h=pos, w=pos)
def test_k_at_sigma_one_is_twice_nu(nu, dnu, h, w):
    p = KppParams(F(1, 2), 1, 2, w)
    s = KppState(h=h, sigma=F(1), nu=nu, dnu=dnu)
    for v in Variant:
        assert compute_k(s, p, v).K == 2 * nu


def test_euler_decay_examples():
    assert euler_decay(F(3, 7), F(1, 3), 0) == F(3, 7)
    assert euler_decay(F(1, 2), F(1, 2), 1) == F(1, 4)
    with pytest.raises(ValueError):
        euler_decay(1, F(1, 2), -1)


@given(z=pos, dt=unit_open, m=st.integers(0, 20))
def test_euler_decay_shrinks(z, dt, m):
    out = euler_decay(z, dt, m)
    assert 0 < out <= z


def test_repaired_bound_examples():
    assert g_repaired_lower_bound(1, 1) == 2 == g_shape(1, 1, 0)
    s, r = F(2, 3), F(2, 3)
    assert g_repaired_lower_bound(s, r) == g_shape(s, -2 + 3 * r, 1 - r) / s == F(31, 27)


@given(s=unit_half_open, r=pos)
def test_repaired_identity_and_positivity(s, r):
    g = g_shape(s, -2 + 3 * r, 1 - r)
    assert g == s * g_repaired_lower_bound(s, r)
    assert g > 0


@given(s=unit_open, r=pos, slack=pos)
def test_defective_threshold_makes_k_negative(s, r, slack):
    d = defective_dnu_threshold(s, r) - slack
    w = F(3)
    h = F(2)
    state = KppState(h=h, sigma=s, nu=r * h * w, dnu=d * w)
    assert compute_k(state, KppParams(F(1, 2), 1, 2, w), Variant.DEFECTIVE).K < 0


def test_defective_threshold_domain():
    with pytest.raises(ValueError):
        defective_dnu_threshold(1, 1)


@pytest.mark.parametrize("variant", list(Variant))
def test_builder_matches_corpus(variant):
    assert build_kpp_model(variant) == parse_program(corpus_text(variant))


def test_variants_differ_only_in_compute_k():
    a, b = build_kpp_model(Variant.DEFECTIVE), build_kpp_model(Variant.REPAIRED)
    assert a.inputs == b.inputs and a.globals == b.globals and a.main == b.main
    diff = [n for (n, x), (_, y) in zip(a.functions, b.functions) if x != y]
    assert diff == ["computeK"]


@settings(max_examples=200)
@given(
    zw=pos, extra=pos, w=pos, dt=unit_open,
    its=st.lists(st.tuples(unit_open, pos, st.fractions(min_value=-50, max_value=50), st.integers(0, 3)),
                 min_size=1, max_size=3),
)
def test_reference_run_invariants_zcr(zw, extra, w, dt, its):
    """zw >= zCr > 0 holds at every check, for either variant."""
    p = KppParams(dt, zw, zw + extra, w)
    assert p.satisfies_assumptions()
    iters = [IterationInput(a, nu, dnu, m) for a, nu, dnu, m in its]
    for v in Variant:
        _, checks = reference_run(p, KppState(), iters, v)
        for c in checks:
            assert c["zw>=zCr"] and c["zCr>0"]


@settings(max_examples=200)
@given(
    zw=pos, extra=pos, w=pos, dt=unit_open,
    its=st.lists(st.tuples(unit_open, pos, st.fractions(min_value=-50, max_value=50), st.integers(0, 3)),
                 min_size=1, max_size=3),
)
def test_reference_run_repaired_k_positive(zw, extra, w, dt, its):
    p = KppParams(dt, zw, zw + extra, w)
    iters = [IterationInput(a, nu, dnu, m) for a, nu, dnu, m in its]
    states, checks = reference_run(p, KppState(), iters, Variant.REPAIRED)
    assert all(c["K>0"] for c in checks)
    for s in states[1:]:
        assert 0 < s.sigma <= 1


@settings(max_examples=60, deadline=None)
@given(
    zw=pos, extra=pos, w=pos, dt=unit_open, nu0=pos, k0=pos,
    its=st.lists(st.tuples(unit_open, pos, st.fractions(min_value=-50, max_value=50), st.integers(0, 2)),
                 min_size=1, max_size=3),
)
def test_reference_run_agrees_with_hsl_replay(zw, extra, w, dt, nu0, k0, its):
    from esmck.ir import lower_evolve
    from esmck.solve import Witness, replay

    p = KppParams(dt, zw, zw + extra, w)
    iters = [IterationInput(a, nu, dnu, m) for a, nu, dnu, m in its]
    init = KppState(nu=nu0, K=k0)
    for v in Variant:
        states, checks = reference_run(p, init, iters, v)
        a = {"dt": dt, "zw": zw, "D": zw + extra, "w": w, "nu.0": nu0, "K.0": k0, "zCr.0": zw,
             "dnu.0": init.dnu, "h.0": init.h, "sigma.0": init.sigma, "alpha.0": init.alpha,
             "a2.0": init.a2, "a3.0": init.a3}
        for k, it in enumerate(iters, 1):
            a.update({f"alpha.{k}": it.alpha, f"nu.{k}": it.nu, f"dnu.{k}": it.dnu})
        bounds = {"N": len(iters), "M": 3}
        trace = replay(lower_evolve(build_kpp_model(v)), Witness(a, "", bounds, tuple(it.m for it in iters)))
        final = states[-1]
        assert trace.final_store["K"] == final.K
        assert trace.final_store["zCr"] == final.zCr
        assert trace.final_store["t"] == final.t
        assert [o.holds for o in trace.asserts] == [x for c in checks for x in c.values()]
