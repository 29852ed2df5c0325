from __future__ import annotations

from fractions import Fraction as F

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from esmck.ir import DivisionByZero, eval_expr, lower_evolve, parse_program
from esmck.ir.ast import Const, free_vars, symbols_of
from esmck.symexec import Bounds, ExplorationError, explore, simplify, substitute

from test_ir import nums, bools


def _symbols_in(exprs):
    return {name for e in exprs for name in symbols_of(e)}


def run(src, **bounds):
    ex = explore(lower_evolve(parse_program(src)), Bounds(bounds))
    return list(ex), ex.summary


def test_defective_shape(defective):
    ex = explore(defective, Bounds({"N": 2, "M": 1}))
    obs = list(ex)
    assert (ex.summary.paths, ex.summary.obligations, ex.summary.complete) == (1, 9, True)
    assert [o.label for o in obs] == ["K>0", "zw>=zCr", "zCr>0"] * 3
    assert obs[6].location == "main.4/invariant.0"
    assert obs[0].location == "main.2[0].1/invariant.0"
    assert [o.assert_index for o in obs] == list(range(9))
    assert obs[6].choices == (0, 0)


def test_repaired_shape(repaired):
    ex = explore(repaired, Bounds({"N": 3, "M": 3}))
    obs = list(ex)
    assert (ex.summary.paths, ex.summary.obligations) == (27, 120)
    assert len({o.choices for o in obs if len(o.choices) == 3}) == 27


def test_symbol_naming(defective):
    ob = list(explore(defective, Bounds({"N": 2, "M": 1})))[6]
    assert {"dnu.2", "alpha.1", "alpha.2", "nu.0", "K.0"} <= set(ob.symbols)
    assert ob.symbols["dnu.2"].origin == "havoc" and ob.symbols["D"].origin == "input"


def test_use_before_define_values_do_not_leak(defective):
    """Havocked initial values overwritten before any read stay out of the constraints."""
    ob = list(explore(defective, Bounds({"N": 2, "M": 1})))[6]
    used = _symbols_in(ob.constraints)
    assert not used & {"h.0", "sigma.0", "a2.0", "a3.0"}
    assert {"dnu.2", "D", "zw", "w"} <= used


def test_uninitialised_read_gets_init_symbol():
    obs, _ = run("real x, y;\nmain { y = x + 1; assert (y > x); }")
    assert set(obs[0].symbols) == {"x.init"}


def test_choose_zero_prunes():
    obs, summary = run("input int N;\nreal x;\nmain { k = choose(N); assert (x > 0); }", N=0)
    assert obs == [] and summary.paths == 0 and summary.pruned == 1


def test_choose_enumerates_in_order():
    obs, summary = run("input int N;\nreal x;\nmain { k = choose(N); x = k; assert (x < 2); }", N=3)
    assert [o.choices for o in obs] == [(0,), (1,), (2,)]
    assert summary.paths == 3


def test_branches_fork_and_infeasible_prune():
    src = "real x;\nmain { havoc x; if (x > 0) { assert (x > 0); } else { assert (x <= 0); } if (1 > 2) { x = 0; } }"
    obs, summary = run(src)
    assert summary.paths == 2 and summary.pruned == 2
    assert [o.location for o in obs] == ["main.1.then.0", "main.1.else.0"]


def test_assume_false_prunes():
    obs, summary = run("real x;\nmain { assume (1 > 2); assert (x > 0); }")
    assert obs == [] and summary.pruned == 1


def test_asserts_do_not_constrain_later_paths():
    obs, _ = run("real x;\nmain { havoc x; assert (x > 0); assert (x > 1); }")
    assert obs[1].path_condition == ()


def test_budgets():
    src = "input int N;\nreal x;\nmain { k = choose(N); assert (x > 0); }"
    ex = explore(lower_evolve(parse_program(src)), Bounds({"N": 5}, max_paths=2))
    assert len(list(ex)) == 2 and not ex.summary.complete
    ex = explore(lower_evolve(parse_program(src)), Bounds({"N": 5}, max_steps=1))
    list(ex)
    assert not ex.summary.complete and "statement" in ex.summary.reason


def test_requires_concrete_bounds_and_lowering():
    src = "input int N;\nreal x;\nmain { for i in 0..N { x = x + 1; } }"
    with pytest.raises(ExplorationError):
        list(explore(parse_program(src), Bounds()))
    with pytest.raises(ExplorationError):
        explore(parse_program("real x, h;\nmain { evolve { x' = 1; } dt h steps 1; }"), Bounds())
    with pytest.raises(ValueError):
        Bounds({"N": -1})
    with pytest.raises(ValueError):
        Bounds.parse(["N"])


def test_exploration_is_repeatable(defective):
    ex = explore(defective, Bounds({"N": 2, "M": 1}))
    assert [o.to_text() for o in ex] == [o.to_text() for o in ex]


envs = st.fixed_dictionaries({
    k: st.fractions(min_value=-20, max_value=20, max_denominator=6) for k in ("x", "y", "a")
})


def _value(e, env):
    try:
        return ("ok", eval_expr(e, env))
    except DivisionByZero:
        return ("div0", None)


@given(nums, envs)
def test_simplify_preserves_value(e, env):
    before = _value(e, env)
    assume(before[0] == "ok")
    assert _value(simplify(e), env) == before


@given(bools, envs)
def test_simplify_preserves_truth(e, env):
    before = _value(e, env)
    assume(before[0] == "ok")
    assert _value(simplify(e), env) == before


@given(nums, envs)
def test_substitute_then_evaluate(e, env):
    closed = substitute(e, {n: Const(v) for n, v in env.items()})
    before = _value(e, env)
    assume(before[0] == "ok")
    out = _value(closed, {})
    assert out == before
    assert not free_vars(closed)
