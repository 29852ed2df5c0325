from __future__ import annotations

from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esmck.ir import (
    DivisionByZero, EvalError, HslSyntaxError, RecursionCycleError, UndeclaredError, eval_expr,
    format_rational, lower_evolve, parse_expr, parse_program, print_expr, print_program,
)
from esmck.ir.ast import (
    And, Arith, Assert, Assign, Assume, Block, BoolConst, Call, ChooseInt, Cmp, Const, CountedLoop,
    Evolve, Havoc, If, InputDecl, Neg, Not, Or, Pow, Print, Program, Var, VarDecl, iter_stmts,
)

from conftest import CORPUS

# expressions -----------------------------------------------------------------------

consts = st.fractions(min_value=-1000, max_value=1000, max_denominator=64).map(Const)
num_leaves = st.one_of(consts, st.sampled_from([Var("x"), Var("y"), Var("a")]))


def _num(children):
    return st.one_of(
        st.builds(Neg, children),
        st.builds(Arith, st.sampled_from(["+", "-", "*", "/"]), children, children),
        st.builds(Pow, children, st.integers(0, 4)),
    )


nums = st.recursive(num_leaves, _num, max_leaves=12)
cmps = st.builds(Cmp, st.sampled_from(["<", "<=", "==", ">=", ">"]), nums, nums)
bools = st.recursive(
    st.one_of(cmps, st.builds(BoolConst, st.booleans())),
    lambda c: st.one_of(st.builds(And, c, c), st.builds(Or, c, c), st.builds(Not, c)),
    max_leaves=6,
)


@given(nums)
def test_numeric_expression_round_trip(e):
    assert parse_expr(print_expr(e)) == e


@given(bools)
def test_boolean_expression_round_trip(e):
    assert parse_expr(print_expr(e)) == e


@given(st.fractions(min_value=-10**6, max_value=10**6, max_denominator=10**4))
def test_format_rational_round_trip(q):
    text = format_rational(q)
    assert parse_expr(text) == Const(q)
    if q.denominator not in (1,) and text.startswith("rat"):
        d = q.denominator
        while d % 2 == 0:
            d //= 2
        while d % 5 == 0:
            d //= 5
        assert d != 1


def test_format_rational_forms():
    assert format_rational(F(3)) == "3"
    assert format_rational(F(-1, 8)) == "-0.125"
    assert format_rational(F(1, 3)) == "rat(1, 3)"
    assert format_rational(F(-569, 27)) == "rat(-569, 27)"


def test_precedence_and_negative_literals():
    assert parse_expr("-2 + 3 * x") == Arith("+", Const(F(-2)), Arith("*", Const(F(3)), Var("x")))
    assert parse_expr("-zCr") == Neg(Var("zCr"))
    assert parse_expr("-(2)") == Neg(Const(F(2)))
    assert print_expr(Neg(Const(F(2)))) == "-(2)"
    assert parse_expr("a - b - c") == Arith("-", Arith("-", Var("a"), Var("b")), Var("c"))
    assert print_expr(Arith("-", Var("a"), Arith("-", Var("b"), Var("c")))) == "a - (b - c)"
    assert parse_expr("pow(s, 3)") == Pow(Var("s"), 3)


def test_sort_errors():
    for bad in ("1 + (x < y)", "x && y", "!x", "pow(x, y)", "pow(x, -1)", "(x < y) < z"):
        with pytest.raises(HslSyntaxError):
            parse_expr(bad)


def test_syntax_error_position():
    with pytest.raises(HslSyntaxError) as info:
        parse_program("input real x;\nmain {\n  x = x + ;\n}\n")
    assert info.value.line == 3


def test_eval_exact_and_errors():
    env = {"x": F(1, 3), "y": F(0)}
    assert eval_expr(parse_expr("x * 3 + pow(x, 2)"), env) == F(10, 9)
    assert eval_expr(parse_expr("x > 0 && !(y > 0)"), env) is True
    with pytest.raises(DivisionByZero):
        eval_expr(parse_expr("x / y"), env)
    with pytest.raises(EvalError):
        eval_expr(parse_expr("z + 1"), env)


# programs --------------------------------------------------------------------------

PRELUDE = "input int N;\ninput real a assume (a > 0);\nreal x, y;\nreal t = 0;\n"


def test_undeclared_and_cycles():
    with pytest.raises(UndeclaredError):
        parse_program(PRELUDE + "main { z = 1; }")
    with pytest.raises(UndeclaredError):
        parse_program(PRELUDE + "main { call nowhere; }")
    with pytest.raises(UndeclaredError):
        parse_program("input real a assume (b > 0);\ninput real b;\nmain { }")
    with pytest.raises(UndeclaredError):
        parse_program("real x;\nreal y = x;\nmain { }")
    with pytest.raises(RecursionCycleError) as info:
        parse_program(PRELUDE + "func f { call g; }\nfunc g { call f; }\nmain { call f; }")
    assert "f" in str(info.value) and "g" in str(info.value)


def test_loop_index_and_choose_scope():
    p = parse_program(PRELUDE + "main { k = choose(N); for i in 0..k { x = x + i; } }")
    assert isinstance(p.main[0], ChooseInt) and isinstance(p.main[1], CountedLoop)
    with pytest.raises(UndeclaredError):
        parse_program(PRELUDE + "main { for i in 0..N { } x = i; }")


def test_default_and_explicit_labels():
    p = parse_program(PRELUDE + 'main { assert (x >= 0); assert (y > 1) : "y big"; }')
    assert [s.label for s in p.main] == ["x>=0", "y big"]
    assert parse_program(print_program(p)) == p


@pytest.mark.parametrize("variant", ["defective", "repaired"])
def test_corpus_round_trip(variant):
    text = (CORPUS / f"kpp_{variant}.hsl").read_text()
    p = parse_program(text)
    printed = print_program(p)
    assert parse_program(printed) == p
    assert print_program(parse_program(printed)) == printed
    low = lower_evolve(p)
    assert parse_program(print_program(low)) == low


def test_corpus_shape():
    p = parse_program((CORPUS / "kpp_defective.hsl").read_text())
    assert [d.name for d in p.inputs] == ["N", "M", "dt", "zw", "D", "w"]
    assert len(p.globals) == 10
    assert p.function_names == ["computeNu", "computeBLD", "computeK", "invariant", "initialConditions"]


def test_lowering_single_ode():
    p = parse_program(PRELUDE + "main { evolve { x' = -x; } dt a steps N; }")
    low = lower_evolve(p)
    assert low.main == (
        ChooseInt("m", Var("N")),
        CountedLoop("j", Var("m"), (
            Assign("t", Arith("+", Var("t"), Var("a"))),
            Assign("x", Arith("+", Var("x"), Arith("*", Neg(Var("x")), Var("a")))),
        )),
    )
    assert lower_evolve(low) is low


def test_lowering_staged_update_and_fresh_names():
    src = "input int N;\ninput real a;\nreal x, y, m;\nmain { evolve { x' = y; y' = -x; } dt a steps N; }"
    low = lower_evolve(parse_program(src))
    choose, loop = low.main
    assert choose.var == "m_1"
    assert [s.var for s in loop.body] == ["x_next", "y_next", "x", "y"]
    assert loop.body[1].expr == Arith("+", Var("y"), Arith("*", Neg(Var("x")), Var("a")))
    assert {d.name for d in low.globals} >= {"x_next", "y_next"}


def test_lowering_rejects_undeclared_step():
    from esmck.ir.ast import Evolve as Ev

    p = Program(globals=(VarDecl("x", "real"),), main=(Ev((("x", Var("x")),), "h", Const(F(1))),))
    with pytest.raises(UndeclaredError):
        lower_evolve(p)


# random programs ---------------------------------------------------------------------

prog_nums = st.recursive(
    st.one_of(st.fractions(min_value=-50, max_value=50, max_denominator=8).map(Const),
              st.sampled_from([Var("x"), Var("y"), Var("a")])),
    _num, max_leaves=5,
)
prog_bools = st.builds(Cmp, st.sampled_from(["<", "<=", "==", ">=", ">"]), prog_nums, prog_nums)


def _stmts(children):
    block = st.lists(children, max_size=3).map(tuple)
    return st.one_of(
        st.builds(If, prog_bools, block, block),
        st.builds(Block, block),
        st.builds(CountedLoop, st.just("i"), st.just(Var("N")), block),
    )


simple = st.one_of(
    st.builds(Assign, st.sampled_from(["x", "y"]), prog_nums),
    st.builds(Havoc, st.sampled_from(["x", "y"])),
    st.builds(Assume, prog_bools),
    prog_bools.map(lambda c: Assert(c, print_expr(c).replace(" ", ""))),
    st.builds(Assert, prog_bools, st.sampled_from(["one", "two words"])),
    st.just(Call("f")),
    st.just(Print()),
    st.just(Evolve((("x", Neg(Var("x"))),), "a", Var("N"))),
)
stmts = st.recursive(simple, _stmts, max_leaves=10)


@settings(max_examples=150)
@given(st.lists(stmts, max_size=6).map(tuple), st.lists(simple, max_size=3).map(tuple))
def test_program_round_trip(main, fbody):
    p = Program(
        inputs=(InputDecl("N", "int"), InputDecl("a", "real", Cmp(">", Var("a"), Const(F(0))))),
        globals=(VarDecl("x", "real"), VarDecl("y", "real", Const(F(1, 2))), VarDecl("t", "real")),
        functions=(("f", tuple(s for s in fbody if not isinstance(s, Call))),),
        main=main,
    )
    text = print_program(p)
    assert parse_program(text) == p
    low = lower_evolve(p)
    assert parse_program(print_program(low)) == low
    assert not any(isinstance(s, Evolve) for s in iter_stmts(low.main))
