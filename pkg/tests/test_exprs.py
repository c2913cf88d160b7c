import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ltv_gpebo.exprs import (
    BinOp,
    Call,
    Const,
    ExprEvalError,
    ExprSyntaxError,
    Neg,
    Time,
    UnknownIdentifierError,
    compile_expr,
    eval_expr,
    is_constant,
    parse_expr,
    to_source,
)


@pytest.mark.parametrize(
    "src,t,expected",
    [
        ("2 - sin(t)", math.pi / 2, 1.0),
        ("0", 12.3, 0.0),
        ("-8 + cos(t)", 0.0, -7.0),
        ("1+2*3", 0.0, 7.0),
        ("(2-sin(t))", 0.0, 2.0),
        ("8-4-2", 0.0, 2.0),
        ("8/4/2", 0.0, 1.0),
        ("--t", 5.0, 5.0),
        ("-t*2", 3.0, -6.0),
        ("1.5e2 + .5", 0.0, 150.5),
    ],
)
def test_evaluation_examples(src, t, expected):
    assert eval_expr(parse_expr(src), t) == expected


def test_pythagorean_identity():
    v = eval_expr(parse_expr("sin(t)*sin(t)+cos(t)*cos(t)"), 0.7)
    assert abs(v - 1.0) <= 1e-15


def test_tree_shape():
    assert parse_expr("1 - t") == BinOp("-", Const(1.0), Time())
    assert parse_expr("-sin(t)") == Neg(Call("sin", Time()))


def test_constant_detection():
    assert is_constant(parse_expr("cos(0) * 2"))
    assert not is_constant(parse_expr("1 + 0*t"))


def test_bytes_input():
    assert eval_expr(parse_expr(b"1 + t"), 2.0) == 3.0
    with pytest.raises(ExprSyntaxError):
        parse_expr(b"\xff\xfe")


@pytest.mark.parametrize(
    "src,offset",
    [("1 +", 3), ("sin t", 4), ("(1 + 2", 6), ("1 2", 2), ("2 $ 3", 2), ("", 0), ("   ", 0), (")", 0)],
)
def test_syntax_error_offsets(src, offset):
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr(src)
    assert info.value.offset == offset
    assert info.value.expected
    assert f"byte {offset}" in str(info.value)


def test_offset_counts_bytes_not_characters():
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr("t + é")
    assert info.value.offset == 4
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr("é")
    assert info.value.offset == 0


def test_unknown_identifier_is_named():
    with pytest.raises(UnknownIdentifierError) as info:
        parse_expr("tan(t)")
    assert info.value.name == "tan"
    with pytest.raises(UnknownIdentifierError):
        parse_expr("2 * x")


def test_division_by_zero_names_subexpression():
    e = parse_expr("1 / (t - 1)")
    with pytest.raises(ExprEvalError, match=r"\(1\.0 / \(t - 1\.0\)\)"):
        eval_expr(e, 1.0)
    with pytest.raises(ExprEvalError):
        compile_expr(e)(1.0)
    assert eval_expr(e, 2.0) == 1.0


def test_sin_of_overflow_is_an_evaluation_error():
    e = parse_expr("sin(1e300 * 1e300)")
    with pytest.raises(ExprEvalError, match="sin"):
        eval_expr(e, 0.0)
    with pytest.raises(ExprEvalError):
        compile_expr(e)(0.0)


def test_pathological_inputs_are_rejected_cleanly():
    with pytest.raises(ExprSyntaxError):
        parse_expr("(" * 5000 + "t" + ")" * 5000)
    with pytest.raises(ExprSyntaxError):
        parse_expr("-" * 3000 + "t")
    with pytest.raises(ExprSyntaxError):
        parse_expr("1e999")


def _trees():
    leaves = st.one_of(
        st.builds(Const, st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)),
        st.just(Time()),
    )
    return st.recursive(
        leaves,
        lambda sub: st.one_of(
            st.builds(Neg, sub),
            st.builds(Call, st.sampled_from(["sin", "cos"]), sub),
            st.builds(BinOp, st.sampled_from(["+", "-", "*", "/"]), sub, sub),
        ),
        max_leaves=12,
    )


def _value(f, t):
    try:
        return f(t)
    except ExprEvalError:
        return "div0"


@settings(max_examples=200, deadline=None)
@given(_trees())
def test_pretty_print_round_trip(e):
    back = parse_expr(to_source(e))
    ts = np.random.default_rng(7).uniform(-50, 50, 100)
    for t in ts:
        a = _value(lambda s: eval_expr(e, s), float(t))
        b = _value(lambda s: eval_expr(back, s), float(t))
        assert a == b or (a != a and b != b)


@settings(max_examples=200, deadline=None)
@given(_trees(), st.floats(-100, 100))
def test_compiled_matches_tree_walk(e, t):
    a = _value(lambda s: eval_expr(e, s), t)
    b = _value(compile_expr(e), t)
    assert a == b or (a != a and b != b)


@settings(max_examples=500, deadline=None)
@given(st.binary(max_size=64))
def test_fuzz_bytes_never_crash(data):
    try:
        e = parse_expr(data)
    except ExprSyntaxError:
        return
    try:
        eval_expr(e, 0.5)
    except ExprEvalError:
        pass


@settings(max_examples=500, deadline=None)
@given(st.text(alphabet="t0123456789.eE+-*/() sincos", max_size=40))
def test_fuzz_grammar_alphabet(src):
    try:
        e = parse_expr(src)
    except ExprSyntaxError as exc:
        assert 0 <= exc.offset <= len(src.encode("utf-8"))
        return
    try:
        assert isinstance(eval_expr(e, 0.25), float)
    except ExprEvalError:
        pass
