import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinsym import exprdsl
from spinsym.errors import EvalDomainError, ParseError
from spinsym.exprdsl import BinOp, Neg, Num, Var, evaluate, parse


def ev(src, point=(0.0, 0.0, 0.0, 0.0), dim=4):
    return evaluate(parse(src, dim), np.asarray(point, dtype=float))


def test_linear_combination():
    assert ev("x1 + 2*x2", (1, 3, 0, 0)) == 7


def test_sin_zero():
    assert ev("sin(0)") == 0


def test_variable_exceeds_dimension():
    with pytest.raises(ParseError, match="variable index exceeds dimension"):
        parse("x4", dim=3)


def test_hyperbolic_identity():
    assert abs(ev("cosh(1)^2 - sinh(1)^2", (0.3, -2, 5, 1)) - 1) < 1e-12


def test_pi_constant():
    assert abs(ev("pi") - 3.141592653589793) < 1e-15
    assert ev("e") == math.e


def test_division_by_zero():
    with pytest.raises(EvalDomainError):
        ev("1/x1", (0, 0, 0, 0))


@pytest.mark.parametrize("src", ["log(0)", "log(-1)", "sqrt(-1)", "(-2)^0.5", "0^(-1)"])
def test_domain_errors(src):
    with pytest.raises(EvalDomainError):
        ev(src)


def test_domain_error_reports_node_position():
    with pytest.raises(EvalDomainError) as info:
        ev("1 + log(x1)")
    assert info.value.pos == 5


def test_precedence_and_associativity():
    assert ev("2 + 3*4") == 14
    assert ev("2^3^2") == 512
    assert ev("-2^2") == -4
    assert ev("(-2)^2") == 4
    assert ev("2^-1") == 0.5
    assert ev("8/2/2") == 2
    assert ev("1 - 2 - 3") == -4


def test_scientific_literals():
    assert ev("1.5e2 + .5 + 2E-1") == pytest.approx(150.7)


@pytest.mark.parametrize(
    "src, fragment",
    [
        ("", "empty"),
        ("1 +", "end of input"),
        ("2 $ 3", "unexpected character"),
        ("foo(1)", "unknown"),
        ("sin(1, 2)", "1 argument"),
        ("sin 1", "parentheses"),
        ("(1 + 2", "expected"),
        ("x0", "unknown"),
    ],
)
def test_parse_errors(src, fragment):
    with pytest.raises(ParseError, match=fragment):
        parse(src, 4)


def test_parse_error_position_is_one_based():
    with pytest.raises(ParseError) as info:
        parse("1 + $", 4)
    assert info.value.pos == 5


def test_tree_shape_and_immutability():
    tree = parse("-x2 * 3", 4)
    assert isinstance(tree, BinOp) and tree.op == "*"
    assert isinstance(tree.left, Neg) and tree.left.operand == Var(2, pos=2)
    assert isinstance(tree.right, Num)
    with pytest.raises(AttributeError):
        tree.op = "+"


def test_vectorised_evaluation():
    pts = np.array([[0.0, 1.0, 0, 0], [1.0, 2.0, 0, 0], [2.0, 3.0, 0, 0]])
    np.testing.assert_allclose(evaluate(parse("x1*x2 + 1", 4), pts), [1, 3, 7])


def test_constant_expression_broadcasts():
    out = evaluate(parse("2", 4), np.zeros((5, 4)))
    assert out.shape == (5,)


def test_max_variable():
    assert exprdsl.max_variable(parse("sin(x3) + x1", 4)) == 3
    assert exprdsl.max_variable(parse("pi", 4)) == 0


def test_complex_expression():
    c = exprdsl.ComplexExpr.parse("x1", "-x2", 3)
    assert c.evaluate(np.array([1.0, 2.0, 0.0])) == 1 - 2j


def test_split_top_level():
    assert exprdsl.split_top_level("sin(x1), 2^(1), cos(2*pi*x3)") == [
        "sin(x1)", "2^(1)", "cos(2*pi*x3)"]


# ------------------------------------------------------------- property tests

_leaf = st.one_of(
    st.floats(min_value=0.1, max_value=5, allow_nan=False).map(lambda v: Num(v)),
    st.integers(min_value=1, max_value=4).map(lambda i: Var(i)),
)


def _extend(children):
    return st.one_of(
        st.tuples(st.sampled_from("+-*"), children, children).map(
            lambda t: BinOp(t[0], t[1], t[2])),
        children.map(Neg),
        children.map(lambda c: exprdsl.Call("sin", c)),
    )


_trees = st.recursive(_leaf, _extend, max_leaves=12)
_points = st.lists(st.floats(-2, 2, allow_nan=False), min_size=4, max_size=4)


@settings(max_examples=150, deadline=None)
@given(_trees, _points)
def test_to_source_roundtrip(tree, point):
    src = exprdsl.to_source(tree)
    again = parse(src, 4)
    x = np.array(point)
    assert evaluate(again, x) == pytest.approx(evaluate(tree, x), rel=1e-12, abs=1e-12)
    assert exprdsl.to_source(again) == src


@settings(max_examples=100, deadline=None)
@given(st.integers(-20, 20), st.integers(-20, 20), st.integers(1, 20))
def test_integer_arithmetic_matches_python(a, b, c):
    got = ev(f"{a} + {b} * {c} - ({a}) / {c}")
    assert got == pytest.approx(a + b * c - a / c)
