import math

import pytest
from hypothesis import given, settings

from .nodes import (Apply, Context, ParseError, UnknownIdentifierError, mul, state, to_text,
                    wiener, T, as_expression, apply, free_params)
from .parser import parse, tokenize
from .actions import evaluate
from .strategies import expression_trees, sample_point


@pytest.mark.parametrize('text, point, expected', [
    ('x^2 + 3*x', {state(1): 2.0}, 10.0),
    ('-x^2', {state(1): 3.0}, -9.0),
    ('2^3^2', {}, 512.0),
    ('x**2 - x', {state(1): 4.0}, 12.0),
    ('(x + 1)/(x - 1)', {state(1): 3.0}, 2.0),
    ('exp(-y) - (1/2)*exp(-2*y)', {state(1): 0.0}, 0.5),
    ('t*w + x', {state(1): 1.0, T: 2.0, wiener(1): 3.0}, 7.0),
    ('1.5e-1 * 10', {}, 1.5),
])
def test_parse_evaluates(text, point, expected):
    ctx = Context(n=1, m=1, aliases={'y': state(1)})
    assert math.isclose(evaluate(parse(text, ctx), point), expected, rel_tol=1e-12)


def test_parse_multidimensional_names():
    ctx = Context(n=2, m=2)
    e = parse('x1*w2 - x2*w1', ctx)
    assert evaluate(e, {state(1): 1.0, state(2): 2.0, wiener(1): 3.0, wiener(2): 4.0}) == -2.0


def test_parse_params():
    ctx = Context(n=1, m=1, params={'mu': 0.5, 'lambda': None})
    e = parse('lambda*x + mu', ctx)
    assert free_params(e) == {'lambda', 'mu'}
    assert evaluate(e, {state(1): 2.0}, {'mu': 0.5, 'lambda': 3.0}) == 6.5


def test_parse_functions():
    ctx = Context()
    assert parse('Ei(2/x)', ctx) == apply('Ei', mul(as_expression(2), as_expression(state(1)) ** -1))
    assert isinstance(parse('sqrt(x)', ctx), Apply)


@pytest.mark.parametrize('text, position', [
    ('x +* 2', 3),
    ('(x + 1', 6),
    ('x $ 2', 2),
    ('exp', 0),
])
def test_parse_error_position(text, position):
    with pytest.raises(ParseError) as error:
        parse(text, Context())
    assert error.value.position == position


@pytest.mark.parametrize('text', ['y + 1', 'x3', 'w2', 'foo(x)'])
def test_unknown_identifier(text):
    with pytest.raises(UnknownIdentifierError):
        parse(text, Context(n=2, m=1))


def test_tokenize_power_alias():
    assert [token.text for token in tokenize('x**2')] == ['x', '^', '2', '']


@settings(max_examples=1000)
@given(expression_trees(n=2, m=1, max_leaves=10), sample_point(n=2, m=1))
def test_printed_expressions_parse_back(e, point):
    again = parse(to_text(e), Context(n=2, m=1))
    assert again == e
    assert math.isclose(evaluate(again, point), evaluate(e, point), rel_tol=1e-9, abs_tol=1e-9)
