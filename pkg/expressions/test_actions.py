import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings

from models import ZeroVerdict
from . import actions
from .nodes import (Const, Context, EvaluationError, Integral, Power, Var, add, apply, as_expression, exp,
                    free_variables, is_const, log, mul, neg, power, state, to_text, wiener, T)
from .numeric import compile_vectorized
from .parser import parse
from .strategies import expression_trees, sample_point

CTX = Context(n=1, m=1, params={'lambda': 0.7, 'mu': 1.3}, aliases={'y': state(1)})
X = state(1)
W = wiener(1)


def close(a, b, tol=1e-9):
    return math.isclose(a, b, rel_tol=tol, abs_tol=tol)


@pytest.mark.parametrize('text, variable, expected', [
    ('x^3', X, '3*x^2'),
    ('exp(x*w)', W, 'x*exp(x*w)'),
    ('log(x)*sin(x)', X, 'sin(x)/x + log(x)*cos(x)'),
    ('arctan(x^2)', X, '2*x/(1 + x^4)'),
    ('sqrt(x)', X, '1/(2*sqrt(x))'),
    ('Ei(x)', X, 'exp(x)/x'),
    ('Ei(2/x)', X, '-exp(2/x)/x'),
    ('x^w', W, 'x^w*log(x)'),
    ('lambda*x*t', T, 'lambda*x'),
])
def test_differentiate(text, variable, expected):
    derivative = actions.differentiate(parse(text, CTX), variable)
    difference = add(derivative, mul(as_expression(-1), parse(expected, CTX)))
    assert actions.is_identically_zero(difference, CTX).is_zero


def test_derivative_of_independent_expression_is_zero():
    assert is_const(actions.differentiate(parse('exp(x) + lambda', CTX), W), 0)


@pytest.mark.parametrize('text, simplified', [
    ('x - x', '0'),
    ('2*x + 3*x', '5*x'),
    ('x*x^2', 'x^3'),
    ('exp(x)*exp(-x)', '1'),
    ('exp(log(x))', 'x'),
    ('log(exp(w))', 'w'),
    ('(x^2)^3', 'x^6'),
    ('exp(2*log(x) + w)', 'x^2*exp(w)'),
    ('0*exp(x)', '0'),
])
def test_simplify(text, simplified):
    assert actions.simplify(parse(text, CTX)) == actions.simplify(parse(simplified, CTX))


def test_substitute_many_is_simultaneous():
    ctx = Context(n=2, m=1)
    e = parse('x1 - 2*x2', ctx)
    swapped = actions.substitute_many(e, {state(1): Var(state(2)), state(2): Var(state(1))})
    assert actions.simplify(swapped) == actions.simplify(parse('x2 - 2*x1', ctx))


def test_substitute_into_exponential_coordinate():
    e = actions.substitute(parse('lambda*x', CTX), X, exp(Var(X)))
    assert close(actions.evaluate(e, {X: 1.0}, CTX.params), 0.7 * math.e)


def test_bind_params():
    ctx = Context(params={'lambda': 2, 'mu': None})
    bound = actions.bind_params(parse('lambda*x + mu', ctx), ctx.params)
    assert close(actions.evaluate(bound, {X: 3.0}, {'mu': 1.0}), 7.0)


def test_evaluate_ei():
    assert close(actions.evaluate(apply('Ei', as_expression(1)), {}), 1.8951178163559368, 1e-12)
    assert close(actions.evaluate(apply('Ei', as_expression(-1)), {}), -0.21938393439552026, 1e-12)


@pytest.mark.parametrize('text, point', [
    ('log(x)', {X: -1.0}),
    ('1/x', {X: 0.0}),
    ('Ei(x)', {X: 0.0}),
    ('x^(1/2)', {X: -2.0}),
    ('exp(x)', {X: 1000.0}),
    ('x + w', {X: 1.0}),
])
def test_evaluate_domain_errors(text, point):
    with pytest.raises(EvaluationError):
        actions.evaluate(parse(text, CTX), point, CTX.params)


def test_evaluate_integral():
    dummy = actions.dummy_variable()
    e = Integral(mul(Var(dummy), Var(dummy)), dummy, as_expression(0), Var(X))
    assert close(actions.evaluate(e, {X: 3.0}), 9.0, 1e-8)
    derivative = actions.differentiate(e, X)
    assert close(actions.evaluate(derivative, {X: 3.0}), 9.0)


def test_zero_test_structural():
    verdict = actions.is_identically_zero(parse('x*w - w*x', CTX), CTX)
    assert verdict.status == ZeroVerdict.ZERO
    assert verdict.mode == ZeroVerdict.STRUCTURAL


def test_zero_test_sampled():
    verdict = actions.is_identically_zero(parse('sin(x)^2 + cos(x)^2 - 1', CTX), CTX)
    assert verdict.status == ZeroVerdict.ZERO
    assert verdict.mode == ZeroVerdict.SAMPLED


def test_zero_test_witness():
    ctx = Context(params={'alpha': 2, 'mu': 1})
    verdict = actions.is_identically_zero(parse('alpha*(alpha - 1)*mu^2*x^(2*alpha - 1)', ctx), ctx)
    assert verdict.status == ZeroVerdict.NONZERO
    assert 0.4 <= verdict.witness['x1'] <= 2.0
    assert close(verdict.value, 2 * verdict.witness['x1'] ** 3)


def test_zero_test_symbolic_params_are_sampled():
    ctx = Context(params={'lambda': None})
    assert actions.is_identically_zero(parse('lambda*x - x*lambda', ctx), ctx).is_zero
    verdict = actions.is_identically_zero(parse('lambda - 1', ctx), ctx)
    assert verdict.is_nonzero
    assert 'lambda' in verdict.witness


def test_zero_test_inconclusive():
    verdict = actions.is_identically_zero(parse('x*log(x - 5)', CTX), CTX)
    assert verdict.status == ZeroVerdict.INCONCLUSIVE


def test_zero_test_is_deterministic():
    e = parse('x^2 - 1', CTX)
    assert actions.is_identically_zero(e, CTX).witness == actions.is_identically_zero(e, CTX).witness


def test_sampling_box_override():
    ctx = Context(box={'state': (5.0, 6.0)})
    points = actions.sample_points(ctx, [X], [], 16, 0)
    assert all(5.0 <= point[X] <= 6.0 for point, _ in points)


def test_compile_vectorized_matches_evaluate():
    e = parse('exp(-y) - (1/2)*exp(-2*y) + mu*w', CTX)
    run = compile_vectorized(e, CTX.params)
    xs = np.linspace(0.5, 1.5, 7)
    ws = np.linspace(-1.0, 1.0, 7)
    values = run({X: xs, W: ws})
    expected = [actions.evaluate(e, {X: x, W: w}, CTX.params) for x, w in zip(xs, ws)]
    assert np.allclose(values, expected)


def test_compile_vectorized_flags_domain_errors():
    run = compile_vectorized(log(Var(X)))
    values = run({X: np.array([1.0, -1.0])})
    assert values[0] == 0.0
    assert np.isnan(values[1])


TREES = expression_trees()


@settings(max_examples=1000)
@given(TREES, sample_point())
def test_simplify_preserves_values(e, point):
    assert close(actions.evaluate(actions.simplify(e), point), actions.evaluate(e, point), 1e-8)


@settings(max_examples=1000)
@given(TREES, sample_point())
def test_derivative_matches_central_difference(e, point):
    step = 1e-5
    derivative = actions.evaluate(actions.differentiate(e, X), point)
    upper = actions.evaluate(e, {**point, X: point[X] + step})
    lower = actions.evaluate(e, {**point, X: point[X] - step})
    assert math.isclose(derivative, (upper - lower) / (2 * step), rel_tol=1e-4, abs_tol=1e-4)


@given(TREES)
def test_difference_with_itself_is_zero(e):
    assert actions.is_identically_zero(add(e, neg(e)), CTX).status == ZeroVerdict.ZERO


########################################################################################################################
# Numbers and bare variables
########################################################################################################################

def test_constructors_accept_numbers_and_variables():
    assert mul(2, W) == mul(as_expression(2), Var(W))
    assert add(1, X, 0.5) == add(Var(X), as_expression(1.5))
    assert neg(X) == neg(Var(X))
    assert power(X, 2) == power(Var(X), as_expression(2))
    assert to_text(mul(2, W)) == '2 * w1'
    assert actions.simplify(W) == Var(W)
    assert actions.differentiate(mul(3, X), X) == as_expression(3)
    assert free_variables(X) == {X}
    assert close(actions.evaluate(add(mul(2, X), W), {X: 1.5, W: 0.25}), 3.25)
    assert actions.is_identically_zero(add(mul(2, W), mul(-2, W)), CTX).is_zero


def test_constants_keep_their_type():
    assert as_expression(2) != as_expression(2.0)
    assert len({as_expression(2), as_expression(2.0)}) == 2
    assert as_expression(2) == Const(Fraction(2))
    assert Const(np.float64(0.5)) == as_expression(0.5)
    assert to_text(actions.simplify(mul(as_expression(2.0), X))) == '2.0 * x1'
    assert to_text(actions.simplify(mul(as_expression(2), X))) == '2 * x1'


@pytest.mark.parametrize('base, exponent, expected', [
    (Fraction(4), Fraction(1, 2), Const(Fraction(2))),
    (Fraction(8, 27), Fraction(2, 3), Const(Fraction(4, 9))),
    (0.25, 0.5, Const(0.5)),
    (Fraction(2), 3, Const(Fraction(8))),
])
def test_constant_powers_fold(base, exponent, expected):
    assert power(as_expression(base), as_expression(exponent)) == expected


def test_irrational_constant_powers_stay_exact():
    e = power(as_expression(Fraction(1, 16)), as_expression(Fraction(1, 16)))
    assert isinstance(e, Power)
    assert parse(to_text(e), CTX) == e
    assert close(actions.evaluate(e, {}), (1 / 16) ** (1 / 16))
