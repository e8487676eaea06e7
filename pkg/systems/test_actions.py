from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from expressions.actions import is_identically_zero
from expressions.nodes import Context, add, mul, neg, state, wiener
from expressions.parser import parse
from expressions.strategies import expression_trees
from model_manager import model_manager
from models import DimensionError, ItoSystem, StratSystem, WienerDependenceError
from . import actions


def ito(ctx, f, sigma):
    return ItoSystem(ctx, [parse(e, ctx) for e in f], [[parse(e, ctx) for e in row] for row in sigma])


def same(a, b, ctx):
    if isinstance(b, str):
        b = parse(b, ctx)
    return is_identically_zero(add(a, neg(b)), ctx).is_zero


SCALAR = Context(params={'lambda': 0.8, 'mu': 0.6, 'alpha': 1.7})


def test_system_rejects_wiener_dependence():
    with pytest.raises(WienerDependenceError):
        ito(SCALAR, ['lambda*x*w'], [['mu']])
    with pytest.raises(WienerDependenceError):
        StratSystem(SCALAR, [parse('x', SCALAR)], [[parse('w', SCALAR)]])


def test_system_checks_dimensions():
    ctx = Context(n=2, m=1)
    with pytest.raises(DimensionError):
        ito(ctx, ['x1'], [['1'], ['1']])
    with pytest.raises(DimensionError):
        ito(ctx, ['x1', 'x2'], [['1', '0'], ['1', '0']])


@pytest.mark.parametrize('sigma, expected', [
    ('mu', '0'),
    ('mu*x', 'mu^2*x/2'),
    ('mu*x^alpha', 'alpha*mu^2*x^(2*alpha - 1)/2'),
    ('exp(-x)', '-exp(-2*x)/2'),
])
def test_scalar_drift_correction(sigma, expected):
    correction = actions.drift_correction(((parse(sigma, SCALAR),),), SCALAR)
    assert same(correction.rho[0], expected, SCALAR)


def test_drift_correction_two_dimensional():
    ctx = Context(n=2, m=2)
    sigma = ((parse('x1', ctx), parse('x2', ctx)), (parse('0', ctx), parse('1', ctx)))
    rho = actions.drift_correction(sigma, ctx).rho
    assert same(rho[0], '(x1 + 1)/2', ctx)
    assert same(rho[1], '0', ctx)


def test_linear_oscillator_reads_the_same_in_both_calculi():
    sys = ito(SCALAR, ['lambda*x'], [['mu']])
    strat = actions.ito_to_strat(sys)
    assert same(strat.b[0], 'lambda*x', SCALAR)


def test_nonlinear_diffusion_shifts_the_drift():
    sys = ito(SCALAR, ['lambda*x'], [['mu*x^alpha']])
    strat = actions.ito_to_strat(sys)
    assert same(strat.b[0], 'lambda*x - alpha*mu^2*x^(2*alpha - 1)/2', SCALAR)
    back = actions.strat_to_ito(strat)
    assert same(back.f[0], 'lambda*x', SCALAR)
    assert actions.as_ito(strat).f == back.f
    assert actions.as_ito(sys) is sys


def test_ito_laplacian():
    sys = ito(SCALAR, ['lambda*x'], [['mu*x']])
    assert same(actions.ito_laplacian(parse('x*w', SCALAR), sys), '2*mu*x', SCALAR)
    assert same(actions.ito_laplacian(parse('w^2', SCALAR), sys), '2', SCALAR)
    assert same(actions.ito_laplacian(parse('x^2', SCALAR), sys), '2*mu^2*x^2', SCALAR)


def test_ito_laplacian_rejects_foreign_variables():
    sys = ito(SCALAR, ['lambda*x'], [['mu']])
    with pytest.raises(DimensionError):
        actions.ito_laplacian(parse('x2', Context(n=2, m=1)), sys)


def test_misawa_operators():
    sys = ito(SCALAR, ['lambda*x'], [['mu']])
    assert same(actions.misawa_L0(parse('x', SCALAR), sys), 'lambda*x', SCALAR)
    assert same(actions.misawa_L0(parse('w^2 + t', SCALAR), sys), '2', SCALAR)
    assert same(actions.misawa_Lk(parse('w - x/mu', SCALAR), sys, 1), '0', SCALAR)
    with pytest.raises(DimensionError):
        actions.misawa_Lk(parse('x', SCALAR), sys, 2)


def test_misawa_operators_two_dimensional():
    ctx = Context(n=2, m=2, params={'mu': 2})
    sys = ito(ctx, ['-x2', 'x1'], [['mu', '0'], ['0', 'mu']])
    assert same(actions.misawa_L0(parse('x1^2 + x2^2', ctx), sys), '2*mu^2', ctx)
    assert same(actions.misawa_Lk(parse('x1*w2', ctx), sys, 2), 'x1', ctx)
    assert same(actions.misawa_Lk(parse('x1*w2', ctx), sys, 1), 'mu*w2', ctx)


def test_diffusion_rank():
    ctx = Context(n=2, m=2)
    sys = ito(ctx, ['0', '0'], [['x1', 'x1'], ['x2', 'x2']])
    assert set(actions.diffusion_rank(sys)) == {1}
    full = ito(ctx, ['0', '0'], [['1', '0'], ['0', 'x1']])
    assert set(actions.diffusion_rank(full)) == {2}


def test_context_helpers():
    ctx = Context(n=2, m=3)
    assert ctx.states() == [state(1), state(2)]
    assert ctx.wieners() == [wiener(1), wiener(2), wiener(3)]


def test_calculus_conversions_invert_each_other_on_bundled_models():
    names = model_manager.bundled()
    assert names
    for name in names:
        model = model_manager.load(name)
        sys, ctx = model.system, model.ctx
        if isinstance(sys, ItoSystem):
            again = actions.strat_to_ito(actions.ito_to_strat(sys))
            drift, drift_again = sys.f, again.f
        else:
            again = actions.ito_to_strat(actions.strat_to_ito(sys))
            drift, drift_again = sys.b, again.b
        assert type(again) is type(sys), name
        assert again.sigma == sys.sigma, name
        assert all(same(a, b, ctx) for a, b in zip(drift_again, drift)), name


@settings(max_examples=50)
@given(expression_trees(max_leaves=5), expression_trees(max_leaves=5), st.sampled_from([2, -3, Fraction(1, 2)]))
def test_ito_laplacian_is_linear(u, v, c):
    sys = ito(SCALAR, ['lambda*x'], [['mu*x']])
    combined = actions.ito_laplacian(add(mul(c, u), v), sys)
    expected = add(mul(c, actions.ito_laplacian(u, sys)), actions.ito_laplacian(v, sys))
    assert same(combined, expected, SCALAR)
