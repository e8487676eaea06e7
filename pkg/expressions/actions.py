"""
    Operations on expression trees: differentiation, simplification, substitution,
    scalar evaluation and the structural-plus-sampled zero test.
"""
from fractions import Fraction
from functools import lru_cache
from itertools import product as cartesian
import math

import numpy as np
from scipy import integrate, special
from scipy.stats import qmc

import app
from expressions.nodes import (Apply, Const, EvaluationError, Expression, Integral, Neg, ONE, MINUS_ONE, Param, Power,
                               Product, Sum, Var, VarId, ZERO, add, as_expression, free_params,
                               free_variables, is_const, mul, neg, power, to_text, TIME, STATE, WIENER)
from models import ZeroVerdict

DUMMY = 'dummy'
EXPANSION_LIMIT = 12

########################################################################################################################
# Differentiation
########################################################################################################################


@lru_cache(maxsize=None)
def derivative(e, v):
    """
        Raw partial derivative of e with respect to the VarId v, built with the normalizing
        constructors but not simplified.
    """
    if not isinstance(e, Expression):
        return derivative(as_expression(e), v)
    if v not in free_variables(e):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Sum):
        return add(*[derivative(term, v) for term in e.terms])
    if isinstance(e, Product):
        terms = []
        for i, factor in enumerate(e.factors):
            d = derivative(factor, v)
            if not is_const(d, 0):
                terms.append(mul(*(e.factors[:i] + (d,) + e.factors[i + 1:])))
        return add(*terms)
    if isinstance(e, Neg):
        return neg(derivative(e.arg, v))
    if isinstance(e, Power):
        if v not in free_variables(e.exponent):
            return mul(e.exponent, power(e.base, add(e.exponent, MINUS_ONE)), derivative(e.base, v))
        return mul(e, add(mul(derivative(e.exponent, v), Apply('log', e.base)),
                          mul(e.exponent, derivative(e.base, v), power(e.base, MINUS_ONE))))
    if isinstance(e, Apply):
        return mul(_outer_derivative(e.name, e.arg), derivative(e.arg, v))
    if isinstance(e, Integral):
        terms = [mul(substitute_many(e.integrand, {e.dummy: e.upper}), derivative(e.upper, v)),
                 neg(mul(substitute_many(e.integrand, {e.dummy: e.lower}), derivative(e.lower, v)))]
        inner = derivative(e.integrand, v)
        if not is_const(inner, 0):
            terms.append(Integral(inner, e.dummy, e.lower, e.upper))
        return add(*terms)
    return ZERO


def _outer_derivative(name, arg):
    if name == 'exp':
        return Apply('exp', arg)
    if name == 'log':
        return power(arg, MINUS_ONE)
    if name == 'sqrt':
        return mul(Const(Fraction(1, 2)), power(Apply('sqrt', arg), MINUS_ONE))
    if name == 'sin':
        return Apply('cos', arg)
    if name == 'cos':
        return neg(Apply('sin', arg))
    if name == 'arctan':
        return power(add(ONE, power(arg, Const(Fraction(2)))), MINUS_ONE)
    # d/dz Ei(z) = e^z / z
    return mul(Apply('exp', arg), power(arg, MINUS_ONE))


def differentiate(e, v):
    """
        Computes the exact partial derivative of an expression.

        *Parameters:*
            - *e (Expression)*: The expression.
            - *v (VarId)*: The variable: a state variable (d_i), time (d_t) or a Wiener variable (d^_k).

        *Returns:*
            - *Expression*: The simplified derivative.
    """
    return simplify(derivative(e, v))


########################################################################################################################
# Simplification
########################################################################################################################

_RANK = {Const: 0, Var: 1, Param: 2, Power: 3, Apply: 4, Product: 5, Sum: 6, Neg: 7, Integral: 8}


def _key(e):
    return _RANK[type(e)], to_text(e)


def _coefficient(term):
    if isinstance(term, Const):
        return term.value, ONE
    if isinstance(term, Product) and isinstance(term.factors[0], Const):
        return term.factors[0].value, mul(*term.factors[1:])
    return Fraction(1), term


def _simplify_sum(terms):
    flat = []
    for term in terms:
        if isinstance(term, Sum):
            flat.extend(term.terms)
        elif isinstance(term, Product) and len(term.factors) == 2 and isinstance(term.factors[0], Const) \
                and isinstance(term.factors[1], Sum):
            flat.extend(mul(term.factors[0], inner) for inner in term.factors[1].terms)
        else:
            flat.append(term)
    collected = {}
    for term in flat:
        coefficient, rest = _coefficient(term)
        collected[rest] = collected.get(rest, Fraction(0)) + coefficient
    result = []
    for rest, coefficient in collected.items():
        if coefficient == 0:
            continue
        result.append(Const(coefficient) if rest == ONE else mul(Const(coefficient), rest))
    result.sort(key=_key)
    return add(*result)


def _base_and_exponent(factor):
    if isinstance(factor, Power):
        return factor.base, factor.exponent
    return factor, ONE


def _simplify_product(factors):
    flat = []
    pending = list(factors)
    while pending:
        factor = pending.pop(0)
        if isinstance(factor, Product):
            pending[0:0] = list(factor.factors)
        elif isinstance(factor, Neg):
            pending[0:0] = [MINUS_ONE, factor.arg]
        else:
            flat.append(factor)

    constant = Fraction(1)
    exponents = {}
    exp_arguments = []
    for factor in flat:
        if isinstance(factor, Const):
            constant = constant * factor.value
        elif isinstance(factor, Apply) and factor.name == 'exp':
            exp_arguments.append(factor.arg)
        else:
            base, exponent = _base_and_exponent(factor)
            exponents.setdefault(base, []).append(exponent)
    if constant == 0:
        return ZERO

    result = []
    for base, parts in exponents.items():
        merged = _simplify_power(base, _simplify_sum(parts))
        if isinstance(merged, Product):
            result.extend(merged.factors)
        else:
            result.append(merged)
    if exp_arguments:
        result.append(_simplify_apply('exp', _simplify_sum(exp_arguments)))

    kept = []
    for factor in result:
        if isinstance(factor, Const):
            constant = constant * factor.value
        else:
            kept.append(factor)
    if constant == 0:
        return ZERO

    sums = [factor for factor in kept if isinstance(factor, Sum)]
    if sums:
        size = 1
        for s in sums:
            size *= len(s.terms)
        if size <= EXPANSION_LIMIT and (len(kept) > 1 or constant != 1):
            others = [factor for factor in kept if not isinstance(factor, Sum)]
            expanded = []
            for combination in cartesian(*[s.terms for s in sums]):
                expanded.append(_simplify_product([Const(constant)] + others + list(combination)))
            return _simplify_sum(expanded)

    kept.sort(key=_key)
    return mul(Const(constant), *kept)


def _is_integer(e):
    return isinstance(e, Const) and isinstance(e.value, Fraction) and e.value.denominator == 1


def _simplify_power(base, exponent):
    if is_const(exponent, 0):
        return ONE
    if is_const(exponent, 1):
        return base
    if is_const(base, 1):
        return ONE
    if is_const(base, 0) and isinstance(exponent, Const) and exponent.value > 0:
        return ZERO
    if isinstance(base, Const) and isinstance(exponent, Const):
        return power(base, exponent)
    if isinstance(base, Power) and _is_integer(exponent):
        return _simplify_power(base.base, _simplify_product([base.exponent, exponent]))
    if isinstance(base, Apply) and base.name == 'exp':
        return _simplify_apply('exp', _simplify_product([base.arg, exponent]))
    if isinstance(base, Product) and _is_integer(exponent):
        return _simplify_product([_simplify_power(factor, exponent) for factor in base.factors])
    return Power(base, exponent)


def _ei(value):
    if value == 0:
        raise EvaluationError('Ei is singular at 0.')
    return float(special.expi(value))


def _float_fold(name, value):
    functions = {'exp': math.exp, 'log': math.log, 'sqrt': math.sqrt, 'sin': math.sin, 'cos': math.cos,
                 'arctan': math.atan, 'Ei': _ei}
    try:
        return Const(float(functions[name](value)))
    except (ValueError, OverflowError, EvaluationError):
        return None


def _simplify_apply(name, arg):
    if isinstance(arg, Const):
        if arg.value == 0:
            if name in ('exp', 'cos'):
                return ONE
            if name in ('sin', 'arctan', 'sqrt'):
                return ZERO
        if name == 'log' and arg.value == 1:
            return ZERO
        if isinstance(arg.value, float):
            folded = _float_fold(name, arg.value)
            if folded is not None:
                return folded
    if name == 'sqrt':
        return _simplify_power(arg, Const(Fraction(1, 2)))
    if name == 'exp':
        if isinstance(arg, Apply) and arg.name == 'log':
            return arg.arg
        if isinstance(arg, Sum):
            logs = []
            rest = []
            for term in arg.terms:
                coefficient, body = _coefficient(term)
                if isinstance(body, Apply) and body.name == 'log' and isinstance(coefficient, Fraction) \
                        and coefficient.denominator == 1:
                    logs.append(_simplify_power(body.arg, Const(coefficient)))
                else:
                    rest.append(term)
            if logs:
                return _simplify_product(logs + [_simplify_apply('exp', add(*rest))])
    if name == 'log' and isinstance(arg, Apply) and arg.name == 'exp':
        return arg.arg
    return Apply(name, arg)


@lru_cache(maxsize=None)
def simplify(e):
    """
        Folds constants, merges like terms in sums and like bases in products, merges
        exponentials and applies the generic-point identities exp(log u) = u, log(exp u) = u.
        The result is numerically equal to the input wherever the input is evaluable; it is
        not a canonical form.

        *Parameters:*
            - *e (Expression)*: The expression.

        *Returns:*
            - *Expression*: The simplified expression.
    """
    if not isinstance(e, Expression):
        return simplify(as_expression(e))
    if isinstance(e, (Const, Var, Param)):
        return e
    if isinstance(e, Neg):
        return _simplify_product([MINUS_ONE, simplify(e.arg)])
    if isinstance(e, Sum):
        return _simplify_sum([simplify(term) for term in e.terms])
    if isinstance(e, Product):
        return _simplify_product([simplify(factor) for factor in e.factors])
    if isinstance(e, Power):
        return _simplify_power(simplify(e.base), simplify(e.exponent))
    if isinstance(e, Apply):
        return _simplify_apply(e.name, simplify(e.arg))
    if isinstance(e, Integral):
        lower, upper = simplify(e.lower), simplify(e.upper)
        if lower == upper:
            return ZERO
        return Integral(simplify(e.integrand), e.dummy, lower, upper)
    return e


########################################################################################################################
# Substitution
########################################################################################################################

def substitute_many(e, mapping):
    """
        Simultaneous capture-free substitution of variables.

        *Parameters:*
            - *e (Expression)*: The expression.
            - *mapping (dict)*: VarId -> replacement Expression (or number).

        *Returns:*
            - *Expression*: The expression with every mapped variable replaced at once.
    """
    mapping = {v: as_expression(r) for v, r in mapping.items()}
    cache = {}

    def walk(node):
        if node in cache:
            return cache[node]
        if isinstance(node, Var):
            result = mapping.get(node.var, node)
        elif isinstance(node, (Const, Param)):
            result = node
        elif isinstance(node, Sum):
            result = add(*[walk(term) for term in node.terms])
        elif isinstance(node, Product):
            result = mul(*[walk(factor) for factor in node.factors])
        elif isinstance(node, Power):
            result = power(walk(node.base), walk(node.exponent))
        elif isinstance(node, Neg):
            result = neg(walk(node.arg))
        elif isinstance(node, Apply):
            result = Apply(node.name, walk(node.arg))
        elif isinstance(node, Integral):
            inner = {v: r for v, r in mapping.items() if v != node.dummy}
            result = Integral(substitute_many(node.integrand, inner) if inner else node.integrand,
                              node.dummy, walk(node.lower), walk(node.upper))
        else:
            result = node
        cache[node] = result
        return result

    return walk(as_expression(e))


def substitute(e, v, replacement):
    """
        Replaces every occurrence of the variable v by the replacement expression.
    """
    return substitute_many(e, {v: replacement})


def bind_params(e, params):
    """
        Replaces the numerically bound params by their values.
    """
    cache = {}

    def walk(node):
        if node in cache:
            return cache[node]
        if isinstance(node, Param) and params.get(node.name) is not None:
            result = as_expression(params[node.name])
        elif isinstance(node, (Const, Var, Param)):
            result = node
        elif isinstance(node, Sum):
            result = add(*[walk(term) for term in node.terms])
        elif isinstance(node, Product):
            result = mul(*[walk(factor) for factor in node.factors])
        elif isinstance(node, Power):
            result = power(walk(node.base), walk(node.exponent))
        elif isinstance(node, Neg):
            result = neg(walk(node.arg))
        elif isinstance(node, Apply):
            result = Apply(node.name, walk(node.arg))
        else:
            result = Integral(walk(node.integrand), node.dummy, walk(node.lower), walk(node.upper))
        cache[node] = result
        return result

    return walk(as_expression(e))


########################################################################################################################
# Evaluation
########################################################################################################################

_FUNCTIONS = {
    'exp': math.exp,
    'log': math.log,
    'sqrt': math.sqrt,
    'sin': math.sin,
    'cos': math.cos,
    'arctan': math.atan,
    'Ei': _ei,
}


def evaluate(e, point, params=None):
    """
        Evaluates an expression in IEEE double precision.

        *Parameters:*
            - *e (Expression)*: The expression.
            - *point (dict)*: VarId -> float, binding every free variable.
            - *params (dict)*: Param name -> float, binding every param.

        *Returns:*
            - *float*: The value.

        *Raises:*
            - *EvaluationError*: On an unbound variable or param, or a domain error
              (log of a non-positive number, Ei at 0, division by zero, overflow).
    """
    params = params or {}

    def walk(node):
        if isinstance(node, Const):
            return float(node.value)
        if isinstance(node, Var):
            if node.var not in point:
                raise EvaluationError("Unbound variable '%s'." % node.var)
            return float(point[node.var])
        if isinstance(node, Param):
            if params.get(node.name) is None:
                raise EvaluationError("Unbound parameter '%s'." % node.name)
            return float(params[node.name])
        if isinstance(node, Sum):
            return math.fsum(walk(term) for term in node.terms)
        if isinstance(node, Product):
            result = 1.0
            for factor in node.factors:
                result *= walk(factor)
            return result
        if isinstance(node, Neg):
            return -walk(node.arg)
        if isinstance(node, Power):
            base = walk(node.base)
            exponent = walk(node.exponent)
            if base < 0 and not float(exponent).is_integer():
                raise EvaluationError('Non-integer power of a negative number.')
            if base == 0 and exponent < 0:
                raise EvaluationError('Division by zero.')
            return math.pow(base, exponent)
        if isinstance(node, Apply):
            argument = walk(node.arg)
            if node.name == 'log' and argument <= 0:
                raise EvaluationError('Logarithm of a non-positive number.')
            return _FUNCTIONS[node.name](argument)
        if isinstance(node, Integral):
            lower, upper = walk(node.lower), walk(node.upper)
            value, _ = integrate.quad(lambda s: evaluate(node.integrand, {**point, node.dummy: s}, params),
                                      lower, upper)
            return value
        raise EvaluationError('Cannot evaluate %r.' % (node,))
    try:
        value = walk(as_expression(e))
    except (ValueError, ZeroDivisionError, OverflowError) as error:
        raise EvaluationError(str(error))
    if math.isnan(value) or math.isinf(value):
        raise EvaluationError('Evaluation produced %s.' % value)
    return value


########################################################################################################################
# Zero testing
########################################################################################################################

def sampling_box(ctx):
    """
        Returns the sampling intervals for each variable kind and for unbound params.
    """
    box = {
        STATE: tuple(ctx.box.get('state', app.config['STATE_BOX'])),
        WIENER: tuple(ctx.box.get('wiener', app.config['WIENER_BOX'])),
        TIME: tuple(ctx.box.get('time', app.config['TIME_BOX'])),
        'param': tuple(ctx.box.get('param', app.config['PARAM_BOX'])),
    }
    return box


def sample_points(ctx, variables, symbols, count, seed):
    """
        Quasi-random points (scrambled Sobol) in the sampling box.

        *Returns:*
            - *list*: (point, params) pairs, point mapping VarId -> float and params mapping
              every param name -> float.
    """
    box = sampling_box(ctx)
    dimension = len(variables) + len(symbols)
    if dimension == 0:
        return [({}, ctx.numeric_params())]
    sampler = qmc.Sobol(d=dimension, scramble=True, seed=seed)
    unit = sampler.random(count)
    lows = np.array([box[v.kind][0] for v in variables] + [box['param'][0]] * len(symbols))
    highs = np.array([box[v.kind][1] for v in variables] + [box['param'][1]] * len(symbols))
    scaled = qmc.scale(unit, lows, highs)
    points = []
    for row in scaled:
        point = {v: float(row[i]) for i, v in enumerate(variables)}
        params = dict(ctx.numeric_params())
        params.update({name: float(row[len(variables) + j]) for j, name in enumerate(symbols)})
        points.append((point, params))
    return points


def _magnitude(e, point, params):
    terms = e.terms if isinstance(e, Sum) else (e,)
    largest = 0.0
    for term in terms:
        try:
            largest = max(largest, abs(evaluate(term, point, params)))
        except EvaluationError:
            pass
    return largest


def is_identically_zero(e, ctx, points=None, abs_tol=None, seed=None):
    """
        Decides whether an expression vanishes identically.

        A structural simplification to the literal 0 gives a 'structural' Zero. Otherwise the
        expression is evaluated at quasi-random points of the sampling box; a value above
        abs_tol * (1 + local magnitude) gives NonZero with the point as witness, all values
        below it give a 'sampled' Zero, and failing evaluations at more than half of the points
        give Inconclusive.

        *Parameters:*
            - *e (Expression)*: The expression.
            - *ctx (Context)*: Dimensions, params and box overrides.
            - *points (int)*: Number of sample points (default ZERO_TEST_POINTS).
            - *abs_tol (float)*: Tolerance (default ZERO_TEST_ABS_TOL).
            - *seed (int)*: Sampler seed (default ZERO_TEST_SEED).

        *Returns:*
            - *ZeroVerdict*: The verdict.
    """
    points = points or app.config['ZERO_TEST_POINTS']
    abs_tol = app.config['ZERO_TEST_ABS_TOL'] if abs_tol is None else abs_tol
    seed = app.config['ZERO_TEST_SEED'] if seed is None else seed

    e = as_expression(e)
    simplified = simplify(bind_params(e, ctx.numeric_params()))
    if is_const(simplified, 0):
        return ZeroVerdict({'status': ZeroVerdict.ZERO, 'mode': ZeroVerdict.STRUCTURAL})

    variables = sorted(v for v in free_variables(simplified) | free_variables(e) if v.kind != DUMMY)
    symbols = sorted(name for name in free_params(e) if ctx.params.get(name) is None)
    failures = 0
    samples = sample_points(ctx, variables, symbols, points, seed)
    for point, params in samples:
        try:
            value = evaluate(simplified, point, params)
        except EvaluationError:
            failures += 1
            continue
        scale = max(_magnitude(e, point, params), abs(value))
        if abs(value) > abs_tol * (1.0 + scale):
            witness = {str(v): x for v, x in point.items()}
            witness.update({name: params[name] for name in symbols})
            return ZeroVerdict({'status': ZeroVerdict.NONZERO, 'mode': ZeroVerdict.SAMPLED,
                                'witness': witness, 'value': value})
    if failures * 2 > len(samples):
        return ZeroVerdict({'status': ZeroVerdict.INCONCLUSIVE, 'mode': ZeroVerdict.SAMPLED,
                            'reason': '%d of %d evaluations failed' % (failures, len(samples))})
    return ZeroVerdict({'status': ZeroVerdict.ZERO, 'mode': ZeroVerdict.SAMPLED})


def dummy_variable(index=0):
    return VarId(DUMMY, index)
