"""
    Vectorized evaluation of expressions over numpy arrays, used by the simulators.
    Domain problems yield NaN/inf instead of raising, so that callers can flag paths.
"""
import numpy as np
from scipy import integrate, special

from expressions.nodes import (Apply, Const, EvaluationError, Integral, Neg, Param, Power, Product, Sum, Var,
                               as_expression)

_UFUNCS = {
    'exp': np.exp,
    'log': np.log,
    'sqrt': np.sqrt,
    'sin': np.sin,
    'cos': np.cos,
    'arctan': np.arctan,
    'Ei': special.expi,
}


def _build(node, params):
    if isinstance(node, Const):
        value = float(node.value)
        return lambda env: value
    if isinstance(node, Var):
        variable = node.var
        return lambda env: env[variable]
    if isinstance(node, Param):
        if params.get(node.name) is None:
            raise EvaluationError("Unbound parameter '%s'." % node.name)
        value = float(params[node.name])
        return lambda env: value
    if isinstance(node, Sum):
        parts = [_build(term, params) for term in node.terms]

        def total(env):
            result = parts[0](env)
            for part in parts[1:]:
                result = result + part(env)
            return result
        return total
    if isinstance(node, Product):
        parts = [_build(factor, params) for factor in node.factors]

        def product(env):
            result = parts[0](env)
            for part in parts[1:]:
                result = result * part(env)
            return result
        return product
    if isinstance(node, Neg):
        inner = _build(node.arg, params)
        return lambda env: -inner(env)
    if isinstance(node, Power):
        base = _build(node.base, params)
        exponent = _build(node.exponent, params)
        return lambda env: np.power(np.asarray(base(env), dtype=float), exponent(env))
    if isinstance(node, Apply):
        function = _UFUNCS[node.name]
        inner = _build(node.arg, params)
        return lambda env: function(inner(env))
    if isinstance(node, Integral):
        integrand = _build(node.integrand, params)
        lower = _build(node.lower, params)
        upper = _build(node.upper, params)

        def quadrature(env):
            lows = np.broadcast_to(np.asarray(lower(env), dtype=float), _shape(env))
            highs = np.broadcast_to(np.asarray(upper(env), dtype=float), _shape(env))
            result = np.empty(_shape(env))
            for index in np.ndindex(result.shape):
                point = {v: (np.asarray(x)[index] if np.ndim(x) else x) for v, x in env.items()}
                result[index] = integrate.quad(lambda s: float(integrand({**point, node.dummy: s})),
                                               lows[index], highs[index])[0]
            return result
        return quadrature
    raise EvaluationError('Cannot compile %r.' % (node,))


def _shape(env):
    shapes = [np.shape(x) for x in env.values()]
    return np.broadcast_shapes(*shapes) if shapes else ()


def compile_vectorized(e, params=None):
    """
        Compiles an expression into a function of an environment dict (VarId -> array or float).

        *Parameters:*
            - *e (Expression)*: The expression.
            - *params (dict)*: Numeric param bindings.

        *Returns:*
            - *callable*: env -> numpy array (broadcast over the environment arrays).
    """
    evaluator = _build(as_expression(e), params or {})

    def run(env):
        with np.errstate(all='ignore'):
            return np.broadcast_to(np.asarray(evaluator(env), dtype=float), _shape(env)).copy()
    return run
