"""
    Hypothesis strategies of random expression trees, shared by the package tests.

    Every builtin appears with an argument kept inside its domain (log, sqrt and Ei act on
    2 + sin(u) or 2 + arctan(u)), so the trees evaluate everywhere in the sampling box.
"""
from fractions import Fraction

from hypothesis import strategies as st

from expressions.nodes import T, Var, add, apply, as_expression, mul, neg, power, state, wiener

CONSTANTS = [Fraction(1, 2), Fraction(-3, 4), Fraction(5, 3), 0.25, -1.5, 2.0]
EXPONENTS = [2, 3, -1, -2, Fraction(1, 2), Fraction(-3, 2), 0.5]


def _positive(e):
    return add(2, apply('sin', e))


def _extend(children):
    squashed = children.map(lambda e: apply('arctan', e))
    return st.one_of(
        st.tuples(children, children).map(lambda pair: add(*pair)),
        st.tuples(children, children).map(lambda pair: mul(*pair)),
        children.map(neg),
        st.tuples(st.sampled_from(['sin', 'cos', 'arctan']), children)
        .map(lambda pair: apply(pair[0], mul(Fraction(1, 4), pair[1]))),
        squashed.map(lambda e: apply('exp', e)),
        children.map(lambda e: apply('log', _positive(e))),
        children.map(lambda e: apply('sqrt', _positive(e))),
        squashed.map(lambda e: apply('Ei', add(2, e))),
        st.tuples(children, st.sampled_from(EXPONENTS)).map(lambda pair: power(_positive(pair[0]), pair[1])),
        st.tuples(children, squashed).map(lambda pair: power(_positive(pair[0]), pair[1])),
    )


def expression_trees(n=1, m=1, max_leaves=8):
    """
        Random trees over x1..xn, t and w1..wm with integer and non-integer constants.
    """
    variables = [Var(state(i)) for i in range(1, n + 1)] + [Var(T)] + [Var(wiener(k)) for k in range(1, m + 1)]
    leaves = st.one_of(st.integers(min_value=-3, max_value=3).map(as_expression),
                       st.sampled_from(CONSTANTS).map(as_expression),
                       st.sampled_from(variables))
    return st.recursive(leaves, _extend, max_leaves=max_leaves)


def sample_point(n=1, m=1):
    """
        A random point of the default sampling box.
    """
    coordinates = st.tuples(st.lists(st.floats(min_value=0.4, max_value=2.0), min_size=n, max_size=n),
                            st.floats(min_value=0.1, max_value=2.0),
                            st.lists(st.floats(min_value=-1.5, max_value=1.5), min_size=m, max_size=m))

    def build(values):
        xs, t, ws = values
        point = {state(i + 1): x for i, x in enumerate(xs)}
        point[T] = t
        point.update({wiener(k + 1): w for k, w in enumerate(ws)})
        return point

    return coordinates.map(build)
