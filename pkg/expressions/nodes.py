"""
    Immutable expression trees over the variable universe {x1..xn, t, w1..wm}.

    Nodes are frozen dataclasses, so structurally equal trees compare and hash equal.
    The module-level constructors (add, mul, neg, power, apply) perform the light
    normalization every tree goes through: nested sums and products are flattened,
    constants are folded and additive/multiplicative identities are dropped.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
import numbers


class ExpressionError(Exception):
    pass


class ParseError(ExpressionError):
    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = '%s (at position %d)' % (message, position)
        super().__init__(message)


class UnknownIdentifierError(ParseError):
    pass


class EvaluationError(ExpressionError):
    pass


STATE = 'state'
TIME = 'time'
WIENER = 'wiener'

BUILTINS = ('exp', 'log', 'sqrt', 'sin', 'cos', 'arctan', 'Ei')


@dataclass(frozen=True, order=True)
class VarId:
    kind: str
    index: int = 0

    def __str__(self):
        if self.kind == STATE:
            return 'x%d' % self.index
        if self.kind == WIENER:
            return 'w%d' % self.index
        return 't'


def state(i):
    return VarId(STATE, i)


def wiener(k):
    return VarId(WIENER, k)


T = VarId(TIME, 0)


@dataclass
class Context:
    """
        Dimensions and parameter bindings an expression lives in.

        *Parameters:*
            - *n (int)*: Number of state variables.
            - *m (int)*: Number of Wiener processes.
            - *params (dict)*: Parameter name -> numeric value, or None for a symbolic parameter.
            - *aliases (dict)*: Extra identifier -> VarId bindings (e.g. 'y' for the scalar state).
            - *box (dict)*: Optional sampling box overrides with keys 'state', 'wiener', 'time'.
    """
    n: int = 1
    m: int = 1
    params: dict = field(default_factory=dict)
    aliases: dict = field(default_factory=dict)
    box: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ExpressionError('A context needs n >= 1 and m >= 1.')

    def variables(self):
        return [state(i) for i in range(1, self.n + 1)] + [T] + \
               [wiener(k) for k in range(1, self.m + 1)]

    def states(self):
        return [state(i) for i in range(1, self.n + 1)]

    def wieners(self):
        return [wiener(k) for k in range(1, self.m + 1)]

    def numeric_params(self):
        return {name: value for name, value in self.params.items() if value is not None}

    def resolve(self, name):
        """
            Maps an identifier to a VarId, or returns None when it is not a variable name.
        """
        if name in self.aliases:
            return self.aliases[name]
        if name == 't':
            return T
        if name == 'x' and self.n == 1:
            return state(1)
        if name == 'w' and self.m == 1:
            return wiener(1)
        if len(name) > 1 and name[0] in 'xw' and name[1:].isdigit():
            index = int(name[1:])
            bound = self.n if name[0] == 'x' else self.m
            if not 1 <= index <= bound:
                raise UnknownIdentifierError("Variable '%s' is outside the declared dimensions." % name)
            return state(index) if name[0] == 'x' else wiener(index)
        return None


class Expression:
    """
        Base class of every node. Arithmetic operators build normalized trees.
    """

    def __add__(self, other):
        return add(self, as_expression(other))

    def __radd__(self, other):
        return add(as_expression(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expression(other)))

    def __rsub__(self, other):
        return add(as_expression(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expression(other))

    def __rmul__(self, other):
        return mul(as_expression(other), self)

    def __truediv__(self, other):
        return mul(self, power(as_expression(other), Const(-1)))

    def __rtruediv__(self, other):
        return mul(as_expression(other), power(self, Const(-1)))

    def __pow__(self, other):
        return power(self, as_expression(other))

    def __neg__(self):
        return neg(self)

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True, eq=False)
class Const(Expression):
    """
        A number: an exact Fraction or a float. Constants of different types never compare
        equal, so cached results keep the exactness of their input.
    """
    value: object

    def __post_init__(self):
        value = self.value
        if isinstance(value, bool) or not isinstance(value, numbers.Real):
            raise ExpressionError('Cannot make a constant of %r.' % (value,))
        if isinstance(value, numbers.Integral):
            value = Fraction(int(value))
        elif not isinstance(value, Fraction):
            value = float(value)
        object.__setattr__(self, 'value', value)

    def __eq__(self, other):
        if not isinstance(other, Const):
            return NotImplemented
        return type(self.value) is type(other.value) and self.value == other.value

    def __hash__(self):
        return hash((Const, type(self.value), self.value))


@dataclass(frozen=True, eq=True)
class Var(Expression):
    var: VarId


@dataclass(frozen=True, eq=True)
class Param(Expression):
    name: str


@dataclass(frozen=True, eq=True)
class Sum(Expression):
    terms: tuple


@dataclass(frozen=True, eq=True)
class Product(Expression):
    factors: tuple


@dataclass(frozen=True, eq=True)
class Power(Expression):
    base: Expression
    exponent: Expression


@dataclass(frozen=True, eq=True)
class Neg(Expression):
    arg: Expression


@dataclass(frozen=True, eq=True)
class Apply(Expression):
    name: str
    arg: Expression


@dataclass(frozen=True, eq=True)
class Integral(Expression):
    """
        Quadrature-defined function: the integral of `integrand` over the dummy variable
        from `lower` to `upper`. The dummy is bound inside the integrand.
    """
    integrand: Expression
    dummy: VarId
    lower: Expression
    upper: Expression


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))
MINUS_ONE = Const(Fraction(-1))


def as_expression(value):
    if isinstance(value, Expression):
        return value
    if isinstance(value, VarId):
        return Var(value)
    if isinstance(value, bool):
        raise ExpressionError('Booleans are not expressions.')
    if isinstance(value, numbers.Integral):
        return Const(Fraction(int(value)))
    if isinstance(value, Fraction):
        return Const(value)
    if isinstance(value, numbers.Real):
        return Const(float(value))
    raise ExpressionError('Cannot convert %r to an expression.' % (value,))


def is_const(e, value=None):
    if not isinstance(e, Const):
        return False
    return value is None or e.value == value


# ------------ Constructors ------------ #


def add(*terms):
    flat = []
    constant = Fraction(0)
    for term in terms:
        term = as_expression(term)
        parts = term.terms if isinstance(term, Sum) else (term,)
        for part in parts:
            if isinstance(part, Const):
                constant = constant + part.value
            else:
                flat.append(part)
    if constant != 0:
        flat.append(Const(constant))
    if not flat:
        return Const(constant)
    if len(flat) == 1:
        return flat[0]
    return Sum(tuple(flat))


def mul(*factors):
    flat = []
    constant = Fraction(1)
    for factor in factors:
        factor = as_expression(factor)
        parts = factor.factors if isinstance(factor, Product) else (factor,)
        for part in parts:
            if isinstance(part, Const):
                constant = constant * part.value
            else:
                flat.append(part)
    if constant == 0:
        return Const(constant * 0)
    if constant != 1:
        flat.insert(0, Const(constant))
    if not flat:
        return Const(constant)
    if len(flat) == 1:
        return flat[0]
    return Product(tuple(flat))


def neg(e):
    e = as_expression(e)
    if isinstance(e, Const):
        return Const(-e.value)
    if isinstance(e, Neg):
        return e.arg
    return Neg(e)


def power(base, exponent):
    base, exponent = as_expression(base), as_expression(exponent)
    if isinstance(exponent, Const):
        if exponent.value == 0:
            return ONE
        if exponent.value == 1:
            return base
        if isinstance(base, Const):
            try:
                folded = _fold_power(base.value, exponent.value)
            except (OverflowError, ZeroDivisionError):
                folded = None
            if folded is not None:
                return Const(folded)
    if is_const(base, 1):
        return ONE
    return Power(base, exponent)


def _integer_root(value, degree):
    guess = round(value ** (1.0 / degree))
    for candidate in (guess - 1, guess, guess + 1):
        if candidate >= 0 and candidate ** degree == value:
            return candidate
    return None


def _fold_power(base, exponent):
    if isinstance(exponent, Fraction) and exponent.denominator == 1:
        if base == 0 and exponent < 0:
            return None
        return base ** int(exponent)
    if base <= 0:
        return None
    if isinstance(base, Fraction) and isinstance(exponent, Fraction):
        # rational powers stay symbolic unless the root is exact
        numerator = _integer_root(base.numerator, exponent.denominator)
        denominator = _integer_root(base.denominator, exponent.denominator)
        if numerator is None or denominator is None:
            return None
        return Fraction(numerator, denominator) ** exponent.numerator
    return float(base) ** float(exponent)


def apply(name, arg):
    if name not in BUILTINS:
        raise ExpressionError("Unknown function '%s'." % name)
    return Apply(name, as_expression(arg))


def exp(e):
    return apply('exp', as_expression(e))


def log(e):
    return apply('log', as_expression(e))


# ------------ Traversal ------------ #


def children(e):
    if isinstance(e, Sum):
        return e.terms
    if isinstance(e, Product):
        return e.factors
    if isinstance(e, Power):
        return e.base, e.exponent
    if isinstance(e, (Neg, Apply)):
        return (e.arg,)
    if isinstance(e, Integral):
        return e.integrand, e.lower, e.upper
    return ()


@lru_cache(maxsize=None)
def free_variables(e):
    """
        Returns the frozenset of VarIds the expression depends on.
    """
    if isinstance(e, VarId):
        return frozenset((e,))
    if isinstance(e, Var):
        return frozenset((e.var,))
    if isinstance(e, Integral):
        inner = free_variables(e.integrand) - {e.dummy}
        return inner | free_variables(e.lower) | free_variables(e.upper)
    result = frozenset()
    for child in children(e):
        result = result | free_variables(child)
    return result


@lru_cache(maxsize=None)
def free_params(e):
    if isinstance(e, Param):
        return frozenset((e.name,))
    result = frozenset()
    for child in children(e):
        result = result | free_params(child)
    return result


def depends_on(e, kind):
    return any(v.kind == kind for v in free_variables(e))


# ------------ Printing ------------ #


_SUM, _PRODUCT, _UNARY, _POWER, _ATOM = range(5)


def _format_number(value):
    if isinstance(value, numbers.Integral):
        return str(value)
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return '%d/%d' % (value.numerator, value.denominator)
    return repr(float(value))


def _level(e):
    if isinstance(e, Sum):
        return _SUM
    if isinstance(e, Product):
        return _PRODUCT
    if isinstance(e, Neg):
        return _UNARY
    if isinstance(e, Power):
        return _POWER
    if isinstance(e, Const):
        if e.value < 0:
            return _UNARY
        if isinstance(e.value, Fraction) and e.value.denominator != 1:
            return _PRODUCT
        return _ATOM
    return _ATOM


def _wrap(e, minimum):
    text = to_text(e)
    if _level(e) < minimum:
        return '(' + text + ')'
    return text


@lru_cache(maxsize=None)
def to_text(e):
    """
        Prints an expression in the infix grammar accepted by the parser.
    """
    if not isinstance(e, Expression):
        return to_text(as_expression(e))
    if isinstance(e, Const):
        return _format_number(e.value)
    if isinstance(e, Var):
        return str(e.var)
    if isinstance(e, Param):
        return e.name
    if isinstance(e, Apply):
        return '%s(%s)' % (e.name, to_text(e.arg))
    if isinstance(e, Integral):
        return 'integral(%s, %s, %s, %s)' % (to_text(e.integrand), e.dummy, to_text(e.lower),
                                             to_text(e.upper))
    if isinstance(e, Neg):
        return '-' + _wrap(e.arg, _POWER)
    if isinstance(e, Power):
        return _wrap(e.base, _ATOM) + '^' + _wrap(e.exponent, _ATOM)
    if isinstance(e, Sum):
        text = _wrap(e.terms[0], _UNARY)
        for term in e.terms[1:]:
            if isinstance(term, Neg):
                text += ' - ' + _wrap(term.arg, _PRODUCT)
            elif isinstance(term, Const) and term.value < 0:
                text += ' - ' + _wrap(Const(-term.value), _PRODUCT)
            else:
                text += ' + ' + _wrap(term, _PRODUCT)
        return text
    if isinstance(e, Product):
        text = _wrap(e.factors[0], _UNARY if not isinstance(e.factors[0], Product) else _ATOM)
        for factor in e.factors[1:]:
            if isinstance(factor, Power) and is_const(factor.exponent, -1) \
                    and not isinstance(factor.base, Const):
                text += ' / ' + _wrap(factor.base, _POWER)
            else:
                text += ' * ' + _wrap(factor, _POWER)
        return text
    raise ExpressionError('Unknown node %r.' % (e,))
