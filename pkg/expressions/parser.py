"""
    Tokenizer and precedence-climbing parser for the infix expression grammar:
    numbers, identifiers, + - * / ^ (also **), unary minus, parentheses and
    builtin function application f(e).
"""
import re
from fractions import Fraction

from expressions.nodes import (BUILTINS, Param, ParseError, UnknownIdentifierError, Var, add, apply,
                               as_expression, mul, neg, power, MINUS_ONE)


# Binding powers, in groups of increasing precedence.
INFIX = {
    '+': 10,
    '-': 10,
    '*': 20,
    '/': 20,
    '^': 30,
}
PREFIX = 25
RIGHT_ASSOCIATIVE = ('^',)

_TOKEN = re.compile(r'''
    (?P<space>\s+)
  | (?P<number>(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^(),])
''', re.VERBOSE)


class Token:
    def __init__(self, kind, text, position):
        self.kind = kind
        self.text = text
        self.position = position

    def __repr__(self):
        return "<Token %s %r at %d>" % (self.kind, self.text, self.position)


def tokenize(source):
    """
        Splits the source into tokens, each remembering its position.

        *Parameters:*
            - *source (str)*: The expression text.

        *Returns:*
            - *list*: The Token objects, terminated by an 'end' token.
    """
    tokens = []
    position = 0
    while position < len(source):
        match = _TOKEN.match(source, position)
        if match is None:
            raise ParseError("Unexpected character '%s'" % source[position], position)
        kind = match.lastgroup
        text = match.group(kind)
        if kind == 'op' and text == '**':
            text = '^'
        if kind != 'space':
            tokens.append(Token(kind, text, position))
        position = match.end()
    tokens.append(Token('end', '', len(source)))
    return tokens


def _number(text):
    if re.fullmatch(r'\d+', text):
        return as_expression(Fraction(int(text)))
    return as_expression(float(text))


class Parser:
    def __init__(self, source, ctx):
        self.tokens = tokenize(source)
        self.index = 0
        self.ctx = ctx

    def peek(self):
        return self.tokens[self.index]

    def advance(self):
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect(self, text):
        token = self.advance()
        if token.text != text:
            raise ParseError("Expected '%s' but found '%s'" % (text, token.text or 'end of input'),
                             token.position)
        return token

    def parse(self):
        expression = self.expression(0)
        token = self.peek()
        if token.kind != 'end':
            raise ParseError("Unexpected '%s'" % token.text, token.position)
        return expression

    def expression(self, min_power):
        left = self.prefix()
        while True:
            token = self.peek()
            if token.kind != 'op' or token.text not in INFIX:
                break
            binding = INFIX[token.text]
            if binding < min_power:
                break
            self.advance()
            next_power = binding if token.text in RIGHT_ASSOCIATIVE else binding + 1
            right = self.expression(next_power)
            left = combine(token.text, left, right)
        return left

    def prefix(self):
        token = self.advance()
        if token.kind == 'number':
            return _number(token.text)
        if token.kind == 'op' and token.text == '-':
            return neg(self.expression(PREFIX))
        if token.kind == 'op' and token.text == '+':
            return self.expression(PREFIX)
        if token.kind == 'op' and token.text == '(':
            inner = self.expression(0)
            self.expect(')')
            return inner
        if token.kind == 'name':
            return self.identifier(token)
        if token.kind == 'end':
            raise ParseError('Unexpected end of input', token.position)
        raise ParseError("Unexpected '%s'" % token.text, token.position)

    def identifier(self, token):
        name = token.text
        if self.peek().text == '(':
            if name not in BUILTINS:
                raise UnknownIdentifierError("Unknown function '%s'" % name, token.position)
            self.advance()
            argument = self.expression(0)
            self.expect(')')
            return apply(name, argument)
        if name in BUILTINS:
            raise ParseError("Function '%s' needs an argument" % name, token.position)
        try:
            variable = self.ctx.resolve(name)
        except UnknownIdentifierError as error:
            raise UnknownIdentifierError(str(error), token.position)
        if variable is not None:
            return Var(variable)
        if name in self.ctx.params:
            return Param(name)
        raise UnknownIdentifierError("Unknown identifier '%s'" % name, token.position)


def combine(operator, left, right):
    if operator == '+':
        return add(left, right)
    if operator == '-':
        return add(left, neg(right))
    if operator == '*':
        return mul(left, right)
    if operator == '/':
        return mul(left, power(right, MINUS_ONE))
    return power(left, right)


def parse(text, ctx):
    """
        Parses an infix expression over the variables and params of a context.

        *Parameters:*
            - *text (str)*: The expression text.
            - *ctx (Context)*: Declares n, m, the params and the identifier aliases.

        *Returns:*
            - *Expression*: The parsed tree.

        *Raises:*
            - *ParseError*: On a syntax error (the position is part of the message).
            - *UnknownIdentifierError*: On an identifier that is neither a variable nor a declared param.
    """
    return Parser(str(text), ctx).parse()
