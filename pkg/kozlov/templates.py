"""
    Built-in adapted coordinates for the two W-symmetry families worked out by hand:
    simultaneous scalings of x and w, and simultaneous rotations in the plane.
"""
from expressions.nodes import Context, state, wiener
from expressions.parser import parse
from models import ChangeOfVariables


def scaling(n=1, m=1):
    """
        Adapted coordinates of X = x^i d_i + w^k d^_k (R = I):

            xi = log x1,  u_i = x_i / x1 (i >= 2),  zeta_k = w_k / x1

        with inverse x1 = e^xi, x_i = e^xi u_i, w_k = e^xi zeta_k, in which X = d_xi.
        Valid on x1 > 0.

        *Returns:*
            - *ChangeOfVariables*: new_to_old, with the coordinates in the old variables.
    """
    if n == 1 and m == 1:
        aliases = {'xi': state(1), 'zeta': wiener(1)}
        old = Context(n=1, m=1)
        new = Context(n=1, m=1, aliases=aliases)
        return ChangeOfVariables(ChangeOfVariables.NEW_TO_OLD, [parse('exp(xi)', new)],
                                 omega=[parse('exp(xi)*zeta', new)], new_ctx=new, name='scaling',
                                 coordinates=[parse('log(x)', old), parse('w/x', old)])
    aliases = {'xi': state(1)}
    aliases.update({'u%d' % i: state(i) for i in range(2, n + 1)})
    aliases.update({'zeta%d' % k: wiener(k) for k in range(1, m + 1)})
    old = Context(n=n, m=m)
    new = Context(n=n, m=m, aliases=aliases)
    forward = [parse('exp(xi)', new)] + [parse('exp(xi)*u%d' % i, new) for i in range(2, n + 1)]
    omega = [parse('exp(xi)*zeta%d' % k, new) for k in range(1, m + 1)]
    coordinates = [parse('log(x1)', old)] + [parse('x%d/x1' % i, old) for i in range(2, n + 1)] + \
                  [parse('w%d/x1' % k, old) for k in range(1, m + 1)]
    return ChangeOfVariables(ChangeOfVariables.NEW_TO_OLD, forward, omega=omega, new_ctx=new, name='scaling',
                             coordinates=coordinates)


def rotation():
    """
        Dual polar coordinates of X = -x2 d_1 + x1 d_2 - w2 d^_1 + w1 d^_2 in the plane,
        with the angle difference psi = theta - xi:

            x = r (cos(psi + xi), sin(psi + xi)),  w = z (cos xi, sin xi)

        in which X = d_xi. The states are (r, psi), the driving variables (z, xi).
    """
    aliases = {'r': state(1), 'psi': state(2), 'z': wiener(1), 'xi': wiener(2)}
    old = Context(n=2, m=2)
    new = Context(n=2, m=2, aliases=aliases)
    forward = [parse('r*cos(psi + xi)', new), parse('r*sin(psi + xi)', new)]
    omega = [parse('z*cos(xi)', new), parse('z*sin(xi)', new)]
    coordinates = [parse('sqrt(x1^2 + x2^2)', old), parse('arctan(x2/x1) - arctan(w2/w1)', old),
                   parse('sqrt(w1^2 + w2^2)', old), parse('arctan(w2/w1)', old)]
    return ChangeOfVariables(ChangeOfVariables.NEW_TO_OLD, forward, omega=omega, new_ctx=new, name='rotation',
                             coordinates=coordinates)
