"""
    Construction of the symbolic pieces of a change of variables: Jacobians and their
    inverses, the transformed drift and diffusion, and substitutions between the old and
    the new variables.
"""
from expressions.actions import differentiate, is_identically_zero, simplify, substitute_many
from expressions.nodes import ONE, ZERO, T, Context, add, as_expression, is_const, mul, neg, power
from models import ChangeOfVariables, TransformationError
from systems.actions import HALF, laplacian, misawa_L0, misawa_Lk


def jacobian(components, variables):
    return [[differentiate(c, v) for v in variables] for c in components]


def determinant(M):
    """
        Cofactor expansion along the first row.
    """
    size = len(M)
    if size == 1:
        return M[0][0]
    if size == 2:
        return simplify(add(mul(M[0][0], M[1][1]), neg(mul(M[0][1], M[1][0]))))
    terms = []
    for j in range(size):
        if is_const(M[0][j], 0):
            continue
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        sign = ONE if j % 2 == 0 else as_expression(-1)
        terms.append(mul(sign, M[0][j], determinant(minor)))
    return simplify(add(*terms))


def adjugate(M):
    size = len(M)
    if size == 1:
        return [[ONE]]
    result = [[ZERO] * size for _ in range(size)]
    for i in range(size):
        for j in range(size):
            minor = [row[:j] + row[j + 1:] for k, row in enumerate(M) if k != i]
            cofactor = determinant(minor)
            # adj(M)[j][i] is the (i, j) cofactor
            result[j][i] = cofactor if (i + j) % 2 == 0 else simplify(neg(cofactor))
    return result


def inverse_matrix(M):
    """
        Lambda = adj(M) / det(M), entrywise simplified.

        *Returns:*
            - *tuple*: (Lambda, det).
    """
    det = determinant(M)
    inverse_det = power(det, as_expression(-1))
    return [[simplify(mul(entry, inverse_det)) for entry in row] for row in adjugate(M)], det


def matrix_product(A, B):
    return [[simplify(add(*[mul(A[i][l], B[l][j]) for l in range(len(B))])) for j in range(len(B[0]))]
            for i in range(len(A))]


def identity_residuals(M, Lambda):
    """
        The entries of M Lambda - I.
    """
    product = matrix_product(M, Lambda)
    return [simplify(add(entry, neg(ONE))) if i == j else entry
            for i, row in enumerate(product) for j, entry in enumerate(row)]


def working_context(sys, cov):
    """
        The context of the new variables: dimensions of the system, the params of the system
        completed by those of the change of variables, and its aliases and sampling box.
    """
    if cov.new_ctx is None:
        return sys.ctx
    return Context(n=sys.ctx.n, m=sys.ctx.m, params={**sys.ctx.params, **cov.new_ctx.params},
                   aliases=dict(cov.new_ctx.aliases), box=dict(cov.new_ctx.box))


def wiener_map(cov, ctx):
    """
        w = Omega(y, t; z) as expressions in the new variables: omega, R z, or z itself.
    """
    wieners = ctx.wieners()
    if cov.omega is not None:
        return list(cov.omega)
    if cov.R is not None:
        return [simplify(add(*[mul(cov.R[k][l], wieners[l]) for l in range(ctx.m)])) for k in range(ctx.m)]
    return [as_expression(w) for w in wieners]


def old_to_new_substitution(cov, ctx):
    """
        Substitution of the old state (and Wiener) variables by their expressions in the new ones.
    """
    if cov.direction == ChangeOfVariables.NEW_TO_OLD:
        mapping = {x: e for x, e in zip(ctx.states(), cov.forward)}
        mapping.update({w: e for w, e in zip(ctx.wieners(), wiener_map(cov, ctx))})
        return mapping
    if cov.inverse is None:
        return None
    return {x: e for x, e in zip(ctx.states(), cov.inverse)}


def pull_back(e, mapping):
    return simplify(substitute_many(e, mapping))


def jacobian_pair(sys, cov):
    """
        M and Lambda = M^-1 of a change of variables, cached on the change of variables per
        diffusion matrix and context.

        For old_to_new maps M = d Phi / dx in the old variables. For new_to_old maps
        M = Phi_y - sigma(Phi) Omega_y in the new variables.

        *Raises:*
            - *TransformationError*: If det M vanishes identically or M Lambda is not the identity.
    """
    key = ('jacobian', sys.sigma, repr(sys.ctx))
    if key in cov.cache:
        return cov.cache[key]
    if cov.direction == ChangeOfVariables.OLD_TO_NEW:
        ctx = sys.ctx
        M = jacobian(cov.forward, ctx.states())
    else:
        ctx = working_context(sys, cov)
        mapping = old_to_new_substitution(cov, ctx)
        sigma = [[pull_back(e, mapping) for e in row] for row in sys.sigma]
        Phi_y = jacobian(cov.forward, ctx.states())
        Omega_y = jacobian(wiener_map(cov, ctx), ctx.states())
        product = matrix_product(sigma, Omega_y)
        M = [[simplify(add(a, neg(b))) for a, b in zip(r1, r2)] for r1, r2 in zip(Phi_y, product)]
    Lambda, det = inverse_matrix(M)
    if is_identically_zero(det, ctx).is_zero:
        raise TransformationError('The Jacobian of the change of variables is singular.')
    if not all(is_identically_zero(e, ctx).is_zero for e in identity_residuals(M, Lambda)):
        raise TransformationError('M Lambda does not reduce to the identity.')
    cov.cache[key] = (M, Lambda, det)
    return cov.cache[key]


def ito_coefficients(sys, cov):
    """
        F^i = L0(Phi^i), S^i_k = L_k(Phi^i) for new coordinates y = Phi(x, t; w), written in the
        old variables.
    """
    F = [misawa_L0(phi, sys) for phi in cov.forward]
    S = [[misawa_Lk(phi, sys, k) for k in range(1, sys.ctx.m + 1)] for phi in cov.forward]
    return F, S


def w_coefficients(sys, cov):
    """
        Coefficients of dy = F dt + S dz for x = Phi(y, t; z), w = Omega(y, t; z):

            M S = sigma Omega_z - Phi_z
            M F = f - Phi_t + sigma Omega_t - 1/2 Q_S(Phi) + 1/2 sigma Q_S(Omega)

        with M = Phi_y - sigma Omega_y and Q_S the Ito Laplacian of the new variables.
    """
    ctx = working_context(sys, cov)
    states = ctx.states()
    wieners = ctx.wieners()
    mapping = old_to_new_substitution(cov, ctx)
    f = [pull_back(e, mapping) for e in sys.f]
    sigma = [[pull_back(e, mapping) for e in row] for row in sys.sigma]
    Omega = wiener_map(cov, ctx)
    _, Lambda, _ = jacobian_pair(sys, cov)

    Phi_z = jacobian(cov.forward, wieners)
    Omega_z = jacobian(Omega, wieners)
    noise = matrix_product(sigma, Omega_z)
    right = [[simplify(add(a, neg(b))) for a, b in zip(r1, r2)] for r1, r2 in zip(noise, Phi_z)]
    S = matrix_product(Lambda, right)

    Q_Phi = [laplacian(phi, S, states, wieners) for phi in cov.forward]
    Q_Omega = [laplacian(omega, S, states, wieners) for omega in Omega]
    drift = []
    for i in range(ctx.n):
        terms = [f[i], neg(differentiate(cov.forward[i], T)), neg(mul(HALF, Q_Phi[i]))]
        for k in range(ctx.m):
            terms.append(mul(sigma[i][k], add(differentiate(Omega[k], T), mul(HALF, Q_Omega[k]))))
        drift.append([simplify(add(*terms))])
    F = [row[0] for row in matrix_product(Lambda, drift)]
    return F, S
