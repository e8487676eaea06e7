"""
    Ito and Stratonovich systems: the Ito Laplacian, the drift correction between the two
    calculi, and the Misawa operators.
"""
from fractions import Fraction

import numpy as np

from expressions.actions import differentiate, evaluate, sample_points, simplify
from expressions.nodes import STATE, T, WIENER, Const, EvaluationError, add, free_variables, mul
from models import DimensionError, DriftCorrection, ItoSystem, StratSystem

HALF = Const(Fraction(1, 2))


def check_scope(u, ctx):
    """
        Raises DimensionError when u mentions a state or Wiener variable outside ctx.
    """
    for v in free_variables(u):
        if (v.kind == STATE and v.index > ctx.n) or (v.kind == WIENER and v.index > ctx.m):
            raise DimensionError("Variable '%s' is outside the system dimensions (n=%d, m=%d)." %
                                 (v, ctx.n, ctx.m))


def diffusion_product(sigma):
    """
        Returns (sigma sigma^T)^{jk} = sum_l sigma^j_l sigma^k_l as a nested tuple.
    """
    n = len(sigma)
    return tuple(tuple(add(*[mul(sigma[j][l], sigma[k][l]) for l in range(len(sigma[j]))])
                       for k in range(n)) for j in range(n))


def laplacian(u, sigma, states, wieners):
    """
        The Ito Laplacian for a diffusion matrix over explicit state and driving variables.
        Used directly for the new coordinates of a change of variables, where the diffusion
        of the new state is S and the driving variables are the new ones.

        *Parameters:*
            - *u (Expression)*: The function.
            - *sigma (tuple)*: Diffusion matrix, rows indexed by `states`, columns by `wieners`.
            - *states (list)*: State VarIds.
            - *wieners (list)*: Driving VarIds.

        *Returns:*
            - *Expression*: sum_k u_{w_k w_k} + (sigma sigma^T)^{jk} u_{x_j x_k} + 2 sigma^{jk} u_{x_j w_k}.
    """
    terms = []
    u_w = [differentiate(u, w) for w in wieners]
    for k, w in enumerate(wieners):
        terms.append(differentiate(u_w[k], w))
    u_x = [differentiate(u, x) for x in states]
    product = diffusion_product(sigma)
    for j, xj in enumerate(states):
        for k, xk in enumerate(states):
            terms.append(mul(product[j][k], differentiate(u_x[j], xk)))
        for k, w in enumerate(wieners):
            terms.append(mul(Const(2), sigma[j][k], differentiate(u_x[j], w)))
    return simplify(add(*terms))


def ito_laplacian(u, sys):
    """
        Applies the Ito Laplacian of a system to a function of (x, t, w).

        *Parameters:*
            - *u (Expression)*: The function, over the variables of sys.ctx.
            - *sys (ItoSystem)*: The system providing sigma.

        *Returns:*
            - *Expression*: The simplified Laplacian.

        *Raises:*
            - *DimensionError*: If u refers to variables outside the system dimensions.
    """
    check_scope(u, sys.ctx)
    return laplacian(u, sys.sigma, sys.ctx.states(), sys.ctx.wieners())


def drift_correction(sigma, ctx):
    """
        Computes rho^i = 1/2 (d_k sigma^{ij}) sigma^k_j.

        *Parameters:*
            - *sigma (tuple)*: The n x m diffusion matrix (Wiener independent).
            - *ctx (Context)*: The context providing the state variables.

        *Returns:*
            - *DriftCorrection*: The correction rho.
    """
    states = ctx.states()
    rho = []
    for i in range(ctx.n):
        terms = []
        for j in range(ctx.m):
            for k, xk in enumerate(states):
                terms.append(mul(differentiate(sigma[i][j], xk), sigma[k][j]))
        rho.append(simplify(mul(HALF, add(*terms))))
    return DriftCorrection(rho)


def ito_to_strat(sys):
    """
        The associated Stratonovich system: b = f - rho, same sigma.
    """
    rho = drift_correction(sys.sigma, sys.ctx).rho
    b = [simplify(add(f, mul(Const(-1), r))) for f, r in zip(sys.f, rho)]
    return StratSystem(sys.ctx, b, sys.sigma)


def strat_to_ito(sys):
    """
        The associated Ito system: f = b + rho, same sigma.
    """
    rho = drift_correction(sys.sigma, sys.ctx).rho
    f = [simplify(add(b, r)) for b, r in zip(sys.b, rho)]
    return ItoSystem(sys.ctx, f, sys.sigma)


def as_ito(sys):
    if isinstance(sys, StratSystem):
        return strat_to_ito(sys)
    return sys


def misawa_L0(u, sys):
    """
        L0 u = d_t u + f^j d_j u + 1/2 Delta u.

        *Parameters:*
            - *u (Expression)*: The function.
            - *sys (ItoSystem)*: The system.

        *Returns:*
            - *Expression*: The simplified result.
    """
    check_scope(u, sys.ctx)
    terms = [differentiate(u, T)]
    for f, x in zip(sys.f, sys.ctx.states()):
        terms.append(mul(f, differentiate(u, x)))
    terms.append(mul(HALF, ito_laplacian(u, sys)))
    return simplify(add(*terms))


def misawa_Lk(u, sys, k):
    """
        L_k u = d^_k u + sigma^j_k d_j u, for 1 <= k <= m.

        *Raises:*
            - *DimensionError*: If k is out of range.
    """
    if not 1 <= k <= sys.ctx.m:
        raise DimensionError('Wiener index %d is out of range 1..%d.' % (k, sys.ctx.m))
    check_scope(u, sys.ctx)
    terms = [differentiate(u, sys.ctx.wieners()[k - 1])]
    for j, x in enumerate(sys.ctx.states()):
        terms.append(mul(sys.sigma[j][k - 1], differentiate(u, x)))
    return simplify(add(*terms))


def diffusion_rank(sys, points=8, seed=None):
    """
        Informational rank of sigma at quasi-random points of the sampling box. No rank
        condition is imposed anywhere.

        *Returns:*
            - *list*: The numerical rank of sigma at each point where it could be evaluated.
    """
    seed = 0 if seed is None else seed
    variables = sys.ctx.states() + [T]
    ranks = []
    for point, params in sample_points(sys.ctx, variables, [], points, seed):
        try:
            matrix = np.array([[evaluate(entry, point, params) for entry in row] for row in sys.sigma])
        except EvaluationError:
            continue
        ranks.append(int(np.linalg.matrix_rank(matrix)))
    return ranks
