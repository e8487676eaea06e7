"""
    Construction of the determining-equation residuals and of the operators comparing the
    Ito and Stratonovich families. Everything here is symbolic; the zero tests and the
    packaging into reports live in symmetries.actions.
"""
from expressions.actions import differentiate, simplify
from expressions.nodes import ZERO, T, add, mul, neg
from models import VectorField
from systems.actions import HALF, drift_correction, laplacian


def noise_components(X, ctx):
    """
        The d^_k components of X as expressions: h for general fields, R w for linear ones,
        zeros otherwise.
    """
    if X.noise == VectorField.LINEAR:
        wieners = ctx.wieners()
        return tuple(simplify(add(*[mul(X.R[k][l], wieners[l]) for l in range(ctx.m)])) for k in range(ctx.m))
    if X.noise == VectorField.GENERAL:
        return X.h
    return tuple(ZERO for _ in range(ctx.m))


def apply_field(X, u, ctx):
    """
        X(u) = phi^i d_i u + tau d_t u + h^k d^_k u.
    """
    terms = [mul(phi, differentiate(u, x)) for phi, x in zip(X.phi, ctx.states())]
    terms.append(mul(X.tau, differentiate(u, T)))
    for h, w in zip(noise_components(X, ctx), ctx.wieners()):
        terms.append(mul(h, differentiate(u, w)))
    return simplify(add(*terms))


def _transport(phi, drift, states):
    # [drift, phi]^i = drift^j d_j phi^i - phi^j d_j drift^i
    result = []
    for i in range(len(phi)):
        terms = []
        for j, x in enumerate(states):
            terms.append(mul(drift[j], differentiate(phi[i], x)))
            terms.append(neg(mul(phi[j], differentiate(drift[i], x))))
        result.append(add(*terms))
    return result


def diffusion_terms(phi, sigma, ctx):
    """
        d^_k phi^i + sigma^j_k d_j phi^i - phi^j d_j sigma^i_k as an n x m nested list.
    """
    states = ctx.states()
    wieners = ctx.wieners()
    result = []
    for i in range(ctx.n):
        row = []
        for k in range(ctx.m):
            terms = [differentiate(phi[i], wieners[k])]
            for j, x in enumerate(states):
                terms.append(mul(sigma[j][k], differentiate(phi[i], x)))
                terms.append(neg(mul(phi[j], differentiate(sigma[i][k], x))))
            row.append(add(*terms))
        result.append(row)
    return result


def standard_residuals(X, sys):
    """
        Residuals of the determining equations of simple standard symmetries of an Ito system:
        'drift' holds d_t phi + [f, phi] + 1/2 Delta phi, 'diffusion' the n x m diffusion terms.
    """
    ctx = sys.ctx
    states = ctx.states()
    transport = _transport(X.phi, sys.f, states)
    drift = []
    for i in range(ctx.n):
        drift.append(simplify(add(differentiate(X.phi[i], T), transport[i],
                                  mul(HALF, laplacian(X.phi[i], sys.sigma, states, ctx.wieners())))))
    diffusion = [[simplify(e) for e in row] for row in diffusion_terms(X.phi, sys.sigma, ctx)]
    return {'drift': drift, 'diffusion': diffusion}


def _sigma_times(sigma, vectors, i, k):
    # sigma^i_m v^m_k
    return add(*[mul(sigma[i][l], vectors[l][k]) for l in range(len(vectors))])


def w_ito_residuals(X, sys):
    """
        Residuals of the W-symmetry determining equations of an Ito system. For a linear W
        part the diffusion family gets the extra -sigma^i_m R^m_k; for a general h the two
        families get -sigma^i_k L0(h^k) and -sigma^i_m L_k(h^m).
    """
    ctx = sys.ctx
    states = ctx.states()
    wieners = ctx.wieners()
    residuals = standard_residuals(X, sys)
    drift = residuals['drift']
    diffusion = residuals['diffusion']
    if X.noise == VectorField.LINEAR:
        diffusion = [[simplify(add(diffusion[i][k], neg(_sigma_times(sys.sigma, X.R, i, k))))
                      for k in range(ctx.m)] for i in range(ctx.n)]
    elif X.noise == VectorField.GENERAL:
        h = X.h
        l0 = []
        for hk in h:
            terms = [differentiate(hk, T)]
            terms.extend(mul(f, differentiate(hk, x)) for f, x in zip(sys.f, states))
            terms.append(mul(HALF, laplacian(hk, sys.sigma, states, wieners)))
            l0.append(add(*terms))
        lk = [[add(differentiate(hm, wieners[k]),
                   *[mul(sys.sigma[j][k], differentiate(hm, x)) for j, x in enumerate(states)])
               for k in range(ctx.m)] for hm in h]
        drift = [simplify(add(drift[i], neg(add(*[mul(sys.sigma[i][k], l0[k]) for k in range(ctx.m)]))))
                 for i in range(ctx.n)]
        diffusion = [[simplify(add(diffusion[i][k], neg(_sigma_times(sys.sigma, lk, i, k))))
                      for k in range(ctx.m)] for i in range(ctx.n)]
    return {'drift': drift, 'diffusion': diffusion}


def w_strat_residuals(X, sys):
    """
        Residuals of the W-symmetry determining equations of a Stratonovich system: no
        Laplacian in the drift family, b in place of f. The diffusion family is the Ito one.
    """
    ctx = sys.ctx
    states = ctx.states()
    wieners = ctx.wieners()
    transport = _transport(X.phi, sys.b, states)
    drift = [add(differentiate(X.phi[i], T), transport[i]) for i in range(ctx.n)]
    diffusion = diffusion_terms(X.phi, sys.sigma, ctx)
    if X.noise == VectorField.LINEAR:
        diffusion = [[add(diffusion[i][k], neg(_sigma_times(sys.sigma, X.R, i, k)))
                      for k in range(ctx.m)] for i in range(ctx.n)]
    elif X.noise == VectorField.GENERAL:
        h = X.h
        l0 = [add(differentiate(hk, T), *[mul(b, differentiate(hk, x)) for b, x in zip(sys.b, states)])
              for hk in h]
        lk = [[add(differentiate(hm, wieners[k]),
                   *[mul(sys.sigma[j][k], differentiate(hm, x)) for j, x in enumerate(states)])
               for k in range(ctx.m)] for hm in h]
        drift = [add(drift[i], neg(add(*[mul(sys.sigma[i][k], l0[k]) for k in range(ctx.m)])))
                 for i in range(ctx.n)]
        diffusion = [[add(diffusion[i][k], neg(_sigma_times(sys.sigma, lk, i, k)))
                      for k in range(ctx.m)] for i in range(ctx.n)]
    return {'drift': [simplify(e) for e in drift],
            'diffusion': [[simplify(e) for e in row] for row in diffusion]}


def sigma_operator(phi, sys):
    """
        Sigma(phi)^i = phi^j d_j[(d_k sigma^{im}) sigma^k_m] - (d_k sigma^{jm}) sigma^k_m d_j phi^i.

        *Parameters:*
            - *phi (tuple)*: The n components of the field.
            - *sys (ItoSystem or StratSystem)*: Provides sigma.

        *Returns:*
            - *list*: The n simplified components.
    """
    ctx = sys.ctx
    states = ctx.states()
    # (d_k sigma^{im}) sigma^k_m = 2 rho^i
    twice_rho = [mul(2, r) for r in drift_correction(sys.sigma, ctx).rho]
    result = []
    for i in range(ctx.n):
        terms = []
        for j, x in enumerate(states):
            terms.append(mul(phi[j], differentiate(twice_rho[i], x)))
            terms.append(neg(mul(twice_rho[j], differentiate(phi[i], x))))
        result.append(simplify(add(*terms)))
    return result


def calR_term(sigma, R, ctx):
    """
        calR^i = sigma^{lk} (d_l sigma^{ip}) (R_pk + R_kp).
    """
    states = ctx.states()
    result = []
    for i in range(ctx.n):
        terms = []
        for l, x in enumerate(states):
            for k in range(ctx.m):
                for p in range(ctx.m):
                    terms.append(mul(sigma[l][k], differentiate(sigma[i][p], x), add(R[p][k], R[k][p])))
        result.append(simplify(add(*terms)))
    return result


def sdil_term(sigma, R, ctx):
    """
        [sigma^{jm} d_j sigma^i_q + sigma^j_q d_j sigma^{im}] R^q_m, summed over j, m and q.
    """
    states = ctx.states()
    result = []
    for i in range(ctx.n):
        terms = []
        for j, x in enumerate(states):
            for m in range(ctx.m):
                for q in range(ctx.m):
                    terms.append(mul(add(mul(sigma[j][m], differentiate(sigma[i][q], x)),
                                         mul(sigma[j][q], differentiate(sigma[i][m], x))), R[q][m]))
        result.append(simplify(add(*terms)))
    return result


def theorem1_discrepancy(phi, sys):
    """
        Ito drift residual minus Stratonovich drift residual, 1/2 (Delta phi - Sigma phi).
    """
    ctx = sys.ctx
    sigma_phi = sigma_operator(phi, sys)
    return [simplify(mul(HALF, add(laplacian(phi[i], sys.sigma, ctx.states(), ctx.wieners()), neg(sigma_phi[i]))))
            for i in range(ctx.n)]
