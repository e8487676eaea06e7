import warnings

import numpy as np
from scipy import optimize

from expressions.actions import differentiate, dummy_variable, is_identically_zero, simplify, substitute
from expressions.nodes import (MINUS_ONE, Apply, Integral, Neg, Power, Product, Sum, T, Var, add, as_expression,
                               exp, free_variables, is_const, log, mul, neg, power, state, wiener)
from expressions.numeric import compile_vectorized
from models import (ChangeOfVariables, CompatibilityReport, DimensionError, Gamma, GeneralSDE, ItoSystem,
                    ItoVerdict, ModelError, NumericalWarning, PreservationReport, RectificationReport,
                    ReducedSystem, ReductionChain, SolutionForm, SolvabilityReport, TransformationError, Verdict,
                    VectorField)
from symmetries.actions import conformal_check, residual_standard_ito, residual_W_ito
from symmetries.algebra import lie_bracket, solvability_check, span_coefficients
from symmetries.factory import apply_field
from systems.actions import HALF, misawa_L0, misawa_Lk
from . import factory


########################################################################################################################
# Scalar integration
########################################################################################################################

def _split(variable, parts):
    free = [p for p in parts if variable not in free_variables(p)]
    bound = [p for p in parts if variable in free_variables(p)]
    return free, bound


def _linear_slope(e, variable):
    slope = differentiate(e, variable)
    if variable in free_variables(slope):
        return None
    return slope


def antiderivative(g, variable):
    """
        Closed-form antiderivative for sums of terms c u^a and c exp(u), with u linear in the
        variable and c free of it. Returns None outside this table.
    """
    g = simplify(g)
    if variable not in free_variables(g):
        return simplify(mul(g, Var(variable)))
    if isinstance(g, Sum):
        parts = [antiderivative(term, variable) for term in g.terms]
        return None if any(p is None for p in parts) else simplify(add(*parts))
    if isinstance(g, Neg):
        inner = antiderivative(g.arg, variable)
        return None if inner is None else simplify(neg(inner))
    if isinstance(g, Product):
        free, bound = _split(variable, g.factors)
        if len(bound) != 1:
            return None
        inner = antiderivative(bound[0], variable)
        return None if inner is None else simplify(mul(*free, inner))
    if isinstance(g, Var):
        return simplify(mul(HALF, power(g, as_expression(2))))
    if isinstance(g, Apply) and g.name == 'exp':
        slope = _linear_slope(g.arg, variable)
        if slope is None:
            return None
        return simplify(mul(g, power(slope, MINUS_ONE)))
    if isinstance(g, Power) and variable not in free_variables(g.exponent):
        slope = _linear_slope(g.base, variable)
        if slope is None:
            return None
        raised = simplify(add(g.exponent, as_expression(1)))
        if is_const(raised, 0):
            return simplify(mul(log(g.base), power(slope, MINUS_ONE)))
        return simplify(mul(power(g.base, raised), power(mul(slope, raised), MINUS_ONE)))
    return None


def kozlov_variable_scalar(phi, ctx, base=1.0):
    """
        The new variable of a scalar simple symmetry X = phi d_y, Phi(y, t) = int dy / phi(y, t),
        in which X = d_Phi.

        *Parameters:*
            - *phi (Expression)*: The component of the symmetry.
            - *ctx (Context)*: A scalar context.
            - *base (float)*: Lower limit of the quadrature used when no closed form is found.

        *Returns:*
            - *Expression*: The antiderivative, or an Integral node evaluated by quadrature.

        *Raises:*
            - *TransformationError*: If phi vanishes identically.
    """
    phi = as_expression(phi)
    if is_identically_zero(phi, ctx).is_zero:
        raise TransformationError('phi vanishes identically.')
    y = state(1)
    reciprocal = simplify(power(phi, MINUS_ONE))
    closed = antiderivative(reciprocal, y)
    if closed is not None:
        return closed
    warnings.warn('No closed-form antiderivative of 1/phi, falling back to quadrature.', NumericalWarning)
    dummy = dummy_variable()
    return Integral(substitute(reciprocal, y, Var(dummy)), dummy, as_expression(base), Var(y))


def invert_scalar(e, variable, target):
    """
        Solves e = target for the variable by peeling invertible layers (sums and products with
        one dependent part, exp, log, constant powers), taking principal branches.

        *Returns:*
            - *Expression*: The solution, or None when e is not such a chain.
    """
    e = simplify(e)
    while True:
        if isinstance(e, Var) and e.var == variable:
            return simplify(target)
        if isinstance(e, Sum):
            free, bound = _split(variable, e.terms)
            if len(bound) != 1:
                return None
            target, e = add(target, neg(add(*free))), bound[0]
        elif isinstance(e, Product):
            free, bound = _split(variable, e.factors)
            if len(bound) != 1:
                return None
            target, e = mul(target, power(mul(*free), MINUS_ONE)), bound[0]
        elif isinstance(e, Neg):
            target, e = neg(target), e.arg
        elif isinstance(e, Apply) and e.name == 'exp':
            target, e = log(target), e.arg
        elif isinstance(e, Apply) and e.name == 'log':
            target, e = exp(target), e.arg
        elif isinstance(e, Power) and variable not in free_variables(e.exponent):
            target, e = power(target, power(e.exponent, MINUS_ONE)), e.base
        else:
            return None


def numeric_inverse(forward, ctx, targets, env, guess):
    """
        Solves forward(x, t, w) = targets for a scalar state with vectorized Newton iterations.
        Used for evaluation only; transformed coefficients are never re-expressed this way.

        *Parameters:*
            - *forward (Expression)*: The new coordinate as a function of the old variables.
            - *ctx (Context)*: The old context (n = 1).
            - *targets (ndarray)*: Values of the new coordinate.
            - *env (dict)*: VarId -> ndarray for t and the Wiener variables.
            - *guess (ndarray)*: Starting points.

        *Returns:*
            - *ndarray*: The old state, NaN where the iteration did not converge.
    """
    if ctx.n != 1:
        raise TransformationError('Numeric inversion is only available for scalar changes of variables.')
    x = state(1)
    params = ctx.numeric_params()
    run = compile_vectorized(forward, params)
    run_prime = compile_vectorized(differentiate(forward, x), params)

    def residual(values):
        return run({**env, x: values}) - targets

    def slope(values):
        return run_prime({**env, x: values})

    with np.errstate(all='ignore'):
        root, converged, _ = optimize.newton(residual, np.asarray(guess, dtype=float), fprime=slope,
                                             maxiter=100, full_output=True, disp=False)
    root = np.where(converged, root, np.nan)
    failures = int(np.sum(~converged))
    if failures:
        warnings.warn('Numeric inversion did not converge for %d values.' % failures, NumericalWarning)
    return root


def gamma(phi, ctx):
    """
        gamma = d^_w (1 / phi) of a scalar random symmetry.
    """
    w = ctx.wieners()[0]
    return Gamma(differentiate(power(as_expression(phi), MINUS_ONE), w))


def bcomp_check(sys, phi):
    """
        Compatibility of a scalar simple random symmetry with integration by an Ito change of
        variables:

            S gamma_t + S_t gamma = F gamma_w + 1/2 [S gamma_ww + S^2 gamma_yw]

        *Parameters:*
            - *sys (ItoSystem)*: A scalar system (n = m = 1), F its drift and S its diffusion.
            - *phi (Expression or VectorField)*: The verified symmetry.

        *Returns:*
            - *CompatibilityReport*: gamma, both sides and the zero test of their difference.

        *Raises:*
            - *TransformationError*: If phi vanishes identically.
    """
    ctx = sys.ctx
    if ctx.n != 1 or ctx.m != 1:
        raise DimensionError('The compatibility relation is stated for scalar systems.')
    if isinstance(phi, VectorField):
        phi = phi.phi[0]
    if is_identically_zero(phi, ctx).is_zero:
        raise TransformationError('phi vanishes identically.')
    y, w = ctx.states()[0], ctx.wieners()[0]
    F, S = sys.f[0], sys.sigma[0][0]
    g = gamma(phi, ctx).gamma
    g_w = differentiate(g, w)
    lhs = simplify(add(mul(S, differentiate(g, T)), mul(differentiate(S, T), g)))
    rhs = simplify(add(mul(F, g_w), mul(HALF, add(mul(S, differentiate(g_w, w)),
                                                  mul(S, S, differentiate(g_w, y))))))
    verdict = is_identically_zero(add(lhs, neg(rhs)), ctx)
    return CompatibilityReport({'compatible': verdict.is_zero, 'gamma': g, 'lhs': lhs, 'rhs': rhs,
                                'zero_test': verdict})


########################################################################################################################
# Changes of variables
########################################################################################################################

def _ito_like(F, S, ctx):
    tests = [is_identically_zero(differentiate(e, w), ctx)
             for e in list(F) + [entry for row in S for entry in row] for w in ctx.wieners()]
    return ItoVerdict.combine(tests)


def ito_preservation_check(sys, cov):
    """
        The conditions L0(d^_m Phi^i) = 0 and L_k(d^_m Phi^i) = 0 on a change of variables
        y = Phi(x, t; w). They always hold when Phi does not depend on w.

        *Parameters:*
            - *sys (ItoSystem)*: The system in the old variables.
            - *cov (ChangeOfVariables)*: old_to_new, or new_to_old with its coordinates.

        *Returns:*
            - *PreservationReport*: Residuals and verdicts per (i, m) and (i, m, k).
    """
    ctx = sys.ctx
    if cov.direction == ChangeOfVariables.OLD_TO_NEW:
        phis = cov.forward
    elif cov.coordinates is not None:
        phis = cov.coordinates[:ctx.n]
    else:
        raise TransformationError('The change of variables does not give the new states in the old variables.')
    wieners = ctx.wieners()
    L0 = []
    Lk = []
    for phi in phis:
        derivatives = [differentiate(phi, w) for w in wieners]
        L0.append([misawa_L0(d, sys) for d in derivatives])
        Lk.append([[misawa_Lk(d, sys, k) for k in range(1, ctx.m + 1)] for d in derivatives])
    residuals = {'L0': L0, 'Lk': Lk}
    zero_verdicts = {
        'L0': [[is_identically_zero(e, ctx) for e in row] for row in L0],
        'Lk': [[[is_identically_zero(e, ctx) for e in inner] for inner in row] for row in Lk]
    }
    return PreservationReport({'residuals': residuals, 'zero_verdicts': zero_verdicts})


def transform_ito(sys, cov):
    """
        Rewrites an Ito system in new coordinates y = Phi(x, t; w) with the Wiener processes
        unchanged: F^i = L0(Phi^i), S^i_k = L_k(Phi^i).

        With an inverse map the coefficients are expressed in the new variables and ito_like
        is the zero test of d^F and d^S; without one they stay in the old variables
        (variables = 'mixed') and ito_like comes from the preservation conditions.

        *Parameters:*
            - *sys (ItoSystem)*: The system.
            - *cov (ChangeOfVariables)*: An old_to_new map without Wiener map.

        *Returns:*
            - *GeneralSDE*: The transformed system.

        *Raises:*
            - *TransformationError*: For a new_to_old map or a singular Jacobian.
    """
    if cov.direction != ChangeOfVariables.OLD_TO_NEW:
        raise TransformationError('transform_ito needs new coordinates written in the old variables; '
                                  'use transform_W for maps acting on w.')
    if len(cov.forward) != sys.ctx.n:
        raise DimensionError('The change of variables needs %d components.' % sys.ctx.n)
    factory.jacobian_pair(sys, cov)
    F, S = factory.ito_coefficients(sys, cov)
    mapping = factory.old_to_new_substitution(cov, sys.ctx)
    if mapping is None:
        preservation = ito_preservation_check(sys, cov)
        verdicts = [v for family in preservation.zero_verdicts.values() for v in _flat(family)]
        return GeneralSDE(sys.ctx, F, S, ItoVerdict.combine(verdicts, ItoVerdict.MISAWA), variables='mixed')
    ctx = factory.working_context(sys, cov)
    F = [factory.pull_back(e, mapping) for e in F]
    S = [[factory.pull_back(e, mapping) for e in row] for row in S]
    return GeneralSDE(ctx, F, S, _ito_like(F, S, ctx))


def transform_W(sys, cov):
    """
        Rewrites an Ito system under x = Phi(y, t; z), w = Omega(y, t; z), where Omega is R z
        for a constant conformal R or a general map for adapted coordinates. With
        M = Phi_y - sigma Omega_y and Q_S the Ito Laplacian of the new variables:

            M S = sigma Omega_z - Phi_z
            M F = f - Phi_t + sigma Omega_t - 1/2 Q_S(Phi) + 1/2 sigma Q_S(Omega)

        *Parameters:*
            - *sys (ItoSystem)*: The system.
            - *cov (ChangeOfVariables)*: A new_to_old map.

        *Returns:*
            - *GeneralSDE*: The system in the new variables; ito_like is the zero test of
              the derivatives of F and S with respect to the new driving variables.

        *Raises:*
            - *TransformationError*: For an old_to_new map, a rejected R or a singular M.
    """
    if cov.direction != ChangeOfVariables.NEW_TO_OLD:
        raise TransformationError('transform_W needs the old variables written in the new ones.')
    if len(cov.forward) != sys.ctx.n:
        raise DimensionError('The change of variables needs %d components.' % sys.ctx.n)
    if cov.R is not None:
        conformal = conformal_check(cov.R, sys.ctx)
        if not conformal.admissible:
            raise TransformationError('The Wiener map is not acceptable: %s' % conformal.reason)
    F, S = factory.w_coefficients(sys, cov)
    ctx = factory.working_context(sys, cov)
    return GeneralSDE(ctx, F, S, _ito_like(F, S, ctx))


def as_general(sys):
    """
        An Ito system viewed as a GeneralSDE in its own variables.
    """
    return GeneralSDE(sys.ctx, sys.f, sys.sigma, ItoVerdict({'status': ItoVerdict.ITO}))


def coordinates_of(cov, ctx):
    """
        The n + m new coordinates written in the old variables.
    """
    if cov.coordinates is not None:
        coordinates = list(cov.coordinates)
    elif cov.direction == ChangeOfVariables.OLD_TO_NEW:
        coordinates = list(cov.forward)
    else:
        raise TransformationError('The change of variables does not give the new coordinates in the old '
                                  'variables.')
    if len(coordinates) == ctx.n:
        coordinates += [as_expression(w) for w in ctx.wieners()]
    if len(coordinates) != ctx.n + ctx.m:
        raise DimensionError('Expected %d new coordinates.' % (ctx.n + ctx.m))
    return coordinates


def rectification_check(X, coordinates, ctx):
    """
        Checks that X reads d/d(xi) in the new coordinates: X(c) = 1 for exactly one coordinate
        and X(c) = 0 for all the others. A list of n coordinates is completed with the
        unchanged Wiener variables.

        *Parameters:*
            - *X (VectorField)*: The field, in the old variables.
            - *coordinates (list)*: n or n + m expressions in the old variables.
            - *ctx (Context)*: The old variables.

        *Returns:*
            - *RectificationReport*: X applied to each coordinate with its zero tests, and the
              index of the rectified coordinate (states first, then driving variables).
    """
    coordinates = list(coordinates)
    if len(coordinates) == ctx.n:
        coordinates += [as_expression(w) for w in ctx.wieners()]
    values = [apply_field(X, c, ctx) for c in coordinates]
    tests = [{'zero': is_identically_zero(v, ctx), 'one': is_identically_zero(add(v, MINUS_ONE), ctx)}
             for v in values]
    ones = [a for a, test in enumerate(tests) if test['one'].is_zero]
    rectified_along = None
    if len(ones) == 1 and all(test['zero'].is_zero for a, test in enumerate(tests) if a != ones[0]):
        rectified_along = ones[0]
    return RectificationReport({'values': values, 'zero_tests': tests, 'rectified_along': rectified_along})


def pushforward(X, cov, sys):
    """
        The field X written in the new coordinates: its components are X applied to each new
        coordinate, re-expressed in the new variables.

        *Returns:*
            - *VectorField*: A field on the new variables, with a general noise part when it
              acts on the driving variables.

        *Raises:*
            - *TransformationError*: If the old variables cannot be written in the new ones.
    """
    ctx = sys.ctx
    mapping = factory.old_to_new_substitution(cov, ctx)
    if mapping is None:
        raise TransformationError('The push-forward needs the inverse of the change of variables.')
    values = [factory.pull_back(apply_field(X, c, ctx), mapping) for c in coordinates_of(cov, ctx)]
    new_ctx = factory.working_context(sys, cov)
    phi, h = values[:ctx.n], values[ctx.n:]
    if all(is_identically_zero(e, new_ctx).is_zero for e in h):
        return VectorField(phi, 0, name=X.name)
    return VectorField(phi, 0, h=h, name=X.name)


########################################################################################################################
# Reduction
########################################################################################################################

def verify_symmetry(X, sys):
    if X.noise == VectorField.NONE:
        return residual_standard_ito(X, sys)
    return residual_W_ito(X, sys)


def _independence(sde, along, X, old_ctx):
    ctx = sde.ctx
    entries = list(sde.F) + [e for row in sde.S for e in row]
    if sde.variables == 'mixed':
        derivatives = [apply_field(X, e, old_ctx) for e in entries]
        return Verdict.combine(is_identically_zero(d, old_ctx) for d in derivatives)
    variable = state(along + 1) if along < ctx.n else wiener(along - ctx.n + 1)
    return Verdict.combine(is_identically_zero(differentiate(e, variable), ctx) for e in entries)


def reduce_step(sys, X, cov):
    """
        Reduction of an Ito system by one simple symmetry.

        The coordinates must rectify X; X must satisfy the determining equations of sys. In the
        new coordinates the coefficients do not depend on the rectified coordinate. When it is
        a state the system splits into the remaining block and one reconstruction equation;
        when it is a driving variable only its increments remain.

        *Parameters:*
            - *sys (ItoSystem)*: The system.
            - *X (VectorField)*: The symmetry.
            - *cov (ChangeOfVariables)*: Adapted coordinates (either direction).

        *Returns:*
            - *ReducedSystem*: The transformed system, the independence verdict, the reduced
              block and the reconstruction equation.

        *Raises:*
            - *TransformationError*: If rectification or the symmetry verification fails.
    """
    ctx = sys.ctx
    rectification = rectification_check(X, coordinates_of(cov, ctx), ctx)
    if not rectification.rectified:
        raise TransformationError('The coordinates do not rectify %s.' % (X.name or 'the field'))
    verification = verify_symmetry(X, sys)
    if not verification.verdict.holds:
        raise TransformationError('%s is not a symmetry of the system (%s).' %
                                  (X.name or 'The field', verification.verdict.status))
    if cov.direction == ChangeOfVariables.OLD_TO_NEW:
        system = transform_ito(sys, cov)
    else:
        system = transform_W(sys, cov)
    along = rectification.rectified_along
    independence = _independence(system, along, X, ctx)
    notes = []
    if not independence.holds:
        notes.append('The coefficients still depend on the rectified coordinate (%s).' % independence.status)
    if along < ctx.n:
        reduced_block = [i for i in range(ctx.n) if i != along]
        reconstruction = along
    else:
        reduced_block = list(range(ctx.n))
        reconstruction = None
        notes.append('Rectified along a driving variable: only its increments enter the equations.')
    if not system.ito_like.holds:
        notes.append('The reduced equations are not of Ito type.')
    return ReducedSystem({
        'system': system,
        'rectified_along': along,
        'independence': independence,
        'reduced_block': reduced_block,
        'reconstruction': reconstruction,
        'notes': notes
    })


def _check_ordering(generators, ctx):
    for j in range(1, len(generators)):
        for i in range(j):
            bracket = lie_bracket(generators[i], generators[j], ctx)
            if span_coefficients(bracket, generators[:j], ctx) is None:
                raise TransformationError('[%s,%s] is not in the span of the preceding generators; the '
                                          'ordering does not follow the derived series.' %
                                          (generators[i].name, generators[j].name))


def reduce_sequence(sys, generators, covs):
    """
        Sequential reduction by a solvable algebra of simple symmetries. Each generator is
        pushed forward through the previous changes of variables and re-verified on the
        intermediate equation before it is used. The chain stops, keeping the completed
        steps, when an intermediate equation is not of Ito type or a step fails.

        *Parameters:*
            - *sys (ItoSystem)*: The system.
            - *generators (list)*: VectorFields with [X_i, X_j] in span(X_1..X_{j-1}) for i < j.
            - *covs (list)*: One ChangeOfVariables per generator, each in the variables of the
              preceding step.

        *Returns:*
            - *ReductionChain*: The steps, whether the chain completed and why it stopped.

        *Raises:*
            - *TransformationError*: If the algebra is not solvable or the ordering violates
              the derived series.
    """
    if len(generators) != len(covs):
        raise ModelError('Each generator needs its change of variables.')
    ctx = sys.ctx
    solvability = solvability_check(generators, ctx)
    if solvability.status != SolvabilityReport.SOLVABLE:
        raise TransformationError('The generators do not span a solvable algebra (%s).' % solvability.status)
    _check_ordering(generators, ctx)

    steps = []
    history = []
    current = sys
    aborted = None
    for index, (X, cov) in enumerate(zip(generators, covs)):
        field = X
        try:
            for previous_cov, previous_sys in history:
                field = pushforward(field, previous_cov, previous_sys)
        except TransformationError as error:
            aborted = str(error)
            break
        if steps:
            last = steps[-1].system
            if not last.ito_like.holds:
                aborted = ('The equation after step %d is not of Ito type; %s cannot be re-verified.' %
                           (index, X.name or 'the next generator'))
                break
            if last.variables != 'new':
                aborted = 'The equation after step %d is not written in the new variables.' % index
                break
            current = ItoSystem(last.ctx, last.F, last.S)
        try:
            step = reduce_step(current, field, cov)
        except TransformationError as error:
            aborted = str(error)
            break
        if cov.direction == ChangeOfVariables.OLD_TO_NEW:
            preservation = ito_preservation_check(current, cov)
            step.notes.append('Ito preservation conditions: %s.' % preservation.verdict.status)
        steps.append(step)
        history.append((cov, current))
    return ReductionChain({'steps': steps, 'completed': aborted is None, 'aborted': aborted})


def integrate_scalar(sde, cov=None):
    """
        The solution of a scalar equation whose coefficients do not depend on the state,
        y(t) = y0 + int F(s, w(s)) ds + int S(s, w(s)) dw(s).

        *Parameters:*
            - *sde (GeneralSDE or ItoSystem)*: The equation (n = 1).
            - *cov (ChangeOfVariables)*: The change of variables that produced it, giving the
              integrating coordinate and the map back.

        *Returns:*
            - *SolutionForm*: Evaluated along Brownian paths by the Monte Carlo harness.

        *Raises:*
            - *TransformationError*: If the coefficients depend on the state.
    """
    if isinstance(sde, ItoSystem):
        sde = as_general(sde)
    ctx = sde.ctx
    if ctx.n != 1:
        raise DimensionError('integrate_scalar needs a scalar equation.')
    x = state(1)
    entries = [sde.F[0]] + list(sde.S[0])
    if not all(is_identically_zero(differentiate(e, x), ctx).is_zero for e in entries):
        raise TransformationError('The coefficients depend on the state; the equation is not integrable '
                                  'by quadratures.')
    to_integrating = None
    back_map = None
    if cov is not None and cov.direction == ChangeOfVariables.OLD_TO_NEW:
        to_integrating = cov.forward[0]
        back_map = cov.inverse[0] if cov.inverse is not None else None
    return SolutionForm(ctx, sde.F[0], sde.S[0], to_integrating, back_map)


def integrate_by_symmetry(sys, X):
    """
        The scalar pipeline: Kozlov variable of X, the transformed equation and its solution.

        *Returns:*
            - *tuple*: (ChangeOfVariables, GeneralSDE, SolutionForm).
    """
    if sys.ctx.n != 1 or len(X.phi) != 1:
        raise DimensionError('Integration by a single symmetry is available for scalar equations.')
    if X.noise != VectorField.NONE:
        raise TransformationError('The Kozlov variable is built from a standard simple symmetry.')
    y = state(1)
    Phi = kozlov_variable_scalar(X.phi[0], sys.ctx)
    inverse = invert_scalar(Phi, y, Var(y))
    cov = ChangeOfVariables(ChangeOfVariables.OLD_TO_NEW, [Phi], inverse=None if inverse is None else [inverse],
                            name='kozlov')
    sde = transform_ito(sys, cov)
    return cov, sde, integrate_scalar(sde, cov)


def _flat(values):
    for value in values:
        if isinstance(value, (list, tuple)):
            yield from _flat(value)
        else:
            yield value
