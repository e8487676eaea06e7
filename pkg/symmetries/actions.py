import numpy as np

import app
from expressions.actions import differentiate, evaluate, is_identically_zero, sample_points, simplify
from expressions.nodes import STATE, T, WIENER, EvaluationError, add, depends_on, free_variables, neg
from models import (AdmissibilityError, Classification, ConformalResult, DimensionError, StratSystem,
                    SymmetryReport, Theorem1Report, Verdict, VectorField, ZeroVerdict)
from systems.actions import check_scope, ito_to_strat
from . import factory


def numeric_matrix(R, ctx):
    """
        Evaluates a constant matrix (expressions or numbers) with the numeric params of ctx.
    """
    params = ctx.numeric_params()
    return np.array([[evaluate(entry, {}, params) if not isinstance(entry, (int, float)) else float(entry)
                      for entry in row] for row in R], dtype=float)


def _check_field(X, sys):
    ctx = sys.ctx
    if len(X.phi) != ctx.n:
        raise DimensionError('The field has %d state components, the system %d.' % (len(X.phi), ctx.n))
    if X.noise == VectorField.LINEAR and len(X.R) != ctx.m:
        raise DimensionError('R must be %dx%d.' % (ctx.m, ctx.m))
    if X.noise == VectorField.GENERAL and len(X.h) != ctx.m:
        raise DimensionError('The field needs %d noise components.' % ctx.m)
    for e in list(X.phi) + [X.tau] + list(X.h or ()):
        check_scope(e, ctx)


def _zero_tests(residuals, ctx):
    return {family: [[is_identically_zero(e, ctx) for e in row] if isinstance(row, (list, tuple))
                     else is_identically_zero(row, ctx) for row in values]
            for family, values in residuals.items()}


def _report(calculus, residuals, ctx, notes=None):
    return SymmetryReport({
        'calculus': calculus,
        'residuals': residuals,
        'zero_verdicts': _zero_tests(residuals, ctx),
        'notes': notes or []
    })


def conformal_check(R, ctx=None, tol=None):
    """
        Decides whether a constant W-matrix generates linear conformal maps, i.e. whether
        R + R^T = 2 lambda I.

        *Parameters:*
            - *R (matrix)*: Square matrix of numbers or constant expressions.
            - *ctx (Context)*: Params used to evaluate expression entries.
            - *tol (float)*: Tolerance on the symmetric part (default CONFORMAL_TOL).

        *Returns:*
            - *ConformalResult*: Admissible with the dilation coefficient and the skew part,
              or Rejected with the reason.
    """
    tol = app.config['CONFORMAL_TOL'] if tol is None else tol
    try:
        matrix = numeric_matrix(R, ctx) if ctx is not None else np.array(R, dtype=float)
    except (EvaluationError, TypeError, ValueError) as error:
        return ConformalResult({'admissible': False, 'reason': 'R is not numeric: %s' % error})
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        return ConformalResult({'admissible': False, 'reason': 'R must be square.'})
    size = matrix.shape[0]
    dilation = float(np.trace(matrix)) / size
    symmetric = (matrix + matrix.T) / 2
    skew = (matrix - matrix.T) / 2
    deviation = float(np.max(np.abs(symmetric - dilation * np.eye(size))))
    if deviation > tol:
        return ConformalResult({
            'admissible': False,
            'reason': 'The symmetric part of R is not a multiple of the identity (deviation %.3g).' % deviation
        })
    return ConformalResult({'admissible': True, 'dilation': dilation, 'skew': skew.tolist()})


def _linear_noise_matrix(X, ctx):
    # Extracts R from a general h that is linear in w with constant coefficients.
    wieners = ctx.wieners()
    R = [[simplify(differentiate(h, w)) for w in wieners] for h in X.h]
    for row in R:
        for entry in row:
            if free_variables(entry):
                return None
    remainder = [simplify(add(h, *[neg(R[k][l] * wieners[l]) for l in range(ctx.m)])) for k, h in enumerate(X.h)]
    if not all(is_identically_zero(e, ctx).is_zero for e in remainder):
        return None
    return R


def classify(X, sys, points=16):
    """
        Classifies a candidate generator.

        *Parameters:*
            - *X (VectorField)*: The candidate.
            - *sys (ItoSystem or StratSystem)*: The system, for dimensions and params.
            - *points (int)*: Sample points for the positivity of tau'(t).

        *Returns:*
            - *Classification*: acting_on_time, random (phi depends on w), w_acting, simple and
              admissible, with the reasons of a rejection.
    """
    _check_field(X, sys)
    ctx = sys.ctx
    reasons = []
    simple = is_identically_zero(X.tau, ctx).is_zero
    random = any(depends_on(e, WIENER) for e in X.phi)
    h = factory.noise_components(X, ctx)
    w_acting = X.noise != VectorField.NONE and not all(is_identically_zero(e, ctx).is_zero for e in h)

    admissible = True
    if not simple:
        if any(v.kind in (STATE, WIENER) for v in free_variables(X.tau)):
            admissible = False
            reasons.append('tau must depend on t only.')
        else:
            derivative = differentiate(X.tau, T)
            for point, params in sample_points(ctx, [T], [], points, 0):
                try:
                    value = evaluate(derivative, point, params)
                except EvaluationError:
                    continue
                if value <= 0:
                    admissible = False
                    reasons.append("tau'(t) must be positive (sampled positivity failed at t=%.4g)." % point[T])
                    break
    if w_acting:
        R = X.R if X.noise == VectorField.LINEAR else _linear_noise_matrix(X, ctx)
        if R is None:
            admissible = False
            reasons.append('The noise component must be linear in w with a constant matrix.')
        else:
            conformal = conformal_check(R, ctx)
            if not conformal.admissible:
                admissible = False
                reasons.append(conformal.reason)
    return Classification({
        'acting_on_time': not simple,
        'random': random,
        'w_acting': w_acting,
        'simple': simple,
        'admissible': admissible,
        'reasons': reasons
    })


def _require_simple(X, ctx):
    if not is_identically_zero(X.tau, ctx).is_zero:
        raise AdmissibilityError('The field is not simple (tau is not 0); only simple symmetries are '
                                 'analysed, time-changing maps are not used for integration or reduction.')


def residual_standard_ito(X, sys):
    """
        Determining equations of a simple standard (deterministic or random) symmetry of an
        Ito system.

        *Parameters:*
            - *X (VectorField)*: A field without noise part.
            - *sys (ItoSystem)*: The system.

        *Returns:*
            - *SymmetryReport*: n drift residuals and n x m diffusion residuals with verdicts.

        *Raises:*
            - *AdmissibilityError*: If X is not simple or acts on w.
    """
    _check_field(X, sys)
    if X.noise != VectorField.NONE:
        raise AdmissibilityError('Standard symmetries have no action on w; use the W-symmetry residuals.')
    _require_simple(X, sys.ctx)
    return _report('ito-standard', factory.standard_residuals(X, sys), sys.ctx)


def _w_admissibility(X, ctx, force):
    if X.noise == VectorField.NONE:
        raise AdmissibilityError('The field has no W part.')
    _require_simple(X, ctx)
    notes = []
    if X.noise == VectorField.LINEAR:
        conformal = conformal_check(X.R, ctx)
        if not conformal.admissible:
            if not force:
                raise AdmissibilityError('R is not an acceptable W-symmetry generator: %s' % conformal.reason)
            notes.append('Forced analysis of a non-conformal R: %s' % conformal.reason)
    return notes


def residual_W_ito(X, sys, force=False):
    """
        W-symmetry determining equations of an Ito system (linear R or general h).

        *Parameters:*
            - *X (VectorField)*: The candidate, with a W part.
            - *sys (ItoSystem)*: The system.
            - *force (bool)*: Analyse a non-conformal R instead of rejecting it.

        *Returns:*
            - *SymmetryReport*: The 'drift' and 'diffusion' families.

        *Raises:*
            - *AdmissibilityError*: If R is rejected by the conformal gate and force is not set.
    """
    _check_field(X, sys)
    notes = _w_admissibility(X, sys.ctx, force)
    return _report('ito-w', factory.w_ito_residuals(X, sys), sys.ctx, notes)


def residual_W_strat(X, sys, force=False):
    """
        W-symmetry determining equations of a Stratonovich system. An Ito system is converted
        to its associated Stratonovich system first.
    """
    if not isinstance(sys, StratSystem):
        sys = ito_to_strat(sys)
    _check_field(X, sys)
    notes = _w_admissibility(X, sys.ctx, force)
    return _report('stratonovich-w', factory.w_strat_residuals(X, sys), sys.ctx, notes)


def sigma_operator(phi, sys):
    return factory.sigma_operator(phi, sys)


def calR_term(sigma, R, ctx):
    return factory.calR_term(sigma, R, ctx)


def sdil_check(sigma, R, ctx):
    """
        Zero-tests the dilation obstruction [sigma^{jm} d_j sigma^i_q + sigma^j_q d_j sigma^{im}] R^q_m.

        *Returns:*
            - *Verdict*: Symmetry when every component vanishes identically.
    """
    return Verdict.combine(is_identically_zero(e, ctx) for e in factory.sdil_term(sigma, R, ctx))


def _sigma_constant(sys):
    ctx = sys.ctx
    return all(is_identically_zero(differentiate(entry, x), ctx).is_zero
               for row in sys.sigma for entry in row for x in ctx.states())


def theorem1_analysis(X, sys, force=False):
    """
        Compares the Ito and Stratonovich W-symmetry verdicts of a linear W-field.

        The difference of the two drift families is 1/2 (Delta phi - Sigma phi); on solutions of
        the common diffusion family it reduces to 1/2 calR. Agreement is 'guaranteed' when R is
        skew or sigma is spatially constant, 'accidental' when the verdicts agree otherwise, and
        'broken' when they differ.

        *Parameters:*
            - *X (VectorField)*: A field with a linear W part.
            - *sys (ItoSystem)*: The Ito system.
            - *force (bool)*: Analyse a non-conformal R.

        *Returns:*
            - *Theorem1Report*: Both reports, calR, the discrepancy and its comparison with 1/2 calR.
    """
    if X.noise != VectorField.LINEAR:
        raise AdmissibilityError('The analysis needs a linear W part.')
    ctx = sys.ctx
    ito = residual_W_ito(X, sys, force)
    strat = residual_W_strat(X, sys, force)
    calr = factory.calR_term(sys.sigma, X.R, ctx)
    discrepancy = factory.theorem1_discrepancy(X.phi, sys)
    matches = [is_identically_zero(add(d, neg(r * factory.HALF)), ctx) for d, r in zip(discrepancy, calr)]

    conformal = conformal_check(X.R, ctx)
    skew = conformal.admissible and abs(conformal.dilation) <= app.config['CONFORMAL_TOL']
    constant = _sigma_constant(sys)
    if ito.verdict.status != strat.verdict.status:
        agreement = Theorem1Report.BROKEN
        reason = 'The Ito verdict is %s, the Stratonovich verdict %s.' % (ito.verdict.status, strat.verdict.status)
    elif skew or constant:
        agreement = Theorem1Report.GUARANTEED
        reason = 'R is skew-symmetric.' if skew else 'sigma is constant in the state variables.'
    else:
        agreement = Theorem1Report.ACCIDENTAL
        reason = 'The verdicts agree although R has a dilation part and sigma is not constant.'
    return Theorem1Report({
        'ito': ito,
        'stratonovich': strat,
        'calr': calr,
        'discrepancy': discrepancy,
        'discrepancy_matches': matches,
        'agreement': agreement,
        'reason': reason
    })


def general_linear_consistency(X, sys):
    """
        Checks that a general-h field with h = R w yields the same residuals as the linear-W
        declaration of the same field, in both calculi.

        *Returns:*
            - *Verdict*: Symmetry when every pair of residuals agrees identically.
    """
    ctx = sys.ctx
    if X.noise != VectorField.LINEAR:
        raise AdmissibilityError('The consistency check starts from a linear W part.')
    general = VectorField(X.phi, X.tau, h=factory.noise_components(X, ctx), name=X.name)
    pairs = []
    for build in (factory.w_ito_residuals, lambda field, s: factory.w_strat_residuals(field, ito_to_strat(s))):
        linear = build(X, sys)
        other = build(general, sys)
        for family in ('drift', 'diffusion'):
            for a, b in zip(_flat(linear[family]), _flat(other[family])):
                pairs.append(is_identically_zero(add(a, neg(b)), ctx))
    return Verdict.combine(pairs)


def _flat(values):
    for value in values:
        if isinstance(value, (list, tuple)):
            yield from value
        else:
            yield value


def witness_of(report):
    """
        The first NonZero witness of a report, or None.
    """
    for values in report.zero_verdicts.values():
        for verdict in _flat(values):
            if isinstance(verdict, ZeroVerdict) and verdict.is_nonzero:
                return verdict.witness
    return None
