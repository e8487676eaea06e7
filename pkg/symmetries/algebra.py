"""
    Lie algebra of simple generators: brackets, structure constants recovered by sampling,
    and the derived series deciding solvability and the order of sequential reduction.
"""
from fractions import Fraction

import numpy as np

import app
from expressions.actions import EvaluationError, evaluate, is_identically_zero, sample_points, simplify
from expressions.nodes import T, add, as_expression, mul, neg
from models import AdmissibilityError, SolvabilityReport, VectorField
from .factory import apply_field

MAX_DENOMINATOR = 1000


def _matrix_product(A, B):
    size = len(A)
    return [[simplify(add(*[mul(A[i][l], B[l][j]) for l in range(size)])) for j in range(size)]
            for i in range(size)]


def lie_bracket(X, Y, ctx):
    """
        The commutator of two simple generators, [X, Y] = X(phi_Y) - Y(phi_X), where the
        application of a field includes its d^_k part. The W parts combine as R_Y R_X - R_X R_Y.

        *Parameters:*
            - *X, Y (VectorField)*: Simple fields, both without noise part or both linear.
            - *ctx (Context)*: The variables the fields live on.

        *Returns:*
            - *VectorField*: The bracket.

        *Raises:*
            - *AdmissibilityError*: For non-simple fields or mixed noise kinds.
    """
    for field in (X, Y):
        if not is_identically_zero(field.tau, ctx).is_zero:
            raise AdmissibilityError('Brackets are only taken between simple fields.')
        if field.noise == VectorField.GENERAL:
            raise AdmissibilityError('Brackets need a linear W part or none.')
    if X.noise != Y.noise:
        raise AdmissibilityError('Cannot bracket a field acting on w with one that does not.')
    phi = [simplify(add(apply_field(X, Y.phi[i], ctx), neg(apply_field(Y, X.phi[i], ctx))))
           for i in range(ctx.n)]
    name = '[%s,%s]' % (X.name, Y.name)
    if X.noise == VectorField.LINEAR:
        first = _matrix_product(Y.R, X.R)
        second = _matrix_product(X.R, Y.R)
        R = [[simplify(add(a, neg(b))) for a, b in zip(r1, r2)] for r1, r2 in zip(first, second)]
        return VectorField(phi, 0, R=R, name=name)
    return VectorField(phi, 0, name=name)


def combination(fields, coefficients, ctx, name=None):
    """
        The field sum_k c_k X_k (same noise kind for all fields).
    """
    coefficients = [as_expression(c) for c in coefficients]
    phi = [simplify(add(*[mul(c, X.phi[i]) for c, X in zip(coefficients, fields)])) for i in range(ctx.n)]
    if fields[0].noise == VectorField.LINEAR:
        R = [[simplify(add(*[mul(c, X.R[i][j]) for c, X in zip(coefficients, fields)])) for j in range(ctx.m)]
             for i in range(ctx.m)]
        return VectorField(phi, 0, R=R, name=name)
    return VectorField(phi, 0, name=name)


def _samples(field, points):
    values = []
    for point, params in points:
        values.extend(evaluate(component, point, params) for component in field.phi)
        if field.noise == VectorField.LINEAR:
            values.extend(evaluate(entry, point, params) for row in field.R for entry in row)
    return np.array(values)


def _as_fraction(value, tol):
    fraction = Fraction(value).limit_denominator(MAX_DENOMINATOR)
    if abs(float(fraction) - value) <= tol:
        return fraction
    return None


def _exact_coefficients(vector, tol=1e-6):
    coefficients = []
    for c in vector:
        fraction = _as_fraction(float(c), tol)
        coefficients.append(Fraction(float(c)) if fraction is None else fraction)
    return coefficients


def _format_coefficients(coefficients, names):
    terms = []
    for c, name in zip(coefficients, names):
        if c == 0:
            continue
        if c == 1:
            terms.append(name)
        elif c == -1:
            terms.append('-' + name)
        else:
            terms.append('%s*%s' % (c, name))
    return ' + '.join(terms).replace('+ -', '- ') if terms else '0'


def _basis(vectors, tol):
    # Orthonormal basis of the span of the rows, by SVD rank.
    if not len(vectors):
        return np.zeros((0, 0))
    matrix = np.array(vectors, dtype=float)
    _, singular, vt = np.linalg.svd(matrix)
    rank = int(np.sum(singular > tol * max(1.0, singular[0] if len(singular) else 1.0)))
    return vt[:rank]


def _bracket_coefficients(a, b, constants):
    # [sum a_i X_i, sum b_j X_j] = sum_ij a_i b_j C[i][j]
    return np.einsum('i,j,ijk->k', a, b, constants)


def _in_span(vector, basis, tol):
    if basis.shape[0] == 0:
        return float(np.linalg.norm(vector)) <= tol
    projection = basis.T @ (basis @ vector)
    return float(np.linalg.norm(vector - projection)) <= tol * max(1.0, float(np.linalg.norm(vector)))


def derived_series(constants, tol):
    """
        Dimensions and bases of G, [G, G], [[G, G], [G, G]], ... in coefficient space.
    """
    size = constants.shape[0]
    current = np.eye(size)
    bases = [current]
    while current.shape[0] > 0:
        brackets = [_bracket_coefficients(a, b, constants) for a in current for b in current]
        following = _basis(brackets, tol)
        if following.shape[0] == current.shape[0]:
            break
        bases.append(following)
        current = following
    return bases


def _adapted_ordering(bases, tol):
    # Deepest derived algebra first, each level completed with original generators when possible.
    size = bases[0].shape[0]
    chosen = []
    for level in reversed(bases):
        candidates = [np.eye(size)[k] for k in range(size)] + list(level)
        for candidate in candidates:
            if not _in_span(candidate, level, tol):
                continue
            trial = np.array(chosen + [candidate])
            if np.linalg.matrix_rank(trial, tol=tol) == len(chosen) + 1:
                chosen.append(candidate)
    return chosen


def _sampled(ctx, points, seed):
    variables = ctx.states() + [T] + ctx.wieners()
    symbols = sorted(name for name, value in ctx.params.items() if value is None)
    return sample_points(ctx, variables, symbols, points, seed)


def _residual_vanishes(field, generators, coefficients, ctx):
    difference = combination([field] + list(generators), [1] + [-c for c in coefficients], ctx)
    residuals = list(difference.phi) + ([e for row in difference.R for e in row] if difference.R else [])
    return all(is_identically_zero(e, ctx).is_zero for e in residuals)


def span_coefficients(field, generators, ctx, points=8, seed=None):
    """
        Constant coefficients c with field = sum_k c_k X_k, or None when the field is not in
        the span of the generators.
    """
    tol = app.config['LSTSQ_TOL']
    seed = app.config['ZERO_TEST_SEED'] if seed is None else seed
    if not generators:
        return [] if _residual_vanishes(field, [], [], ctx) else None
    samples = _sampled(ctx, points, seed)
    try:
        matrix = np.column_stack([_samples(X, samples) for X in generators])
        target = _samples(field, samples)
    except EvaluationError:
        return None
    coefficients, _, _, _ = np.linalg.lstsq(matrix, target, rcond=None)
    rounded = [_as_fraction(float(c), tol) for c in coefficients]
    values = [float(c) for c in coefficients] if any(c is None for c in rounded) else rounded
    if not _residual_vanishes(field, generators, values, ctx):
        return None
    return values


def solvability_check(generators, ctx, points=8, seed=None):
    """
        Decides solvability of the Lie algebra spanned by the generators.

        Bracket coefficients are recovered by least squares on sampled values of the bracket
        components against the generators, rounded to small rationals, and verified by zero
        tests of bracket - sum c_k X_k.

        *Parameters:*
            - *generators (list)*: Simple VectorFields (all without noise part or all linear).
            - *ctx (Context)*: The variables.
            - *points (int)*: Sample points for the least-squares system.

        *Returns:*
            - *SolvabilityReport*: Solvable with the derived series dimensions and an adapted
              ordering, NotSolvable, or Inconclusive when a bracket leaves the span.
    """
    tol = app.config['LSTSQ_TOL']
    seed = app.config['ZERO_TEST_SEED'] if seed is None else seed
    names = [X.name or 'X%d' % (k + 1) for k, X in enumerate(generators)]
    size = len(generators)
    if size == 0:
        return SolvabilityReport({'status': SolvabilityReport.SOLVABLE, 'structure_constants': [],
                                  'derived_dimensions': [0], 'ordering': [], 'abelian': True})
    samples = _sampled(ctx, points, seed)
    try:
        matrix = np.column_stack([_samples(X, samples) for X in generators])
    except EvaluationError as error:
        return SolvabilityReport({'status': SolvabilityReport.INCONCLUSIVE, 'reason': str(error)})
    if np.linalg.matrix_rank(matrix) < size:
        return SolvabilityReport({'status': SolvabilityReport.INCONCLUSIVE,
                                  'reason': 'The generators are linearly dependent.'})

    constants = np.zeros((size, size, size))
    exact = [[None] * size for _ in range(size)]
    worst = 0.0
    for i in range(size):
        for j in range(size):
            if j < i:
                constants[i, j] = -constants[j, i]
                exact[i][j] = [-c for c in exact[j][i]]
                continue
            if j == i:
                exact[i][j] = [Fraction(0)] * size
                continue
            bracket = lie_bracket(generators[i], generators[j], ctx)
            try:
                target = _samples(bracket, samples)
            except EvaluationError as error:
                return SolvabilityReport({'status': SolvabilityReport.INCONCLUSIVE, 'reason': str(error)})
            coefficients, _, _, _ = np.linalg.lstsq(matrix, target, rcond=None)
            worst = max(worst, float(np.max(np.abs(matrix @ coefficients - target))) if target.size else 0.0)
            rounded = [_as_fraction(float(c), tol) for c in coefficients]
            if any(c is None for c in rounded):
                rounded = None
                values = [float(c) for c in coefficients]
            else:
                values = rounded
            if not _residual_vanishes(bracket, generators, values, ctx):
                return SolvabilityReport({
                    'status': SolvabilityReport.INCONCLUSIVE,
                    'residual': worst,
                    'reason': 'The bracket [%s,%s] is not in the span of the generators.' % (names[i], names[j])
                })
            constants[i, j] = np.array([float(c) for c in values])
            exact[i][j] = rounded if rounded is not None else values

    bases = derived_series(constants, tol)
    dimensions = [basis.shape[0] for basis in bases]
    abelian = not np.any(np.abs(constants) > tol)
    table = [[_format_coefficients(exact[i][j], names) for j in range(size)] for i in range(size)]
    if dimensions[-1] != 0:
        return SolvabilityReport({
            'status': SolvabilityReport.NOT_SOLVABLE,
            'structure_constants': table,
            'derived_dimensions': dimensions,
            'abelian': abelian,
            'residual': worst
        })
    ordering = []
    for vector in _adapted_ordering(bases, tol):
        coefficients = _exact_coefficients(vector)
        scale = next(c for c in coefficients if c != 0)
        ordering.append(_format_coefficients([c / scale for c in coefficients], names))
    return SolvabilityReport({
        'status': SolvabilityReport.SOLVABLE,
        'structure_constants': table,
        'derived_dimensions': dimensions,
        'ordering': ordering,
        'abelian': abelian,
        'residual': worst
    })
