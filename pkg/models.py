import numpy as np

from expressions.nodes import WIENER, as_expression, depends_on, free_variables, to_text


# ------------ Errors ------------ #

class ModelError(Exception):
    pass


class DimensionError(ModelError):
    pass


class WienerDependenceError(ModelError):
    pass


class TransformationError(ModelError):
    pass


class AdmissibilityError(ModelError):
    pass


class NumericalWarning(UserWarning):
    pass


def _text(e):
    return to_text(e) if e is not None else None


def _matrix_text(matrix):
    return [[_text(entry) for entry in row] for row in matrix]


# ------------ Report Models ------------ #
"""
    Each report model includes:
        - a constructor to build it from a dictionary
        - a 'to_json' function to serialize it (returns it in the form of a python dictionary)
"""


class ZeroVerdict:
    ZERO = 'Zero'
    NONZERO = 'NonZero'
    INCONCLUSIVE = 'Inconclusive'
    STRUCTURAL = 'structural'
    SAMPLED = 'sampled'

    def __init__(self, json):
        self.status = json['status']
        self.mode = json.get('mode', self.SAMPLED)
        self.witness = json.get('witness')
        self.value = json.get('value')
        self.reason = json.get('reason')

    @property
    def is_zero(self):
        return self.status == self.ZERO

    @property
    def is_nonzero(self):
        return self.status == self.NONZERO

    def to_json(self):
        return {
            'status': self.status,
            'mode': self.mode,
            'witness': self.witness,
            'value': self.value,
            'reason': self.reason
        }

    def __repr__(self):
        return "<ZeroVerdict status:%s mode:%s witness:%s>" % (self.status, self.mode, self.witness)


class Verdict:
    """
        Aggregated verdict of a family of residuals: Symmetry only if every residual is Zero.
    """
    SYMMETRY = 'Symmetry'
    NOT_SYMMETRY = 'NotSymmetry'
    INCONCLUSIVE = 'Inconclusive'

    def __init__(self, json):
        self.status = json['status']
        self.witness = json.get('witness')
        self.modes = json.get('modes', [])

    @staticmethod
    def combine(zero_verdicts):
        zero_verdicts = list(zero_verdicts)
        modes = sorted(set(v.mode for v in zero_verdicts))
        for verdict in zero_verdicts:
            if verdict.is_nonzero:
                return Verdict({'status': Verdict.NOT_SYMMETRY, 'witness': verdict.witness, 'modes': modes})
        if any(v.status == ZeroVerdict.INCONCLUSIVE for v in zero_verdicts):
            return Verdict({'status': Verdict.INCONCLUSIVE, 'modes': modes})
        return Verdict({'status': Verdict.SYMMETRY, 'modes': modes})

    @property
    def holds(self):
        return self.status == self.SYMMETRY

    def to_json(self):
        return {
            'status': self.status,
            'witness': self.witness,
            'modes': self.modes
        }

    def __repr__(self):
        return "<Verdict status:%s witness:%s>" % (self.status, self.witness)


class ItoVerdict:
    """
        Whether a transformed system is again of Ito type. 'coefficients' verdicts come from
        d^F = d^S = 0 in the new variables, 'misawa' verdicts from the preservation conditions
        on the change of variables.
    """
    ITO = 'Ito'
    NOT_ITO = 'NotIto'
    INCONCLUSIVE = 'Inconclusive'
    COEFFICIENTS = 'coefficients'
    MISAWA = 'misawa'

    def __init__(self, json):
        self.status = json['status']
        self.source = json.get('source', self.COEFFICIENTS)
        self.witness = json.get('witness')

    @staticmethod
    def combine(zero_verdicts, source=COEFFICIENTS):
        verdict = Verdict.combine(zero_verdicts)
        status = {Verdict.SYMMETRY: ItoVerdict.ITO, Verdict.NOT_SYMMETRY: ItoVerdict.NOT_ITO}.get(
            verdict.status, ItoVerdict.INCONCLUSIVE)
        return ItoVerdict({'status': status, 'source': source, 'witness': verdict.witness})

    @property
    def holds(self):
        return self.status == self.ITO

    def to_json(self):
        return {
            'status': self.status,
            'source': self.source,
            'witness': self.witness
        }

    def __repr__(self):
        return "<ItoVerdict status:%s source:%s>" % (self.status, self.source)


class Classification:
    def __init__(self, json):
        self.acting_on_time = json['acting_on_time']
        self.random = json['random']
        self.w_acting = json['w_acting']
        self.simple = json['simple']
        self.admissible = json['admissible']
        self.reasons = json.get('reasons', [])

    def labels(self):
        labels = ['simple' if self.simple else 'not simple',
                  'random' if self.random else 'deterministic']
        if self.w_acting:
            labels.append('W-symmetry')
        return labels

    def to_json(self):
        return {
            'acting_on_time': self.acting_on_time,
            'random': self.random,
            'w_acting': self.w_acting,
            'simple': self.simple,
            'admissible': self.admissible,
            'reasons': self.reasons,
            'labels': self.labels()
        }

    def __repr__(self):
        return "<Classification %s admissible:%s>" % (', '.join(self.labels()), self.admissible)


class ConformalResult:
    def __init__(self, json):
        self.admissible = json['admissible']
        self.dilation = json.get('dilation')
        self.skew = json.get('skew')
        self.reason = json.get('reason')

    def to_json(self):
        return {
            'admissible': self.admissible,
            'dilation': self.dilation,
            'skew': self.skew,
            'reason': self.reason
        }

    def __repr__(self):
        if self.admissible:
            return "<ConformalResult Admissible lambda:%s>" % self.dilation
        return "<ConformalResult Rejected reason:%s>" % self.reason


class SymmetryReport:
    """
        Residual expressions and verdicts per determining-equation family. Families are keyed
        by name ('drift', 'diffusion'); each residual entry carries its own ZeroVerdict.
    """

    def __init__(self, json):
        self.calculus = json['calculus']
        self.residuals = json['residuals']
        self.zero_verdicts = json['zero_verdicts']
        self.verdicts = {family: Verdict.combine(_flatten(values))
                         for family, values in self.zero_verdicts.items()}
        self.notes = json.get('notes', [])

    @property
    def verdict(self):
        return Verdict.combine(v for values in self.zero_verdicts.values() for v in _flatten(values))

    def to_json(self):
        return {
            'calculus': self.calculus,
            'verdict': self.verdict.to_json(),
            'families': {
                family: {
                    'verdict': self.verdicts[family].to_json(),
                    'residuals': _nested(self.residuals[family], _text),
                    'zero_tests': _nested(self.zero_verdicts[family], lambda v: v.to_json())
                } for family in self.residuals
            },
            'notes': self.notes
        }

    def __repr__(self):
        return "<SymmetryReport calculus:%s verdict:%s>" % (self.calculus, self.verdict.status)


def _flatten(values):
    for value in values:
        if isinstance(value, (list, tuple)):
            yield from _flatten(value)
        else:
            yield value


def _nested(values, function):
    return [_nested(v, function) if isinstance(v, (list, tuple)) else function(v) for v in values]


class Theorem1Report:
    GUARANTEED = 'guaranteed'
    ACCIDENTAL = 'accidental'
    BROKEN = 'broken'

    def __init__(self, json):
        self.ito = json['ito']
        self.stratonovich = json['stratonovich']
        self.calr = json['calr']
        self.discrepancy = json['discrepancy']
        self.discrepancy_matches = json['discrepancy_matches']
        self.agreement = json['agreement']
        self.reason = json.get('reason')

    def to_json(self):
        return {
            'ito': self.ito.to_json(),
            'stratonovich': self.stratonovich.to_json(),
            'calr': [_text(e) for e in self.calr],
            'discrepancy': [_text(e) for e in self.discrepancy],
            'discrepancy_matches': [v.to_json() for v in self.discrepancy_matches],
            'agreement': self.agreement,
            'reason': self.reason
        }

    def __repr__(self):
        return "<Theorem1Report agreement:%s>" % self.agreement


class SolvabilityReport:
    SOLVABLE = 'Solvable'
    NOT_SOLVABLE = 'NotSolvable'
    INCONCLUSIVE = 'Inconclusive'

    def __init__(self, json):
        self.status = json['status']
        self.structure_constants = json.get('structure_constants')
        self.derived_dimensions = json.get('derived_dimensions', [])
        self.ordering = json.get('ordering', [])
        self.abelian = json.get('abelian')
        self.residual = json.get('residual')
        self.reason = json.get('reason')

    def to_json(self):
        return {
            'status': self.status,
            'structure_constants': self.structure_constants,
            'derived_dimensions': self.derived_dimensions,
            'ordering': self.ordering,
            'abelian': self.abelian,
            'residual': self.residual,
            'reason': self.reason
        }

    def __repr__(self):
        return "<SolvabilityReport status:%s derived:%s>" % (self.status, self.derived_dimensions)


class CompatibilityReport:
    def __init__(self, json):
        self.compatible = json['compatible']
        self.gamma = json['gamma']
        self.lhs = json['lhs']
        self.rhs = json['rhs']
        self.zero_test = json['zero_test']

    def to_json(self):
        return {
            'compatible': self.compatible,
            'gamma': _text(self.gamma),
            'lhs': _text(self.lhs),
            'rhs': _text(self.rhs),
            'zero_test': self.zero_test.to_json()
        }

    def __repr__(self):
        return "<CompatibilityReport compatible:%s lhs:%s rhs:%s>" % (self.compatible, _text(self.lhs),
                                                                      _text(self.rhs))


class RectificationReport:
    def __init__(self, json):
        self.values = json['values']
        self.zero_tests = json['zero_tests']
        self.rectified_along = json.get('rectified_along')
        self.target = json.get('target')

    @property
    def rectified(self):
        return self.rectified_along is not None and \
            (self.target is None or self.rectified_along == self.target)

    def to_json(self):
        return {
            'values': [_text(v) for v in self.values],
            'zero_tests': [{k: v.to_json() for k, v in tests.items()} for tests in self.zero_tests],
            'rectified_along': self.rectified_along,
            'rectified': self.rectified
        }

    def __repr__(self):
        return "<RectificationReport rectified:%s along:%s>" % (self.rectified, self.rectified_along)


class StatsReport:
    PASS = 'Pass'
    FAIL = 'Fail'
    INCONCLUSIVE = 'Inconclusive'

    def __init__(self, json):
        self.times = json.get('times')
        self.means = json.get('means')
        self.variances = json.get('variances')
        self.standard_errors = json.get('standard_errors')
        self.n_effective = json.get('n_effective')
        self.excluded = json.get('excluded', 0)
        self.ks_statistic = json.get('ks_statistic')
        self.ks_pvalue = json.get('ks_pvalue')
        self.mean_difference_se = json.get('mean_difference_se')
        self.verdict = json.get('verdict')
        self.parameters = json.get('parameters', {})

    def to_json(self):
        return {
            'n_effective': self.n_effective,
            'excluded': self.excluded,
            'terminal_mean': None if self.means is None else [float(v) for v in self.means[-1]],
            'terminal_variance': None if self.variances is None else [float(v) for v in self.variances[-1]],
            'ks_statistic': self.ks_statistic,
            'ks_pvalue': self.ks_pvalue,
            'mean_difference_se': self.mean_difference_se,
            'verdict': self.verdict,
            'parameters': self.parameters
        }

    def __repr__(self):
        return "<StatsReport verdict:%s n:%s excluded:%s>" % (self.verdict, self.n_effective, self.excluded)


class RunConfig:
    def __init__(self, json):
        self.model = json.get('model')
        self.command = json['command']
        self.seed = json['seed']
        self.dt = json['dt']
        self.paths = json['paths']
        self.horizon = json['horizon']
        self.tolerance = json.get('tolerance')
        self.points = json.get('points')
        self.csv_out = json.get('csv_out')
        self.force = json.get('force', False)
        self.strict = json.get('strict', False)

    def to_json(self):
        return {
            'model': self.model,
            'command': self.command,
            'seed': self.seed,
            'dt': self.dt,
            'paths': self.paths,
            'horizon': self.horizon,
            'tolerance': self.tolerance,
            'points': self.points,
            'csv_out': self.csv_out,
            'force': self.force,
            'strict': self.strict
        }

    def __repr__(self):
        return "<RunConfig command:%s model:%s seed:%s>" % (self.command, self.model, self.seed)


# ------------ Domain Models ------------ #

def _check_matrix(sigma, n, m, name):
    if len(sigma) != n or any(len(row) != m for row in sigma):
        raise DimensionError('%s must be a %dx%d matrix.' % (name, n, m))


class ItoSystem:
    """
        dx^i = f^i(x, t) dt + sigma^i_k(x, t) dw^k. Coefficients may not depend on the Wiener variables.
    """

    def __init__(self, ctx, f, sigma):
        self.ctx = ctx
        self.f = tuple(as_expression(e) for e in f)
        self.sigma = tuple(tuple(as_expression(e) for e in row) for row in sigma)
        if len(self.f) != ctx.n:
            raise DimensionError('The drift needs %d components.' % ctx.n)
        _check_matrix(self.sigma, ctx.n, ctx.m, 'sigma')
        for e in self.f + tuple(e for row in self.sigma for e in row):
            if depends_on(e, WIENER):
                raise WienerDependenceError("Ito coefficients may not depend on w: '%s'." % to_text(e))

    @property
    def drift(self):
        return self.f

    def to_json(self):
        return {
            'type': 'ito',
            'n': self.ctx.n,
            'm': self.ctx.m,
            'f': [_text(e) for e in self.f],
            'sigma': _matrix_text(self.sigma)
        }

    def __repr__(self):
        return "<ItoSystem f:%s sigma:%s>" % ([_text(e) for e in self.f], _matrix_text(self.sigma))


class StratSystem:
    """
        dx^i = b^i(x, t) dt + sigma^i_k(x, t) o dw^k.
    """

    def __init__(self, ctx, b, sigma):
        self.ctx = ctx
        self.b = tuple(as_expression(e) for e in b)
        self.sigma = tuple(tuple(as_expression(e) for e in row) for row in sigma)
        if len(self.b) != ctx.n:
            raise DimensionError('The drift needs %d components.' % ctx.n)
        _check_matrix(self.sigma, ctx.n, ctx.m, 'sigma')
        for e in self.b + tuple(e for row in self.sigma for e in row):
            if depends_on(e, WIENER):
                raise WienerDependenceError("Stratonovich coefficients may not depend on w: '%s'." % to_text(e))

    @property
    def drift(self):
        return self.b

    def to_json(self):
        return {
            'type': 'stratonovich',
            'n': self.ctx.n,
            'm': self.ctx.m,
            'b': [_text(e) for e in self.b],
            'sigma': _matrix_text(self.sigma)
        }

    def __repr__(self):
        return "<StratSystem b:%s sigma:%s>" % ([_text(e) for e in self.b], _matrix_text(self.sigma))


class DriftCorrection:
    def __init__(self, rho):
        self.rho = tuple(rho)

    def to_json(self):
        return {'rho': [_text(e) for e in self.rho]}

    def __repr__(self):
        return "<DriftCorrection rho:%s>" % [_text(e) for e in self.rho]


class VectorField:
    """
        X = phi^i d_i + tau d_t + h^k d^_k. The noise part is None, GENERAL (explicit h^k) or
        LINEAR (h = R w with a constant matrix R whose entries are constant expressions).
    """
    NONE = 'none'
    GENERAL = 'general'
    LINEAR = 'linear'

    def __init__(self, phi, tau=0, h=None, R=None, name=None):
        self.name = name
        self.phi = tuple(as_expression(e) for e in phi)
        self.tau = as_expression(tau)
        if h is not None and R is not None:
            raise ModelError('A vector field takes either h or R, not both.')
        if R is not None:
            self.noise = self.LINEAR
            self.R = tuple(tuple(as_expression(e) for e in row) for row in R)
            if any(len(row) != len(self.R) for row in self.R):
                raise DimensionError('R must be square.')
            for entry in (e for row in self.R for e in row):
                if free_variables(entry):
                    raise ModelError("R must be constant: '%s'." % to_text(entry))
            self.h = None
        elif h is not None:
            self.noise = self.GENERAL
            self.h = tuple(as_expression(e) for e in h)
            self.R = None
        else:
            self.noise = self.NONE
            self.h = None
            self.R = None

    def to_json(self):
        return {
            'name': self.name,
            'phi': [_text(e) for e in self.phi],
            'tau': _text(self.tau),
            'noise': self.noise,
            'h': None if self.h is None else [_text(e) for e in self.h],
            'R': None if self.R is None else _matrix_text(self.R)
        }

    def __repr__(self):
        return "<VectorField %s phi:%s noise:%s>" % (self.name, [_text(e) for e in self.phi], self.noise)


class ChangeOfVariables:
    """
        OLD_TO_NEW: forward[i] are the new coordinates y^i = Phi^i(x, t; w).
        NEW_TO_OLD: forward[i] are the old coordinates x^i = Phi^i(y, t; z), and the Wiener map is
        w = R z (constant R) or w = omega(y, t; z).
        In both cases the new coordinates reuse the state/Wiener VarIds of a new context.
    """
    OLD_TO_NEW = 'old_to_new'
    NEW_TO_OLD = 'new_to_old'

    def __init__(self, direction, forward, inverse=None, R=None, omega=None, new_ctx=None, name=None,
                 coordinates=None):
        if direction not in (self.OLD_TO_NEW, self.NEW_TO_OLD):
            raise ModelError("Unknown direction '%s'." % direction)
        if direction == self.OLD_TO_NEW and (R is not None or omega is not None):
            raise ModelError('Wiener maps are only supported for new_to_old changes of variables.')
        self.name = name
        self.direction = direction
        self.forward = tuple(as_expression(e) for e in forward)
        self.inverse = None if inverse is None else tuple(as_expression(e) for e in inverse)
        self.R = None if R is None else tuple(tuple(as_expression(e) for e in row) for row in R)
        self.omega = None if omega is None else tuple(as_expression(e) for e in omega)
        self.new_ctx = new_ctx
        # new coordinates written in the old variables, for rectification checks
        self.coordinates = None if coordinates is None else tuple(as_expression(e) for e in coordinates)
        self.cache = {}

    def to_json(self):
        return {
            'name': self.name,
            'direction': self.direction,
            'forward': [_text(e) for e in self.forward],
            'inverse': None if self.inverse is None else [_text(e) for e in self.inverse],
            'R': None if self.R is None else _matrix_text(self.R),
            'omega': None if self.omega is None else [_text(e) for e in self.omega]
        }

    def __repr__(self):
        return "<ChangeOfVariables %s %s forward:%s>" % (self.name, self.direction,
                                                         [_text(e) for e in self.forward])


class GeneralSDE:
    """
        dy = F dt + S dz, where F and S may depend on the driving variables. `variables` is 'new'
        when the coefficients are written in the new coordinates and 'mixed' when they are still
        written in the old ones.
    """
    WIENER_DRIVEN = 'Wiener'

    def __init__(self, ctx, F, S, ito_like, driving=WIENER_DRIVEN, variables='new'):
        self.ctx = ctx
        self.F = tuple(F)
        self.S = tuple(tuple(row) for row in S)
        self.ito_like = ito_like
        self.driving = driving
        self.variables = variables

    def to_json(self):
        return {
            'F': [_text(e) for e in self.F],
            'S': _matrix_text(self.S),
            'ito_like': self.ito_like.to_json(),
            'driving': self.driving,
            'variables': self.variables
        }

    def __repr__(self):
        return "<GeneralSDE F:%s S:%s ito_like:%s>" % ([_text(e) for e in self.F], _matrix_text(self.S),
                                                      self.ito_like.status)


class Gamma:
    def __init__(self, gamma):
        self.gamma = gamma

    def to_json(self):
        return {'gamma': _text(self.gamma)}

    def __repr__(self):
        return "<Gamma %s>" % _text(self.gamma)


class ReducedSystem:
    def __init__(self, json):
        self.system = json['system']
        self.rectified_along = json['rectified_along']
        self.independence = json['independence']
        self.reduced_block = json['reduced_block']
        self.reconstruction = json['reconstruction']
        self.ito_like = json['system'].ito_like
        self.notes = json.get('notes', [])

    def to_json(self):
        return {
            'system': self.system.to_json(),
            'rectified_along': self.rectified_along,
            'independence': self.independence.to_json(),
            'reduced_block': self.reduced_block,
            'reconstruction': self.reconstruction,
            'notes': self.notes
        }

    def __repr__(self):
        return "<ReducedSystem along:%s ito_like:%s>" % (self.rectified_along, self.ito_like.status)


class ReductionChain:
    def __init__(self, json):
        self.steps = json['steps']
        self.completed = json['completed']
        self.aborted = json.get('aborted')

    def to_json(self):
        return {
            'steps': [step.to_json() for step in self.steps],
            'completed': self.completed,
            'aborted': self.aborted
        }

    def __repr__(self):
        return "<ReductionChain steps:%d completed:%s>" % (len(self.steps), self.completed)


class SolutionForm:
    """
        y(t) = y0 + int F(s, w(s)) ds + int S(s, w(s)) dw(s) in the integrating coordinate, with the
        map back to the original variable (back_map, in terms of the integrating coordinate).
    """

    def __init__(self, ctx, F, S, to_integrating=None, back_map=None):
        self.ctx = ctx
        self.F = F
        self.S = tuple(S)
        self.to_integrating = to_integrating
        self.back_map = back_map

    def to_json(self):
        return {
            'F': _text(self.F),
            'S': [_text(e) for e in self.S],
            'to_integrating': _text(self.to_integrating),
            'back_map': _text(self.back_map)
        }

    def __repr__(self):
        return "<SolutionForm F:%s S:%s>" % (_text(self.F), [_text(e) for e in self.S])


class BrownianGrid:
    def __init__(self, t0, horizon, dt, increments, seed):
        self.t0 = t0
        self.horizon = horizon
        self.dt = dt
        self.steps = increments.shape[-2]
        self.increments = increments
        self.seed = seed

    def times(self):
        return self.t0 + self.dt * np.arange(self.steps + 1)

    def __repr__(self):
        return "<BrownianGrid t0:%s T:%s dt:%s steps:%s seed:%s>" % (self.t0, self.horizon, self.dt, self.steps,
                                                                     self.seed)


class Ensemble:
    """
        Monte Carlo paths. `terminal` and `terminal_w` hold the final state and Wiener values of
        every kept path; `paths`/`wiener_paths` hold full trajectories when they were stored.
    """
    EULER_MARUYAMA = 'EulerMaruyama'
    HEUN = 'Heun'

    def __init__(self, json):
        self.scheme = json['scheme']
        self.t0 = json['t0']
        self.horizon = json['horizon']
        self.dt = json['dt']
        self.steps = json['steps']
        self.seed = json['seed']
        self.terminal = json['terminal']
        self.terminal_w = json['terminal_w']
        self.valid = json['valid']
        self.mean = json['mean']
        self.variance = json['variance']
        self.count = json['count']
        self.paths = json.get('paths')
        self.wiener_paths = json.get('wiener_paths')

    @property
    def excluded(self):
        return int((~self.valid).sum())

    @property
    def size(self):
        return int(self.valid.shape[0])

    def __repr__(self):
        return "<Ensemble %s N:%s excluded:%s>" % (self.scheme, self.size, self.excluded)


class PreservationReport:
    """
        Misawa-operator tests of a change of variables: 'L0' holds the n x m verdicts of
        L0(d^_m Phi^i) and 'Lk' the n x m x m verdicts of L_k(d^_m Phi^i).
    """

    def __init__(self, json):
        self.residuals = json['residuals']
        self.zero_verdicts = json['zero_verdicts']
        self.verdict = Verdict.combine(v for values in self.zero_verdicts.values() for v in _flatten(values))

    @property
    def preserved(self):
        return self.verdict.holds

    def to_json(self):
        return {
            'preserved': self.preserved,
            'verdict': self.verdict.to_json(),
            'residuals': {name: _nested(values, _text) for name, values in self.residuals.items()},
            'zero_tests': {name: _nested(values, lambda v: v.to_json())
                           for name, values in self.zero_verdicts.items()}
        }

    def __repr__(self):
        return "<PreservationReport preserved:%s>" % self.preserved


class Model:
    """
        A model file after parsing: the system with its context, the candidate fields with their
        expected verdicts, the changes of variables and the simulation defaults.
    """

    def __init__(self, json):
        self.name = json['name']
        self.path = json.get('path')
        self.digest = json.get('digest')
        self.description = json.get('description')
        self.ctx = json['ctx']
        self.system = json['system']
        self.fields = json.get('fields', {})
        self.expectations = json.get('expectations', {})
        self.covs = json.get('covs', {})
        self.simulation = json.get('simulation', {})

    def field(self, name):
        if name not in self.fields:
            raise ModelError("The model '%s' has no vector field '%s' (available: %s)." %
                             (self.name, name, ', '.join(self.fields) or 'none'))
        return self.fields[name]

    def cov(self, name):
        if name not in self.covs:
            raise ModelError("The model '%s' has no change of variables '%s' (available: %s)." %
                             (self.name, name, ', '.join(self.covs) or 'none'))
        return self.covs[name]

    def to_json(self):
        return {
            'name': self.name,
            'path': self.path,
            'digest': self.digest,
            'description': self.description,
            'params': dict(self.ctx.params),
            'system': self.system.to_json(),
            'fields': [X.to_json() for X in self.fields.values()],
            'changes_of_variables': [cov.to_json() for cov in self.covs.values()],
            'simulation': self.simulation
        }

    def __repr__(self):
        return "<Model %s n:%d m:%d fields:%s>" % (self.name, self.ctx.n, self.ctx.m, list(self.fields))
