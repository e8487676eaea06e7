"""
    Regression suite over the bundled models. Every model contributes one row per expected
    verdict declared in its vector field sections; the checks registered with @extra_check add
    the closed forms, algebra tables and Monte Carlo runs that a verdict string cannot express.
"""
import math
from functools import wraps

import click
import numpy as np

import app
from expressions.actions import is_identically_zero
from expressions.nodes import ExpressionError, add, neg, to_text
from expressions.parser import parse
from kozlov import actions as kozlov
from model_manager import model_manager
from models import ItoVerdict, ModelError, SolvabilityReport, StatsReport, Theorem1Report, Verdict
from montecarlo import actions as montecarlo
from symmetries.actions import (conformal_check, general_linear_consistency, residual_W_ito, residual_W_strat,
                                theorem1_analysis, witness_of)
from symmetries.algebra import solvability_check
from systems.actions import as_ito
from . import factory

PASSED = 'pass'
FAILED = 'fail'
INCONCLUSIVE = 'inconclusive'

EXTRA_CHECKS = {}


def extra_check(example):
    """
        Registers a check of one bundled model. The check receives the loaded model, whether
        Monte Carlo runs are enabled and the number of paths, and returns its rows.
    """
    def register(function):
        @wraps(function)
        def wrapper(model, simulate, paths):
            try:
                return function(model, simulate, paths)
            except (ModelError, ExpressionError) as error:
                return [row(model.name, function.__name__, 'no error', str(error), False)]
        EXTRA_CHECKS.setdefault(example, []).append(wrapper)
        return wrapper
    return register


def row(example, check, expected, observed, passed, detail=None):
    if passed is None:
        status = INCONCLUSIVE
    else:
        status = PASSED if passed else FAILED
    return {'example': example, 'check': check, 'expected': expected, 'observed': observed, 'status': status,
            'detail': detail}


def same(a, b, ctx):
    if isinstance(b, str):
        b = parse(b, ctx)
    return is_identically_zero(add(a, neg(b)), ctx).is_zero


def simulation_options(model, paths=None):
    simulation = model.simulation
    return {
        't0': simulation.get('t0', 0.0),
        'horizon': simulation.get('horizon', app.config['MC_HORIZON']),
        'dt': simulation.get('dt', app.config['MC_DT']),
        'paths': paths if paths is not None else simulation.get('paths', app.config['MC_PATHS']),
        'seed': simulation.get('seed', app.config['MC_SEED'])
    }


def _stats_row(example, check, report):
    passed = {StatsReport.PASS: True, StatsReport.FAIL: False}.get(report.verdict)
    difference = report.mean_difference_se
    observed = '%s (%s SE, %d excluded)' % (report.verdict, 'n/a' if difference is None else '%.2f' % difference,
                                            report.excluded)
    return row(example, check, 'Pass (< %g SE)' % app.config['MC_MEAN_SE'], observed, passed, report.to_json())


def expectation_rows(model):
    """
        One row per expected verdict of the model's vector fields.
    """
    rows = []
    for name, expected in model.expectations.items():
        if not expected:
            continue
        entry = factory.analyse_field(model.fields[name], model.system)
        for kind, verdict in expected.items():
            observed = entry['verdicts'].get(kind, 'not analysed')
            passed = None if observed == Verdict.INCONCLUSIVE and verdict != observed else observed == verdict
            rows.append(row(model.name, '%s %s verdict' % (name, kind), verdict, observed, passed))
    return rows


def run_suite(only=(), simulate=True, paths=None):
    """
        Runs the suite.

        *Parameters:*
            - *only (list)*: Bundled model names; all of them when empty.
            - *simulate (bool)*: Include the Monte Carlo checks.
            - *paths (int)*: Number of paths of the Monte Carlo checks (default MC_PATHS).

        *Returns:*
            - *list*: Rows with the keys example, check, expected, observed, status and detail.

        *Raises:*
            - *ModelError*: If a requested model is not bundled.
    """
    names = model_manager.bundled()
    unknown = [name for name in only if name not in names]
    if unknown:
        raise ModelError('Unknown example %s (available: %s).' % (', '.join(unknown), ', '.join(names)))
    rows = []
    for name in names:
        if only and name not in only:
            continue
        click.echo('Checking %s...' % name, err=True)
        model = model_manager.load(name)
        rows += expectation_rows(model)
        for check in EXTRA_CHECKS.get(name, []):
            rows += check(model, simulate, paths)
    return rows


########################################################################################################################
# Scalar integration
########################################################################################################################

def _pipeline_row(model, solution, paths):
    options = simulation_options(model, paths)
    report = montecarlo.solution_validation(as_ito(model.system), solution, model.simulation['x0'], **options)
    return _stats_row(model.name, 'solution form against Euler-Maruyama', report)


@extra_check('example1')
def example1_integration(model, simulate, paths):
    cov, sde, solution = kozlov.integrate_by_symmetry(model.system, model.field('X'))
    ctx = sde.ctx
    observed = 'Phi = %s, F = %s, S = %s, %s' % (to_text(cov.forward[0]), to_text(sde.F[0]), to_text(sde.S[0][0]),
                                                  sde.ito_like.status)
    passed = same(sde.F[0], '1', ctx) and same(sde.S[0][0], '1', ctx) and sde.ito_like.holds
    rows = [row(model.name, 'Kozlov variable', 'F = 1, S = 1, Ito', observed, passed)]
    if simulate:
        rows.append(_pipeline_row(model, solution, paths))
    return rows


@extra_check('example2')
def example2_integration(model, simulate, paths):
    sys = model.system
    compatibility = kozlov.bcomp_check(sys, model.field('X'))
    ctx = sys.ctx
    rows = [row(model.name, 'compatibility relation', 'lhs = 0, rhs = exp(w), incompatible',
                'lhs = %s, rhs = %s, compatible = %s' % (to_text(compatibility.lhs), to_text(compatibility.rhs),
                                                         compatibility.compatible),
                not compatibility.compatible and same(compatibility.lhs, '0', ctx) and
                same(compatibility.rhs, 'exp(w)', ctx))]
    cov = model.cov('kozlov')
    sde = kozlov.transform_ito(sys, cov)
    rows.append(row(model.name, 'Kozlov variable', 'F = exp(w), S = 0, NotIto',
                    'F = %s, S = %s, %s' % (to_text(sde.F[0]), to_text(sde.S[0][0]), sde.ito_like.status),
                    same(sde.F[0], 'exp(w)', sde.ctx) and same(sde.S[0][0], '0', sde.ctx) and
                    sde.ito_like.status == ItoVerdict.NOT_ITO))
    if simulate:
        rows.append(_pipeline_row(model, kozlov.integrate_scalar(sde, cov), paths))
    return rows


########################################################################################################################
# W-symmetries
########################################################################################################################

def _rectification_row(model, field, cov, coordinates, along):
    report = kozlov.rectification_check(field, coordinates, model.ctx)
    expected = 'not rectified' if along is None else 'rectified along %d' % along
    observed = 'not rectified' if report.rectified_along is None else 'rectified along %d' % report.rectified_along
    return row(model.name, '%s rectified by %s' % (field.name, cov.name), expected, observed,
               report.rectified_along == along)


@extra_check('example3')
def example3_scaling_reduction(model, simulate, paths):
    scaling = model.cov('scaling')
    sde = kozlov.transform_W(model.system, scaling)
    ctx = sde.ctx
    expected_S = 'mu/(1 - mu*zeta)'
    expected_F = '(lambda + (1/2)*mu^2/(1 - mu*zeta))/(1 - mu*zeta)'
    rows = [row(model.name, 'scaling coordinates', 'S = %s, F = %s, NotIto' % (expected_S, expected_F),
                'S = %s, F = %s, %s' % (to_text(sde.S[0][0]), to_text(sde.F[0]), sde.ito_like.status),
                same(sde.S[0][0], expected_S, ctx) and same(sde.F[0], expected_F, ctx) and
                sde.ito_like.status == ItoVerdict.NOT_ITO)]
    D = model.field('D')
    log = model.cov('log')
    rows.append(_rectification_row(model, D, log, kozlov.coordinates_of(log, model.ctx), None))
    rows.append(_rectification_row(model, D, scaling, scaling.coordinates, 0))
    return rows


@extra_check('example4')
def example4_stratonovich_residual(model, simulate, paths):
    X = model.field('X')
    strat = residual_W_strat(X, model.system)
    residual = strat.residuals['drift'][0]
    expected = 'alpha*(alpha - 1)*mu^2*x^(2*alpha - 1)'
    matches = same(residual, expected, model.ctx) or same(neg(residual), expected, model.ctx)
    analysis = theorem1_analysis(X, model.system)
    return [
        row(model.name, 'Stratonovich drift residual', '+-' + expected, to_text(residual), matches),
        row(model.name, 'Ito and Stratonovich agreement', Theorem1Report.BROKEN, analysis.agreement,
            analysis.agreement == Theorem1Report.BROKEN)
    ]


@extra_check('example6')
def example6_conformal_gate(model, simulate, paths):
    rows = []
    for name, admissible in (('X1', True), ('X2', False), ('Rot', True)):
        result = conformal_check(model.field(name).R, model.ctx)
        rows.append(row(model.name, 'conformal gate of %s' % name, 'admissible' if admissible else 'rejected',
                        'admissible' if result.admissible else 'rejected', result.admissible == admissible,
                        result.reason))
    return rows


COMMUTATORS = [
    ['0', '0', '0', '0'],
    ['0', '0', '-2*X4', '-2*X3'],
    ['0', '2*X4', '0', '2*X2'],
    ['0', '2*X3', '-2*X2', '0']
]


@extra_check('example7')
def example7_algebra(model, simulate, paths):
    generators = [model.field(name) for name in ('X1', 'X2', 'X3', 'X4')]
    full = solvability_check(generators, model.ctx)
    rows = [
        row(model.name, 'commutator table', COMMUTATORS, full.structure_constants,
            full.structure_constants == COMMUTATORS),
        row(model.name, 'solvability of X1..X4', SolvabilityReport.NOT_SOLVABLE, full.status,
            full.status == SolvabilityReport.NOT_SOLVABLE, {'derived_dimensions': full.derived_dimensions})
    ]
    pair = solvability_check([generators[0], generators[3]], model.ctx)
    rows.append(row(model.name, 'solvability of X1, X4', 'Solvable, abelian',
                    '%s, %s' % (pair.status, 'abelian' if pair.abelian else 'not abelian'),
                    pair.status == SolvabilityReport.SOLVABLE and pair.abelian))
    chain = kozlov.reduce_sequence(model.system, [generators[0], generators[3]],
                                   [model.cov('scaling'), model.cov('rotation')])
    rows.append(row(model.name, 'reduction by X1 then X4', 'stops after 1 step, not of Ito type',
                    'completed' if chain.completed else 'stopped after %d steps: %s' % (len(chain.steps),
                                                                                       chain.aborted),
                    not chain.completed and len(chain.steps) == 1 and 'not of Ito type' in chain.aborted))
    return rows


@extra_check('example8')
def example8_rotation_reduction(model, simulate, paths):
    X = model.field('XRot')
    analysis = theorem1_analysis(X, model.system)
    reduced = kozlov.reduce_step(model.system, X, model.cov('polar'))
    return [
        row(model.name, 'Ito and Stratonovich agreement', Theorem1Report.GUARANTEED, analysis.agreement,
            analysis.agreement == Theorem1Report.GUARANTEED, analysis.reason),
        row(model.name, 'rotation reduction', 'rectified along 3, independent',
            'rectified along %d, %s' % (reduced.rectified_along, reduced.independence.status),
            reduced.rectified_along == 3 and reduced.independence.holds, reduced.notes)
    ]


@extra_check('example9')
def example9_general_noise(model, simulate, paths):
    rows = []
    for name in ('D', 'Rot'):
        verdict = general_linear_consistency(model.field(name), model.system)
        rows.append(row(model.name, '%s general and linear noise residuals' % name, Verdict.SYMMETRY,
                        verdict.status, verdict.holds))
    return rows


def _relative_error(actual, expected):
    return float(np.max(np.abs(actual - expected) / np.maximum(1.0, np.abs(expected))))


@extra_check('example11')
def example11_exactness(model, simulate, paths):
    A, B = model.ctx.params['A'], model.ctx.params['B']
    x0 = float(np.asarray(model.simulation['x0']).reshape(-1)[0])
    ens = montecarlo.euler_maruyama(model.system, x0, horizon=1.0, dt=0.01, paths=50,
                                    seed=model.simulation.get('seed', app.config['MC_SEED']), store_paths=True)
    times = ens.t0 + ens.dt * np.arange(ens.steps + 1)
    error = _relative_error(ens.paths[:, :, 0], x0 + A * times + B * ens.wiener_paths[:, :, 0])
    rows = [row(model.name, 'Euler-Maruyama exactness', '< 1e-12', '%.3g' % error, error < 1e-12)]
    s = model.simulation.get('s', 0.4)
    mapped = montecarlo.apply_group_map(ens, model.field('X'), s, model.ctx)
    error = _relative_error(mapped.paths[:, :, 0], x0 + A * times + B * mapped.wiener_paths[:, :, 0])
    rows.append(row(model.name, 'flow of X maps solutions to solutions', '< 1e-12', '%.3g' % error, error < 1e-12))
    return rows


@extra_check('example12')
def example12_rectification(model, simulate, paths):
    D = model.field('D')
    log = model.cov('log')
    scaling = model.cov('scaling')
    return [_rectification_row(model, D, log, kozlov.coordinates_of(log, model.ctx), None),
            _rectification_row(model, D, scaling, scaling.coordinates, 0)]


@extra_check('appendixB')
def forbidden_forms(model, simulate, paths):
    rows = []
    for name, X in model.fields.items():
        report = residual_W_ito(X, model.system)
        witness = witness_of(report)
        rows.append(row(model.name, '%s witness' % name, 'NotSymmetry with a witness',
                        '%s, witness %s' % (report.verdict.status, witness),
                        report.verdict.status == Verdict.NOT_SYMMETRY and witness is not None))
    return rows


########################################################################################################################
# Monte Carlo
########################################################################################################################

@extra_check('linear')
def linear_moments(model, simulate, paths):
    if not simulate:
        return []
    options = simulation_options(model, paths)
    x0 = float(np.asarray(model.simulation['x0']).reshape(-1)[0])
    lam, mu = model.ctx.params['lambda'], model.ctx.params['mu']
    horizon = options['horizon'] - options['t0']
    stats = montecarlo.statistics(montecarlo.euler_maruyama(model.system, x0, **options))
    mean, variance = float(stats.means[-1][0]), float(stats.variances[-1][0])
    mean_se = float(stats.standard_errors[-1][0])
    variance_se = variance * math.sqrt(2.0 / (stats.n_effective - 1))
    exact_mean = x0 * math.exp(lam * horizon)
    exact_variance = mu ** 2 * math.expm1(2 * lam * horizon) / (2 * lam)
    rows = [
        row(model.name, 'terminal mean', '%.6f +- 3 SE' % exact_mean, '%.6f (SE %.2g)' % (mean, mean_se),
            abs(mean - exact_mean) < 3 * mean_se),
        row(model.name, 'terminal variance', '%.6f +- 3 SE' % exact_variance,
            '%.6f (SE %.2g)' % (variance, variance_se), abs(variance - exact_variance) < 3 * variance_se)
    ]
    X = model.field(model.simulation['field'])
    report = montecarlo.symmetry_validation(model.system, X, model.simulation['s'], x0, **options)
    rows.append(_stats_row(model.name, 'finite map of %s on solutions' % X.name, report))
    return rows


@extra_check('geometric')
def ito_and_stratonovich_schemes(model, simulate, paths):
    if not simulate:
        return []
    options = simulation_options(model, paths)
    x0 = model.simulation['x0']
    euler = montecarlo.statistics(montecarlo.euler_maruyama(model.system, x0, **options))
    heun = montecarlo.statistics(montecarlo.heun_stratonovich(model.system, x0, **options))
    spread = math.sqrt(euler.standard_errors[-1][0] ** 2 + heun.standard_errors[-1][0] ** 2)
    difference = abs(euler.means[-1][0] - heun.means[-1][0]) / spread
    return [row(model.name, 'Euler-Maruyama against Heun on shared increments', '< 4 SE', '%.2f SE' % difference,
                difference < 4.0)]
