import click

import app
from expressions.nodes import ExpressionError
from kozlov import actions as kozlov
from model_manager import model_manager
from models import (ChangeOfVariables, Ensemble, ItoSystem, ModelError, RunConfig, SolvabilityReport, StatsReport,
                    StratSystem, TransformationError, Verdict, VectorField)
from montecarlo import actions as montecarlo
from symmetries.algebra import solvability_check
from systems.actions import as_ito, drift_correction, ito_to_strat, strat_to_ito
from . import factory, regression

EXIT_SUCCESS = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2
EXIT_INCONCLUSIVE = 3

INCONCLUSIVE = (Verdict.INCONCLUSIVE, StatsReport.INCONCLUSIVE, SolvabilityReport.INCONCLUSIVE)


def progress(message):
    click.echo(message, err=True)


def tolerances():
    return {
        'zero_test_points': app.config['ZERO_TEST_POINTS'],
        'zero_test_abs_tol': app.config['ZERO_TEST_ABS_TOL'],
        'zero_test_seed': app.config['ZERO_TEST_SEED'],
        'conformal_tol': app.config['CONFORMAL_TOL'],
        'lstsq_tol': app.config['LSTSQ_TOL'],
        'mean_threshold_se': app.config['MC_MEAN_SE'],
        'ks_level': app.config['MC_KS_LEVEL'],
        'max_excluded': app.config['MC_MAX_EXCLUDED']
    }


def run_config(command, model=None, seed=None, dt=None, paths=None, horizon=None, csv_out=None, force=False,
               strict=False):
    """
        The run parameters of a command. Flags override the [simulation] section of the model,
        which overrides the configuration defaults.

        *Returns:*
            - *RunConfig*: Echoed in every report.
    """
    simulation = model.simulation if model is not None else {}

    def pick(flag, key, default):
        if flag is not None:
            return flag
        return simulation.get(key, app.config[default])

    return RunConfig({
        'model': None if model is None else model.name,
        'command': command,
        'seed': pick(seed, 'seed', 'MC_SEED'),
        'dt': pick(dt, 'dt', 'MC_DT'),
        'paths': pick(paths, 'paths', 'MC_PATHS'),
        'horizon': pick(horizon, 'horizon', 'MC_HORIZON'),
        'tolerance': tolerances(),
        'points': app.config['ZERO_TEST_POINTS'],
        'csv_out': csv_out,
        'force': force,
        'strict': strict
    })


def envelope(config, model=None):
    report = {'run': config.to_json()}
    if model is not None:
        report['model'] = {'name': model.name, 'path': model.path, 'digest': model.digest,
                           'description': model.description}
    return report


def _load(model):
    progress('Loading model %s...' % model)
    return model_manager.load(model)


def _failure(error, code=EXIT_USAGE):
    return False, str(error), code, {'error': str(error)}


def _strict_outcome(strict, statuses, message, report):
    if strict and any(status in INCONCLUSIVE for status in statuses):
        return False, message + ' Inconclusive results with --strict.', EXIT_INCONCLUSIVE, report
    return True, message, EXIT_SUCCESS, report


def _initial_value(model):
    if 'x0' not in model.simulation:
        raise ModelError("The model '%s' has no initial value (x0)." % model.name)
    return model.simulation['x0']


def cmd_check(model, fields=(), force=False, strict=False):
    """
        Verifies candidate symmetries of a model.

        *Parameters:*
            - *model (str)*: A model file or bundled model name.
            - *fields (list)*: Names of the vector fields to verify. Without names every field of
              the model is classified and none is verified.
            - *force (bool)*: Analyse W-fields rejected by the conformal gate.
            - *strict (bool)*: Treat Inconclusive verdicts as failures.

        *Returns:*
            - *tuple*: (check, message, exit code, report).
    """
    try:
        loaded = _load(model)
        selected = [loaded.field(name) for name in fields]
    except (ModelError, ExpressionError) as error:
        return _failure(error)
    config = run_config('check', loaded, force=force, strict=strict)
    report = envelope(config, loaded)
    try:
        if not selected:
            report['fields'] = {name: factory.classification_entry(X, loaded.system)
                                for name, X in loaded.fields.items()}
            return True, 'Classified %d fields.' % len(report['fields']), EXIT_SUCCESS, report
        entries = {}
        for X in selected:
            progress('Checking %s...' % X.name)
            entries[X.name] = factory.analyse_field(X, loaded.system, force)
    except (ModelError, ExpressionError) as error:
        return _failure(error)
    report['fields'] = entries
    statuses = [status for entry in entries.values() for status in entry['verdicts'].values()]
    summary = ', '.join('%s: %s' % (name, '/'.join(entry['verdicts'].values())) for name, entry in entries.items())
    return _strict_outcome(strict, statuses, summary, report)


def cmd_convert(model):
    """
        Rewrites a model in the other calculus through the drift correction
        rho^i = 1/2 (d_k sigma^{ij}) sigma^k_j.

        *Returns:*
            - *tuple*: (check, message, exit code, report). The report carries the converted
              system, the correction and the converted model file.
    """
    try:
        loaded = _load(model)
    except (ModelError, ExpressionError) as error:
        return _failure(error)
    sys = loaded.system
    if isinstance(sys, ItoSystem):
        other = ito_to_strat(sys)
    else:
        other = strat_to_ito(sys)
    report = envelope(run_config('convert', loaded), loaded)
    report['from'] = sys.to_json()
    report['to'] = other.to_json()
    report['correction'] = drift_correction(sys.sigma, sys.ctx).to_json()
    report['model_file'] = model_manager.dumps(loaded, other)
    calculus = 'Stratonovich' if isinstance(other, StratSystem) else 'Ito'
    return True, 'Converted %s to the %s form.' % (loaded.name, calculus), EXIT_SUCCESS, report


def _default_field(model):
    simulated = model.simulation.get('field')
    if simulated is not None and model.fields[simulated].noise == VectorField.NONE:
        return model.fields[simulated]
    for X in model.fields.values():
        if X.noise == VectorField.NONE:
            return X
    raise ModelError("The model '%s' has no field without noise part to integrate with." % model.name)


def _transform(sys, cov):
    if cov.direction == ChangeOfVariables.OLD_TO_NEW:
        return kozlov.transform_ito(sys, cov)
    return kozlov.transform_W(sys, cov)


def cmd_integrate(model, field=None, cov=None, simulate=False, seed=None, dt=None, paths=None, horizon=None,
                  strict=False):
    """
        Integrates a scalar equation by one of its simple symmetries: the symmetry is verified,
        the Kozlov variable (or the given change of variables) rectifies it and the transformed
        equation is solved by quadratures.

        *Parameters:*
            - *model (str)*: A model file or bundled model name (n = 1).
            - *field (str)*: The symmetry; defaults to the first field without noise part.
            - *cov (str)*: A change of variables of the model used instead of the Kozlov variable.
            - *simulate (bool)*: Cross-check the solution form against Euler-Maruyama on shared
              Brownian increments.

        *Returns:*
            - *tuple*: (check, message, exit code, report). A field that is not a symmetry or a
              failed cross-check gives exit code 2.
    """
    try:
        loaded = _load(model)
        X = loaded.field(field) if field is not None else _default_field(loaded)
        change = loaded.cov(cov) if cov is not None else None
        sys = as_ito(loaded.system)
    except (ModelError, ExpressionError) as error:
        return _failure(error)
    config = run_config('integrate', loaded, seed=seed, dt=dt, paths=paths, horizon=horizon, strict=strict)
    report = envelope(config, loaded)
    report['field'] = X.name
    try:
        entry = factory.analyse_field(X, sys)
    except (ModelError, ExpressionError) as error:
        return _failure(error)
    report['verification'] = entry
    if X.noise != VectorField.NONE or entry['verdicts'].get('standard') != Verdict.SYMMETRY:
        message = '%s is not a verified simple standard symmetry of %s.' % (X.name, loaded.name)
        return False, message, EXIT_FAILURE, report

    progress('Transforming %s with %s...' % (loaded.name, change.name if change is not None else 'the Kozlov variable'))
    try:
        if change is None:
            change, sde, solution = kozlov.integrate_by_symmetry(sys, X)
        else:
            sde = _transform(sys, change)
            solution = kozlov.integrate_scalar(sde, change)
    except (ModelError, ExpressionError) as error:
        report['error'] = str(error)
        return False, str(error), EXIT_USAGE, report
    report['change_of_variables'] = change.to_json()
    report['transformed'] = sde.to_json()
    report['solution'] = solution.to_json()
    statuses = [sde.ito_like.status]
    message = 'Integrated %s by %s.' % (loaded.name, X.name)
    if not sde.ito_like.holds:
        message += ' The transformed equation is not of Ito type.'

    if simulate:
        try:
            x0 = _initial_value(loaded)
        except ModelError as error:
            return _failure(error)
        progress('Simulating %d paths...' % config.paths)
        validation = montecarlo.solution_validation(sys, solution, x0, loaded.simulation.get('t0', 0.0),
                                                    config.horizon, config.dt, config.paths, config.seed)
        report['validation'] = validation.to_json()
        statuses.append(validation.verdict)
        if validation.verdict == StatsReport.FAIL:
            return False, message + ' The Monte Carlo cross-check failed.', EXIT_FAILURE, report
    return _strict_outcome(strict, statuses, message, report)


def cmd_reduce(model, fields, covs):
    """
        Sequential reduction by an ordered list of symmetries, each with its adapted
        coordinates.

        *Returns:*
            - *tuple*: (check, message, exit code, report). The report carries the solvability of
              the algebra and the reduction chain; a chain that stops early is a result, an
              algebra that cannot be used gives exit code 2.
    """
    fields, covs = list(fields), list(covs)
    if not fields or len(fields) != len(covs):
        return _failure(ModelError('Give one change of variables per vector field.'))
    try:
        loaded = _load(model)
        generators = [loaded.field(name) for name in fields]
        changes = [loaded.cov(name) for name in covs]
        sys = as_ito(loaded.system)
    except (ModelError, ExpressionError) as error:
        return _failure(error)
    report = envelope(run_config('reduce', loaded), loaded)
    solvability = solvability_check(generators, sys.ctx)
    report['solvability'] = solvability.to_json()
    progress('Reducing %s by %s...' % (loaded.name, ', '.join(fields)))
    try:
        chain = kozlov.reduce_sequence(sys, generators, changes)
    except TransformationError as error:
        report['error'] = str(error)
        return False, str(error), EXIT_FAILURE, report
    except (ModelError, ExpressionError) as error:
        return _failure(error)
    report['chain'] = chain.to_json()
    if chain.completed:
        message = 'Reduced %s in %d steps.' % (loaded.name, len(chain.steps))
    else:
        message = 'The reduction stopped after %d steps: %s' % (len(chain.steps), chain.aborted)
    return True, message, EXIT_SUCCESS, report


def cmd_simulate(model, seed=None, dt=None, paths=None, horizon=None, field=None, s=None, csv_out=None,
                 strict=False, scheme=None):
    """
        Simulates a model and, when a field and a group parameter are given (as flags or in the
        [simulation] section), tests the finite symmetry map on the simulated solutions.

        *Parameters:*
            - *scheme (str)*: Ensemble.EULER_MARUYAMA or Ensemble.HEUN; defaults to the
              calculus of the model.
            - *csv_out (str)*: Path of the per-time statistics.

        *Returns:*
            - *tuple*: (check, message, exit code, report). A failed symmetry test gives exit
              code 2.
    """
    try:
        loaded = _load(model)
        x0 = _initial_value(loaded)
        field = field if field is not None else loaded.simulation.get('field')
        X = loaded.field(field) if field is not None else None
    except (ModelError, ExpressionError) as error:
        return _failure(error)
    s = s if s is not None else loaded.simulation.get('s')
    if X is not None and s is None:
        return _failure(ModelError('A symmetry test needs the group parameter s.'))
    sys = loaded.system
    if scheme is None:
        scheme = Ensemble.HEUN if isinstance(sys, StratSystem) else Ensemble.EULER_MARUYAMA
    config = run_config('simulate', loaded, seed=seed, dt=dt, paths=paths, horizon=horizon, csv_out=csv_out,
                        strict=strict)
    report = envelope(config, loaded)
    t0 = loaded.simulation.get('t0', 0.0)
    simulator = montecarlo.heun_stratonovich if scheme == Ensemble.HEUN else montecarlo.euler_maruyama

    progress('Simulating %d paths...' % config.paths)
    try:
        ensemble = simulator(sys, x0, t0, config.horizon, config.dt, config.paths, config.seed)
    except ModelError as error:
        return _failure(error)
    statistics = montecarlo.statistics(ensemble)
    report['statistics'] = statistics.to_json()
    if csv_out is not None:
        montecarlo.write_csv(statistics, csv_out)
        progress('Statistics written to %s' % csv_out)
    statuses = []
    message = 'Simulated %d paths of %s (%d excluded).' % (ensemble.size, loaded.name, ensemble.excluded)
    if X is not None:
        progress('Testing exp(%g %s) on the solutions...' % (s, X.name))
        try:
            validation = montecarlo.symmetry_validation(sys, X, s, x0, t0, config.horizon, config.dt, config.paths,
                                                        config.seed)
        except ModelError as error:
            return _failure(error)
        report['validation'] = validation.to_json()
        statuses.append(validation.verdict)
        message += ' Symmetry test of %s: %s.' % (X.name, validation.verdict)
        if validation.verdict == StatsReport.FAIL:
            return False, message, EXIT_FAILURE, report
    return _strict_outcome(strict, statuses, message, report)


def cmd_examples(only=(), strict=False, simulate=True, paths=None):
    """
        Runs the regression suite over the bundled models.

        *Parameters:*
            - *only (list)*: Bundled model names to restrict the run to.
            - *simulate (bool)*: Include the Monte Carlo checks.
            - *paths (int)*: Number of paths of the Monte Carlo checks.

        *Returns:*
            - *tuple*: (check, message, exit code, report). Any failed row gives exit code 2.
    """
    try:
        rows = regression.run_suite(only, simulate, paths)
    except (ModelError, ExpressionError) as error:
        return _failure(error)
    report = envelope(run_config('examples', paths=paths, strict=strict))
    report['results'] = rows
    failed = [row for row in rows if row['status'] == regression.FAILED]
    inconclusive = [row for row in rows if row['status'] == regression.INCONCLUSIVE]
    message = '%d checks, %d failed, %d inconclusive.' % (len(rows), len(failed), len(inconclusive))
    if failed:
        return False, message, EXIT_FAILURE, report
    if strict and inconclusive:
        return False, message, EXIT_INCONCLUSIVE, report
    return True, message, EXIT_SUCCESS, report
