import warnings

import numpy as np
from scipy import integrate, stats

import app
from expressions.nodes import T, state, wiener
from expressions.numeric import compile_vectorized
from kozlov.actions import numeric_inverse
from models import Ensemble, ItoSystem, ModelError, NumericalWarning, StatsReport, StratSystem
from systems.actions import as_ito, ito_to_strat
from . import brownian
from .flows import Flow


class Coefficients:
    """
        Drift and diffusion compiled for arrays of states: x (P, n), t float, w (P, m).
    """

    def __init__(self, drift, sigma, ctx):
        params = ctx.numeric_params()
        self.ctx = ctx
        self.drift = [compile_vectorized(e, params) for e in drift]
        self.sigma = [[compile_vectorized(e, params) for e in row] for row in sigma]

    def __call__(self, x, t, w):
        env = {state(i + 1): x[:, i] for i in range(self.ctx.n)}
        env.update({wiener(k + 1): w[:, k] for k in range(self.ctx.m)})
        env[T] = t
        drift = np.stack([run(env) for run in self.drift], axis=-1)
        diffusion = np.stack([np.stack([run(env) for run in row], axis=-1) for row in self.sigma], axis=-2)
        return drift, diffusion


def _euler_maruyama_step(coefficients, x, t, w, dW, dt):
    f, g = coefficients(x, t, w)
    return x + f * dt + np.einsum('pnm,pm->pn', g, dW)


def _heun_step(coefficients, x, t, w, dW, dt):
    f, g = coefficients(x, t, w)
    predicted = x + f * dt + np.einsum('pnm,pm->pn', g, dW)
    f_next, g_next = coefficients(predicted, t + dt, w + dW)
    return x + 0.5 * (f + f_next) * dt + 0.5 * np.einsum('pnm,pm->pn', g + g_next, dW)


_SCHEMES = {
    Ensemble.EULER_MARUYAMA: _euler_maruyama_step,
    Ensemble.HEUN: _heun_step
}


def _starting_points(x0, paths, n):
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim <= 1:
        x0 = np.broadcast_to(x0.reshape(-1), (paths, n)) if x0.size in (1, n) else None
    if x0 is None or x0.shape != (paths, n):
        raise ModelError('The initial value needs %d components.' % n)
    return x0


def integrate_paths(scheme, coefficients, x0, grid):
    """
        Runs a scheme on every path of a grid.

        *Returns:*
            - *tuple*: (x of shape (P, steps + 1, n), w of shape (P, steps + 1, m)). Diverging
              paths carry NaN or inf from the step where they left the domain.
    """
    paths, steps, _ = grid.increments.shape
    n = coefficients.ctx.n
    step = _SCHEMES[scheme]
    w = brownian.wiener_paths(grid)
    times = grid.times()
    x = np.empty((paths, steps + 1, n))
    x[:, 0] = _starting_points(x0, paths, n)
    with np.errstate(all='ignore'):
        for k in range(steps):
            x[:, k + 1] = step(coefficients, x[:, k], times[k], w[:, k], grid.increments[:, k], grid.dt)
    return x, w


def finite_paths(x):
    return np.all(np.isfinite(x.reshape(x.shape[0], -1)), axis=1)


class Moments:
    """
        Per-time mean and variance of the valid paths, merged chunk by chunk.
    """

    def __init__(self, size, n):
        self.count = 0
        self.mean = np.zeros((size, n))
        self.m2 = np.zeros((size, n))

    def merge(self, x, valid):
        kept = x[valid]
        added = kept.shape[0]
        if not added:
            return
        mean = kept.mean(axis=0)
        m2 = ((kept - mean) ** 2).sum(axis=0)
        total = self.count + added
        delta = mean - self.mean
        self.mean = self.mean + delta * added / total
        self.m2 = self.m2 + m2 + delta ** 2 * self.count * added / total
        self.count = total

    @property
    def variance(self):
        if self.count < 2:
            return np.full(self.m2.shape, np.nan)
        return self.m2 / (self.count - 1)


def _warn_excluded(valid):
    excluded = int((~valid).sum())
    if excluded:
        warnings.warn('%d of %d paths diverged and were excluded.' % (excluded, valid.shape[0]), NumericalWarning)


def _ensemble(scheme, t0, horizon, dt, seed, blocks, store_paths):
    valid = np.concatenate([block[2] for block in blocks])
    terminal = np.concatenate([block[0][:, -1] for block in blocks])
    terminal_w = np.concatenate([block[1][:, -1] for block in blocks])
    first = blocks[0][0]
    moments = Moments(first.shape[1], first.shape[2])
    for x, _, kept in blocks:
        moments.merge(x, kept)
    _warn_excluded(valid)
    return Ensemble({
        'scheme': scheme,
        't0': t0,
        'horizon': horizon,
        'dt': dt,
        'steps': first.shape[1] - 1,
        'seed': seed,
        'terminal': terminal,
        'terminal_w': terminal_w,
        'valid': valid,
        'mean': moments.mean,
        'variance': moments.variance,
        'count': moments.count,
        'paths': np.concatenate([block[0] for block in blocks]) if store_paths else None,
        'wiener_paths': np.concatenate([block[1] for block in blocks]) if store_paths else None
    })


def simulate(scheme, drift, sigma, ctx, x0, t0=0.0, horizon=None, dt=None, paths=None, seed=None,
             store_paths=False, grid=None):
    horizon = app.config['MC_HORIZON'] if horizon is None else horizon
    dt = app.config['MC_DT'] if dt is None else dt
    paths = app.config['MC_PATHS'] if paths is None else paths
    seed = app.config['MC_SEED'] if seed is None else seed
    coefficients = Coefficients(drift, sigma, ctx)
    grids = [grid] if grid is not None else brownian.grids(ctx.m, paths, t0, horizon, dt, seed)
    blocks = []
    for chunk in grids:
        x, w = integrate_paths(scheme, coefficients, x0, chunk)
        blocks.append((x, w, finite_paths(x)))
    if grid is not None:
        t0, horizon, dt, seed = grid.t0, grid.horizon, grid.dt, grid.seed
    return _ensemble(scheme, t0, horizon, dt, seed, blocks, store_paths)


def euler_maruyama(sys, x0, t0=0.0, horizon=None, dt=None, paths=None, seed=None, store_paths=False, grid=None):
    """
        Euler-Maruyama ensemble of an Ito system (a Stratonovich system is converted first):

            x_{k+1} = x_k + f(x_k, t_k) dt + sigma(x_k, t_k) dW_k

        *Parameters:*
            - *sys (ItoSystem or StratSystem)*: The system.
            - *x0 (float or list)*: The initial value.
            - *t0, horizon, dt (float)*: The time grid (defaults MC_HORIZON, MC_DT).
            - *paths (int)*: The number of paths (default MC_PATHS).
            - *seed (int)*: The run seed (default MC_SEED).
            - *store_paths (bool)*: Keep the full trajectories.
            - *grid (BrownianGrid)*: Increments to reuse instead of drawing new ones.

        *Returns:*
            - *Ensemble*: Terminal values, per-time moments and the exclusion mask.
    """
    sys = as_ito(sys)
    return simulate(Ensemble.EULER_MARUYAMA, sys.f, sys.sigma, sys.ctx, x0, t0, horizon, dt, paths, seed,
                    store_paths, grid)


def heun_stratonovich(sys, x0, t0=0.0, horizon=None, dt=None, paths=None, seed=None, store_paths=False,
                      grid=None):
    """
        Heun predictor-corrector ensemble, converging to the Stratonovich solution. An Ito
        system is converted to its Stratonovich form first. Parameters as euler_maruyama.
    """
    if isinstance(sys, ItoSystem):
        sys = ito_to_strat(sys)
    return simulate(Ensemble.HEUN, sys.b, sys.sigma, sys.ctx, x0, t0, horizon, dt, paths, seed, store_paths,
                    grid)


def statistics(ens):
    """
        Per-time moments of an ensemble with standard errors std / sqrt(N_effective).
    """
    count = ens.count
    with np.errstate(all='ignore'):
        standard_errors = np.sqrt(ens.variance / count)
    return StatsReport({
        'times': ens.t0 + ens.dt * np.arange(ens.steps + 1),
        'means': ens.mean,
        'variances': ens.variance,
        'standard_errors': standard_errors,
        'n_effective': count,
        'excluded': ens.excluded,
        'parameters': {'scheme': ens.scheme, 't0': ens.t0, 'horizon': ens.horizon, 'dt': ens.dt,
                       'paths': ens.size, 'seed': ens.seed}
    })


def apply_group_map(ens, X, s, ctx):
    """
        Maps every stored trajectory (x(t), w(t)) by exp(s X) at each time.

        *Parameters:*
            - *ens (Ensemble)*: An ensemble simulated with store_paths.
            - *X (VectorField)*: A simple generator.
            - *s (float)*: The group parameter.
            - *ctx (Context)*: The variables (and params) of X.

        *Returns:*
            - *Ensemble*: The mapped paths and Wiener paths. Points leaving the domain of the
              flow are excluded.
    """
    if ens.paths is None:
        raise ModelError('Group maps act on ensembles simulated with store_paths.')
    flow = Flow(X, ctx)
    times = ens.t0 + ens.dt * np.arange(ens.steps + 1)
    with np.errstate(all='ignore'):
        x, w = flow(times, ens.paths, ens.wiener_paths, s)
    valid = ens.valid & finite_paths(x) & finite_paths(w)
    return _ensemble(ens.scheme, ens.t0, ens.horizon, ens.dt, ens.seed, [(x, w, valid)], True)


def _terminal_comparison(mapped, direct, valid):
    a = mapped[valid]
    b = direct[valid]
    count = a.shape[0]
    differences = []
    ks_statistics = []
    ks_pvalues = []
    for i in range(a.shape[1]):
        spread = np.sqrt((a[:, i].var(ddof=1) + b[:, i].var(ddof=1)) / count)
        gap = abs(a[:, i].mean() - b[:, i].mean())
        differences.append(0.0 if gap == 0 else float(gap / spread) if spread > 0 else float('inf'))
        result = stats.ks_2samp(a[:, i], b[:, i])
        ks_statistics.append(float(result.statistic))
        ks_pvalues.append(float(result.pvalue))
    return differences, ks_statistics, ks_pvalues, a.mean(axis=0), b.mean(axis=0)


def symmetry_validation(sys, X, s, x0, t0=0.0, horizon=None, dt=None, paths=None, seed=None):
    """
        Statistical test of a finite symmetry map. Two ensembles are compared at the final time:

            (a) solutions of sys from x0, mapped by exp(s X) together with their Wiener paths;
            (b) solutions of sys from the mapped initial point, driven by the mapped Wiener paths.

        An Ito system is simulated by Euler-Maruyama, a Stratonovich one by Heun.

        *Returns:*
            - *StatsReport*: Pass when every component mean differs by less than MC_MEAN_SE
              standard errors and the KS p-values exceed MC_KS_LEVEL, Fail otherwise, and
              Inconclusive when more than MC_MAX_EXCLUDED of the paths diverged.
    """
    horizon = app.config['MC_HORIZON'] if horizon is None else horizon
    dt = app.config['MC_DT'] if dt is None else dt
    paths = app.config['MC_PATHS'] if paths is None else paths
    seed = app.config['MC_SEED'] if seed is None else seed
    if isinstance(sys, StratSystem):
        scheme, coefficients = Ensemble.HEUN, Coefficients(sys.b, sys.sigma, sys.ctx)
    else:
        scheme, coefficients = Ensemble.EULER_MARUYAMA, Coefficients(sys.f, sys.sigma, sys.ctx)
    flow = Flow(X, sys.ctx)
    mapped_terminal, direct_terminal, valid = [], [], []
    for grid in brownian.grids(sys.ctx.m, paths, t0, horizon, dt, seed):
        x, w = integrate_paths(scheme, coefficients, x0, grid)
        with np.errstate(all='ignore'):
            mapped_x, mapped_w = flow(grid.times(), x, w, s)
        direct_x, _ = integrate_paths(scheme, coefficients, mapped_x[:, 0], brownian.mapped_grid(grid, mapped_w))
        mapped_terminal.append(mapped_x[:, -1])
        direct_terminal.append(direct_x[:, -1])
        valid.append(finite_paths(x) & finite_paths(mapped_x) & finite_paths(mapped_w) & finite_paths(direct_x))
    mapped_terminal = np.concatenate(mapped_terminal)
    direct_terminal = np.concatenate(direct_terminal)
    valid = np.concatenate(valid)
    _warn_excluded(valid)

    excluded = int((~valid).sum())
    parameters = {'scheme': scheme, 's': s, 'x0': np.asarray(x0, dtype=float).tolist(), 't0': t0,
                  'horizon': horizon, 'dt': dt, 'paths': paths, 'seed': seed,
                  'mean_threshold_se': app.config['MC_MEAN_SE'], 'ks_level': app.config['MC_KS_LEVEL']}
    if excluded > app.config['MC_MAX_EXCLUDED'] * paths or valid.sum() < 2:
        return StatsReport({'n_effective': int(valid.sum()), 'excluded': excluded,
                            'verdict': StatsReport.INCONCLUSIVE, 'parameters': parameters})
    differences, ks_statistics, ks_pvalues, mapped_mean, direct_mean = \
        _terminal_comparison(mapped_terminal, direct_terminal, valid)
    passed = max(differences) < app.config['MC_MEAN_SE'] and min(ks_pvalues) > app.config['MC_KS_LEVEL']
    parameters.update({'mapped_mean': mapped_mean.tolist(), 'direct_mean': direct_mean.tolist()})
    return StatsReport({
        'n_effective': int(valid.sum()),
        'excluded': excluded,
        'ks_statistic': max(ks_statistics),
        'ks_pvalue': min(ks_pvalues),
        'mean_difference_se': max(differences),
        'verdict': StatsReport.PASS if passed else StatsReport.FAIL,
        'parameters': parameters
    })


def evaluate_solution_form(sf, grid, x0):
    """
        Evaluates y(t) = y0 + int F(s, w(s)) ds + int S(s, w(s)) dw(s) along the grid, with the
        trapezoidal rule for the dt integral and left-point sums for the Ito integrals, then
        maps back to the original variable.

        *Parameters:*
            - *sf (SolutionForm)*: From kozlov.integrate_scalar.
            - *grid (BrownianGrid)*: The Brownian paths.
            - *x0 (float)*: Initial value in the original variable.

        *Returns:*
            - *tuple*: (trajectories of shape (P, steps + 1), valid mask). Paths where the map
              back fails are excluded.
    """
    ctx = sf.ctx
    params = ctx.numeric_params()
    w = brownian.wiener_paths(grid)
    times = grid.times()
    env = {wiener(k + 1): w[:, :, k] for k in range(ctx.m)}
    env[T] = times
    x0 = float(np.asarray(x0, dtype=float).reshape(-1)[0])
    if sf.to_integrating is not None:
        start = {state(1): np.array(x0), T: np.array(grid.t0)}
        start.update({wiener(k + 1): np.array(0.0) for k in range(ctx.m)})
        y0 = float(compile_vectorized(sf.to_integrating, params)(start))
    else:
        y0 = x0
    drift = compile_vectorized(sf.F, params)(env)
    y = y0 + integrate.cumulative_trapezoid(drift, dx=grid.dt, axis=1, initial=0)
    for k, S in enumerate(sf.S):
        diffusion = compile_vectorized(S, params)(env)
        ito_sums = np.cumsum(diffusion[:, :-1] * grid.increments[:, :, k], axis=1)
        y[:, 1:] += ito_sums
    if sf.back_map is not None:
        x = compile_vectorized(sf.back_map, params)({**env, state(1): y})
    elif sf.to_integrating is not None:
        x = numeric_inverse(sf.to_integrating, ctx, y, env, np.full(y.shape, x0))
    else:
        x = y
    valid = finite_paths(x)
    _warn_excluded(valid)
    return x, valid


def solution_validation(sys, sf, x0, t0=0.0, horizon=None, dt=None, paths=None, seed=None):
    """
        Compares a solution form evaluated along Brownian paths with Euler-Maruyama driven by
        the same increments, at the final time.

        *Returns:*
            - *StatsReport*: Pass when the terminal means differ by less than MC_MEAN_SE standard
              errors, Inconclusive when more than MC_MAX_EXCLUDED of the paths were excluded.
              The KS statistic is reported but does not enter the verdict, the two sides carrying
              different discretization errors.
    """
    horizon = app.config['MC_HORIZON'] if horizon is None else horizon
    dt = app.config['MC_DT'] if dt is None else dt
    paths = app.config['MC_PATHS'] if paths is None else paths
    seed = app.config['MC_SEED'] if seed is None else seed
    sys = as_ito(sys)
    coefficients = Coefficients(sys.f, sys.sigma, sys.ctx)
    closed_terminal, direct_terminal, valid = [], [], []
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', NumericalWarning)
        for grid in brownian.grids(sys.ctx.m, paths, t0, horizon, dt, seed):
            closed, kept = evaluate_solution_form(sf, grid, x0)
            direct, _ = integrate_paths(Ensemble.EULER_MARUYAMA, coefficients, x0, grid)
            closed_terminal.append(closed[:, -1:])
            direct_terminal.append(direct[:, -1, :1])
            valid.append(kept & finite_paths(direct))
    closed_terminal = np.concatenate(closed_terminal)
    direct_terminal = np.concatenate(direct_terminal)
    valid = np.concatenate(valid)
    _warn_excluded(valid)

    excluded = int((~valid).sum())
    parameters = {'scheme': Ensemble.EULER_MARUYAMA, 'x0': np.asarray(x0, dtype=float).tolist(), 't0': t0,
                  'horizon': horizon, 'dt': dt, 'paths': paths, 'seed': seed,
                  'mean_threshold_se': app.config['MC_MEAN_SE']}
    if excluded > app.config['MC_MAX_EXCLUDED'] * paths or valid.sum() < 2:
        return StatsReport({'n_effective': int(valid.sum()), 'excluded': excluded,
                            'verdict': StatsReport.INCONCLUSIVE, 'parameters': parameters})
    differences, ks_statistics, ks_pvalues, closed_mean, direct_mean = \
        _terminal_comparison(closed_terminal, direct_terminal, valid)
    parameters.update({'solution_mean': closed_mean.tolist(), 'direct_mean': direct_mean.tolist()})
    return StatsReport({
        'n_effective': int(valid.sum()),
        'excluded': excluded,
        'ks_statistic': ks_statistics[0],
        'ks_pvalue': ks_pvalues[0],
        'mean_difference_se': differences[0],
        'verdict': StatsReport.PASS if differences[0] < app.config['MC_MEAN_SE'] else StatsReport.FAIL,
        'parameters': parameters
    })


def observed_weak_order(sys, x0, dts, horizon=None, paths=None, seed=None):
    """
        Weak order of Euler-Maruyama from the terminal means at successively halved steps.
        The coarse grids sum the increments of the finest one, so the paths are shared and
        the Monte Carlo noise cancels in the differences of the means.

        *Parameters:*
            - *dts (list)*: Steps, each twice the next one.

        *Returns:*
            - *dict*: The steps, terminal means of the first component, and the order fitted to
              |mean(dt) - mean(dt / 2)| against dt.
    """
    horizon = app.config['MC_HORIZON'] if horizon is None else horizon
    paths = app.config['MC_PATHS'] if paths is None else paths
    seed = app.config['MC_SEED'] if seed is None else seed
    dts = sorted(dts, reverse=True)
    if len(dts) < 3:
        raise ValueError('At least three steps are needed to fit an order.')
    finest = dts[-1]
    factors = [int(round(dt / finest)) for dt in dts]
    if any(abs(factor * finest - dt) > 1e-12 for factor, dt in zip(factors, dts)):
        raise ValueError('The steps must be multiples of the finest one.')
    sys = as_ito(sys)
    coefficients = Coefficients(sys.f, sys.sigma, sys.ctx)
    sums = np.zeros(len(dts))
    count = 0
    for fine in brownian.grids(sys.ctx.m, paths, 0.0, horizon, finest, seed):
        terminals = []
        for factor in factors:
            grid = brownian.coarsen(fine, factor) if factor > 1 else fine
            x, _ = integrate_paths(Ensemble.EULER_MARUYAMA, coefficients, x0, grid)
            terminals.append(x[:, -1, 0])
        terminals = np.array(terminals)
        kept = np.all(np.isfinite(terminals), axis=0)
        sums += terminals[:, kept].sum(axis=1)
        count += int(kept.sum())
    means = sums / count
    differences = np.abs(np.diff(means))
    order = float(np.polyfit(np.log(dts[:-1]), np.log(differences), 1)[0])
    return {'dts': dts, 'means': means.tolist(), 'order': order, 'paths': count}


def write_csv(report, path):
    """
        Writes per-time statistics with columns t, mean_i, var_i, se_i.
    """
    n = report.means.shape[1]
    header = ['t'] + ['mean_%d' % (i + 1) for i in range(n)] + ['var_%d' % (i + 1) for i in range(n)] + \
             ['se_%d' % (i + 1) for i in range(n)]
    table = np.column_stack([report.times, report.means, report.variances, report.standard_errors])
    np.savetxt(path, table, delimiter=',', header=','.join(header), comments='', fmt='%.12g')
