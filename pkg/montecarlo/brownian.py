"""
    Shared Brownian increments. Every path owns a Philox stream keyed by (seed, path index), so
    a path draws the same increments whether it is simulated alone, in a chunk or in a
    parallel run. Normal variates come from the inverse normal CDF of 53-bit uniforms.
"""
import numpy as np
from scipy import special

import app
from models import BrownianGrid

_MANTISSA = 2 ** 53


def path_stream(seed, index):
    """
        The counter-based generator of one path.

        *Parameters:*
            - *seed (int)*: The run seed.
            - *index (int)*: The global index of the path.

        *Returns:*
            - *numpy.random.Generator*: A Philox generator keyed by (seed, index).
    """
    return np.random.Generator(np.random.Philox(key=np.array([int(seed) % 2 ** 64, int(index)], dtype=np.uint64)))


def standard_normals(generator, size):
    # (k + 1/2) / 2^53 never hits 0 or 1
    uniforms = (generator.integers(0, _MANTISSA, size=size, dtype=np.int64) + 0.5) / _MANTISSA
    return special.ndtri(uniforms)


def step_count(t0, horizon, dt):
    steps = int(round((horizon - t0) / dt))
    if steps < 1 or abs(t0 + steps * dt - horizon) > 1e-9 * max(1.0, abs(horizon)):
        raise ValueError('The horizon must be t0 plus a whole number of steps of size dt.')
    return steps


def brownian_grid(m, paths, t0=0.0, horizon=None, dt=None, seed=None, first=0):
    """
        Wiener increments of the paths first..first + paths - 1.

        *Parameters:*
            - *m (int)*: The number of Wiener processes.
            - *paths (int)*: The number of paths.
            - *t0, horizon, dt (float)*: The time grid (defaults from the configuration).
            - *seed (int)*: The run seed (default MC_SEED).
            - *first (int)*: Global index of the first path.

        *Returns:*
            - *BrownianGrid*: increments of shape (paths, steps, m), each N(0, dt).
    """
    horizon = app.config['MC_HORIZON'] if horizon is None else horizon
    dt = app.config['MC_DT'] if dt is None else dt
    seed = app.config['MC_SEED'] if seed is None else seed
    steps = step_count(t0, horizon, dt)
    increments = np.empty((paths, steps, m))
    scale = np.sqrt(dt)
    for offset in range(paths):
        increments[offset] = scale * standard_normals(path_stream(seed, first + offset), (steps, m))
    return BrownianGrid(t0, horizon, dt, increments, seed)


def chunks(paths, size=None):
    """
        (first, count) blocks covering paths, at most MC_CHUNK_SIZE long.
    """
    size = app.config['MC_CHUNK_SIZE'] if size is None else size
    for first in range(0, paths, size):
        yield first, min(size, paths - first)


def grids(m, paths, t0=0.0, horizon=None, dt=None, seed=None):
    for first, count in chunks(paths):
        yield brownian_grid(m, count, t0, horizon, dt, seed, first)


def wiener_paths(grid):
    """
        w(t) on the grid, w(t0) = 0: shape (paths, steps + 1, m).
    """
    paths, _, m = grid.increments.shape
    return np.concatenate([np.zeros((paths, 1, m)), np.cumsum(grid.increments, axis=1)], axis=1)


def coarsen(grid, factor):
    """
        The same Brownian paths on a grid with step factor * dt.
    """
    paths, steps, m = grid.increments.shape
    if steps % factor:
        raise ValueError('The number of steps is not a multiple of %d.' % factor)
    increments = grid.increments.reshape(paths, steps // factor, factor, m).sum(axis=2)
    return BrownianGrid(grid.t0, grid.horizon, grid.dt * factor, increments, grid.seed)


def mapped_grid(grid, w_paths):
    """
        A grid whose increments are those of the given Wiener paths (a mapped noise).
    """
    return BrownianGrid(grid.t0, grid.horizon, grid.dt, np.diff(w_paths, axis=1), grid.seed)
