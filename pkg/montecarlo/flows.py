"""
    Finite group maps exp(s X) of simple generators acting on (x, w) at fixed t.
"""
import numpy as np
from scipy import integrate, linalg

from expressions.actions import differentiate, evaluate, is_identically_zero
from expressions.nodes import STATE, TIME, WIENER, T, add, depends_on, mul
from expressions.numeric import compile_vectorized
from models import TransformationError, VectorField


def _noise_part(X, ctx):
    if X.noise == VectorField.LINEAR:
        return [add(*[mul(entry, w) for entry, w in zip(row, ctx.wieners())]) for row in X.R]
    if X.noise == VectorField.GENERAL:
        return list(X.h)
    return None


class Flow:
    """
        The flow of X on points (t, x, w), with x of shape (..., n) and w of shape (..., m).
        Affine generators (coefficients of x and w free of x and w) flow through expm of the
        augmented generator matrix; the others through solve_ivp.
    """

    def __init__(self, X, ctx):
        if not is_identically_zero(X.tau, ctx).is_zero:
            raise TransformationError('Group maps are only built for simple generators.')
        self.X = X
        self.ctx = ctx
        self.params = ctx.numeric_params()
        self.variables = ctx.states() + ctx.wieners()
        self.components = list(X.phi) + (_noise_part(X, ctx) or [])
        self.acts_on_w = X.noise != VectorField.NONE
        self.affine = all(not depends_on(differentiate(c, v), STATE) and not depends_on(differentiate(c, v), WIENER)
                          for c in self.components for v in self.variables)
        self.time_dependent = any(depends_on(c, TIME) for c in self.components)
        self._compiled = [compile_vectorized(c, self.params) for c in self.components]

    def generator_matrix(self, t):
        """
            The (n + m + 1) square matrix G with X(v) = G (x, w, 1) at time t.
        """
        n, m = self.ctx.n, self.ctx.m
        size = n + m + 1
        G = np.zeros((size, size))
        origin = {v: 0.0 for v in self.variables}
        origin[T] = t
        for i, component in enumerate(self.components):
            for j, v in enumerate(self.variables):
                G[i, j] = evaluate(differentiate(component, v), origin, self.params)
            G[i, -1] = evaluate(component, origin, self.params)
        return G

    def _affine(self, t, x, w, s):
        n = self.ctx.n
        points = np.concatenate([x, w, np.ones(x.shape[:-1] + (1,))], axis=-1)
        times = np.asarray(t, dtype=float)
        if not self.time_dependent or times.ndim == 0:
            propagator = linalg.expm(s * self.generator_matrix(float(times.ravel()[0])))
            result = points @ propagator.T
        else:
            # one time per slice along the axis before the components
            result = np.empty_like(points)
            for k, value in enumerate(times):
                propagator = linalg.expm(s * self.generator_matrix(float(value)))
                result[..., k, :] = points[..., k, :] @ propagator.T
        return result[..., :n], result[..., n:-1]

    def _numeric(self, t, x, w, s):
        n, m = self.ctx.n, self.ctx.m
        shape = x.shape[:-1]
        times = np.broadcast_to(np.asarray(t, dtype=float), shape).ravel()
        start = np.concatenate([x.reshape(-1, n), w.reshape(-1, m)], axis=1)
        size = start.shape[0]

        def field(_, flat):
            values = flat.reshape(size, n + m)
            env = {v: values[:, a] for a, v in enumerate(self.variables)}
            env[T] = times
            rates = np.zeros_like(values)
            for a, run in enumerate(self._compiled):
                rates[:, a] = run(env)
            return rates.ravel()

        with np.errstate(all='ignore'):
            solution = integrate.solve_ivp(field, (0.0, s), start.ravel(), rtol=1e-10, atol=1e-12)
        if not solution.success:
            end = np.full(start.shape, np.nan)
        else:
            end = solution.y[:, -1].reshape(size, n + m)
        return end[:, :n].reshape(shape + (n,)), end[:, n:].reshape(shape + (m,))

    def __call__(self, t, x, w, s):
        """
            exp(s X) applied to the points; points leaving the domain of the coefficients
            come back as NaN.
        """
        x = np.asarray(x, dtype=float)
        w = np.asarray(w, dtype=float)
        if s == 0:
            return x.copy(), w.copy()
        if self.affine:
            return self._affine(t, x, w, s)
        return self._numeric(t, x, w, s)

    def __repr__(self):
        return "<Flow %s affine:%s>" % (self.X.name, self.affine)
