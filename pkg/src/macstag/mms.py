"""Manufactured solutions on the unit square / cube with exact forcing.

The velocity comes from a stream potential (2D) or vector potential (3D)
whose factors vanish to second order on the boundary, so the exact field is
divergence free, has zero trace, and its components are polynomials of
degree at most five per axis times a smooth decay e^{-t}. Face means of
such components are exact under the default 3-point Gauss rule, which makes
the interpolated initial data exactly divergence free in the discrete sense.

Forcing is derived symbolically from the momentum equation in convective
form, f = du/dt + (u . grad) u - Lap u + grad p, and compiled to numpy.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import sympy


class ManufacturedProblem:
    """Analytic (u, p, f) triple solving the momentum equation exactly.

    velocity/forcing map (t, points (m, dim)) to (m, dim) arrays, pressure
    to (m,). initial is velocity at t = 0 as a pure spatial callable.
    """

    def __init__(self, name, dim, velocity, pressure, forcing, description):
        self.name = name
        self.dim = dim
        self.velocity = velocity
        self.pressure = pressure
        self.forcing = forcing
        self.description = description

    def initial(self, pts):
        return self.velocity(0.0, pts)

    def velocity_at(self, t):
        """Spatial slice u(t, .) for interpolation helpers."""
        return lambda pts: self.velocity(t, pts)

    def __repr__(self):
        return f"ManufacturedProblem({self.name!r}, dim={self.dim})"


def _compile_vector(exprs, args):
    lams = [sympy.lambdify(args, e, modules="numpy") for e in exprs]

    def call(t, pts):
        pts = np.asarray(pts, dtype=float)
        cols = []
        for lam in lams:
            v = np.asarray(lam(t, *pts.T), dtype=float)
            if v.ndim == 0:
                v = np.full(pts.shape[0], float(v))
            cols.append(v)
        return np.stack(cols, axis=-1)

    return call


def _compile_scalar(expr, args):
    lam = sympy.lambdify(args, expr, modules="numpy")

    def call(t, pts):
        pts = np.asarray(pts, dtype=float)
        v = np.asarray(lam(t, *pts.T), dtype=float)
        if v.ndim == 0:
            v = np.full(pts.shape[0], float(v))
        return v

    return call


def _momentum_forcing(u, p, xs, t):
    """f = du/dt + (u . grad) u - Lap u + grad p, componentwise.

    Expressions stay in factored form: expanding the high-degree products
    into monomial sums would make the compiled evaluators lose ~4 digits to
    cancellation near the domain boundary.
    """
    f = []
    for i, ui in enumerate(u):
        expr = sympy.diff(ui, t)
        expr += sum(u[j] * sympy.diff(ui, xs[j]) for j in range(len(xs)))
        expr -= sum(sympy.diff(ui, xs[j], 2) for j in range(len(xs)))
        expr += sympy.diff(p, xs[i])
        f.append(expr)
    return f


@lru_cache(maxsize=None)
def _build(name: str) -> ManufacturedProblem:
    t = sympy.Symbol("t")
    if name in ("vortex2d", "rest2d"):
        x, y = sympy.symbols("x y")
        xs = (x, y)
        if name == "rest2d":
            u = [sympy.Integer(0), sympy.Integer(0)]
            p = sympy.Integer(0)
            desc = "2D rest state: u = 0, p = 0, f = 0 (exact discrete fixed point)"
        else:
            phi = 16 * (x * (1 - x) * y * (1 - y)) ** 2 * sympy.exp(-t)
            u = [sympy.diff(phi, y), -sympy.diff(phi, x)]
            p = (x - sympy.Rational(1, 2)) * (y - sympy.Rational(1, 2)) * sympy.exp(-t)
            desc = "2D decaying polynomial vortex from a biquartic stream potential"
    elif name in ("vortex3d", "rest3d"):
        x, y, z = sympy.symbols("x y z")
        xs = (x, y, z)
        if name == "rest3d":
            u = [sympy.Integer(0)] * 3
            p = sympy.Integer(0)
            desc = "3D rest state: u = 0, p = 0, f = 0 (exact discrete fixed point)"
        else:
            phi = 512 * (x * (1 - x) * y * (1 - y) * z * (1 - z)) ** 2 * sympy.exp(-t)
            a = [phi, 2 * phi, 3 * phi]
            u = [
                sympy.diff(a[2], y) - sympy.diff(a[1], z),
                sympy.diff(a[0], z) - sympy.diff(a[2], x),
                sympy.diff(a[1], x) - sympy.diff(a[0], y),
            ]
            p = (
                (x - sympy.Rational(1, 2))
                * (y - sympy.Rational(1, 2))
                * (z - sympy.Rational(1, 2))
                * sympy.exp(-t)
            )
            desc = "3D decaying polynomial vortex from a curl of scaled potentials"
    else:
        raise ValueError(f"unknown manufactured problem {name!r}; have {sorted(PROBLEM_NAMES)}")

    f = _momentum_forcing(u, p, xs, t)
    args = (t, *xs)
    return ManufacturedProblem(
        name,
        len(xs),
        _compile_vector(u, args),
        _compile_scalar(p, args),
        _compile_vector(f, args),
        desc,
    )


PROBLEM_NAMES = ("vortex2d", "vortex3d", "rest2d", "rest3d")


def mms_problem(name: str) -> ManufacturedProblem:
    """Look up a registered manufactured problem by name."""
    if name not in PROBLEM_NAMES:
        raise ValueError(f"unknown manufactured problem {name!r}; have {sorted(PROBLEM_NAMES)}")
    return _build(name)
