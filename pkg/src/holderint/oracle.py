"""Reference computations that do not share code with the dyadic engine.

``det_quadrature_integral`` integrates ``f det Dg`` by the tensor midpoint
rule with central-difference Jacobians, which is the value of the integral
for Lipschitz integrators. ``stieltjes_1d_brute`` is the classical
Riemann–Stieltjes sum on an arbitrary partition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta

from .geometry import BoxDomain
from .holder import FieldTuple, as_field
from .youngint import boundary_integral, integrate


@dataclass(frozen=True)
class QuadratureSpec:
    """Midpoint-rule resolution per axis and finite-difference step.

    ``h=None`` ties the step to the quadrature pitch (``pitch / 8``).
    """

    resolution: int = 128
    h: float | None = None

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError("resolution must be at least 2")
        if self.h is not None and self.h <= 0:
            raise ValueError("finite-difference step must be positive")

    def step(self, box: BoxDomain) -> float:
        return self.h if self.h is not None else float(box.edges.min()) / self.resolution / 8.0


def _midpoints(box: BoxDomain, resolution: int) -> list[np.ndarray]:
    frac = (np.arange(resolution) + 0.5) / resolution
    return [lo + frac * e for lo, e in zip(box.lower, box.edges)]


def det_quadrature_integral(f, g, box: BoxDomain, spec: QuadratureSpec | None = None,
                            chunk: int = 1 << 15) -> float:
    """Midpoint-rule value of ``int_box f det(Dg) dL^n``.

    Jacobians use central differences ``(g(x + h e_j) - g(x - h e_j)) / 2h``
    at the midpoints, which stay away from cell faces where a Lipschitz
    ``g`` may fail to be differentiable.
    """
    spec = spec or QuadratureSpec()
    g = FieldTuple.coerce(g)
    n = box.dim
    f = as_field(f, n)
    if len(g) != n:
        raise ValueError(f"need {n} integrator fields, got {len(g)}")
    h = spec.step(box)
    axes = _midpoints(box, spec.resolution)
    total_nodes = spec.resolution**n
    grids = np.meshgrid(*axes, indexing="ij")
    flat = np.stack([gr.reshape(-1) for gr in grids], axis=1)
    partial = []
    eye = np.eye(n) * h
    for start in range(0, total_nodes, chunk):
        x = flat[start:start + chunk]
        jac = np.empty((x.shape[0], n, n))
        for j in range(n):
            xp, xm = x + eye[j], x - eye[j]
            for i, gi in enumerate(g):
                jac[:, i, j] = (gi.func(xp) - gi.func(xm)) / (2 * h)
        det = jac[:, 0, 0] if n == 1 else np.linalg.det(jac)
        partial.append(float(np.sum(f.func(x) * det)))
    return math.fsum(partial) * box.volume / total_nodes


def _as_1d(func):
    if hasattr(func, "func") and hasattr(func, "dim"):
        return lambda t: np.asarray(func.func(np.asarray(t, dtype=float)[:, None]), dtype=float)
    return lambda t: np.asarray(func(np.asarray(t, dtype=float)), dtype=float)


def stieltjes_1d_brute(f, g, interval: tuple[float, float], partition, xi=None) -> float:
    """Classical sum ``sum_i f(xi_i) (g(x_i) - g(x_{i-1}))``.

    Parameters
    ----------
    f, g : ScalarField or callable on 1-D arrays
    interval : (s, t)
    partition : array
        Strictly increasing points; ``s`` and ``t`` are added if missing.
    xi : array, optional
        One tag per cell, inside its cell. Left endpoints by default.
    """
    s, t = (float(v) for v in interval)
    x = np.asarray(partition, dtype=float)
    if x.ndim != 1:
        raise ValueError("partition must be one-dimensional")
    if np.any(np.diff(x) <= 0):
        raise ValueError("partition must be strictly increasing")
    if x.size and (x[0] < s or x[-1] > t):
        raise ValueError("partition leaves the interval")
    if not x.size or x[0] > s:
        x = np.concatenate([[s], x])
    if x[-1] < t:
        x = np.concatenate([x, [t]])
    if xi is None:
        xi = x[:-1]
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (x.size - 1,):
        raise ValueError("need exactly one tag per cell")
    if np.any(xi < x[:-1]) or np.any(xi > x[1:]):
        raise ValueError("tags must lie in their cells")
    fv, gv = _as_1d(f)(xi), _as_1d(g)(x)
    return math.fsum(fv * np.diff(gv))


def young_loeve_bound(partition, alpha: float, beta: float, H_f: float, H_g: float) -> float:
    """Bound on ``|int f dg - brute sum|`` for any tags.

    Per cell of length ``h`` the Young–Loève estimate gives
    ``(1 + 2^g zeta(g)) H_f H_g h^g`` with ``g = alpha + beta > 1``; the first
    summand accounts for moving the tag to the left endpoint.
    """
    gamma = alpha + beta
    if gamma <= 1:
        raise ValueError("exponent sum must exceed 1")
    h = np.diff(np.asarray(partition, dtype=float))
    return float((1.0 + 2.0**gamma * zeta(gamma)) * H_f * H_g * np.sum(h**gamma))


@dataclass(frozen=True)
class StokesReport:
    """Both sides of ``int_A 1 dg = int_{dA} g_1 d(g_2, ...)``."""

    lhs: float
    rhs: float
    gap: float
    level: int
    apriori: float
    quadrature: float | None = None

    def as_dict(self) -> dict:
        return dict(lhs=self.lhs, rhs=self.rhs, gap=self.gap, level=self.level,
                    apriori=self.apriori, quadrature=self.quadrature)


def stokes_check(g, box: BoxDomain, tol: float | None = None, k_max: int | None = None,
                 spec: QuadratureSpec | None = None) -> StokesReport:
    """Compare the volume sum with the face-recursive boundary value.

    The boundary side is evaluated at the level where the volume side
    stopped. For Lipschitz tuples (all exponents 1) the determinant
    quadrature is reported as a third value.
    """
    g = FieldTuple.coerce(g)
    res = integrate(1.0, g, box, tol=tol, k_max=k_max)
    rhs = boundary_integral(box, g, res.level)
    quad = None
    if all(e == 1.0 for e in g.exponents):
        quad = det_quadrature_integral(1.0, g, box, spec)
    return StokesReport(res.value, rhs, abs(res.value - rhs), res.level, res.apriori, quad)
