"""Trigonometric fields showing that the exponent condition cannot be relaxed.

On ``[0, 2pi]^n`` take::

    f_m   = sum_{i=1}^m 2^(-i a) prod_k sin(2^i x_k)
    g_m,k = sum_{i=1}^m 2^(-i b_k) cos(2^i x_k)

Orthogonality of ``sin(2^i x)`` leaves only the diagonal terms of
``f_m det Dg_m``, so the integral is ``(-1)^n pi^n sum_i 2^(i(n - gamma))``.
The sum stays bounded in ``m`` exactly when ``gamma > n``.

The sign ``(-1)^n`` comes from differentiating the cosines. The textbook
statement of this example omits it; :func:`closed_form` follows that
statement and :func:`signed_closed_form` is the actual value of the
integral.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import BoxDomain
from .holder import FieldTuple, ScalarField, lacunary_holder_bound
from .oracle import QuadratureSpec, det_quadrature_integral

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CounterexampleSpec:
    """Dimension, exponents and number of series terms.

    Exponent sums ``gamma <= n`` are allowed here; that is the point.
    """

    n: int
    alpha: float
    betas: tuple[float, ...]
    m: int = 1

    def __post_init__(self):
        betas = tuple(float(b) for b in np.atleast_1d(self.betas))
        object.__setattr__(self, "betas", betas)
        if self.n < 1 or len(betas) != self.n:
            raise ValueError("need one beta per dimension")
        if self.m < 1:
            raise ValueError("need at least one series term")
        for e in (self.alpha, *betas):
            if not 0.0 < e <= 1.0:
                raise ValueError(f"exponents must lie in (0, 1], got {e}")

    @property
    def gamma(self) -> float:
        return self.alpha + sum(self.betas)

    @property
    def box(self) -> BoxDomain:
        return BoxDomain(((0.0, TWO_PI),) * self.n)


def closed_form(n: int, gamma: float, m: int) -> float:
    """``pi^n sum_{i=1}^m 2^(i(n - gamma))`` as usually stated (unsigned)."""
    return math.pi**n * math.fsum(2.0 ** (i * (n - gamma)) for i in range(1, m + 1))


def signed_closed_form(n: int, gamma: float, m: int) -> float:
    """Exact value ``(-1)^n pi^n sum_{i=1}^m 2^(i(n - gamma))`` of ``int f_m dg_m``."""
    return (-1) ** n * closed_form(n, gamma, m)


def _series_bound(exponent: float, m: int, lip: float) -> float:
    # Lipschitz terms (exponent 1) have no uniform bound, only m * lip
    if exponent < 1.0:
        return lacunary_holder_bound(exponent, lip, 1.0)
    return m * lip


def trig_counterexample(spec: CounterexampleSpec) -> tuple[ScalarField, FieldTuple, float]:
    """Return ``(f_m, g_m, closed_form)`` on ``[0, 2pi]^n``."""
    n, m = spec.n, spec.m
    freqs = 2.0 ** np.arange(1, m + 1)
    fw = freqs**-spec.alpha

    def f(x):
        out = np.zeros(x.shape[0])
        for w, fr in zip(fw, freqs):
            out += w * np.prod(np.sin(fr * x), axis=1)
        return out

    f_field = ScalarField(f, n, spec.alpha, _series_bound(spec.alpha, m, math.sqrt(n)),
                          float(fw.sum()), name=f"f_{m}")
    gs = []
    for k, beta in enumerate(spec.betas):
        gw = freqs**-beta

        def g(x, k=k, gw=gw):
            out = np.zeros(x.shape[0])
            for w, fr in zip(gw, freqs):
                out += w * np.cos(fr * x[:, k])
            return out

        gs.append(ScalarField(g, n, beta, _series_bound(beta, m, 1.0), float(gw.sum()),
                              name=f"g_{m},{k + 1}"))
    return f_field, FieldTuple(tuple(gs)), closed_form(n, spec.gamma, m)


@dataclass(frozen=True)
class SweepRow:
    m: int
    numeric_integral: float
    closed_form: float
    signed_closed_form: float
    relative_gap: float
    increment: float
    resolution: int


def sweep_resolution(m: int) -> int:
    """At least ``64 * 2^m`` midpoints per axis resolve the top frequency."""
    return 64 * 2**m


def divergence_sweep(n: int, alpha: float, betas, m_range, resolution=None,
                     max_points: int = 1 << 22) -> list[SweepRow]:
    """Quadrature value of ``int f_m det Dg_m`` against the closed form for each ``m``.

    ``relative_gap`` compares with the signed closed form. ``increment`` is
    the change of the numeric value from the previous row (``nan`` in the
    first row). A ``RuntimeWarning`` is issued whenever the resolution used
    is below ``64 * 2^m`` per axis.
    """
    betas = tuple(float(b) for b in np.atleast_1d(betas))
    gamma = alpha + sum(betas)
    rows: list[SweepRow] = []
    prev = math.nan
    for m in m_range:
        if m == 0:
            value, res = 0.0, 0
        else:
            spec = CounterexampleSpec(n, alpha, betas, m)
            res = resolution or sweep_resolution(m)
            if resolution is None and res**n > max_points:
                res = int(max_points ** (1.0 / n))
            if res < sweep_resolution(m):
                warnings.warn(f"resolution {res} under-resolves m={m}", RuntimeWarning, stacklevel=2)
            f, g, _ = trig_counterexample(spec)
            value = det_quadrature_integral(f, g, spec.box, QuadratureSpec(res))
        cf = closed_form(n, gamma, m)
        scf = signed_closed_form(n, gamma, m)
        gap = abs(value - scf) / abs(scf) if scf else abs(value)
        rows.append(SweepRow(m, value, cf, scf, gap, value - prev, res))
        prev = value
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    fields = list(SweepRow.__dataclass_fields__)
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for r in rows:
        writer.writerow([repr(getattr(r, k)) if isinstance(getattr(r, k), float) else getattr(r, k)
                         for k in fields])
    return buf.getvalue()


def rows_to_json(rows) -> str:
    def clean(v):
        return None if isinstance(v, float) and math.isnan(v) else v
    return json.dumps([{k: clean(v) for k, v in r.__dict__.items()} for r in rows], indent=2)
