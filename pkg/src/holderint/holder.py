"""Hölder fields, constant estimation, lacunary series and inf-convolution.

A :class:`ScalarField` wraps a vectorised evaluator ``(N, dim) -> (N,)``
together with the Hölder data the integration engine needs for its error
certificates. Constants are *declared*; anything obtained by sampling is
labelled ``"estimated"`` and is never used as a certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .geometry import BoxDomain

Evaluator = Callable[[np.ndarray], np.ndarray]


def _as_points(points, dim: int) -> tuple[np.ndarray, tuple[int, ...]]:
    points = np.asarray(points, dtype=float)
    if dim == 1 and (points.ndim == 0 or points.shape[-1] != 1):
        points = points[..., None]
    if points.shape[-1] != dim:
        raise ValueError(f"expected points with last axis {dim}, got shape {points.shape}")
    lead = points.shape[:-1]
    return points.reshape(-1, dim), lead


@dataclass(frozen=True)
class ScalarField:
    """Real-valued field on ``R^dim`` with Hölder metadata.

    Parameters
    ----------
    func : callable
        Vectorised evaluator taking an ``(N, dim)`` array.
    dim : int
        Number of coordinates.
    exponent : float
        Hölder exponent in (0, 1].
    holder_bound : float or None
        Upper bound on the ``exponent``-Hölder constant. ``None`` means unknown.
    sup_bound : float or None
        Upper bound on ``|f|`` over the host box.
    support : BoxDomain or None
        Box outside of which the field vanishes.
    label : str
        ``"declared"`` for certified constants, ``"estimated"`` otherwise.
    """

    func: Evaluator
    dim: int
    exponent: float = 1.0
    holder_bound: float | None = None
    sup_bound: float | None = None
    support: BoxDomain | None = None
    label: str = "declared"
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if not 0.0 < self.exponent <= 1.0:
            raise ValueError(f"Hölder exponent must lie in (0, 1], got {self.exponent}")
        if self.holder_bound is not None and self.holder_bound < 0:
            raise ValueError("holder_bound must be nonnegative")

    def __call__(self, points) -> np.ndarray:
        flat, lead = _as_points(points, self.dim)
        values = np.asarray(self.func(flat), dtype=float)
        values = np.broadcast_to(values, (flat.shape[0],))
        return values.reshape(lead)

    @property
    def certified(self) -> bool:
        return self.holder_bound is not None and self.label == "declared"

    # constructors -------------------------------------------------------

    @classmethod
    def constant(cls, value: float, dim: int) -> "ScalarField":
        value = float(value)
        return cls(lambda x: np.full(x.shape[0], value), dim, 1.0, 0.0, abs(value), name=repr(value))

    @classmethod
    def coordinate(cls, axis: int, dim: int, box: BoxDomain | None = None) -> "ScalarField":
        """The coordinate ``x_axis`` (0-based), 1-Lipschitz."""
        sup = None if box is None else float(np.max(np.abs(box.bounds[axis])))
        return cls(lambda x: x[:, axis], dim, 1.0, 1.0, sup, name=f"x{axis + 1}")

    # transformations ----------------------------------------------------

    def with_exponent(self, exponent: float, box: BoxDomain) -> "ScalarField":
        """Same function viewed as ``exponent``-Hölder on ``box``.

        Uses ``H^a(f) <= H^b(f) diam^(b-a)`` for ``a <= b``.
        """
        if exponent > self.exponent:
            raise ValueError("cannot raise the Hölder exponent")
        bound = None
        if self.holder_bound is not None:
            bound = self.holder_bound * box.diameter ** (self.exponent - exponent)
        return replace(self, exponent=exponent, holder_bound=bound)

    def restrict(self, axis: int, value: float) -> "ScalarField":
        """Restriction to the hyperplane ``x_axis = value`` (0-based axis)."""
        if self.dim == 1:
            raise ValueError("cannot restrict a one-dimensional field")
        func = self.func

        def restricted(x):
            col = np.full((x.shape[0], 1), value)
            return func(np.concatenate([x[:, :axis], col, x[:, axis:]], axis=1))

        return replace(self, func=restricted, dim=self.dim - 1, support=None)

    def pullback(self, phi: "VectorMap") -> "ScalarField":
        """``f o phi``; exponents multiply and ``H <= H_f * H_phi**alpha``."""
        if phi.dim_out != self.dim:
            raise ValueError("map target dimension does not match field")
        func, pfunc = self.func, phi.func
        bound = None
        if self.holder_bound is not None and phi.holder_bound is not None:
            bound = self.holder_bound * phi.holder_bound**self.exponent
        label = "declared" if self.label == "declared" and phi.label == "declared" else "estimated"
        return ScalarField(
            lambda t: func(pfunc(t)),
            phi.dim_in,
            self.exponent * phi.exponent,
            bound,
            self.sup_bound,
            None,
            label,
            name=f"{self.name}∘φ",
        )

    def __neg__(self):
        func = self.func
        return replace(self, func=lambda x: -func(x))

    def scale(self, c: float) -> "ScalarField":
        func = self.func
        c = float(c)
        return replace(
            self,
            func=lambda x: c * func(x),
            holder_bound=None if self.holder_bound is None else abs(c) * self.holder_bound,
            sup_bound=None if self.sup_bound is None else abs(c) * self.sup_bound,
        )


def _sum_opt(*vals):
    return None if any(v is None for v in vals) else float(sum(vals))


def add_fields(a: ScalarField, b: ScalarField, box: BoxDomain) -> ScalarField:
    """Sum, with the exponent of the rougher summand."""
    alpha = min(a.exponent, b.exponent)
    a2, b2 = a.with_exponent(alpha, box), b.with_exponent(alpha, box)
    fa, fb = a.func, b.func
    label = "declared" if a.label == b.label == "declared" else "estimated"
    return ScalarField(
        lambda x: fa(x) + fb(x),
        a.dim,
        alpha,
        _sum_opt(a2.holder_bound, b2.holder_bound),
        _sum_opt(a.sup_bound, b.sup_bound),
        None,
        label,
        name=f"({a.name}+{b.name})",
    )


def multiply_fields(a: ScalarField, b: ScalarField, box: BoxDomain) -> ScalarField:
    """Product with ``H^a(pq) <= |p| H^b(q) diam^(b-a) + |q| H^a(p)``, ``a <= b``."""
    if a.exponent > b.exponent:
        a, b = b, a
    fa, fb = a.func, b.func
    bound = None
    if None not in (a.sup_bound, b.sup_bound, a.holder_bound, b.holder_bound):
        diam = box.diameter
        bound = (
            a.sup_bound * b.holder_bound * diam ** (b.exponent - a.exponent)
            + b.sup_bound * a.holder_bound
        )
    sup = None if None in (a.sup_bound, b.sup_bound) else a.sup_bound * b.sup_bound
    label = "declared" if a.label == b.label == "declared" else "estimated"
    return ScalarField(
        lambda x: fa(x) * fb(x), a.dim, a.exponent, bound, sup, None, label,
        name=f"{a.name}*{b.name}",
    )


@dataclass(frozen=True)
class VectorMap:
    """Map ``R^dim_in -> R^dim_out`` with a Hölder bound in the Euclidean norm."""

    func: Evaluator
    dim_in: int
    dim_out: int
    exponent: float = 1.0
    holder_bound: float | None = None
    label: str = "declared"

    def __call__(self, points) -> np.ndarray:
        flat, lead = _as_points(points, self.dim_in)
        out = np.asarray(self.func(flat), dtype=float).reshape(flat.shape[0], self.dim_out)
        return out.reshape(lead + (self.dim_out,))

    @classmethod
    def identity(cls, dim: int) -> "VectorMap":
        return cls(lambda x: x, dim, dim, 1.0, 1.0)


@dataclass(frozen=True)
class FieldTuple:
    """The tuple ``(g_1, ..., g_n)`` of integrator fields."""

    fields: tuple[ScalarField, ...]

    def __post_init__(self):
        fields = tuple(self.fields)
        if not fields:
            raise ValueError("a field tuple needs at least one field")
        dims = {g.dim for g in fields}
        if len(dims) != 1:
            raise ValueError(f"fields live on different dimensions: {sorted(dims)}")
        object.__setattr__(self, "fields", fields)

    @classmethod
    def coerce(cls, g) -> "FieldTuple":
        if isinstance(g, FieldTuple):
            return g
        if isinstance(g, ScalarField):
            return cls((g,))
        return cls(tuple(g))

    @classmethod
    def identity(cls, dim: int, box: BoxDomain | None = None) -> "FieldTuple":
        return cls(tuple(ScalarField.coordinate(i, dim, box) for i in range(dim)))

    def __len__(self):
        return len(self.fields)

    def __iter__(self):
        return iter(self.fields)

    def __getitem__(self, i):
        return self.fields[i]

    @property
    def dim(self) -> int:
        return self.fields[0].dim

    @property
    def exponents(self) -> tuple[float, ...]:
        return tuple(g.exponent for g in self.fields)

    @property
    def beta_bar(self) -> float:
        return float(sum(self.exponents))

    @property
    def holder_bounds(self) -> tuple[float | None, ...]:
        return tuple(g.holder_bound for g in self.fields)

    @property
    def certified(self) -> bool:
        return all(g.certified for g in self.fields)

    def restrict(self, axis: int, value: float) -> "FieldTuple":
        return FieldTuple(tuple(g.restrict(axis, value) for g in self.fields))

    def pullback(self, phi: VectorMap) -> "FieldTuple":
        return FieldTuple(tuple(g.pullback(phi) for g in self.fields))


# ---------------------------------------------------------------------------
# Hölder constant estimation


def _sample_box(box: BoxDomain, n: int, rng) -> np.ndarray:
    return box.lower + rng.random((n, box.dim)) * box.edges


def estimate_holder_constant(f, box: BoxDomain, alpha: float, samples: int = 4096,
                             seed: int = 0) -> float:
    """Sampled lower bound on ``H^alpha(f)`` over ``box``.

    Pairs are drawn at every dyadic scale down to ``diam / samples`` so that
    small-scale oscillation is seen as well as the large-scale behaviour.
    The result never exceeds the true constant, so it must not be used as
    a certificate.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    rng = np.random.default_rng(seed)
    evaluate = f if callable(f) else f.func
    diam = box.diameter
    levels = max(1, int(math.log2(samples)) + 1)
    per_level = max(2, samples // levels)
    best = 0.0
    # uniform grid pairs along each axis
    for axis in range(box.dim):
        t = np.linspace(0.0, 1.0, samples)
        pts = np.tile(box.barycenter, (samples, 1))
        pts[:, axis] = box.lower[axis] + t * box.edges[axis]
        vals = np.asarray(evaluate(pts), dtype=float)
        for lag in _lags(samples):
            d = np.abs(pts[lag:, axis] - pts[:-lag, axis])
            q = np.abs(vals[lag:] - vals[:-lag]) / d**alpha
            best = max(best, float(q.max()))
    # random pairs at geometric scales
    for j in range(levels):
        r = diam * 2.0**-j
        x = _sample_box(box, per_level, rng)
        step = rng.normal(size=x.shape)
        step *= (r * rng.random((per_level, 1))) / np.linalg.norm(step, axis=1, keepdims=True)
        y = np.clip(x + step, box.lower, box.upper)
        d = np.linalg.norm(x - y, axis=1)
        ok = d > 0
        if not ok.any():
            continue
        vx = np.asarray(evaluate(x[ok]), dtype=float)
        vy = np.asarray(evaluate(y[ok]), dtype=float)
        best = max(best, float(np.max(np.abs(vx - vy) / d[ok] ** alpha)))
    return best


def _lags(n: int) -> list[int]:
    lags, lag = [], 1
    while lag < n:
        lags.append(lag)
        lag *= 2
    return lags


def estimate_sup(f, box: BoxDomain, samples: int = 4096, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    evaluate = f if callable(f) else f.func
    pts = np.vstack([_sample_box(box, samples, rng), box.cell_centers(3).reshape(-1, box.dim)])
    return float(np.max(np.abs(evaluate(pts))))


# ---------------------------------------------------------------------------
# lacunary series

LACUNARY_KINDS = ("cosine_1d", "sine_1d", "sine_product")


def lacunary_holder_bound(alpha: float, lip: float, amp: float) -> float:
    """Hölder bound for ``sum_i 2^(-i alpha) phi(2^i x)`` with ``|phi| <= amp``.

    ``lip`` bounds the Lipschitz constant of ``phi``. Splitting the sum at the
    scale ``2^-j ~ |x - y|`` gives low terms ``<= lip d^alpha 2^(1-a)/(2^(1-a)-1)``
    and high terms ``<= 2 amp d^alpha / (1 - 2^-a)``, uniformly in the number
    of terms.
    """
    r = 2.0 ** (1.0 - alpha)
    return lip * r / (r - 1.0) + 2.0 * amp / (1.0 - 2.0**-alpha)


def lacunary_series(alpha: float, num_terms: int, kind: str = "cosine_1d", *, dim: int = 1,
                    axis: int = 0, phase: float = 0.0, scale: float = 1.0,
                    amplitude: float = 1.0) -> ScalarField:
    """Partial sum of a lacunary series with exponent ``alpha``.

    ``cosine_1d``: ``A sum_{i=1}^m 2^(-i alpha) cos(2^i s (x_axis) + phase)``,
    ``sine_1d`` likewise with sine, ``sine_product``:
    ``A sum 2^(-i alpha) prod_k sin(2^i s x_k)``. Here ``s = scale``.

    The declared Hölder bound is :func:`lacunary_holder_bound` rescaled by
    ``scale**alpha``; it does not depend on ``num_terms``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"lacunary exponent must lie in (0, 1), got {alpha}")
    if num_terms < 1:
        raise ValueError("need at least one term")
    if kind not in LACUNARY_KINDS:
        raise ValueError(f"unknown lacunary kind {kind!r}")
    freqs = 2.0 ** np.arange(1, num_terms + 1)
    weights = amplitude * freqs**-alpha

    if kind == "sine_product":
        def func(x):
            out = np.zeros(x.shape[0])
            for w, fr in zip(weights, freqs):
                out += w * np.prod(np.sin(fr * scale * x), axis=1)
            return out
        lip = math.sqrt(dim)
    else:
        trig = np.cos if kind == "cosine_1d" else np.sin

        def func(x):
            s = x[:, axis]
            out = np.zeros(x.shape[0])
            for w, fr in zip(weights, freqs):
                out += w * trig(fr * scale * s + phase)
            return out
        lip = 1.0

    bound = abs(amplitude) * lacunary_holder_bound(alpha, lip, 1.0) * scale**alpha
    sup = float(np.sum(np.abs(weights)))
    return ScalarField(func, dim, alpha, bound, sup, name=f"lacunary({alpha},{num_terms})")


# ---------------------------------------------------------------------------
# inf-convolution


@dataclass(frozen=True)
class ApproxGuarantee:
    lip_bound: float
    sup_error: float
    holder_bound_out: float
    grid_error: float


@dataclass(frozen=True)
class ApproxField:
    """Lipschitz approximation ``f_eps`` of a Hölder field."""

    base: ScalarField
    epsilon: float
    search_step: float
    host: BoxDomain
    field: ScalarField
    guarantee: ApproxGuarantee

    def __call__(self, points):
        return self.field(points)


class _InfConvolution:
    """Evaluator ``x -> min_y f(y) + L |x - y|`` over a search grid near ``x``."""

    def __init__(self, f: ScalarField, host: BoxDomain, lip: float, radius: float, step: float,
                 chunk: int = 4096):
        self.lip = lip
        self.host = host
        counts = np.maximum(1, np.ceil(host.edges / step - 1e-9).astype(int))
        self.counts = counts
        self.pitch = host.edges / counts
        coords = [lo + (np.arange(c + 1) / c) * e for lo, c, e in zip(host.lower, counts, host.edges)]
        self.coords = coords
        mesh = np.stack(np.meshgrid(*coords, indexing="ij"), axis=-1).reshape(-1, host.dim)
        self.values = f(mesh).reshape(tuple(c + 1 for c in counts))
        reach = np.ceil(radius / self.pitch).astype(int)
        ranges = [np.arange(-r, r + 1) for r in reach]
        offs = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, host.dim)
        keep = np.linalg.norm(offs * self.pitch, axis=1) <= radius + np.linalg.norm(self.pitch)
        self.offsets = offs[keep]
        self.chunk = chunk

    def __call__(self, x: np.ndarray) -> np.ndarray:
        out = np.empty(x.shape[0])
        upper = self.counts
        for start in range(0, x.shape[0], self.chunk):
            xs = x[start:start + self.chunk]
            base = np.rint((xs - self.host.lower) / self.pitch).astype(int)
            idx = base[:, None, :] + self.offsets[None, :, :]
            valid = np.all((idx >= 0) & (idx <= upper), axis=2)
            idx = np.clip(idx, 0, upper)
            pts = np.stack([self.coords[a][idx[..., a]] for a in range(self.host.dim)], axis=-1)
            dist = np.linalg.norm(pts - xs[:, None, :], axis=2)
            vals = self.values[tuple(idx[..., a] for a in range(self.host.dim))]
            cand = np.where(valid, vals + self.lip * dist, np.inf)
            out[start:start + self.chunk] = cand.min(axis=1)
        return out


class _NodeInterpolant:
    """Multilinear interpolation of the grid inf-convolution between search nodes."""

    def __init__(self, cones: _InfConvolution):
        self.coords = cones.coords
        mesh = np.stack(np.meshgrid(*cones.coords, indexing="ij"), axis=-1).reshape(-1, cones.host.dim)
        nodes = cones(mesh).reshape(tuple(len(c) for c in cones.coords))
        self.interp = RegularGridInterpolator(tuple(cones.coords), nodes, method="linear",
                                              bounds_error=False, fill_value=None)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.interp(x)


def inf_convolution(f: ScalarField, eps: float, search_step: float | None = None,
                    host: BoxDomain | None = None, holder_bound: float | None = None,
                    interpolate: bool = False) -> ApproxField:
    """Lipschitz approximation by inf-convolution with a cone of slope ``C eps^(alpha-1)``.

    The infimum ranges over a grid of pitch at most ``search_step`` on
    ``host``. Only nodes near the query point are visited; the search radius
    is ``eps`` enlarged by the grid resolution so that no node further away
    can attain the grid minimum.

    At grid nodes the four Lipschitz/sup/Hölder/support guarantees hold
    exactly. Off the grid the value may exceed the exact infimum by at most
    ``grid_error = C (h sqrt(n)/2)^alpha + C eps^(alpha-1) h sqrt(n)/2``
    where ``h`` is the grid pitch.

    With ``interpolate=True`` the node values are joined multilinearly
    instead of by cones. The result is smooth inside every grid cell, which
    keeps quadrature of ``det D`` stable, at the price of a Lipschitz bound
    ``sqrt(n) C eps^(alpha-1)`` and an extra uniform error ``C d^alpha``
    (``d`` the cell diagonal), reported as ``grid_error``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if host is None:
        host = f.support
    if host is None:
        raise ValueError("inf_convolution needs a host box")
    if search_step is None:
        search_step = eps / 4.0
    if search_step <= 0 or search_step > eps:
        raise ValueError("search_step must lie in (0, eps]")
    C = f.holder_bound if holder_bound is None else holder_bound
    if C is None:
        raise ValueError("inf_convolution needs a Hölder bound for f")
    alpha = f.exponent
    lip = C * eps ** (alpha - 1.0)
    counts = np.maximum(1, np.ceil(host.edges / search_step - 1e-9))
    h = float(np.linalg.norm(host.edges / counts)) / 2.0
    # A node at distance r can only beat the nearest node when
    # L r - C r^alpha <= C h^alpha + L h; for alpha < 1 the left side grows at
    # rate >= L (1 - alpha) beyond eps, so the stencil below reproduces the
    # minimum over the whole grid and the result is exactly L-Lipschitz.
    radius = eps
    if alpha < 1.0:
        radius += (C * h**alpha + lip * h) / (lip * (1.0 - alpha))
    evaluator = _InfConvolution(f, host, lip, radius, search_step)
    guarantee = ApproxGuarantee(
        lip_bound=lip,
        sup_error=C * eps**alpha,
        holder_bound_out=3.0 * C,
        grid_error=C * h**alpha + lip * h,
    )
    if interpolate:
        # node data is lip-Lipschitz, so every partial derivative is bounded by lip
        evaluator = _NodeInterpolant(evaluator)
        lip *= math.sqrt(f.dim)
        guarantee = replace(guarantee, lip_bound=lip, grid_error=C * (2.0 * h) ** alpha)
    sup = None if f.sup_bound is None else f.sup_bound + C * eps**alpha + (
        guarantee.grid_error if interpolate else 0.0)
    approx = ScalarField(evaluator, f.dim, 1.0, lip, sup, None, f.label, name=f"{f.name}_eps")
    return ApproxField(f, eps, search_step, host, approx, guarantee)


def grid_nodes(approx: ApproxField) -> list[np.ndarray]:
    """Per-axis coordinates of the search grid of an :class:`ApproxField`."""
    return approx.field.func.coords


def as_field(f, dim: int, exponent: float = 1.0, holder_bound: float | None = None,
             sup_bound: float | None = None) -> ScalarField:
    """Wrap a plain vectorised callable as a field."""
    if isinstance(f, ScalarField):
        return f
    if isinstance(f, (int, float)):
        return ScalarField.constant(f, dim)
    return ScalarField(f, dim, exponent, holder_bound, sup_bound)


def field_tuple(gs: Sequence) -> FieldTuple:
    return FieldTuple.coerce(gs)
