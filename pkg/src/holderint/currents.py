"""Box chains as currents, the approximation path, staircases and the snowflake.

A :class:`BoxChain` is a finite weighted sum of oriented boxes in a common
``R^n``. It acts on tuples ``(f, g_1, ..., g_n)`` by summing the dyadic
integrals over its boxes. For Lipschitz tuples this is
``sum w int_B f det Dg``; :func:`evaluate_via_approximation` reaches Hölder
tuples the other way round, by evaluating Lipschitz inf-convolution
approximations and letting ``eps -> 0``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .geometry import BoxDomain
from .holder import FieldTuple, ScalarField, VectorMap, as_field, estimate_sup, inf_convolution
from .oracle import QuadratureSpec, det_quadrature_integral
from .youngint import (
    IntegralResult,
    boundary_integral,
    error_constants,
    integrate,
    parametrized_integrate,
    thin_box_bound,
)


class ConstantsUndeclared(ValueError):
    """A Hölder bound needed for a certificate is missing."""


@dataclass(frozen=True)
class ChainTerm:
    box: BoxDomain
    weight: float = 1.0
    orientation: int = 1

    def __post_init__(self):
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")

    @property
    def coefficient(self) -> float:
        return self.weight * self.orientation


@dataclass(frozen=True)
class BoxChain:
    """Weighted formal sum of oriented boxes in ``R^dim``."""

    dim: int
    terms: tuple[ChainTerm, ...] = ()

    def __post_init__(self):
        terms = tuple(t if isinstance(t, ChainTerm) else ChainTerm(*t) for t in self.terms)
        for t in terms:
            if t.box.dim != self.dim:
                raise ValueError(f"box of dimension {t.box.dim} in a {self.dim}-chain")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def single(cls, box: BoxDomain, weight: float = 1.0) -> "BoxChain":
        return cls(box.dim, (ChainTerm(box, weight),))

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def scaled(self, c: float) -> "BoxChain":
        return BoxChain(self.dim, tuple(ChainTerm(t.box, c * t.weight, t.orientation) for t in self))

    def bounding_box(self, margin: float = 0.0) -> BoxDomain:
        if not self.terms:
            raise ValueError("empty chain has no bounding box")
        lo = np.min([t.box.lower for t in self], axis=0) - margin
        hi = np.max([t.box.upper for t in self], axis=0) + margin
        return BoxDomain.from_arrays(lo, hi)


def chain_norms(chain: BoxChain) -> tuple[float, float]:
    """``(mass, boundary_mass)`` as ``sum |w| vol`` and ``sum |w| surface``.

    The boundary mass is an upper bound when boxes share faces; intervals
    have two unit point masses.
    """
    mass = math.fsum(abs(t.weight) * t.box.volume for t in chain)
    bmass = math.fsum(abs(t.weight) * t.box.surface_area for t in chain)
    return mass, bmass


def _combine(results: list[IntegralResult], coeffs: list[float]) -> IntegralResult:
    crit = {r.criterion for r in results}
    if "budget" in crit:
        criterion = "budget"
    elif crit <= {"certified"}:
        criterion = "certified"
    elif "heuristic" in crit:
        criterion = "heuristic"
    else:
        criterion = "level"
    return IntegralResult(
        value=math.fsum(c * r.value for c, r in zip(coeffs, results)),
        level=max(r.level for r in results),
        apriori=math.fsum(abs(c) * r.apriori for c, r in zip(coeffs, results)),
        aposteriori=math.fsum(abs(c) * r.aposteriori for c, r in zip(coeffs, results)),
        evaluations=sum(r.evaluations for r in results),
        criterion=criterion,
        constants=results[0].constants,
        runtime_ms=sum(r.runtime_ms for r in results),
    )


def chain_evaluate(chain: BoxChain, f, g, tol: float | None = None, **kwargs) -> IntegralResult:
    """``sum w o int_B f dg``; the tolerance is split evenly over the boxes."""
    if not chain.terms:
        raise ValueError("cannot evaluate an empty chain")
    g = FieldTuple.coerce(g)
    share = None if tol is None else tol / len(chain)
    results = [integrate(f, g, t.box, share, **kwargs) for t in chain]
    return _combine(results, [t.coefficient for t in chain])


def chain_boundary_evaluate(chain: BoxChain, g, k: int = 0) -> float:
    """``dT(g_1, ..., g_n)`` for an ``(n+1)``-chain ``T``; endpoint sums for intervals."""
    g = FieldTuple.coerce(g)
    return math.fsum(t.coefficient * boundary_integral(t.box, g, k) for t in chain)


# ---------------------------------------------------------------------------
# staircase


def staircase_chain(a, cutoff: int) -> BoxChain:
    """Intervals ``[2 s_m, 2 s_m + a_{m+1}]``, ``m = 0..cutoff-1``, with ``s_m = a_1 + ... + a_m``.

    ``a`` is either a sequence or a callable ``m -> a_m`` (1-based).
    """
    if cutoff < 1:
        raise ValueError("cutoff must be at least 1")
    vals = _sequence(a, cutoff)
    if np.any(vals <= 0):
        raise ValueError("staircase lengths must be positive")
    s = np.concatenate([[0.0], np.cumsum(vals)])
    terms = tuple(ChainTerm(BoxDomain(((2 * s[m], 2 * s[m] + vals[m]),))) for m in range(cutoff))
    return BoxChain(1, terms)


def _sequence(a, cutoff: int) -> np.ndarray:
    if callable(a):
        return np.array([float(a(m)) for m in range(1, cutoff + 1)])
    vals = np.asarray(a, dtype=float)[:cutoff]
    if vals.size < cutoff:
        raise ValueError("sequence shorter than cutoff")
    return vals


def staircase_tent(chain: BoxChain, alpha: float) -> ScalarField:
    """``g(x) = min(x - 2 s_m, 2 s_{m+1} - x)^alpha`` on ``[2 s_m, 2 s_{m+1}]``, 0 elsewhere.

    On the ``m``-th interval this is ``(x - 2 s_m)^alpha``; between intervals
    it falls back to zero. Its ``alpha``-Hölder constant is 1.
    """
    left = np.array([t.box.bounds[0][0] for t in chain])
    right = left + 2 * np.array([t.box.edges[0] for t in chain])

    def g(x):
        x = x[:, 0]
        i = np.clip(np.searchsorted(left, x, side="right") - 1, 0, len(left) - 1)
        d = np.minimum(x - left[i], right[i] - x)
        return np.where(d > 0, np.abs(d) ** alpha, 0.0)

    return ScalarField(g, 1, alpha, 1.0, float(np.max(right - left) / 2) ** alpha, name="tent")


@dataclass(frozen=True)
class StaircaseReport:
    """Partial sums of ``a_m^alpha`` and of the per-interval thin-box bounds."""

    alpha: float
    beta: float
    cutoff: int
    power_sums: np.ndarray
    bound_sums: np.ndarray

    def as_dict(self) -> dict:
        return dict(alpha=self.alpha, beta=self.beta, cutoff=self.cutoff,
                    power_sums=self.power_sums.tolist(), bound_sums=self.bound_sums.tolist())


def staircase_report(a, cutoff: int, alpha: float, beta: float | None = None, sup_f: float = 1.0,
                     H_f: float = 1.0, H_g: float = 1.0) -> StaircaseReport:
    """Partial sums for ``m = 1..cutoff``.

    ``bound_sums`` adds :func:`thin_box_bound` over the intervals, i.e.
    ``C_1 (H_f H_g a_m^(alpha+beta) + |f| H_g a_m^beta)``. Requires
    ``alpha + beta > 1``.
    """
    beta = alpha if beta is None else beta
    vals = _sequence(a, cutoff)
    consts = error_constants(1, alpha, [beta])
    per = [thin_box_bound(BoxDomain(((0.0, v),)), consts, sup_f, H_f, [H_g]) for v in vals]
    return StaircaseReport(alpha, beta, cutoff, np.cumsum(vals**alpha), np.cumsum(per))


# ---------------------------------------------------------------------------
# approximation path


@dataclass(frozen=True)
class ApproxStep:
    m: int
    eps: float
    value: float
    bound: float
    gap: float
    quad_error: float
    precondition: bool


@dataclass(frozen=True)
class ApproxEvalTrace:
    """Values ``T(f_eps, pi_eps)`` for ``eps = 2^-m`` and their Cauchy bounds.

    ``bound`` in row ``m`` bounds ``|T_m - T_{m-1}|``:
    ``6n M(dT) |f| C^b eps^(b-(n-1)) + 3(n+1) M(T) C^(a,b) eps^(g-n)``.
    ``limit_bound`` bounds the distance from the last value to the limit.
    """

    steps: tuple[ApproxStep, ...]
    constants: dict
    mass: float
    boundary_mass: float
    sup_f: float
    limit: float
    limit_bound: float
    label: str
    cross_check: dict = field(default_factory=dict)

    def gaps_within_bounds(self, slack: float = 0.0) -> bool:
        return all(s.gap <= s.bound + slack * s.quad_error for s in self.steps[1:])

    def as_dict(self) -> dict:
        return {
            "steps": [{"eps": s.eps, "value": s.value, "bound": s.bound, "m": s.m, "gap": s.gap,
                       "quad_error": s.quad_error, "precondition": s.precondition}
                      for s in self.steps],
            "limit": self.limit,
            "limit_bound": self.limit_bound,
            "cross_check": self.cross_check,
            "constants": self.constants,
            "label": self.label,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, default=_json_default)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def cauchy_step_bound(n: int, mass: float, bmass: float, sup_f: float, C_alpha: float,
                      C_betas, alpha: float, betas, eps: float) -> float:
    """Bound on ``|T(f'_d, pi'_d) - T(f_e, pi_e)|`` for ``eps <= d <= 2 eps``."""
    Cb = float(np.prod(C_betas))
    bbar = float(sum(betas))
    gamma = alpha + bbar
    return (6 * n * bmass * sup_f * Cb * eps ** (bbar - (n - 1))
            + 3 * (n + 1) * mass * C_alpha * Cb * eps ** (gamma - n))


def limit_bound(n: int, mass: float, bmass: float, sup_f: float, C_alpha: float, C_betas,
                alpha: float, betas, m: int) -> float:
    """Bound on ``|lim - T(f_eps, pi_eps)|`` at ``eps = 2^-m``."""
    Cb = float(np.prod(C_betas))
    bbar = float(sum(betas))
    gamma = alpha + bbar
    return (6 * n + 3) / (1 - 2.0 ** (n - gamma)) * (
        bmass * sup_f * Cb * 2.0 ** (m * ((n - 1) - bbar))
        + mass * C_alpha * Cb * 2.0 ** (m * (n - gamma))
    )


def _quad_chain(chain, f, g, res):
    spec = QuadratureSpec(res)
    return math.fsum(t.coefficient * det_quadrature_integral(f, g, t.box, spec) for t in chain)


def approximation_inflation(n: int, alpha: float, search_factor: float) -> float:
    """Factor by which interpolated approximations exceed the lemma constants.

    Multilinear interpolation of ``L``-Lipschitz node data is
    ``sqrt(n) L``-Lipschitz, and it stays within ``C eps^alpha + C d^alpha``
    of the field, ``d = sqrt(n) search_factor eps`` being the cell diagonal.
    Both properties hold with ``C`` replaced by the returned factor times
    ``C``, which is all the Cauchy estimate uses.
    """
    return max(math.sqrt(n), 1.0 + (math.sqrt(n) * search_factor) ** alpha)


def evaluate_via_approximation(chain: BoxChain, f, g, m_max: int, m_min: int = 1,
                               resolution: int = 64, search_factor: float = 0.25,
                               engine_level: int | None = None,
                               cells_per_node: int = 4) -> ApproxEvalTrace:
    """Evaluate the chain on inf-convolution approximations with ``eps = 2^-m``.

    The approximations are the grid inf-convolutions joined multilinearly
    between search nodes (see :func:`inf_convolution`). Their Lipschitz and
    uniform bounds exceed the lemma values by :func:`approximation_inflation`,
    so every bound in the trace uses the inflated constants.

    Each step integrates ``f_eps det D pi_eps`` by midpoint quadrature with
    at least ``cells_per_node`` midpoints per search cell and axis (and at
    least ``resolution`` per axis), and reports ``quad_error``, the change
    against half that resolution (a heuristic size of the quadrature error).
    The final value is compared with :func:`chain_evaluate` at
    ``engine_level``; agreement is judged against ``limit_bound`` plus the
    engine certificate plus the quadrature error of the last step.

    Raises
    ------
    ConstantsUndeclared
        If ``f`` or some ``g_i`` carries no Hölder bound.
    """
    g = FieldTuple.coerce(g)
    n = chain.dim
    f = as_field(f, n)
    if len(g) != n:
        raise ValueError(f"need {n} integrator fields")
    if f.holder_bound is None or any(b is None for b in g.holder_bounds):
        raise ConstantsUndeclared("constants undeclared: every field needs a Hölder bound")
    consts = error_constants(n, f.exponent, g.exponents)
    label = "certified" if f.certified and g.certified else "heuristic"
    mass, bmass = chain_norms(chain)
    host = chain.bounding_box(margin=2.0**-m_min)
    sup_f = f.sup_bound if f.sup_bound is not None else estimate_sup(f, host)
    C_alpha = f.holder_bound * approximation_inflation(n, f.exponent, search_factor)
    C_betas = tuple(b * approximation_inflation(n, e, search_factor)
                    for b, e in zip(g.holder_bounds, g.exponents))
    min_edge = min(float(t.box.edges.max()) for t in chain)
    steps = []
    prev = None
    for m in range(m_min, m_max + 1):
        eps = 2.0**-m
        step = search_factor * eps
        fe = inf_convolution(f, eps, step, host, interpolate=True).field
        ge = FieldTuple(tuple(inf_convolution(gi, eps, step, host, interpolate=True).field
                              for gi in g))
        res = max(resolution, cells_per_node * math.ceil(min_edge / step))
        value = _quad_chain(chain, fe, ge, res)
        coarse = _quad_chain(chain, fe, ge, max(2, res // 2))
        bound = cauchy_step_bound(n, mass, bmass, sup_f, C_alpha, C_betas, f.exponent,
                                  g.exponents, eps)
        gap = math.nan if prev is None else abs(value - prev)
        steps.append(ApproxStep(m, eps, value, bound, gap, abs(value - coarse),
                                C_alpha * eps**f.exponent <= sup_f))
        prev = value
    last = steps[-1]
    lb = limit_bound(n, mass, bmass, sup_f, C_alpha, C_betas, f.exponent, g.exponents, m_max)
    engine = chain_evaluate(chain, f, g, k_max=engine_level)
    tolerance = lb + engine.apriori + last.quad_error
    cross = {
        "engine_value": engine.value,
        "engine_apriori": engine.apriori,
        "engine_level": engine.level,
        "difference": abs(last.value - engine.value),
        "tolerance": tolerance,
        "agree": abs(last.value - engine.value) <= tolerance,
    }
    constants = {"alpha": f.exponent, "betas": list(g.exponents), "C_alpha": C_alpha,
                 "C_betas": list(C_betas), "gamma": consts.gamma,
                 "inflation": approximation_inflation(n, f.exponent, search_factor)}
    return ApproxEvalTrace(tuple(steps), constants, mass, bmass, sup_f, last.value, lb, label,
                           cross)


# ---------------------------------------------------------------------------
# von Koch snowflake

KOCH_ALPHA = math.log(3.0) / math.log(4.0)


def koch_vertices(level: int) -> np.ndarray:
    """Closed level-``level`` snowflake polygon, shape ``(3*4^level + 1, 2)``.

    Starts from the counter-clockwise unit triangle; every segment is
    replaced by four of a third the length with the bump pointing outward.
    """
    if level < 0:
        raise ValueError("level must be nonnegative")
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3.0) / 2], [0.0, 0.0]])
    c, s = 0.5, -math.sqrt(3.0) / 2
    rot = np.array([[c, -s], [s, c]])
    for _ in range(level):
        p, q = pts[:-1], pts[1:]
        d = (q - p) / 3.0
        a = p + d
        b = a + d @ rot.T
        new = np.empty((4 * len(p) + 1, 2))
        new[0:-1:4] = p
        new[1:-1:4] = a
        new[2:-1:4] = b
        new[3:-1:4] = p + 2 * d
        new[-1] = pts[-1]
        pts = new
    return pts


def shoelace_area(vertices: np.ndarray) -> float:
    """Signed area of a closed polygon (last vertex repeats the first)."""
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * math.fsum(x[:-1] * y[1:] - x[1:] * y[:-1])


@dataclass(frozen=True)
class KochCurve:
    """Constant-speed parametrization of the level-``level`` polygon on ``[0, 1]``."""

    level: int
    vertices: np.ndarray = field(repr=False)

    @property
    def segments(self) -> int:
        return len(self.vertices) - 1

    @property
    def segment_length(self) -> float:
        return 3.0**-self.level

    @property
    def speed(self) -> float:
        return self.segments * self.segment_length

    def __call__(self, t) -> np.ndarray:
        """Points for parameters ``t`` of any shape; returns shape ``t.shape + (2,)``."""
        t = np.asarray(t, dtype=float)
        pos = np.mod(t.reshape(-1), 1.0) * self.segments
        j = np.minimum(np.floor(pos).astype(int), self.segments - 1)
        frac = (pos - j)[:, None]
        v = self.vertices
        return (v[j] + frac * (v[j + 1] - v[j])).reshape(t.shape + (2,))

    def as_map(self, certified: str = "snowflake") -> VectorMap:
        """``certified="snowflake"``: exponent ``log3/log4`` with bound ``2 * 12^alpha``
        uniform in the level; ``"lipschitz"``: exponent 1 with bound ``speed``.

        The snowflake bound: for ``|t-s| in [1/(12*4^j), 1/(3*4^j)]`` both points
        lie on at most two adjacent level-``j`` arcs of diameter ``3^-j`` each,
        and ``(1/(12*4^j))^alpha = 12^-alpha 3^-j``. Below the polygon scale
        the map is linear with quotient at most ``3^alpha``.
        """
        verts, nseg = self.vertices, self.segments

        def func(t):
            pos = np.mod(t[:, 0], 1.0) * nseg
            j = np.minimum(np.floor(pos).astype(int), nseg - 1)
            frac = (pos - j)[:, None]
            return verts[j] + frac * (verts[j + 1] - verts[j])

        if certified == "snowflake":
            return VectorMap(func, 1, 2, KOCH_ALPHA, 2.0 * 12.0**KOCH_ALPHA)
        if certified == "lipschitz":
            return VectorMap(func, 1, 2, 1.0, self.speed)
        raise ValueError(f"unknown certificate {certified!r}")


@dataclass(frozen=True)
class KochReport:
    level: int
    segments: int
    segment_length: float
    alpha: float
    sampled_quotient: float
    certified_bound: float
    area: float


def sampled_koch_quotient(curve: KochCurve, samples: int = 4096, seed: int = 0) -> float:
    """Largest sampled ``|phi(t) - phi(s)| / |t - s|^alpha`` over dyadic lags and random pairs."""
    rng = np.random.default_rng(seed)
    t = np.arange(samples) / samples
    p = curve(t)
    best = 0.0
    lag = 1
    while lag < samples:
        d = np.linalg.norm(p[lag:] - p[:-lag], axis=1)
        best = max(best, float(d.max() / (lag / samples) ** KOCH_ALPHA))
        lag *= 2
    s1, s2 = rng.random(samples), rng.random(samples)
    keep = s1 != s2
    d = np.linalg.norm(curve(s1[keep]) - curve(s2[keep]), axis=1)
    best = max(best, float(np.max(d / np.abs(s1[keep] - s2[keep]) ** KOCH_ALPHA)))
    # finest scale: within one segment and across a corner
    h = 0.5 / curve.segments
    u = rng.random(samples)
    d = np.linalg.norm(curve(u + h) - curve(u), axis=1)
    return max(best, float(np.max(d / h**KOCH_ALPHA)))


def koch_parametrization(level: int, samples: int = 4096) -> tuple[KochCurve, KochReport]:
    """Level-``level`` polygon map ``[0, 1] -> R^2`` and its Hölder report."""
    curve = KochCurve(level, koch_vertices(level))
    report = KochReport(level, curve.segments, curve.segment_length, KOCH_ALPHA,
                        sampled_koch_quotient(curve, samples), 2.0 * 12.0**KOCH_ALPHA,
                        shoelace_area(curve.vertices))
    return curve, report


def koch_boundary_evaluate(f, g, level: int, tol: float | None = None, k_max: int | None = None,
                           certified: str = "snowflake", **kwargs) -> IntegralResult:
    """``int_{S^1} f o phi d(g o phi)`` along the level-``level`` polygon.

    The parameter circle is ``[0, 1]`` with ``phi(1) = phi(0)``, so the
    endpoint cell needs no special treatment.
    """
    curve = KochCurve(level, koch_vertices(level))
    f = as_field(f, 2)
    g = FieldTuple.coerce(g)
    return parametrized_integrate(f, g, curve.as_map(certified), BoxDomain.unit(1), tol,
                                  k_max=k_max, **kwargs)


def koch_chain_area(level: int) -> float:
    return shoelace_area(koch_vertices(level))


def trace_to_rows(trace: ApproxEvalTrace) -> list[dict]:
    return [asdict(s) for s in trace.steps]
