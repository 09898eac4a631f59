"""Recursive dyadic Riemann sums for ``int_A f d(g_1, ..., g_n)``.

Evaluation scheme
-----------------
All face integrals are resolved on one absolute dyadic grid of the host box
(the *depth* ``L``). For a cell ``B`` of level ``k <= L`` the boundary value
``J(B, g)`` is computed from its faces refined to the remaining level
``L - k``. Because interior faces cancel in pairs, this equals the sum of the
depth-zero boundary values of the level-``L`` descendants of ``B``; the
engine therefore evaluates the depth-zero values of every level-``L`` cell
once (vectorised over the grid) and obtains coarser cells by block sums.

Every point the recursion touches sits on the half-grid of level ``L``: a
cell with integer index ``c`` uses per-axis offsets ``0, 1, 2`` which map to
the lattice points ``2c``, ``2c + 1`` and ``2c + 2``. Field values are
cached per parity pattern of these offsets, which is what makes adjacent
cells share their face evaluations.

Certificates
------------
``apriori_bound`` is the bound for Riemann sums with exact face integrals.
With faces resolved only to finite depth an additional term appears; it is
bounded by :func:`face_defect_coefficient` (see its docstring) and added to
``IntegralResult.apriori``. In dimension one the face integrals are exact
endpoint differences and the extra term vanishes.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .geometry import BoxDomain, boundary_faces
from .holder import FieldTuple, ScalarField, VectorMap, as_field

GAMMA_ATOL = 1e-12
HEURISTIC_MIN_LEVEL = 3
MAX_GRID_POINTS = 2**25
CHUNK = 1 << 16


class ExponentSumError(ValueError):
    """Raised when ``alpha + beta_1 + ... + beta_n <= n``."""


class BudgetExhausted(RuntimeError):
    """Tolerance not met at the maximal level; ``result`` holds the best value."""

    def __init__(self, result: "IntegralResult"):
        super().__init__(
            f"tolerance not met at level {result.level}: apriori={result.apriori:.3g}, "
            f"aposteriori={result.aposteriori:.3g}"
        )
        self.result = result


# ---------------------------------------------------------------------------
# error constants


def _check_exponents(alpha: float, betas: Sequence[float]) -> None:
    for e in (alpha, *betas):
        if not 0.0 < e <= 1.0:
            raise ValueError(f"Hölder exponents must lie in (0, 1], got {e}")
    n = len(betas)
    gamma = alpha + sum(betas)
    if gamma <= n + GAMMA_ATOL:
        raise ExponentSumError(
            f"exponent sum too small: alpha + sum(beta) = {gamma:.12g} <= n = {n}"
        )


@lru_cache(maxsize=None)
def _cprime(betas: tuple[float, ...]) -> float:
    n = len(betas)
    if n == 1:
        return 1.0
    return 2 * n * (_cprime(betas[1:]) + _csum(betas[0], betas[1:]))


@lru_cache(maxsize=None)
def _csum(alpha: float, betas: tuple[float, ...]) -> float:
    n = len(betas)
    _check_exponents(alpha, betas)
    gamma = alpha + sum(betas)
    return _cprime(betas) / (1.0 - 2.0 ** (n - gamma))


@dataclass(frozen=True)
class ErrorConstants:
    """Constants of the dyadic error recursion for one exponent tuple."""

    n: int
    alpha: float
    betas: tuple[float, ...]
    cprime: float
    csum: float

    @property
    def beta_bar(self) -> float:
        return float(sum(self.betas))

    @property
    def gamma(self) -> float:
        return self.alpha + self.beta_bar

    @property
    def ratio(self) -> float:
        """Geometric decay factor ``2^(n - gamma)`` of consecutive increments."""
        return 2.0 ** (self.n - self.gamma)


def error_constants(n: int, alpha: float, betas) -> ErrorConstants:
    """``C'_n(beta)`` and ``C_n(alpha, beta)``.

    ``C'_1 = 1``, ``C'_n(b) = 2n (C'_{n-1}(b_2..b_n) + C_{n-1}(b_1; b_2..b_n))``
    and ``C_n(a, b) = C'_n(b) / (1 - 2^(n - a - sum b))``.

    Raises
    ------
    ExponentSumError
        If ``alpha + sum(betas) <= n``.
    """
    betas = tuple(float(b) for b in np.atleast_1d(betas))
    if len(betas) != n:
        raise ValueError(f"expected {n} exponents, got {len(betas)}")
    _check_exponents(alpha, betas)
    return ErrorConstants(n, float(alpha), betas, _cprime(betas), _csum(float(alpha), betas))


def _prod(values) -> float:
    return float(np.prod(np.asarray(values, dtype=float)))


def apriori_bound(consts: ErrorConstants, k: int, diam: float, H_f: float, H_g) -> float:
    """``C_n diam^gamma 2^(k(n-gamma)) H^alpha(f) prod H^beta_i(g_i)``."""
    return (consts.csum * diam**consts.gamma * 2.0 ** (k * (consts.n - consts.gamma))
            * H_f * _prod(H_g))


def cauchy_bound(consts: ErrorConstants, k: int, diam: float, H_f: float, H_g) -> float:
    """Bound ``C'_n diam^gamma 2^(k(n-gamma)) H^{alpha,beta}`` on ``|I_k - I_{k-1}|``."""
    return (consts.cprime * diam**consts.gamma * 2.0 ** (k * (consts.n - consts.gamma))
            * H_f * _prod(H_g))


@lru_cache(maxsize=None)
def face_defect_coefficient(betas: tuple[float, ...], depth: int) -> float:
    """Coefficient ``E`` with ``|J(B) - J_depth(B)| <= E diam(B)^sum(b) prod H(g_i)``.

    ``J_depth`` resolves the faces of ``B`` ``depth`` levels below ``B`` and
    their own faces at depth zero. For ``m = len(betas)``::

        E_1 = 0
        E_m(j) = 2m [ C_{m-1}(b_1; b') 2^(j r) + E_{m-1}(b', j)
                      + sum_{l=1}^{j} 2^(l r) E_{m-1}(b', j - l) ]

    with ``b' = (b_2, ..., b_m)`` and ``r = (m - 1) - sum(b)``. The first term
    is the Riemann-sum error on a face with exact lower boundary values, the
    other two come from summation by parts over the face hierarchy (the
    lower-dimensional defects are weighted by increments of ``g_1`` because
    the signed sum of boundaries of faces vanishes).
    """
    m = len(betas)
    if m == 1:
        return 0.0
    rate = (m - 1) - sum(betas)
    head = _csum(betas[0], betas[1:]) * 2.0 ** (depth * rate)
    lower = face_defect_coefficient(betas[1:], depth)
    tail = sum(2.0 ** (l * rate) * face_defect_coefficient(betas[1:], depth - l)
               for l in range(1, depth + 1))
    return 2 * m * (head + lower + tail)


def discretization_bound(consts: ErrorConstants, k: int, depth: int, diam: float,
                         f_center: float, H_f: float, H_g) -> float:
    """Extra error of a level-``k`` sum whose faces are resolved to ``depth``.

    Summation by parts over the dyadic hierarchy gives::

        diam^b H^b [ |f(center)| E_n(L) + H_f diam^a sum_{l=1}^{k} 2^(l(n-g)) E_n(L - l) ]
    """
    betas = consts.betas
    if consts.n == 1:
        return 0.0
    HB = _prod(H_g)
    total = abs(f_center) * face_defect_coefficient(betas, depth)
    total += H_f * diam**consts.alpha * sum(
        2.0 ** (l * (consts.n - consts.gamma)) * face_defect_coefficient(betas, depth - l)
        for l in range(1, k + 1)
    )
    return diam**consts.beta_bar * HB * total


def thin_box_bound(box: BoxDomain, consts: ErrorConstants, sup_f: float, H_f: float, H_g) -> float:
    """Bound on ``|int_A f dg|`` in terms of the shortest edge ``eps`` of ``A``.

    ``K_n (|f| eps^(b-n) + H_f eps^(g-n)) L^n(A) prod H(g_i)`` with
    ``K_n = 2^(n-1) max(C'_n n^(b/2), C_n n^(g/2))``: cover ``A`` by at most
    ``prod_j (N_j + 1) <= 2^(n-1) L^n(A) / eps^n`` boxes of diameter at most
    ``sqrt(n) eps`` and apply the level-zero boundary and Riemann-sum bounds
    on each.
    """
    n = consts.n
    eps = box.shortest_edge
    K = 2.0 ** (n - 1) * max(consts.cprime * n ** (consts.beta_bar / 2),
                             consts.csum * n ** (consts.gamma / 2))
    return (K * (sup_f * eps ** (consts.beta_bar - n) + H_f * eps ** (consts.gamma - n))
            * box.volume * _prod(H_g))


# ---------------------------------------------------------------------------
# grid machinery


def _axis_nodes(lo: float, hi: float, frac: np.ndarray) -> np.ndarray:
    return np.where(frac == 1.0, hi, lo + frac * (hi - lo))


def _evaluate(func, points: np.ndarray, workers: int) -> np.ndarray:
    n = points.shape[0]
    if workers <= 1 or n <= CHUNK:
        return np.asarray(func(points), dtype=float).reshape(n)
    out = np.empty(n)
    starts = range(0, n, CHUNK)

    def run(s):
        out[s:s + CHUNK] = np.asarray(func(points[s:s + CHUNK]), dtype=float).reshape(-1)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(run, starts))
    return out


class _Lattice:
    """Field values on the half-grid of level ``depth``, cached per parity pattern."""

    def __init__(self, box: BoxDomain, depth: int, fields: Sequence[ScalarField], workers: int = 1):
        self.box = box
        self.depth = depth
        self.fields = list(fields)
        self.workers = workers
        self.evaluations = 0
        m = 2**depth
        self.m = m
        self._nodes = {
            True: [_axis_nodes(lo, hi, np.arange(m + 1) / m) for lo, hi in box.bounds],
            False: [_axis_nodes(lo, hi, (2 * np.arange(m) + 1) / (2 * m)) for lo, hi in box.bounds],
        }
        self._cache: dict[tuple[int, tuple[bool, ...]], np.ndarray] = {}

    def pattern(self, q: int, even: tuple[bool, ...]) -> np.ndarray:
        key = (q, even)
        if key not in self._cache:
            axes = [self._nodes[e][a] for a, e in enumerate(even)]
            shape = tuple(len(ax) for ax in axes)
            pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
            vals = _evaluate(self.fields[q].func, pts, self.workers)
            self.evaluations += pts.shape[0]
            self._cache[key] = vals.reshape(shape)
        return self._cache[key]

    def get(self, q: int, offsets: tuple[int, ...]) -> np.ndarray:
        arr = self.pattern(q, tuple(o != 1 for o in offsets))
        m = self.m
        idx = tuple(slice(1, m + 1) if o == 2 else slice(0, m) for o in offsets)
        return arr[idx]


def _replace(offsets: tuple[int, ...], axis: int, value: int) -> tuple[int, ...]:
    return offsets[:axis] + (value,) + offsets[axis + 1:]


def _cell_boundary(lat: _Lattice, q: int, offsets: tuple[int, ...]) -> np.ndarray:
    """Depth-zero boundary values of all level-``depth`` cells, recursively."""
    free = [a for a, o in enumerate(offsets) if o == 1]
    if len(free) == 1:
        a = free[0]
        return lat.get(q, _replace(offsets, a, 2)) - lat.get(q, _replace(offsets, a, 0))
    total = None
    for i, a in enumerate(free, start=1):
        for j in (0, 1):
            face = _replace(offsets, a, 2 * j)
            term = lat.get(q, face) * _cell_boundary(lat, q + 1, face)
            if (i + j) % 2:
                term = -term
            total = term if total is None else total + term
    return total


def _block_sum(values: np.ndarray, levels_up: int) -> np.ndarray:
    if levels_up == 0:
        return values
    b = 2**levels_up
    n = values.ndim
    shape = []
    for s in values.shape:
        shape += [s // b, b]
    return values.reshape(shape).sum(axis=tuple(range(1, 2 * n, 2)))


def _depth_zero_boundaries(g: FieldTuple, box: BoxDomain, depth: int, workers: int):
    n = box.dim
    if (2**depth + 1) ** n > MAX_GRID_POINTS:
        raise MemoryError(f"level {depth} in dimension {n} exceeds the grid size limit")
    lat = _Lattice(box, depth, g.fields, workers)
    J0 = _cell_boundary(lat, 0, (1,) * n)
    return J0, lat.evaluations


def _coerce(f, g, box: BoxDomain) -> tuple[ScalarField, FieldTuple]:
    g = FieldTuple.coerce(g)
    f = as_field(f, box.dim)
    if g.dim != box.dim or f.dim != box.dim:
        raise ValueError("field dimensions do not match the box")
    if len(g) != box.dim:
        raise ValueError(f"need {box.dim} integrator fields on a {box.dim}-box, got {len(g)}")
    return f, g


def _resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("SNOWFLAKE_WORKERS", "1"))
    return max(1, int(workers))


def riemann_sequence(f, g, box: BoxDomain, depth: int, workers: int | None = None) -> np.ndarray:
    """``I_k`` for ``k = 0..depth`` with all faces resolved at absolute ``depth``.

    Consecutive entries satisfy ``|I_k - I_{k-1}| <= cauchy_bound(k)``.
    """
    f, g = _coerce(f, g, box)
    error_constants(box.dim, f.exponent, g.exponents)
    J0, _ = _depth_zero_boundaries(g, box, depth, _resolve_workers(workers))
    out = []
    for k in range(depth + 1):
        Jk = _block_sum(J0, depth - k)
        fv = f(box.cell_centers(k))
        out.append(float(np.sum(fv * Jk)))
    return np.array(out)


def _riemann(f: ScalarField, g: FieldTuple, box: BoxDomain, k: int, depth: int, tags, workers):
    if depth < k:
        raise ValueError("depth must be at least the cell level")
    J0, evals = _depth_zero_boundaries(g, box, depth, workers)
    Jk = _block_sum(J0, depth - k)
    if tags is None:
        pts = box.cell_centers(k)
    elif isinstance(tags, np.random.Generator):
        m = 2**k
        idx = np.stack(np.meshgrid(*[np.arange(m)] * box.dim, indexing="ij"), axis=-1)
        pts = box.lower + (idx + tags.random(idx.shape)) / m * box.edges
    else:
        pts = np.asarray(tags, dtype=float)
    fv = _evaluate(f.func, pts.reshape(-1, box.dim), workers).reshape(Jk.shape)
    evals += fv.size
    return float(np.sum(fv * Jk)), evals


def riemann_sum(f, g, box: BoxDomain, k: int, depth: int | None = None, tags=None,
                workers: int | None = None) -> float:
    """Dyadic Riemann sum ``sum_{B in P_k} f(xi_B) J(B, g)``.

    Parameters
    ----------
    f : ScalarField or float
    g : FieldTuple or sequence of ScalarField
    box : BoxDomain
    k : int
        Cell level.
    depth : int, optional
        Absolute level at which face integrals are resolved; defaults to ``k``.
    tags : array or numpy Generator, optional
        Intermediate points ``xi_B`` (shape ``(2**k,)*n + (n,)``), or a generator
        for uniformly random tags. Barycenters by default.
    """
    f, g = _coerce(f, g, box)
    error_constants(box.dim, f.exponent, g.exponents)
    depth = k if depth is None else depth
    value, _ = _riemann(f, g, box, k, depth, tags, _resolve_workers(workers))
    return value


def boundary_integral(box: BoxDomain, g, k: int = 0, workers: int | None = None) -> float:
    """``J(box, g) = sum_{i,j} (-1)^(i+j) int_{B_(i,j)} g_1 d(g_2, ..., g_n)``.

    Each face integral is a level-``k`` Riemann sum on the (n-1)-dimensional
    face with ``g_1`` in the integrand slot. In dimension one this is
    ``g(t) - g(s)``.
    """
    g = FieldTuple.coerce(g)
    n = box.dim
    if len(g) != n or g.dim != n:
        raise ValueError(f"need {n} integrator fields on a {n}-box")
    if n > 1:
        error_constants(n - 1, g[0].exponent, g.exponents[1:])
    total = 0.0
    for face in boundary_faces(box):
        if n == 1:
            value = float(g[0](face.embed(np.zeros((1, 0))))[0])
        else:
            axis = face.axis - 1
            g1 = g[0].restrict(axis, face.coordinate)
            rest = g.fields[1:]
            rest = FieldTuple(tuple(h.restrict(axis, face.coordinate) for h in rest))
            value = riemann_sum(g1, rest, face.face_box, k, workers=workers)
        total += face.sign * value
    return total


# ---------------------------------------------------------------------------
# integration driver


@dataclass(frozen=True)
class IntegralResult:
    """Outcome of :func:`integrate`.

    ``apriori`` is the certified error bound (``inf`` when Hölder constants
    are unknown), ``aposteriori`` the geometric-tail estimate from the last
    increment. ``criterion`` records why refinement stopped: ``"certified"``,
    ``"heuristic"``, ``"level"`` (no tolerance requested) or ``"budget"``.
    """

    value: float
    level: int
    apriori: float
    aposteriori: float
    evaluations: int
    criterion: str
    constants: ErrorConstants
    history: tuple[float, ...] = field(default=(), repr=False)
    runtime_ms: float = 0.0

    @property
    def converged(self) -> bool:
        return self.criterion in ("certified", "heuristic")

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "level": self.level,
            "apriori": self.apriori,
            "aposteriori": self.aposteriori,
            "evaluations": self.evaluations,
            "criterion": self.criterion,
            "gamma": self.constants.gamma,
            "history": list(self.history),
        }


def default_max_level(dim: int) -> int:
    return {1: 20, 2: 10, 3: 6}.get(dim, max(1, 18 // dim - 1))


def certificate(consts: ErrorConstants, k: int, depth: int, box: BoxDomain, f: ScalarField,
                g: FieldTuple, random_tags: bool = False) -> float:
    """Certified bound on ``|int f dg - I_k|`` for a depth-``depth`` computation."""
    if not (f.certified and g.certified):
        return math.inf
    diam = box.diameter
    H_g = g.holder_bounds
    bound = apriori_bound(consts, k, diam, f.holder_bound, H_g)
    f_center = float(f(box.barycenter[None, :])[0])
    bound += discretization_bound(consts, k, depth, diam, f_center, f.holder_bound, H_g)
    if random_tags:
        bound += cauchy_bound(consts, k, diam, f.holder_bound, H_g)
    return bound


def integrate(f, g, box: BoxDomain, tol: float | None = None, k_max: int | None = None,
              k_min: int = 0, mode: str = "auto", strict: bool = False,
              workers: int | None = None) -> IntegralResult:
    """Refine dyadically until the error target is met.

    Parameters
    ----------
    f, g, box
        Integrand field, integrator tuple and domain.
    tol : float, optional
        Target error. Without it the sum at ``k_max`` is returned.
    k_max, k_min : int
        Level range. ``k_max`` defaults to a dimension-dependent size limit.
    mode : {"auto", "certified", "heuristic"}
        Which stopping rule may fire. ``"certified"`` needs declared Hölder
        bounds for every field.
    strict : bool
        Raise :class:`BudgetExhausted` instead of returning an unconverged result.

    Raises
    ------
    ExponentSumError
        If ``alpha + sum(beta) <= n``.
    """
    if mode not in ("auto", "certified", "heuristic"):
        raise ValueError(f"unknown mode {mode!r}")
    f, g = _coerce(f, g, box)
    consts = error_constants(box.dim, f.exponent, g.exponents)
    if tol is not None and tol <= 0:
        raise ValueError("tol must be positive")
    k_max = default_max_level(box.dim) if k_max is None else k_max
    workers = _resolve_workers(workers)
    r = consts.ratio
    tail = r / (1.0 - r)
    start = time.perf_counter()
    history: list[float] = []
    evaluations = 0
    prev = None
    criterion = "level" if tol is None else "budget"
    value = apriori = math.nan
    aposteriori = math.inf
    k = k_min
    for k in range(k_min, k_max + 1):
        value, evals = _riemann(f, g, box, k, k, None, workers)
        evaluations += evals
        history.append(value)
        apriori = certificate(consts, k, k, box, f, g)
        aposteriori = math.inf if prev is None else abs(value - prev) * tail
        prev = value
        if tol is None:
            continue
        if mode != "heuristic" and apriori <= tol:
            criterion = "certified"
            break
        if mode != "certified" and k >= HEURISTIC_MIN_LEVEL and aposteriori <= tol:
            criterion = "heuristic"
            break
    result = IntegralResult(
        value, k, apriori, aposteriori, evaluations, criterion, consts, tuple(history),
        (time.perf_counter() - start) * 1e3,
    )
    if strict and criterion == "budget":
        raise BudgetExhausted(result)
    return result


def parametrized_integrate(f, g, phi: VectorMap, param_box: BoxDomain, tol: float | None = None,
                           **kwargs) -> IntegralResult:
    """``int_{param_box} f o phi d(g_1 o phi, ..., g_n o phi)``.

    Exponents multiply under composition, so the pulled-back tuple must
    still satisfy the exponent-sum condition on ``param_box``.
    """
    g = FieldTuple.coerce(g)
    f = as_field(f, phi.dim_out)
    if phi.dim_in != param_box.dim:
        raise ValueError("parameter box dimension does not match the map")
    return integrate(f.pullback(phi), g.pullback(phi), param_box, tol, **kwargs)
