"""Axis-aligned boxes, dyadic partitions and oriented boundary faces.

Cells of a dyadic partition are addressed by integer multi-indices. A
coordinate at level ``k`` is always computed as
``lower + (index / 2**k) * edge`` so the same geometric point gets the same
floating point value at every refinement level.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np


@dataclass(frozen=True)
class BoxDomain:
    """A nondegenerate box ``[l_1, u_1] x ... x [l_n, u_n]``."""

    bounds: tuple[tuple[float, float], ...]

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if not bounds:
            raise ValueError("a box needs at least one axis")
        for axis, (lo, hi) in enumerate(bounds):
            if not lo < hi:
                raise ValueError(f"degenerate axis {axis}: [{lo}, {hi}]")
        object.__setattr__(self, "bounds", bounds)

    @classmethod
    def unit(cls, dim: int) -> "BoxDomain":
        return cls(((0.0, 1.0),) * dim)

    @classmethod
    def from_arrays(cls, lower, upper) -> "BoxDomain":
        return cls(tuple(zip(np.atleast_1d(lower), np.atleast_1d(upper))))

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.bounds])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.bounds])

    @property
    def edges(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def barycenter(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.edges))

    @property
    def shortest_edge(self) -> float:
        return float(self.edges.min())

    @property
    def volume(self) -> float:
        return float(np.prod(self.edges))

    @property
    def surface_area(self) -> float:
        """(n-1)-measure of the boundary; for intervals the endpoint count."""
        edges = self.edges
        return float(sum(2.0 * np.prod(np.delete(edges, i)) for i in range(self.dim)))

    def contains(self, points, atol: float = 0.0) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.all((points >= self.lower - atol) & (points <= self.upper + atol), axis=-1)

    def cell(self, index: Sequence[int], level: int) -> "BoxDomain":
        """The level-``level`` dyadic cell with integer multi-index ``index``."""
        n = 2**level
        lo, edges = self.lower, self.edges
        bounds = []
        for axis, i in enumerate(index):
            if not 0 <= i < n:
                raise IndexError(f"cell index {i} out of range at level {level}")
            bounds.append((lo[axis] + (i / n) * edges[axis], lo[axis] + ((i + 1) / n) * edges[axis]))
        return BoxDomain(tuple(bounds))

    def grid_coordinates(self, level: int) -> list[np.ndarray]:
        """Per-axis coordinates of the ``2**level + 1`` dyadic nodes."""
        n = 2**level
        frac = np.arange(n + 1) / n
        return [lo + frac * e for lo, e in zip(self.lower, self.edges)]

    def cell_centers(self, level: int) -> np.ndarray:
        """Barycenters of all level-``level`` cells, shape ``(2**level,)*n + (n,)``."""
        n = 2**level
        frac = (2 * np.arange(n) + 1) / (2 * n)
        axes = [lo + frac * e for lo, e in zip(self.lower, self.edges)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


@dataclass(frozen=True)
class SignedFace:
    """Codimension-one face ``B_(i,j)`` of ``parent`` with sign ``(-1)**(i+j)``.

    ``axis`` is 1-based as in the orientation convention; ``side`` is 0 for the
    lower and 1 for the upper face.
    """

    parent: BoxDomain
    axis: int
    side: int

    @property
    def sign(self) -> int:
        return -1 if (self.axis + self.side) % 2 else 1

    @property
    def coordinate(self) -> float:
        lo, hi = self.parent.bounds[self.axis - 1]
        return hi if self.side else lo

    @property
    def key(self) -> tuple:
        return (self.parent.bounds, self.axis, self.side)

    @property
    def face_box(self) -> BoxDomain | None:
        """The face as an (n-1)-box with axis ``axis`` deleted; ``None`` for n=1."""
        rest = self.parent.bounds[: self.axis - 1] + self.parent.bounds[self.axis:]
        return BoxDomain(rest) if rest else None

    def embed(self, points) -> np.ndarray:
        """Insert the fixed coordinate into face points of shape ``(..., n-1)``."""
        points = np.asarray(points, dtype=float)
        if self.parent.dim == 1:
            shape = points.shape[:-1] if points.ndim and points.shape[-1] == 0 else points.shape
            return np.full(shape + (1,), self.coordinate)
        fixed = np.full(points.shape[:-1] + (1,), self.coordinate)
        i = self.axis - 1
        return np.concatenate([points[..., :i], fixed, points[..., i:]], axis=-1)


def dyadic_partition(box: BoxDomain, level: int) -> list[BoxDomain]:
    """All ``2**(level*n)`` cells of ``P_level(box)`` in lexicographic index order."""
    if level < 0:
        raise ValueError("level must be nonnegative")
    n = 2**level
    return [box.cell(idx, level) for idx in itertools.product(range(n), repeat=box.dim)]


def iter_cell_indices(dim: int, level: int) -> Iterator[tuple[int, ...]]:
    return itertools.product(range(2**level), repeat=dim)


def boundary_faces(box: BoxDomain) -> list[SignedFace]:
    """The ``2n`` oriented faces, ordered by axis then side."""
    if box.dim < 1:
        raise ValueError("boundary of a 0-dimensional box is not defined")
    return [SignedFace(box, i, j) for i in range(1, box.dim + 1) for j in (0, 1)]


def box_metrics(box: BoxDomain) -> tuple[np.ndarray, float, float]:
    """Return ``(barycenter, diameter, shortest_edge)``."""
    return box.barycenter, box.diameter, box.shortest_edge


def parse_bounds(text: str) -> BoxDomain:
    """Parse ``"a,b;c,d"`` into a box (axes separated by ``;``)."""
    axes = [part.strip() for part in text.split(";") if part.strip()]
    bounds = []
    for part in axes:
        lo, hi = (float(v) for v in part.split(","))
        bounds.append((lo, hi))
    return BoxDomain(tuple(bounds))


def format_bounds(box: BoxDomain) -> str:
    return ";".join(f"{lo!r},{hi!r}" for lo, hi in box.bounds)

