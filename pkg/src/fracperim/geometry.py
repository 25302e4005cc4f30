"""Grids, box domains, analytic test shapes, and exact classical perimeters.

Sets live on uniform voxel grids with an integer number of padding layers
around the core domain.  Analytic shapes provide membership tests for
rasterization, exterior data beyond the padded grid, and closed-form
perimeters used as reference values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, UnsupportedShapeError

__all__ = [
    "Domain",
    "Grid",
    "AnalyticSet",
    "Halfspace",
    "Ball",
    "BoxUnion",
    "Complement",
    "Empty",
    "Full",
    "IndicatorField",
    "DensityField",
    "unit_cube",
    "slab",
    "standard_halfspace",
    "rasterize",
    "exact_perimeter",
    "unit_ball_volume",
]

_ALIGN_TOL = 1e-9


@dataclass(frozen=True)
class Domain:
    """Open axis-aligned box prod_i (lo_i, hi_i), dimension 1 to 3."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi):
            raise ConfigError("lo and hi must have the same length")
        if not 1 <= len(lo) <= 3:
            raise ConfigError(f"dimension must be 1, 2 or 3, got {len(lo)}")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ConfigError(f"need lo < hi per axis, got lo={lo}, hi={hi}")

    @property
    def n(self) -> int:
        return len(self.lo)

    @property
    def widths(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.lo, self.hi))

    def volume(self) -> float:
        return math.prod(self.widths)

    def contains(self, x) -> bool:
        return all(a < v < b for a, v, b in zip(self.lo, x, self.hi))

    def scaled(self, lam: float) -> "Domain":
        return Domain(tuple(lam * v for v in self.lo), tuple(lam * v for v in self.hi))


def unit_cube(n: int) -> Domain:
    """The open cube (-1/2, 1/2)^n."""
    return Domain((-0.5,) * n, (0.5,) * n)


def slab(n: int, a: float) -> Domain:
    """Box with half-width 1/2 in the first n-1 axes and a in the last."""
    if a <= 0:
        raise ConfigError("slab half-height must be positive")
    return Domain((-0.5,) * (n - 1) + (-a,), (0.5,) * (n - 1) + (a,))


@dataclass(frozen=True)
class Grid:
    """Uniform cell decomposition of a domain plus exterior padding layers.

    Padded cell indices run over ``[0, cells + 2*padding)`` per axis; index
    ``padding + k`` covers the domain cell ``k``.  The padding is sized by
    the caller to hold the truncation region used for cross-boundary
    energies; the grid stores it without interpreting it.
    """

    domain: Domain
    cells_per_axis: tuple[int, ...]
    padding: int = 0

    def __post_init__(self):
        cells = self.cells_per_axis
        if isinstance(cells, int):
            cells = (cells,) * self.domain.n
        cells = tuple(int(c) for c in cells)
        object.__setattr__(self, "cells_per_axis", cells)
        if len(cells) != self.domain.n:
            raise ConfigError("cells_per_axis length must match dimension")
        if any(c < 1 for c in cells):
            raise ConfigError("cells_per_axis must be positive")
        if self.padding < 0:
            raise ConfigError("padding must be >= 0")

    @property
    def n(self) -> int:
        return self.domain.n

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(w / c for w, c in zip(self.domain.widths, self.cells_per_axis))

    @property
    def padded_shape(self) -> tuple[int, ...]:
        return tuple(c + 2 * self.padding for c in self.cells_per_axis)

    def h_iso(self) -> float:
        """Isotropic cell size; rejects anisotropic grids."""
        hs = self.h
        h0 = hs[0]
        if any(abs(hh - h0) > 1e-12 * h0 for hh in hs):
            raise ConfigError(f"grid is anisotropic: h={hs}")
        return h0

    def axis_centers(self, axis: int) -> np.ndarray:
        """Cell-center coordinates along one axis, padded indices."""
        k = np.arange(self.padded_shape[axis], dtype=np.float64) - self.padding
        return self.domain.lo[axis] + (k + 0.5) * self.h[axis]

    def centers(self) -> np.ndarray:
        """All padded cell centers, shape (*padded_shape, n)."""
        axes = [self.axis_centers(a) for a in range(self.n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def cell_volume(self) -> float:
        return math.prod(self.h)

    def box_indices(self, box: Domain) -> tuple[tuple[int, int], ...]:
        """Padded index ranges [i_lo, i_hi) of a face-aligned sub-box.

        Raises MisalignedDomainError unless the box edges sit on cell faces
        and the box lies within the grid's core domain.
        """
        from .errors import MisalignedDomainError

        if box.n != self.n:
            raise MisalignedDomainError("window dimension mismatch")
        out = []
        for a in range(self.n):
            h = self.h[a]
            flo = (box.lo[a] - self.domain.lo[a]) / h
            fhi = (box.hi[a] - self.domain.lo[a]) / h
            ilo, ihi = round(flo), round(fhi)
            if abs(flo - ilo) > _ALIGN_TOL * max(1.0, abs(flo)) or abs(
                fhi - ihi
            ) > _ALIGN_TOL * max(1.0, abs(fhi)):
                raise MisalignedDomainError(
                    f"window edge not on a cell face along axis {a}"
                )
            if ilo < 0 or ihi > self.cells_per_axis[a] or ilo >= ihi:
                raise MisalignedDomainError("window must lie within the grid domain")
            out.append((ilo + self.padding, ihi + self.padding))
        return tuple(out)

    def scaled(self, lam: float) -> "Grid":
        return replace(self, domain=self.domain.scaled(lam))


# ---------------------------------------------------------------------------
# Analytic shapes
# ---------------------------------------------------------------------------


class AnalyticSet:
    """Membership-testable set used for rasterization and exterior data.

    Boundary ties are deterministic: "le" halfspaces include their boundary,
    every other shape excludes it.
    """

    def mask(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x) -> bool:
        return bool(self.mask(np.asarray(x, dtype=np.float64)[None, :])[0])

    def scaled(self, lam: float) -> "AnalyticSet":
        raise NotImplementedError


@dataclass(frozen=True)
class Halfspace(AnalyticSet):
    """{x : x_axis <= offset} for sign "le", {x : x_axis > offset} for "ge"."""

    axis: int
    offset: float = 0.0
    sign: str = "le"

    def __post_init__(self):
        if self.sign not in ("le", "ge"):
            raise ConfigError(f"halfspace sign must be 'le' or 'ge', got {self.sign!r}")
        if self.axis < 0:
            raise ConfigError("halfspace axis must be >= 0")

    def mask(self, pts):
        x = pts[..., self.axis]
        return x <= self.offset if self.sign == "le" else x > self.offset

    def scaled(self, lam):
        return Halfspace(self.axis, lam * self.offset, self.sign)


@dataclass(frozen=True)
class Ball(AnalyticSet):
    """Open ball; boundary points count as outside."""

    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        if self.radius <= 0:
            raise ConfigError("ball radius must be positive")

    def mask(self, pts):
        c = np.asarray(self.center)
        return ((pts - c) ** 2).sum(axis=-1) < self.radius**2

    def scaled(self, lam):
        return Ball(tuple(lam * v for v in self.center), lam * self.radius)


@dataclass(frozen=True)
class BoxUnion(AnalyticSet):
    """Union of open axis-aligned boxes given as (lo, hi) corner pairs."""

    boxes: tuple[tuple[tuple[float, ...], tuple[float, ...]], ...]

    def __post_init__(self):
        norm = tuple(
            (tuple(float(v) for v in lo), tuple(float(v) for v in hi))
            for lo, hi in self.boxes
        )
        object.__setattr__(self, "boxes", norm)
        for lo, hi in norm:
            if len(lo) != len(hi) or any(a >= b for a, b in zip(lo, hi)):
                raise ConfigError(f"degenerate box {lo}..{hi}")

    def mask(self, pts):
        out = np.zeros(pts.shape[:-1], dtype=bool)
        for lo, hi in self.boxes:
            inside = np.ones(pts.shape[:-1], dtype=bool)
            for a, (va, vb) in enumerate(zip(lo, hi)):
                inside &= (pts[..., a] > va) & (pts[..., a] < vb)
            out |= inside
        return out

    def scaled(self, lam):
        return BoxUnion(
            tuple(
                (tuple(lam * v for v in lo), tuple(lam * v for v in hi))
                for lo, hi in self.boxes
            )
        )


@dataclass(frozen=True)
class Complement(AnalyticSet):
    inner: AnalyticSet

    def mask(self, pts):
        return ~self.inner.mask(pts)

    def scaled(self, lam):
        return Complement(self.inner.scaled(lam))


@dataclass(frozen=True)
class Empty(AnalyticSet):
    def mask(self, pts):
        return np.zeros(pts.shape[:-1], dtype=bool)

    def scaled(self, lam):
        return self


@dataclass(frozen=True)
class Full(AnalyticSet):
    def mask(self, pts):
        return np.ones(pts.shape[:-1], dtype=bool)

    def scaled(self, lam):
        return self


def standard_halfspace(n: int) -> Halfspace:
    """The halfspace of points with nonpositive last coordinate."""
    return Halfspace(axis=n - 1, offset=0.0, sign="le")


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class IndicatorField:
    """Binary membership per padded cell plus analytic exterior data.

    ``inside[idx]`` is 1 iff the cell belongs to the set.  ``exterior``
    governs membership beyond the padded grid; fields built by
    :func:`rasterize` keep the padding consistent with it.
    """

    grid: Grid
    inside: np.ndarray
    exterior: AnalyticSet | None = None

    def __post_init__(self):
        bits = np.asarray(self.inside)
        if bits.shape != self.grid.padded_shape:
            raise ConfigError(
                f"bit array shape {bits.shape} != padded shape {self.grid.padded_shape}"
            )
        if bits.dtype != np.uint8:
            vals = np.unique(bits)
            if not np.isin(vals, (0, 1)).all():
                raise ConfigError("indicator bits must be 0/1")
            bits = bits.astype(np.uint8)
        object.__setattr__(self, "inside", _freeze(bits))

    def window_bits(self, box: Domain) -> np.ndarray:
        """Read-only view of the bits inside a face-aligned window."""
        idx = self.grid.box_indices(box)
        return self.inside[tuple(slice(a, b) for a, b in idx)]

    def with_window_bits(self, box: Domain, bits: np.ndarray) -> "IndicatorField":
        """Copy of the field with the window's bits replaced."""
        idx = self.grid.box_indices(box)
        new = self.inside.copy()
        new[tuple(slice(a, b) for a, b in idx)] = np.asarray(bits, dtype=np.uint8)
        return IndicatorField(self.grid, new, self.exterior)

    def complement(self) -> "IndicatorField":
        ext = None if self.exterior is None else Complement(self.exterior)
        return IndicatorField(self.grid, 1 - self.inside, ext)


@dataclass(frozen=True)
class DensityField:
    """Per-cell values in [0, 1] on the padded grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.grid.padded_shape:
            raise ConfigError(
                f"value array shape {vals.shape} != padded shape {self.grid.padded_shape}"
            )
        if vals.min() < -1e-12 or vals.max() > 1 + 1e-12:
            raise ConfigError("density values must lie in [0, 1]")
        object.__setattr__(self, "values", _freeze(np.clip(vals, 0.0, 1.0)))

    @classmethod
    def from_indicator(cls, field: IndicatorField) -> "DensityField":
        return cls(field.grid, field.inside.astype(np.float64))

    def window_values(self, box: Domain) -> np.ndarray:
        idx = self.grid.box_indices(box)
        return self.values[tuple(slice(a, b) for a, b in idx)]


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def rasterize(shape: AnalyticSet, grid: Grid) -> IndicatorField:
    """Mark every padded cell whose center lies in the shape.

    Shapes whose boundary sits on cell faces rasterize exactly; the tie
    rule for centers exactly on the boundary follows the shape classes.
    """
    pts = grid.centers().reshape(-1, grid.n)
    bits = shape.mask(pts).reshape(grid.padded_shape).astype(np.uint8)
    return IndicatorField(grid, bits, exterior=shape)


def unit_ball_volume(k: int) -> float:
    """Volume of the unit ball in dimension k, with the convention 1 at k=0."""
    if k < 0:
        raise ConfigError("dimension must be >= 0")
    if k == 0:
        return 1.0
    return math.pi ** (k / 2) / math.gamma(k / 2 + 1)


def _sphere_area(n: int, r: float) -> float:
    # boundary measure of the n-ball: counting measure (2 points) when n=1
    return n * unit_ball_volume(n) * r ** (n - 1)


def exact_perimeter(shape: AnalyticSet, domain: Domain) -> float:
    """Boundary measure of the shape inside the open box domain.

    Supports halfspaces, balls (fully inside or fully outside for n >= 2,
    arbitrary intervals for n = 1), and unions of boxes with pairwise
    disjoint closures.  Raises UnsupportedShapeError otherwise.
    """
    n = domain.n
    if isinstance(shape, (Empty, Full)):
        return 0.0
    if isinstance(shape, Complement):
        return exact_perimeter(shape.inner, domain)
    if isinstance(shape, Halfspace):
        if shape.axis >= n:
            raise UnsupportedShapeError("halfspace axis outside domain dimension")
        if not domain.lo[shape.axis] < shape.offset < domain.hi[shape.axis]:
            return 0.0
        return math.prod(w for a, w in enumerate(domain.widths) if a != shape.axis)
    if isinstance(shape, Ball):
        c, r = shape.center, shape.radius
        if len(c) != n:
            raise UnsupportedShapeError("ball dimension mismatch")
        if n == 1:
            return float(domain.lo[0] < c[0] - r < domain.hi[0]) + float(
                domain.lo[0] < c[0] + r < domain.hi[0]
            )
        inside = all(lo < ci - r and ci + r < hi for lo, ci, hi in zip(domain.lo, c, domain.hi))
        if inside:
            return _sphere_area(n, r)
        outside = any(ci + r <= lo or ci - r >= hi for lo, ci, hi in zip(domain.lo, c, domain.hi))
        if outside:
            return 0.0
        raise UnsupportedShapeError("ball intersecting the domain boundary")
    if isinstance(shape, BoxUnion):
        return _box_union_perimeter(shape, domain)
    raise UnsupportedShapeError(f"no analytic perimeter for {type(shape).__name__}")


def _box_union_perimeter(shape: BoxUnion, domain: Domain) -> float:
    n = domain.n
    boxes = shape.boxes
    for i, (lo1, hi1) in enumerate(boxes):
        if len(lo1) != n:
            raise UnsupportedShapeError("box dimension mismatch")
        for lo2, hi2 in boxes[i + 1 :]:
            separated = any(hi1[a] < lo2[a] or hi2[a] < lo1[a] for a in range(n))
            if not separated:
                raise UnsupportedShapeError("boxes must have disjoint closures")
    total = 0.0
    for lo, hi in boxes:
        for axis in range(n):
            for c in (lo[axis], hi[axis]):
                if not domain.lo[axis] < c < domain.hi[axis]:
                    continue
                area = 1.0
                for a in range(n):
                    if a == axis:
                        continue
                    area *= max(
                        0.0, min(hi[a], domain.hi[a]) - max(lo[a], domain.lo[a])
                    )
                total += area
    return total


# conservative set-relation predicates used for truncation-tail bookkeeping


def covers_nothing_outside(shape: AnalyticSet, box: Domain) -> bool:
    """True only when the shape provably has no mass outside the closed box."""
    if isinstance(shape, Empty):
        return True
    if isinstance(shape, Ball):
        return all(
            lo <= c - shape.radius and c + shape.radius <= hi
            for lo, c, hi in zip(box.lo, shape.center, box.hi)
        )
    if isinstance(shape, BoxUnion):
        return all(
            all(blo >= lo and bhi <= hi for blo, lo, bhi, hi in zip(b[0], box.lo, b[1], box.hi))
            for b in shape.boxes
        )
    if isinstance(shape, Complement):
        return covers_everything_outside(shape.inner, box)
    return False


def covers_everything_outside(shape: AnalyticSet, box: Domain) -> bool:
    """True only when the shape provably contains all of the box complement."""
    if isinstance(shape, Full):
        return True
    if isinstance(shape, Complement):
        return covers_nothing_outside(shape.inner, box)
    return False
