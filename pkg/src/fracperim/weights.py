"""Interaction weights between grid cells under the kernel |x-y|^-(n+s).

The weight of an offset Delta is the double integral of the kernel over a
cell pair separated by Delta.  In one dimension there is a closed form.
In higher dimensions the double integral collapses, by the substitution
z = y - x, to a single n-dimensional integral of the kernel against the
tensor-product tent weight

    w(Delta) = int_B  prod_i (h - |z_i - h*Delta_i|)  |z|^-(n+s) dz,

with B the box prod_i [h(Delta_i - 1), h(Delta_i + 1)].  For touching
cells the kernel is singular at z = 0, a corner of the quadrants obtained
by splitting B at the tent apex; those quadrants are integrated exactly in
the radial direction with Gauss-Jacobi rules after a pyramid substitution,
so the certified tolerance is reachable for every order s in (0, 1).
Smooth quadrants use dyadically subdivided Gauss quadrature, and offsets
beyond the near cutoff use the midpoint value with a certified
second-order Taylor remainder.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

from .errors import (
    ConfigError,
    NonConvergenceError,
    OverlapError,
    ZeroOffsetError,
)
from .geometry import unit_ball_volume

__all__ = [
    "FractionalOrder",
    "WeightEntry",
    "WeightTable",
    "pair_weight_1d",
    "cell_pair_weight",
    "complement_tail",
]

DEFAULT_REL_TOL = 1e-8
DEFAULT_NEAR_CUTOFF = 2
DEFAULT_DEPTH_LIMIT = 40


@dataclass(frozen=True)
class FractionalOrder:
    """Kernel exponent parameter, strictly between 0 and 1.

    The endpoints are rejected: at s = 1 the interior energy diverges for
    every set with boundary in the window, and at s = 0 the kernel is no
    longer integrable at infinity.
    """

    s: float

    def __post_init__(self):
        s = float(self.s)
        object.__setattr__(self, "s", s)
        if not 0.0 < s < 1.0:
            raise ConfigError(f"fractional order must satisfy 0 < s < 1, got {s}")


def as_order(s) -> FractionalOrder:
    return s if isinstance(s, FractionalOrder) else FractionalOrder(float(s))


@dataclass(frozen=True)
class WeightEntry:
    """Interaction weight for one cell offset with a certified error bound."""

    offset: tuple[int, ...]
    value: float
    abs_error: float


def pair_weight_1d(a: float, b: float, c: float, d: float, s) -> float:
    """Exact kernel integral over two disjoint intervals [a,b] and [c,d].

    Evaluates int_a^b int_c^d (y - x)^-(1+s) dy dx through the second
    antiderivative r -> r^(1-s).  Finite for touching intervals (b == c);
    raises OverlapError when the intervals overlap.
    """
    s = as_order(s).s
    if not (a < b and c < d):
        raise ConfigError("need a < b and c < d")
    if b > c:
        raise OverlapError(f"intervals [{a},{b}] and [{c},{d}] overlap")
    e = 1.0 - s
    g = (c - a) ** e - (d - a) ** e + (d - b) ** e - (c - b) ** e
    return g / (s * e)


def complement_tail(radius: float, n: int, s) -> float:
    """Kernel integral over the complement of a ball of the given radius.

    Equals n * omega_n / (s * radius^s); it bounds the interaction of a
    point with any set lying entirely outside the ball.
    """
    s = as_order(s).s
    if radius <= 0:
        raise ConfigError("tail radius must be positive")
    return n * unit_ball_volume(n) / (s * radius**s)


# ---------------------------------------------------------------------------
# Far-field midpoint rule
# ---------------------------------------------------------------------------


def _midpoint_values(offsets: np.ndarray, n: int, h: float, s: float):
    """Vectorized midpoint weights and Taylor remainder bounds.

    ``offsets`` has shape (m, n) and must satisfy ||Delta||_2 > sqrt(n).
    """
    r = np.sqrt((offsets.astype(np.float64) ** 2).sum(axis=1))
    vals = h ** (2 * n) * (h * r) ** -(n + s)
    # |Hess| <= (n+s)(n+s+1) * dist^-(n+s+2) over the cells, second moment n h^2 / 6;
    # dist is the exact minimum separation of the two cells
    rmin = np.sqrt((np.maximum(np.abs(offsets) - 1.0, 0.0) ** 2).sum(axis=1))
    errs = (n * (n + s) * (n + s + 1) / 12.0) * h ** (n - s) * rmin ** -(n + s + 2)
    return vals, errs


# ---------------------------------------------------------------------------
# Near-field quadrature on the tent-reduced integral
# ---------------------------------------------------------------------------

_GAUSS_LO = np.polynomial.legendre.leggauss(6)
_GAUSS_HI = np.polynomial.legendre.leggauss(10)
_DUFFY_ORDERS = (8, 12, 16, 24, 32, 48, 64)


def _gauss_box(f, lo: np.ndarray, hi: np.ndarray, rule) -> float:
    nodes, wts = rule
    n = lo.size
    pts_1d = [0.5 * (hi[a] - lo[a]) * nodes + 0.5 * (hi[a] + lo[a]) for a in range(n)]
    wts_1d = [0.5 * (hi[a] - lo[a]) * wts for a in range(n)]
    mesh = np.meshgrid(*pts_1d, indexing="ij")
    wmesh = np.meshgrid(*wts_1d, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    w = np.prod(np.stack([m.ravel() for m in wmesh], axis=-1), axis=-1)
    return float(np.dot(w, f(pts)))


def _singular_quadrant(n: int, q: int, h: float, s: float, order: int) -> float:
    """Integral over [0,h]^n of  prod_{i<q} x_i * prod_{j>=q} (h-x_j) * |x|^-(n+s).

    This is one corner quadrant of a touching cell pair with q axes of
    offset one and n-q axes of offset zero.  Split into the n pyramids
    where one coordinate dominates and substitute x_a = t, x_i = t u_i;
    the radial factor becomes t^(q-1-s), handled exactly by a Gauss-Jacobi
    rule, while the remaining integrand is smooth on [0,1]^(n-1).
    """
    beta = q - 1.0 - s
    tj, twj = roots_jacobi(order, 0.0, beta)
    t = 0.5 * h * (1.0 + tj)
    radial_scale = (0.5 * h) ** (beta + 1.0)

    if n == 1:
        # only reachable for checks; 1D weights use the closed form
        g = np.ones_like(t) if q == 1 else (h - t)
        return radial_scale * float(np.dot(twj, g))

    uj, uwj = np.polynomial.legendre.leggauss(order)
    u1 = 0.5 * (1.0 + uj)
    w1 = 0.5 * uwj

    total = 0.0
    for a in range(n):
        others = [i for i in range(n) if i != a]
        if n == 2:
            tt = t[:, None]
            umap = {others[0]: u1[None, :]}
            rho2 = 1.0 + u1[None, :] ** 2
        else:
            tt = t[:, None, None]
            umap = {others[0]: u1[None, :, None], others[1]: u1[None, None, :]}
            rho2 = 1.0 + umap[others[0]] ** 2 + umap[others[1]] ** 2
        g = rho2 ** (-(n + s) / 2.0)
        for i in range(n):
            if i == a:
                if i >= q:
                    g = g * (h - tt)
                # touch factor t on the pivot axis is absorbed in t^(q-1-s)
            else:
                uu = umap[i]
                g = g * (uu if i < q else (h - tt * uu))
        if n == 2:
            part = np.einsum("i,j,ij->", twj, w1, np.broadcast_to(g, (t.size, u1.size)))
        else:
            part = np.einsum(
                "i,j,k,ijk->", twj, w1, w1, np.broadcast_to(g, (t.size, u1.size, u1.size))
            )
        total += radial_scale * part
    return float(total)


def _adaptive_boxes(integrand, boxes, tol_abs: float, depth_limit: int, offset):
    """Heap-driven dyadic Gauss refinement of smooth boxes.

    Returns (value, error estimate); raises NonConvergenceError if a box
    would have to be split beyond the depth limit.
    """
    heap = []
    counter = 0
    total = 0.0
    err_total = 0.0
    entries = {}

    def push(lo, hi, depth):
        nonlocal counter, total, err_total
        coarse = _gauss_box(integrand, lo, hi, _GAUSS_LO)
        fine = _gauss_box(integrand, lo, hi, _GAUSS_HI)
        err = abs(fine - coarse)
        entries[counter] = (fine, err, lo, hi, depth)
        heapq.heappush(heap, (-err, counter))
        total += fine
        err_total += err
        counter += 1

    for lo, hi in boxes:
        push(lo, hi, 0)

    n = boxes[0][0].size
    while err_total > tol_abs:
        _, key = heapq.heappop(heap)
        fine, err, lo, hi, depth = entries.pop(key)
        if depth >= depth_limit:
            raise NonConvergenceError(
                f"cell-pair quadrature for offset {offset} hit subdivision "
                f"depth {depth_limit} with error estimate {err_total:.3e}"
            )
        total -= fine
        err_total -= err
        mid = 0.5 * (lo + hi)
        for corner in range(2**n):
            clo = lo.copy()
            chi = hi.copy()
            for a in range(n):
                if (corner >> a) & 1:
                    clo[a] = mid[a]
                else:
                    chi[a] = mid[a]
            push(clo, chi, depth + 1)
    return total, err_total


def _tent_quadrature(
    offset: tuple[int, ...],
    n: int,
    h: float,
    s: float,
    rel_tol: float,
    depth_limit: int,
) -> tuple[float, float]:
    """Certified quadrature of the tent-weighted kernel for one near offset.

    Returns (value, error estimate).  The integration box is split at the
    tent apex into 2^n quadrants.  Quadrants with the singular point z = 0
    at a corner (touching cells only) go through the Gauss-Jacobi pyramid
    rule; the rest are refined adaptively.
    """
    delta = tuple(abs(int(d)) for d in offset)
    apex = h * np.asarray(delta, dtype=np.float64)

    def integrand(z: np.ndarray) -> np.ndarray:
        tent = np.prod(h - np.abs(z - apex), axis=-1)
        r2 = (z * z).sum(axis=-1)
        return tent * r2 ** (-(n + s) / 2.0)

    singular = max(delta) == 1
    sing_value = 0.0
    sing_err = 0.0
    smooth_boxes = []
    for corner in range(2**n):
        lo = np.empty(n)
        hi = np.empty(n)
        is_sing_quadrant = singular
        for a in range(n):
            if (corner >> a) & 1:
                lo[a], hi[a] = apex[a], apex[a] + h
            else:
                lo[a], hi[a] = apex[a] - h, apex[a]
            touches_zero = (lo[a] <= 0.0 <= hi[a]) and (lo[a] == 0.0 or hi[a] == 0.0)
            if not touches_zero:
                is_sing_quadrant = False
        if not is_sing_quadrant:
            smooth_boxes.append((lo, hi))

    if singular:
        # all singular quadrants are congruent: q touch axes, n-q zero axes
        q = sum(1 for d in delta if d == 1)
        count = 2 ** (n - q)
        prev = None
        for k, order in enumerate(_DUFFY_ORDERS):
            cur = _singular_quadrant(n, q, h, s, order)
            if prev is not None:
                sing_err = abs(cur - prev)
                if sing_err <= 0.2 * rel_tol * abs(cur):
                    break
            prev = cur
        else:
            raise NonConvergenceError(
                f"radial rule for offset {offset} failed to reach rel_tol={rel_tol}"
            )
        sing_value = count * cur
        sing_err *= count

    smooth_value = 0.0
    smooth_err = 0.0
    if smooth_boxes:
        # absolute budget anchored on a first coarse pass plus singular part
        coarse = sum(_gauss_box(integrand, lo, hi, _GAUSS_HI) for lo, hi in smooth_boxes)
        scale = abs(sing_value) + abs(coarse)
        smooth_value, smooth_err = _adaptive_boxes(
            integrand, smooth_boxes, 0.5 * rel_tol * max(scale, 1e-300), depth_limit, offset
        )

    return sing_value + smooth_value, sing_err + smooth_err


def cell_pair_weight(
    offset,
    n: int,
    h: float,
    s,
    rel_tol: float = DEFAULT_REL_TOL,
    near_cutoff: int = DEFAULT_NEAR_CUTOFF,
    depth_limit: int = DEFAULT_DEPTH_LIMIT,
) -> WeightEntry:
    """Kernel interaction weight between two cells at an integer offset.

    One-dimensional offsets use the exact closed form.  Offsets within the
    near cutoff (in sup norm) are integrated adaptively to ``rel_tol``;
    beyond it the midpoint rule applies with a certified remainder bound.
    """
    s = as_order(s).s
    offset = tuple(int(d) for d in offset)
    if len(offset) != n:
        raise ConfigError("offset length must equal the dimension")
    if all(d == 0 for d in offset):
        raise ZeroOffsetError("a cell never pairs with itself")
    if h <= 0:
        raise ConfigError("cell size must be positive")
    if rel_tol <= 0:
        raise ConfigError("rel_tol must be positive")
    if near_cutoff < 1:
        raise ConfigError("near cutoff must be >= 1")

    if n == 1:
        d = abs(offset[0])
        val = pair_weight_1d(0.0, h, d * h, (d + 1) * h, s)
        return WeightEntry(offset, val, 0.0)

    if max(abs(d) for d in offset) <= near_cutoff:
        val, err = _tent_quadrature(offset, n, h, s, rel_tol, depth_limit)
        return WeightEntry(offset, val, err)

    vals, errs = _midpoint_values(np.asarray([offset]), n, h, s)
    return WeightEntry(offset, float(vals[0]), float(errs[0]))


class WeightTable:
    """Memoized offset -> weight map for one (n, h, s) context.

    Weights are invariant under offset negation, coordinate permutation,
    and per-coordinate sign flips; entries are cached per canonical offset
    (sorted absolute components) so the symmetry group holds exactly.
    Lookups are idempotent and safe under concurrent use.
    """

    def __init__(
        self,
        n: int,
        h: float,
        s,
        rel_tol: float = DEFAULT_REL_TOL,
        near_cutoff: int = DEFAULT_NEAR_CUTOFF,
        depth_limit: int = DEFAULT_DEPTH_LIMIT,
    ):
        if n not in (1, 2, 3):
            raise ConfigError("dimension must be 1, 2 or 3")
        if h <= 0:
            raise ConfigError("cell size must be positive")
        if near_cutoff < 1:
            raise ConfigError("near cutoff must be >= 1")
        self.n = n
        self.h = float(h)
        self.order = as_order(s)
        self.rel_tol = float(rel_tol)
        self.near_cutoff = int(near_cutoff)
        self.depth_limit = int(depth_limit)
        self._cache: dict[tuple[int, ...], WeightEntry] = {}

    @property
    def s(self) -> float:
        return self.order.s

    @staticmethod
    def canonical(offset) -> tuple[int, ...]:
        return tuple(sorted((abs(int(d)) for d in offset), reverse=True))

    def entry(self, offset) -> WeightEntry:
        key = self.canonical(offset)
        hit = self._cache.get(key)
        if hit is None:
            hit = cell_pair_weight(
                key,
                self.n,
                self.h,
                self.order,
                rel_tol=self.rel_tol,
                near_cutoff=self.near_cutoff,
                depth_limit=self.depth_limit,
            )
            self._cache[key] = hit
        return WeightEntry(tuple(int(d) for d in offset), hit.value, hit.abs_error)

    def dense(self, radii: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
        """Weight and error arrays over the offset box prod [-r_k, r_k].

        Row-major layout with the zero offset at the center index; the
        center entries are zero and must never be consumed.
        """
        if len(radii) != self.n:
            raise ConfigError("radii length must equal the dimension")
        axes = [np.arange(-r, r + 1, dtype=np.int64) for r in radii]
        mesh = np.meshgrid(*axes, indexing="ij")
        offs = np.stack([m.ravel() for m in mesh], axis=-1)
        m = offs.shape[0]
        vals = np.zeros(m, dtype=np.float64)
        errs = np.zeros(m, dtype=np.float64)

        sup = np.abs(offs).max(axis=1)
        if self.n == 1:
            # every 1D weight has a closed form; errors stay zero
            for i in np.flatnonzero(sup > 0):
                vals[i] = self.entry(tuple(offs[i])).value
        else:
            far = sup > self.near_cutoff
            if far.any():
                vals[far], errs[far] = _midpoint_values(
                    offs[far], self.n, self.h, self.s
                )
            near = (~far) & (sup > 0)
            for i in np.flatnonzero(near):
                e = self.entry(tuple(offs[i]))
                vals[i] = e.value
                errs[i] = e.abs_error
        shape = tuple(2 * r + 1 for r in radii)
        return vals.reshape(shape), errs.reshape(shape)
