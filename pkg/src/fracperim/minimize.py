"""Discrete minimizers with fixed exterior data.

Candidate sets differ from the exterior data only inside the window, so
their truncated energies share one tail interval and compare exactly
through kernel sums.  Exhaustive enumeration provides ground truth on
small windows; a deterministic greedy flip descent scales further and its
fixed points satisfy the single-cell deviation inequalities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield

import numpy as np

from .backend import get_kernels
from .errors import (
    AsymmetricGridError,
    BudgetExceededError,
    ConfigError,
    OverlapError,
)
from .functionals import FunctionalValue, f_seminorm, j1, j2
from .geometry import (
    DensityField,
    Domain,
    Grid,
    IndicatorField,
    AnalyticSet,
    covers_everything_outside,
    covers_nothing_outside,
    rasterize,
    standard_halfspace,
)
from .weights import (
    DEFAULT_NEAR_CUTOFF,
    DEFAULT_REL_TOL,
    WeightTable,
    as_order,
    complement_tail,
)

__all__ = [
    "MinimizeReport",
    "DeviationResult",
    "GlueReport",
    "interaction",
    "local_deviation_test",
    "brute_force_minimizer",
    "flip_descent",
    "comparison_check",
    "glue",
]

BRUTE_FORCE_CELL_BUDGET = 20
_MAX_TIED_FIELDS = 32


@dataclass(frozen=True, eq=False)
class MinimizeReport:
    """Outcome of a minimization run.

    ``energy_trace`` lists the midpoint energy at the start and after each
    accepted flip (strictly decreasing for the greedy method).  For
    exhaustive search, ``tied`` holds every pattern whose energy bracket
    overlaps the best one (the argmin itself included, at most 32
    materialized), so a unique minimizer shows ``len(tied) == 1``.
    """

    minimizer: IndicatorField
    energy: FunctionalValue
    method: str
    iterations: int
    energy_trace: tuple[float, ...]
    converged: bool = True
    tied: tuple[IndicatorField, ...] = ()
    n_tied: int = 1


@dataclass(frozen=True)
class DeviationResult:
    """Local deviation inequalities at a cell set, with certified margins.

    The inequality whose side condition does not apply holds vacuously and
    reports a margin of None.  ``*_ok`` is False only when the inequality
    is violated beyond the combined bracket width.
    """

    sub_ok: bool
    sup_ok: bool
    sub_margin: float | None = None
    sup_margin: float | None = None


@dataclass(frozen=True, eq=False)
class GlueReport:
    """Interpolated set transferring boundary data between two competitors."""

    F: IndicatorField
    w: DensityField
    t_star: float
    bounds_ok: bool
    cond_a: bool
    cond_b: bool
    diagnostics: dict = dfield(default_factory=dict)


# ---------------------------------------------------------------------------
# Pairwise interaction of explicit cell sets
# ---------------------------------------------------------------------------


def _as_cells(cells, n: int) -> np.ndarray:
    arr = np.asarray(list(cells) if not isinstance(cells, np.ndarray) else cells)
    if arr.size == 0:
        return np.zeros((0, n), dtype=np.int64)
    arr = arr.reshape(-1, n).astype(np.int64)
    return arr


def interaction(
    grid: Grid,
    cells_a,
    cells_b,
    s,
    rel_tol: float = DEFAULT_REL_TOL,
    near_cutoff: int = DEFAULT_NEAR_CUTOFF,
    table: WeightTable | None = None,
) -> FunctionalValue:
    """Summed kernel weights over all pairs from two disjoint cell sets.

    Symmetric in its arguments and additive over disjoint unions; the
    bracket accumulates per-pair quadrature error bounds.
    """
    n = grid.n
    a = _as_cells(cells_a, n)
    b = _as_cells(cells_b, n)
    if a.shape[0] == 0 or b.shape[0] == 0:
        return FunctionalValue(0.0, 0.0, 0.0)
    if set(map(tuple, a)) & set(map(tuple, b)):
        raise OverlapError("cell sets must be disjoint")
    if table is None:
        table = WeightTable(n, grid.h_iso(), s, rel_tol=rel_tol, near_cutoff=near_cutoff)

    offs = (a[:, None, :] - b[None, :, :]).reshape(-1, n)
    uniq, counts = np.unique(offs, axis=0, return_counts=True)
    vals = []
    errs = []
    for off, c in zip(uniq, counts):
        e = table.entry(tuple(off))
        vals.append(c * e.value)
        errs.append(c * e.abs_error)
    value = math.fsum(vals)
    qerr = math.fsum(errs)
    return FunctionalValue(value, value - qerr, value + qerr, math.inf, qerr)


# ---------------------------------------------------------------------------
# Shared energy-context plumbing
# ---------------------------------------------------------------------------


def _dense_weights(grid: Grid, s, rel_tol, near_cutoff):
    table = WeightTable(grid.n, grid.h_iso(), s, rel_tol=rel_tol, near_cutoff=near_cutoff)
    radii = tuple(p - 1 for p in grid.padded_shape)
    w_val, w_err = table.dense(radii)
    return table, w_val, w_err


def _tail_bound(field: IndicatorField, cell_idx, inside_bit: bool, s: float) -> float:
    """Tail interval width for one cell against the set beyond the padding."""
    grid = field.grid
    n = grid.n
    h = grid.h_iso()
    pad_box = Domain(
        tuple(lo - grid.padding * hh for lo, hh in zip(grid.domain.lo, grid.h)),
        tuple(hi + grid.padding * hh for hi, hh in zip(grid.domain.hi, grid.h)),
    )
    ext = field.exterior
    if inside_bit:
        relevant = True if ext is None else not covers_everything_outside(ext, pad_box)
    else:
        relevant = True if ext is None else not covers_nothing_outside(ext, pad_box)
    if not relevant:
        return 0.0
    d = math.inf
    for a in range(n):
        lo = grid.domain.lo[a] + (cell_idx[a] - grid.padding) * h
        d = min(d, lo - pad_box.lo[a], pad_box.hi[a] - (lo + h))
    d = max(d, 0.5 * h)  # deviation cells sit inside the window, away from the rim
    return grid.cell_volume() * complement_tail(d, n, s)


def _set_interaction(
    grid: Grid, w_val, w_err, cells_a: np.ndarray, cells_b: np.ndarray
) -> tuple[float, float]:
    """Gathered dense-weight interaction between two cell index arrays."""
    if cells_a.shape[0] == 0 or cells_b.shape[0] == 0:
        return 0.0, 0.0
    centers = np.asarray([p - 1 for p in grid.padded_shape], dtype=np.int64)
    offs = cells_a[:, None, :] - cells_b[None, :, :] + centers
    idx = tuple(offs[..., a] for a in range(grid.n))
    value = math.fsum(w_val[idx].ravel().tolist())
    qerr = math.fsum(w_err[idx].ravel().tolist())
    return value, qerr


def local_deviation_test(
    field: IndicatorField,
    cells,
    omega: Domain,
    s,
    rel_tol: float = DEFAULT_REL_TOL,
    near_cutoff: int = DEFAULT_NEAR_CUTOFF,
) -> DeviationResult:
    """Check the minimality inequalities for a deviation on a cell set.

    For cells outside the set, the interaction with the set must not
    exceed the interaction with the rest of the complement (flipping them
    in must not pay); the mirror inequality holds for cells inside.  The
    set side extends through the padded grid, with tail intervals for the
    unknown remainder beyond it.
    """
    s = as_order(s)
    grid = field.grid
    ibox = grid.box_indices(omega)
    a = _as_cells(cells, grid.n)
    if a.shape[0] == 0:
        return DeviationResult(True, True, 0.0, 0.0)
    for c in a:
        for ax, (lo, hi) in enumerate(ibox):
            if not lo <= c[ax] < hi:
                raise ConfigError("deviation cells must lie inside the window")
    bits_at = field.inside[tuple(a.T)]
    if bits_at.min() != bits_at.max():
        raise ConfigError("deviation cells must lie entirely in the set or its complement")
    in_set = bool(bits_at[0])

    table, w_val, w_err = _dense_weights(grid, s, rel_tol, near_cutoff)
    all_one = np.argwhere(field.inside == 1).astype(np.int64)
    all_zero = np.argwhere(field.inside == 0).astype(np.int64)
    a_set = set(map(tuple, a))
    tails = [_tail_bound(field, tuple(c), True, s.s) for c in a]
    tails_c = [_tail_bound(field, tuple(c), False, s.s) for c in a]

    def interval(cells_b, tail_terms):
        v, q = _set_interaction(grid, w_val, w_err, a, cells_b)
        t = math.fsum(tail_terms)
        return v + 0.5 * t, q + 0.5 * t

    if not in_set:
        # deviation in the complement: L(A, E) <= L(A, E^c \ A)
        e_cells = all_one
        ec_cells = np.asarray(
            [c for c in all_zero if tuple(c) not in a_set], dtype=np.int64
        ).reshape(-1, grid.n)
        lhs, lhs_hw = interval(e_cells, tails)
        rhs, rhs_hw = interval(ec_cells, tails_c)
        margin = rhs - lhs
        ok = margin >= -(lhs_hw + rhs_hw)
        return DeviationResult(ok, True, margin, None)

    # deviation in the set: L(A, E^c) <= L(A, E \ A)
    ec_cells = all_zero
    e_cells = np.asarray(
        [c for c in all_one if tuple(c) not in a_set], dtype=np.int64
    ).reshape(-1, grid.n)
    lhs, lhs_hw = interval(ec_cells, tails_c)
    rhs, rhs_hw = interval(e_cells, tails)
    margin = rhs - lhs
    ok = margin >= -(lhs_hw + rhs_hw)
    return DeviationResult(True, ok, None, margin)


# ---------------------------------------------------------------------------
# Exhaustive minimization
# ---------------------------------------------------------------------------


def _interior_cells(grid: Grid, ibox) -> np.ndarray:
    ranges = [np.arange(lo, hi, dtype=np.int64) for lo, hi in ibox]
    mesh = np.meshgrid(*ranges, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def brute_force_minimizer(
    exterior: AnalyticSet,
    grid: Grid,
    omega: Domain,
    s,
    rel_tol: float = DEFAULT_REL_TOL,
    near_cutoff: int = DEFAULT_NEAR_CUTOFF,
    backend=None,
) -> MinimizeReport:
    """Exact argmin of the truncated energy over all interior bit patterns.

    All candidates share the exterior data and one truncation (the padded
    grid), so tail brackets cancel in comparisons.  Patterns whose energy
    bracket overlaps the best one are reported as ties.
    """
    s = as_order(s)
    base = rasterize(exterior, grid)
    ibox = grid.box_indices(omega)
    cells = _interior_cells(grid, ibox)
    m = cells.shape[0]
    if m > BRUTE_FORCE_CELL_BUDGET:
        raise BudgetExceededError(
            f"{m} interior cells exceed the 2^{BRUTE_FORCE_CELL_BUDGET} enumeration budget"
        )

    table, w_val, w_err = _dense_weights(grid, s, rel_tol, near_cutoff)
    centers = np.asarray([p - 1 for p in grid.padded_shape], dtype=np.int64)

    # interior pair matrix
    offs = cells[:, None, :] - cells[None, :, :] + centers
    idx = tuple(offs[..., a] for a in range(grid.n))
    w_int = w_val[idx].copy()
    w_int_err = w_err[idx].copy()

    # linear coupling against fixed exterior bits
    interior_mask = np.zeros(grid.padded_shape, dtype=bool)
    interior_mask[tuple(slice(lo, hi) for lo, hi in ibox)] = True
    ext_cells = np.argwhere(~interior_mask).astype(np.int64)
    e_bits = base.inside[tuple(ext_cells.T)].astype(np.float64)
    offs_e = cells[:, None, :] - ext_cells[None, :, :] + centers
    idx_e = tuple(offs_e[..., a] for a in range(grid.n))
    we = w_val[idx_e]
    wee = w_err[idx_e]
    sig = 1.0 - 2.0 * e_bits
    g_ext = we @ sig
    g_err = wee @ sig

    kern = get_kernels(backend)
    values, errors = kern.enumerate_energies(w_int, g_ext, w_int_err, g_err)

    best = int(np.argmin(values))
    tied_idx = np.flatnonzero(values - errors <= values[best] + errors[best])

    def field_of(pattern: int) -> IndicatorField:
        bits = np.fromiter(
            ((pattern >> k) & 1 for k in range(m)), count=m, dtype=np.uint8
        )
        shaped = bits.reshape(tuple(hi - lo for lo, hi in ibox))
        return base.with_window_bits(omega, shaped)

    minimizer = field_of(best)
    r_full = grid.padding * grid.h_iso()
    energy = j1(minimizer, omega, s, rel_tol, near_cutoff, table=table) + j2(
        minimizer, omega, s, r_full, rel_tol, near_cutoff, table=table
    )
    tied = tuple(field_of(int(p)) for p in tied_idx[:_MAX_TIED_FIELDS])
    return MinimizeReport(
        minimizer=minimizer,
        energy=energy,
        method="brute_force",
        iterations=1 << m,
        energy_trace=(energy.value,),
        converged=True,
        tied=tied,
        n_tied=int(tied_idx.size),
    )


# ---------------------------------------------------------------------------
# Greedy flip descent
# ---------------------------------------------------------------------------


def _error_row_sums(w_err: np.ndarray, grid: Grid, ibox) -> np.ndarray:
    """Per interior cell, the summed weight-error bound over all padded pairs."""
    c = w_err
    for ax in range(w_err.ndim):
        c = np.cumsum(c, axis=ax)
    c = np.pad(c, [(1, 0)] * w_err.ndim)

    def window_sum(start):
        # sum of w_err over the index window [start, start + P) per axis
        total = 0.0
        n = w_err.ndim
        for corner in range(1 << n):
            idx = []
            sign = 1
            for ax in range(n):
                p = grid.padded_shape[ax]
                if (corner >> ax) & 1:
                    idx.append(start[ax])
                    sign = -sign
                else:
                    idx.append(start[ax] + p)
            total += sign * c[tuple(idx)]
        return total

    shape = tuple(hi - lo for lo, hi in ibox)
    out = np.empty(shape, dtype=np.float64)
    for cell in np.ndindex(*shape):
        out[cell] = window_sum([c0 + lo for c0, (lo, _) in zip(cell, ibox)])
    return np.maximum(out, 0.0) * (1.0 + 1e-12)


def flip_descent(
    init: IndicatorField,
    omega: Domain,
    s,
    max_sweeps: int = 100,
    rel_tol: float = DEFAULT_REL_TOL,
    near_cutoff: int = DEFAULT_NEAR_CUTOFF,
    backend=None,
) -> MinimizeReport:
    """Greedy descent by single-cell flips in a fixed lexicographic sweep.

    A cell flips only when its energy delta is strictly below minus its
    accumulated quadrature-error bound, so the energy trace decreases
    strictly and no flip can be an artifact of weight error.  Terminates
    at the first sweep with no flips; at such a fixed point every
    single-cell deviation inequality holds.
    """
    if max_sweeps < 1:
        raise ConfigError("max_sweeps must be >= 1")
    s = as_order(s)
    grid = init.grid
    ibox = grid.box_indices(omega)
    table, w_val, w_err = _dense_weights(grid, s, rel_tol, near_cutoff)
    err_rows = _error_row_sums(w_err, grid, ibox)

    kern = get_kernels(backend)
    bits = init.inside.copy()
    n_interior = int(np.prod([hi - lo for lo, hi in ibox]))
    deltas_buf = np.empty(n_interior, dtype=np.float64)

    r_full = grid.padding * grid.h_iso()
    e0 = j1(init, omega, s, rel_tol, near_cutoff, table=table) + j2(
        init, omega, s, r_full, rel_tol, near_cutoff, table=table
    )
    trace = [e0.value]
    running = e0.value

    sweeps = 0
    converged = False
    while sweeps < max_sweeps:
        nf = kern.flip_sweep(bits, w_val, ibox, err_rows, deltas_buf)
        sweeps += 1
        for d in deltas_buf[:nf]:
            running += float(d)
            trace.append(running)
        if nf == 0:
            converged = True
            break

    final = IndicatorField(grid, bits, init.exterior)
    energy = j1(final, omega, s, rel_tol, near_cutoff, table=table) + j2(
        final, omega, s, r_full, rel_tol, near_cutoff, table=table
    )
    return MinimizeReport(
        minimizer=final,
        energy=energy,
        method="flip_descent",
        iterations=sweeps,
        energy_trace=tuple(trace),
        converged=converged,
    )


# ---------------------------------------------------------------------------
# Halfspace comparison and gluing
# ---------------------------------------------------------------------------


def comparison_check(field: IndicatorField, s) -> tuple[bool, bool]:
    """Containment of the rasterized halfspace in the field and conversely.

    Requires a grid symmetric under reflection of the last axis and
    exterior data equal to the halfspace; the flags themselves are pure
    set comparisons (the order parameter only fixes the context).
    """
    as_order(s)
    grid = field.grid
    n = grid.n
    if abs(grid.domain.lo[n - 1] + grid.domain.hi[n - 1]) > 1e-12:
        raise AsymmetricGridError("grid must be symmetric across the zero level of the last axis")
    h_field = rasterize(standard_halfspace(n), grid)
    interior_mask = np.zeros(grid.padded_shape, dtype=bool)
    interior_mask[tuple(slice(grid.padding, grid.padding + c) for c in grid.cells_per_axis)] = True
    outside = ~interior_mask
    if not np.array_equal(field.inside[outside], h_field.inside[outside]):
        raise AsymmetricGridError("exterior data must equal the halfspace")
    contains_h = bool(np.all(field.inside >= h_field.inside))
    contained_in_h = bool(np.all(field.inside <= h_field.inside))
    return contains_h, contained_in_h


def _boundary_distance(grid: Grid, ibox, omega: Domain) -> np.ndarray:
    """Distance from interior cell centers to the window complement."""
    axes = []
    for a, (lo, hi) in enumerate(ibox):
        idx = np.arange(lo, hi, dtype=np.float64)
        x = grid.domain.lo[a] + (idx - grid.padding + 0.5) * grid.h[a]
        axes.append(np.minimum(x - omega.lo[a], omega.hi[a] - x))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.minimum.reduce(mesh)


def glue(
    e1: IndicatorField,
    e2: IndicatorField,
    omega: Domain,
    delta1: float,
    delta2: float,
    s,
    rel_tol: float = DEFAULT_REL_TOL,
    near_cutoff: int = DEFAULT_NEAR_CUTOFF,
    backend=None,
) -> GlueReport:
    """Interpolate two sets across a boundary ring and reselect a level set.

    Blends the indicators with a cutoff profile that is 1 deeper than
    ``delta1`` from the window boundary and 0 within ``delta2`` of it,
    then picks the superlevel set of minimal interior energy over the
    finite level set of the blend.  The result keeps the first set deep
    inside, the second near the boundary, moves no farther from the first
    set than the two sets are from each other, and its doubled interior
    energy never exceeds the blend's seminorm.
    """
    s = as_order(s)
    grid = e1.grid
    if grid != e2.grid:
        raise ConfigError("competitor fields must share one grid")
    if e1.exterior != e2.exterior:
        raise ConfigError("competitor fields must share exterior data")
    if not delta1 > delta2 > 0:
        raise ConfigError("need delta1 > delta2 > 0")
    h = grid.h_iso()
    for name, d in (("delta1", delta1), ("delta2", delta2)):
        if abs(d / h - round(d / h)) > 1e-9:
            raise ConfigError(f"{name} must be a whole number of cells")
    if 2 * delta1 >= min(omega.widths):
        raise ConfigError("delta1 leaves no deep interior in the window")

    ibox = grid.box_indices(omega)
    interior_sl = tuple(slice(lo, hi) for lo, hi in ibox)
    outside_mask = np.ones(grid.padded_shape, dtype=bool)
    outside_mask[interior_sl] = False
    if not np.array_equal(e1.inside[outside_mask], e2.inside[outside_mask]):
        raise ConfigError("competitor fields must agree outside the window")

    b1 = e1.inside[interior_sl].astype(np.float64)
    b2 = e2.inside[interior_sl].astype(np.float64)
    d = _boundary_distance(grid, ibox, omega)
    phi = np.clip((d - delta2) / (delta1 - delta2), 0.0, 1.0)
    w_int = phi * b1 + (1.0 - phi) * b2

    w_padded = e1.inside.astype(np.float64)
    w_padded[interior_sl] = w_int
    w_field = DensityField(grid, w_padded)

    table = WeightTable(grid.n, h, s, rel_tol=rel_tol, near_cutoff=near_cutoff)
    bounds = sorted({0.0, 1.0, *(float(v) for v in np.unique(w_int))})
    best = None
    seen = set()
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        t = 0.5 * (lo + hi)
        if not 0.0 < t < 1.0:
            continue
        bits = (w_int > t).astype(np.uint8)
        key = bits.tobytes()
        if key in seen:
            continue
        seen.add(key)
        cand = e1.with_window_bits(omega, bits)
        val = j1(cand, omega, s, rel_tol, near_cutoff, table=table, backend=backend).value
        if best is None or val < best[0]:
            best = (val, t, cand, bits)

    j1_f, t_star, f_field, f_bits = best

    deep = d > delta1
    shallow = d <= delta2
    cond_b = bool(
        np.array_equal(f_bits[deep], e1.inside[interior_sl][deep])
        and np.array_equal(f_bits[shallow], e2.inside[interior_sl][shallow])
    )
    vol = grid.cell_volume()
    l1_f_e1 = float(np.abs(f_bits - e1.inside[interior_sl]).sum()) * vol
    l1_e1_e2 = float(np.abs(e1.inside[interior_sl].astype(np.int64) - e2.inside[interior_sl]).sum()) * vol
    cond_a = l1_f_e1 <= l1_e1_e2 + 1e-12 * vol

    fs_w = f_seminorm(w_field, omega, s, rel_tol, near_cutoff, table=table, backend=backend)
    bounds_ok = 2.0 * j1_f <= fs_w.value * (1.0 + 1e-9) + 1e-300

    ring = (d <= delta1 + h) & ~shallow
    diagnostics = {
        "j1_f": j1_f,
        "half_fs_w": 0.5 * fs_w.value,
        "l1_f_e1": l1_f_e1,
        "l1_e1_e2": l1_e1_e2,
        "l1_ring_e1_e2": float(
            np.abs(e1.inside[interior_sl][ring].astype(np.int64) - e2.inside[interior_sl][ring]).sum()
        )
        * vol,
        "j1_e1": j1(e1, omega, s, rel_tol, near_cutoff, table=table, backend=backend).value,
        "n_levels": len(bounds) - 2,
    }
    return GlueReport(
        F=f_field,
        w=w_field,
        t_star=float(t_star),
        bounds_ok=bool(bounds_ok),
        cond_a=bool(cond_a),
        cond_b=cond_b,
        diagnostics=diagnostics,
    )
