"""Pure-numpy kernel implementations.

Reference backend: slower than the numba twin on large grids but requires
no compilation.  Integer-count outputs are exact and bit-identical to the
numba backend; float reductions may differ in the last ulps.

Offset arrays use a full-box row-major layout: for source boxes with
extents (M_1, ..., M_n) the output has shape (2*M_1 - 1, ..., 2*M_n - 1)
and offset Delta lives at index Delta + M - 1 per axis.  "Half" variants
fill only offsets that are lexicographically positive.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def _overlap_slices(shape, delta):
    sl_i, sl_j = [], []
    for m, d in zip(shape, delta):
        lo = max(0, d)
        hi = m + min(0, d)
        sl_i.append(slice(lo, hi))
        sl_j.append(slice(lo - d, hi - d))
    return tuple(sl_i), tuple(sl_j)


def _half_offsets(shape):
    for delta in np.ndindex(*(2 * m - 1 for m in shape)):
        d = tuple(int(v) - (m - 1) for v, m in zip(delta, shape))
        for c in d:
            if c > 0:
                yield d
                break
            if c < 0:
                break


def half_diff_counts(bits: np.ndarray) -> np.ndarray:
    """Per-offset counts of differing cell pairs within one box.

    Each unordered pair {i, j} with bits[i] != bits[j] is counted once, at
    the lexicographically positive offset i - j.
    """
    shape = bits.shape
    out = np.zeros(tuple(2 * m - 1 for m in shape), dtype=np.int64)
    for d in _half_offsets(shape):
        sl_i, sl_j = _overlap_slices(shape, d)
        idx = tuple(dd + m - 1 for dd, m in zip(d, shape))
        out[idx] = np.count_nonzero(bits[sl_i] != bits[sl_j])
    return out


def half_abs_sums(u: np.ndarray) -> np.ndarray:
    """Per-offset sums of |u_i - u_j| over unordered in-box pairs."""
    shape = u.shape
    out = np.zeros(tuple(2 * m - 1 for m in shape), dtype=np.float64)
    for d in _half_offsets(shape):
        sl_i, sl_j = _overlap_slices(shape, d)
        idx = tuple(dd + m - 1 for dd, m in zip(d, shape))
        out[idx] = np.abs(u[sl_i] - u[sl_j]).sum()
    return out


def accumulate_cross_counts(bits, a_box, b_box, out):
    """Add per-offset counts of differing pairs (i in A, j in B) into out.

    A and B are disjoint index boxes ((lo, hi) per axis) of the padded bit
    array; out has the full offset-box layout of the padded shape.
    """
    shape = bits.shape
    centers = [m - 1 for m in shape]
    ranges = [
        range(alo - bhi + 1, ahi - blo)
        for (alo, ahi), (blo, bhi) in zip(a_box, b_box)
    ]
    for d in np.ndindex(*(len(r) for r in ranges)):
        delta = tuple(r[k] for r, k in zip(ranges, d))
        sl_i, sl_j = [], []
        empty = False
        for (alo, ahi), (blo, bhi), dd in zip(a_box, b_box, delta):
            lo = max(alo, blo + dd)
            hi = min(ahi, bhi + dd)
            if lo >= hi:
                empty = True
                break
            sl_i.append(slice(lo, hi))
            sl_j.append(slice(lo - dd, hi - dd))
        if empty:
            continue
        c = np.count_nonzero(bits[tuple(sl_i)] != bits[tuple(sl_j)])
        if c:
            idx = tuple(dd + cc for dd, cc in zip(delta, centers))
            out[idx] += c


def flip_sweep(bits, weights, ibox, err_rows, deltas_out):
    """One lexicographic greedy sweep over the interior cells.

    Flips a cell when the resulting energy change is below minus the
    cell's accumulated quadrature-error bound.  ``bits`` (padded, uint8)
    is modified in place; accepted deltas are written to ``deltas_out``.
    Returns the number of flips.
    """
    shape = bits.shape
    sigma = 1.0 - 2.0 * bits.astype(np.float64)
    rev = tuple(slice(None, None, -1) for _ in shape)
    nflips = 0
    for cell in np.ndindex(*(hi - lo for lo, hi in ibox)):
        i = tuple(c + lo for c, (lo, hi) in zip(cell, ibox))
        wwin = weights[tuple(slice(k, k + m) for k, m in zip(i, shape))][rev]
        d_i = float((wwin * sigma).sum())  # zero center weight drops the j == i term
        delta = sigma[i] * d_i
        if delta < -err_rows[cell]:
            bits[i] ^= 1
            sigma[i] = -sigma[i]
            deltas_out[nflips] = delta
            nflips += 1
    return nflips


def enumerate_energies(w_int, g_ext, w_err, g_err):
    """Energies of every interior bit pattern for exhaustive minimization.

    Returns (values, errors), both of length 2^m, where pattern p has bit
    k = (p >> k) & 1.  The value is the interior pair energy plus the
    linear exterior coupling; the matching quadrature-error bound uses the
    same pair structure.
    """
    m = g_ext.size
    total = 1 << m
    values = np.empty(total, dtype=np.float64)
    errors = np.empty(total, dtype=np.float64)
    r_val = w_int.sum(axis=1)
    r_err = w_err.sum(axis=1)
    chunk = 1 << 14
    for start in range(0, total, chunk):
        pats = np.arange(start, min(start + chunk, total), dtype=np.uint64)
        b = ((pats[:, None] >> np.arange(m, dtype=np.uint64)) & 1).astype(np.float64)
        # sum_{k<l} W_kl XOR(b_k,b_l) = b.r - b W b^T  (symmetric W, zero diagonal)
        quad_v = np.einsum("ck,kl,cl->c", b, w_int, b)
        quad_e = np.einsum("ck,kl,cl->c", b, w_err, b)
        sl = slice(start, start + pats.size)
        values[sl] = b @ r_val - quad_v + b @ g_ext
        errors[sl] = b @ r_err - quad_e + b @ g_err
    return values, errors
