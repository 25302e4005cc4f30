"""Numba-compiled kernel implementations.

Hot twin of ``_kernels_numpy``; same contracts and array layouts.  All
loops are sequential and order-fixed so results are reproducible across
thread counts; integer-count outputs match the numpy backend bit for bit.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NAME = "numba"

_JIT = dict(cache=True, nogil=True)


# -- half-box pair statistics ------------------------------------------------


@njit(**_JIT)
def _half_diff_counts_1d(bits):
    m1 = bits.shape[0]
    out = np.zeros(2 * m1 - 1, dtype=np.int64)
    for d1 in range(1, m1):
        c = 0
        for i1 in range(d1, m1):
            if bits[i1] != bits[i1 - d1]:
                c += 1
        out[d1 + m1 - 1] = c
    return out


@njit(**_JIT)
def _half_diff_counts_2d(bits):
    m1, m2 = bits.shape
    out = np.zeros((2 * m1 - 1, 2 * m2 - 1), dtype=np.int64)
    for d1 in range(0, m1):
        lo2 = 1 - m2 if d1 > 0 else 1
        for d2 in range(lo2, m2):
            c = 0
            j2a = max(0, d2)
            j2b = m2 + min(0, d2)
            for i1 in range(d1, m1):
                for i2 in range(j2a, j2b):
                    if bits[i1, i2] != bits[i1 - d1, i2 - d2]:
                        c += 1
            out[d1 + m1 - 1, d2 + m2 - 1] = c
    return out


@njit(**_JIT)
def _half_diff_counts_3d(bits):
    m1, m2, m3 = bits.shape
    out = np.zeros((2 * m1 - 1, 2 * m2 - 1, 2 * m3 - 1), dtype=np.int64)
    for d1 in range(0, m1):
        for d2 in range(-m2 + 1, m2):
            if d1 == 0 and d2 < 0:
                continue
            for d3 in range(-m3 + 1, m3):
                if d1 == 0 and d2 == 0 and d3 <= 0:
                    continue
                c = 0
                j2a, j2b = max(0, d2), m2 + min(0, d2)
                j3a, j3b = max(0, d3), m3 + min(0, d3)
                for i1 in range(d1, m1):
                    for i2 in range(j2a, j2b):
                        for i3 in range(j3a, j3b):
                            if bits[i1, i2, i3] != bits[i1 - d1, i2 - d2, i3 - d3]:
                                c += 1
                out[d1 + m1 - 1, d2 + m2 - 1, d3 + m3 - 1] = c
    return out


@njit(**_JIT)
def _half_abs_sums_1d(u):
    m1 = u.shape[0]
    out = np.zeros(2 * m1 - 1, dtype=np.float64)
    for d1 in range(1, m1):
        acc = 0.0
        comp = 0.0
        for i1 in range(d1, m1):
            term = abs(u[i1] - u[i1 - d1]) - comp
            t = acc + term
            comp = (t - acc) - term
            acc = t
        out[d1 + m1 - 1] = acc
    return out


@njit(**_JIT)
def _half_abs_sums_2d(u):
    m1, m2 = u.shape
    out = np.zeros((2 * m1 - 1, 2 * m2 - 1), dtype=np.float64)
    for d1 in range(0, m1):
        lo2 = 1 - m2 if d1 > 0 else 1
        for d2 in range(lo2, m2):
            acc = 0.0
            comp = 0.0
            j2a, j2b = max(0, d2), m2 + min(0, d2)
            for i1 in range(d1, m1):
                for i2 in range(j2a, j2b):
                    term = abs(u[i1, i2] - u[i1 - d1, i2 - d2]) - comp
                    t = acc + term
                    comp = (t - acc) - term
                    acc = t
            out[d1 + m1 - 1, d2 + m2 - 1] = acc
    return out


@njit(**_JIT)
def _half_abs_sums_3d(u):
    m1, m2, m3 = u.shape
    out = np.zeros((2 * m1 - 1, 2 * m2 - 1, 2 * m3 - 1), dtype=np.float64)
    for d1 in range(0, m1):
        for d2 in range(-m2 + 1, m2):
            if d1 == 0 and d2 < 0:
                continue
            for d3 in range(-m3 + 1, m3):
                if d1 == 0 and d2 == 0 and d3 <= 0:
                    continue
                acc = 0.0
                comp = 0.0
                j2a, j2b = max(0, d2), m2 + min(0, d2)
                j3a, j3b = max(0, d3), m3 + min(0, d3)
                for i1 in range(d1, m1):
                    for i2 in range(j2a, j2b):
                        for i3 in range(j3a, j3b):
                            term = abs(u[i1, i2, i3] - u[i1 - d1, i2 - d2, i3 - d3]) - comp
                            t = acc + term
                            comp = (t - acc) - term
                            acc = t
                out[d1 + m1 - 1, d2 + m2 - 1, d3 + m3 - 1] = acc
    return out


def half_diff_counts(bits: np.ndarray) -> np.ndarray:
    if bits.ndim == 1:
        return _half_diff_counts_1d(bits)
    if bits.ndim == 2:
        return _half_diff_counts_2d(bits)
    return _half_diff_counts_3d(bits)


def half_abs_sums(u: np.ndarray) -> np.ndarray:
    if u.ndim == 1:
        return _half_abs_sums_1d(u)
    if u.ndim == 2:
        return _half_abs_sums_2d(u)
    return _half_abs_sums_3d(u)


# -- interior/exterior cross statistics --------------------------------------


@njit(**_JIT)
def _cross_counts_1d(bits, alo1, ahi1, blo1, bhi1, out):
    m1 = bits.shape[0]
    for d1 in range(alo1 - bhi1 + 1, ahi1 - blo1):
        lo = max(alo1, blo1 + d1)
        hi = min(ahi1, bhi1 + d1)
        c = 0
        for i1 in range(lo, hi):
            if bits[i1] != bits[i1 - d1]:
                c += 1
        if c:
            out[d1 + m1 - 1] += c


@njit(**_JIT)
def _cross_counts_2d(bits, alo1, ahi1, alo2, ahi2, blo1, bhi1, blo2, bhi2, out):
    m1, m2 = bits.shape
    for d1 in range(alo1 - bhi1 + 1, ahi1 - blo1):
        lo1 = max(alo1, blo1 + d1)
        hi1 = min(ahi1, bhi1 + d1)
        if lo1 >= hi1:
            continue
        for d2 in range(alo2 - bhi2 + 1, ahi2 - blo2):
            lo2 = max(alo2, blo2 + d2)
            hi2 = min(ahi2, bhi2 + d2)
            if lo2 >= hi2:
                continue
            c = 0
            for i1 in range(lo1, hi1):
                for i2 in range(lo2, hi2):
                    if bits[i1, i2] != bits[i1 - d1, i2 - d2]:
                        c += 1
            if c:
                out[d1 + m1 - 1, d2 + m2 - 1] += c


@njit(**_JIT)
def _cross_counts_3d(
    bits, alo1, ahi1, alo2, ahi2, alo3, ahi3, blo1, bhi1, blo2, bhi2, blo3, bhi3, out
):
    m1, m2, m3 = bits.shape
    for d1 in range(alo1 - bhi1 + 1, ahi1 - blo1):
        lo1 = max(alo1, blo1 + d1)
        hi1 = min(ahi1, bhi1 + d1)
        if lo1 >= hi1:
            continue
        for d2 in range(alo2 - bhi2 + 1, ahi2 - blo2):
            lo2 = max(alo2, blo2 + d2)
            hi2 = min(ahi2, bhi2 + d2)
            if lo2 >= hi2:
                continue
            for d3 in range(alo3 - bhi3 + 1, ahi3 - blo3):
                lo3 = max(alo3, blo3 + d3)
                hi3 = min(ahi3, bhi3 + d3)
                if lo3 >= hi3:
                    continue
                c = 0
                for i1 in range(lo1, hi1):
                    for i2 in range(lo2, hi2):
                        for i3 in range(lo3, hi3):
                            if bits[i1, i2, i3] != bits[i1 - d1, i2 - d2, i3 - d3]:
                                c += 1
                if c:
                    out[d1 + m1 - 1, d2 + m2 - 1, d3 + m3 - 1] += c


def accumulate_cross_counts(bits, a_box, b_box, out):
    if bits.ndim == 1:
        _cross_counts_1d(bits, a_box[0][0], a_box[0][1], b_box[0][0], b_box[0][1], out)
    elif bits.ndim == 2:
        _cross_counts_2d(
            bits,
            a_box[0][0], a_box[0][1], a_box[1][0], a_box[1][1],
            b_box[0][0], b_box[0][1], b_box[1][0], b_box[1][1],
            out,
        )
    else:
        _cross_counts_3d(
            bits,
            a_box[0][0], a_box[0][1], a_box[1][0], a_box[1][1], a_box[2][0], a_box[2][1],
            b_box[0][0], b_box[0][1], b_box[1][0], b_box[1][1], b_box[2][0], b_box[2][1],
            out,
        )


# -- greedy descent ----------------------------------------------------------


@njit(**_JIT)
def _flip_sweep_1d(bits, weights, ilo1, ihi1, err_rows, deltas_out):
    p1 = bits.shape[0]
    nflips = 0
    for i1 in range(ilo1, ihi1):
        d_i = 0.0
        for j1 in range(p1):
            d_i += weights[i1 - j1 + p1 - 1] * (1.0 - 2.0 * bits[j1])
        sigma_i = 1.0 - 2.0 * bits[i1]
        delta = sigma_i * d_i
        if delta < -err_rows[i1 - ilo1]:
            bits[i1] ^= 1
            deltas_out[nflips] = delta
            nflips += 1
    return nflips


@njit(**_JIT)
def _flip_sweep_2d(bits, weights, ilo1, ihi1, ilo2, ihi2, err_rows, deltas_out):
    p1, p2 = bits.shape
    nflips = 0
    for i1 in range(ilo1, ihi1):
        for i2 in range(ilo2, ihi2):
            d_i = 0.0
            for j1 in range(p1):
                w_row = weights[i1 - j1 + p1 - 1]
                for j2 in range(p2):
                    d_i += w_row[i2 - j2 + p2 - 1] * (1.0 - 2.0 * bits[j1, j2])
            sigma_i = 1.0 - 2.0 * bits[i1, i2]
            delta = sigma_i * d_i
            if delta < -err_rows[i1 - ilo1, i2 - ilo2]:
                bits[i1, i2] ^= 1
                deltas_out[nflips] = delta
                nflips += 1
    return nflips


@njit(**_JIT)
def _flip_sweep_3d(bits, weights, ilo1, ihi1, ilo2, ihi2, ilo3, ihi3, err_rows, deltas_out):
    p1, p2, p3 = bits.shape
    nflips = 0
    for i1 in range(ilo1, ihi1):
        for i2 in range(ilo2, ihi2):
            for i3 in range(ilo3, ihi3):
                d_i = 0.0
                for j1 in range(p1):
                    for j2 in range(p2):
                        w_row = weights[i1 - j1 + p1 - 1, i2 - j2 + p2 - 1]
                        for j3 in range(p3):
                            d_i += w_row[i3 - j3 + p3 - 1] * (1.0 - 2.0 * bits[j1, j2, j3])
                sigma_i = 1.0 - 2.0 * bits[i1, i2, i3]
                delta = sigma_i * d_i
                if delta < -err_rows[i1 - ilo1, i2 - ilo2, i3 - ilo3]:
                    bits[i1, i2, i3] ^= 1
                    deltas_out[nflips] = delta
                    nflips += 1
    return nflips


def flip_sweep(bits, weights, ibox, err_rows, deltas_out):
    if bits.ndim == 1:
        return _flip_sweep_1d(bits, weights, ibox[0][0], ibox[0][1], err_rows, deltas_out)
    if bits.ndim == 2:
        return _flip_sweep_2d(
            bits, weights, ibox[0][0], ibox[0][1], ibox[1][0], ibox[1][1], err_rows, deltas_out
        )
    return _flip_sweep_3d(
        bits,
        weights,
        ibox[0][0], ibox[0][1], ibox[1][0], ibox[1][1], ibox[2][0], ibox[2][1],
        err_rows,
        deltas_out,
    )


# -- exhaustive enumeration --------------------------------------------------


@njit(**_JIT)
def _enumerate(w_int, g_ext, w_err, g_err):
    m = g_ext.size
    total = 1 << m
    values = np.empty(total, dtype=np.float64)
    errors = np.empty(total, dtype=np.float64)
    b = np.zeros(m, dtype=np.float64)
    for p in range(total):
        for k in range(m):
            b[k] = (p >> k) & 1
        e_val = 0.0
        e_err = 0.0
        for k in range(m):
            bk = b[k]
            for l in range(k + 1, m):
                if bk != b[l]:
                    e_val += w_int[k, l]
                    e_err += w_err[k, l]
            e_val += bk * g_ext[k]
            e_err += bk * g_err[k]
        values[p] = e_val
        errors[p] = e_err
    return values, errors


def enumerate_energies(w_int, g_ext, w_err, g_err):
    return _enumerate(w_int, g_ext, w_err, g_err)
