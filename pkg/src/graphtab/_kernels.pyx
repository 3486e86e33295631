# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled segment-reduction kernels.

Each function reduces ragged segments described by a CSR-style offsets array.
Sums use an adjacent-pairing halving tree so results are bit-identical to the
pure numpy backend (``graphtab._kernels_py``); the ``*_sorted`` variants sort
segment values ascending first, which makes the sum independent of the order
in which neighbors are stored.
"""

import numpy as np

cimport numpy as cnp
from libc.stdlib cimport free, malloc, qsort

cnp.import_array()

BACKEND_NAME = "compiled"


cdef int _cmp_double(const void* pa, const void* pb) noexcept nogil:
    cdef double a = (<const double*> pa)[0]
    cdef double b = (<const double*> pb)[0]
    if a < b:
        return -1
    if a > b:
        return 1
    return 0


cdef double _halving_sum(double* buf, Py_ssize_t m) noexcept nogil:
    # [x0,x1,x2,x3,x4] -> [x0+x1, x2+x3, x4] -> ... (odd tail carried verbatim)
    cdef Py_ssize_t half, t
    if m == 0:
        return 0.0
    while m > 1:
        half = m >> 1
        for t in range(half):
            buf[t] = buf[2 * t] + buf[2 * t + 1]
        if m & 1:
            buf[half] = buf[m - 1]
            m = half + 1
        else:
            m = half
    return buf[0]


cdef Py_ssize_t _max_seg_len(const long long[::1] offsets) noexcept nogil:
    cdef Py_ssize_t i, n, best = 1
    for i in range(offsets.shape[0] - 1):
        n = offsets[i + 1] - offsets[i]
        if n > best:
            best = n
    return best


def seg_sum(const double[::1] values, const long long[::1] offsets):
    """Per-segment halving-tree sum; empty segments sum to 0."""
    cdef Py_ssize_t s = offsets.shape[0] - 1
    out = np.empty(s, dtype=np.float64)
    cdef double[::1] out_v = out
    cdef double* buf = <double*> malloc(_max_seg_len(offsets) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef Py_ssize_t i, j, n, base
    with nogil:
        for i in range(s):
            base = offsets[i]
            n = offsets[i + 1] - base
            for j in range(n):
                buf[j] = values[base + j]
            out_v[i] = _halving_sum(buf, n)
    free(buf)
    return out


def seg_sum_sorted(const double[::1] values, const long long[::1] offsets):
    """Per-segment halving-tree sum over ascending-sorted values.

    The result depends only on the multiset of values in each segment (NaNs
    are not supported here; filter them first).
    """
    cdef Py_ssize_t s = offsets.shape[0] - 1
    out = np.empty(s, dtype=np.float64)
    cdef double[::1] out_v = out
    cdef double* buf = <double*> malloc(_max_seg_len(offsets) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef Py_ssize_t i, j, n, base
    with nogil:
        for i in range(s):
            base = offsets[i]
            n = offsets[i + 1] - base
            for j in range(n):
                buf[j] = values[base + j]
            qsort(buf, n, sizeof(double), _cmp_double)
            out_v[i] = _halving_sum(buf, n)
    free(buf)
    return out


def seg_stats_skipna(const double[::1] values, const long long[::1] offsets):
    """Per-segment (mean, max, min, non-NaN count); all-NaN/empty -> NaN stats.

    The mean numerator is the sorted halving-tree sum of the non-NaN values.
    """
    cdef Py_ssize_t s = offsets.shape[0] - 1
    mean = np.empty(s, dtype=np.float64)
    vmax = np.empty(s, dtype=np.float64)
    vmin = np.empty(s, dtype=np.float64)
    count = np.empty(s, dtype=np.int64)
    cdef double[::1] mean_v = mean
    cdef double[::1] vmax_v = vmax
    cdef double[::1] vmin_v = vmin
    cdef long long[::1] count_v = count
    cdef double* buf = <double*> malloc(_max_seg_len(offsets) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef Py_ssize_t i, j, n, base, cnt
    cdef double x, nan = float("nan")
    with nogil:
        for i in range(s):
            base = offsets[i]
            n = offsets[i + 1] - base
            cnt = 0
            for j in range(n):
                x = values[base + j]
                if x == x:
                    buf[cnt] = x
                    cnt += 1
            count_v[i] = cnt
            if cnt == 0:
                mean_v[i] = nan
                vmax_v[i] = nan
                vmin_v[i] = nan
            else:
                qsort(buf, cnt, sizeof(double), _cmp_double)
                vmin_v[i] = buf[0]
                vmax_v[i] = buf[cnt - 1]
                mean_v[i] = _halving_sum(buf, cnt) / cnt
    free(buf)
    return mean, vmax, vmin, count


def seg_cat_counts(const long long[::1] codes, const long long[::1] offsets,
                   Py_ssize_t n_cats):
    """Per-segment category counts (code -1 = missing, skipped).

    Returns (counts: float64 [s, n_cats], valid: int64 [s]).
    """
    cdef Py_ssize_t s = offsets.shape[0] - 1
    counts = np.zeros((s, n_cats), dtype=np.float64)
    valid = np.zeros(s, dtype=np.int64)
    cdef double[:, ::1] counts_v = counts
    cdef long long[::1] valid_v = valid
    cdef Py_ssize_t i, j, base, n
    cdef long long c
    with nogil:
        for i in range(s):
            base = offsets[i]
            n = offsets[i + 1] - base
            for j in range(n):
                c = codes[base + j]
                if c >= 0:
                    counts_v[i, c] += 1.0
                    valid_v[i] += 1
    return counts, valid


def mean_aggregate(const long long[::1] offsets, const long long[::1] cols,
                   const double[:, ::1] H):
    """Self-inclusive neighborhood mean: out[i] = (H[i] + sum_j H[j]) / (deg+1)."""
    cdef Py_ssize_t n = offsets.shape[0] - 1
    cdef Py_ssize_t d = H.shape[1]
    out = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] out_v = out
    cdef double* buf = <double*> malloc(_max_seg_len(offsets) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef Py_ssize_t i, e, f, base, deg
    cdef double cnt
    with nogil:
        for i in range(n):
            base = offsets[i]
            deg = offsets[i + 1] - base
            cnt = <double> (deg + 1)
            for f in range(d):
                for e in range(deg):
                    buf[e] = H[cols[base + e], f]
                out_v[i, f] = (H[i, f] + _halving_sum(buf, deg)) / cnt
    free(buf)
    return out
