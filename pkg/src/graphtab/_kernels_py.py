"""Pure numpy fallback for the compiled segment-reduction kernels.

Bit-compatible with ``graphtab._kernels``: sums use the same adjacent-pairing
halving tree, and the sorted variants sort segment values ascending before
summing. Everything is vectorized over segments, so this backend stays usable
(if much slower than the extension) on large graphs.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "pure"


def _halving_seg_sum(vals: np.ndarray, lens: np.ndarray) -> np.ndarray:
    """Sum ragged segments laid out consecutively, adjacent-pairing tree."""
    n_seg = lens.shape[0]
    vals = np.asarray(vals, dtype=np.float64)
    lens = lens.astype(np.int64, copy=True)
    while lens.max(initial=0) > 1:
        half = lens >> 1
        odd = lens & 1
        new_lens = half + odd
        offs = np.zeros(n_seg + 1, dtype=np.int64)
        np.cumsum(lens, out=offs[1:])
        new_offs = np.zeros(n_seg + 1, dtype=np.int64)
        np.cumsum(new_lens, out=new_offs[1:])
        seg = np.repeat(np.arange(n_seg), new_lens)
        pos = np.arange(new_offs[-1]) - new_offs[seg]
        base = offs[seg]
        tail = (odd[seg] == 1) & (pos == half[seg])
        top = vals.shape[0] - 1
        i0 = np.minimum(base + 2 * pos, top)
        i1 = np.minimum(base + 2 * pos + 1, top)
        vals = np.where(tail, vals[np.minimum(base + lens[seg] - 1, top)],
                        vals[i0] + vals[i1])
        lens = new_lens
    out = np.zeros(n_seg, dtype=np.float64)
    offs = np.zeros(n_seg + 1, dtype=np.int64)
    np.cumsum(lens, out=offs[1:])
    nonempty = lens == 1
    out[nonempty] = vals[offs[:-1][nonempty]]
    return out


def _seg_lens(offsets: np.ndarray) -> np.ndarray:
    return np.diff(offsets).astype(np.int64)


def _sort_within(vals: np.ndarray, lens: np.ndarray) -> np.ndarray:
    seg = np.repeat(np.arange(lens.shape[0]), lens)
    return vals[np.lexsort((vals, seg))]


def seg_sum(values, offsets):
    """Per-segment halving-tree sum; empty segments sum to 0."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    return _halving_seg_sum(values, _seg_lens(offsets))


def seg_sum_sorted(values, offsets):
    """Per-segment halving-tree sum over ascending-sorted values."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    lens = _seg_lens(offsets)
    return _halving_seg_sum(_sort_within(values, lens), lens)


def seg_stats_skipna(values, offsets):
    """Per-segment (mean, max, min, non-NaN count); all-NaN/empty -> NaN stats."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    lens = _seg_lens(offsets)
    n_seg = lens.shape[0]
    seg = np.repeat(np.arange(n_seg), lens)
    keep = ~np.isnan(values)
    count = np.bincount(seg[keep], minlength=n_seg).astype(np.int64)
    kept = _sort_within(values[keep], count)
    offs = np.zeros(n_seg + 1, dtype=np.int64)
    np.cumsum(count, out=offs[1:])
    mean = np.full(n_seg, np.nan)
    vmax = np.full(n_seg, np.nan)
    vmin = np.full(n_seg, np.nan)
    nonempty = count > 0
    # sorted layout: min/max are the segment endpoints
    vmin[nonempty] = kept[offs[:-1][nonempty]]
    vmax[nonempty] = kept[offs[1:][nonempty] - 1]
    sums = _halving_seg_sum(kept, count)
    mean[nonempty] = sums[nonempty] / count[nonempty]
    return mean, vmax, vmin, count


def seg_cat_counts(codes, offsets, n_cats):
    """Per-segment category counts (code -1 = missing, skipped)."""
    codes = np.ascontiguousarray(codes, dtype=np.int64)
    lens = _seg_lens(offsets)
    n_seg = lens.shape[0]
    seg = np.repeat(np.arange(n_seg), lens)
    keep = codes >= 0
    counts = np.zeros((n_seg, n_cats), dtype=np.float64)
    np.add.at(counts, (seg[keep], codes[keep]), 1.0)
    valid = np.bincount(seg[keep], minlength=n_seg).astype(np.int64)
    return counts, valid


def mean_aggregate(offsets, cols, H):
    """Self-inclusive neighborhood mean: out[i] = (H[i] + sum_j H[j]) / (deg+1)."""
    H = np.ascontiguousarray(H, dtype=np.float64)
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)
    lens = _seg_lens(offsets)
    cnt = (lens + 1).astype(np.float64)
    out = np.empty_like(H)
    for f in range(H.shape[1]):
        col = H[:, f]
        out[:, f] = (col + _halving_seg_sum(col[cols], lens)) / cnt
    return out
