"""Backend selector for the segment-reduction kernels.

The compiled extension is preferred; set ``GRAPHTAB_PURE=1`` to force the
numpy fallback (used by the benchmark and by the parity tests). Both backends
implement the same reduction trees and return bit-identical results.
"""

from __future__ import annotations

import os

import numpy as np

if os.environ.get("GRAPHTAB_PURE"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

seg_sum = _impl.seg_sum
seg_sum_sorted = _impl.seg_sum_sorted
seg_stats_skipna = _impl.seg_stats_skipna
seg_cat_counts = _impl.seg_cat_counts
mean_aggregate = _impl.mean_aggregate


def backend_name() -> str:
    return _impl.BACKEND_NAME


def csr_matvec(offsets: np.ndarray, cols: np.ndarray, x: np.ndarray) -> np.ndarray:
    """y[i] = sum of x over the neighbors of i (halving-tree order)."""
    return seg_sum(np.ascontiguousarray(x, dtype=np.float64)[cols], offsets)


def sorted_sum(values: np.ndarray) -> float:
    """Order-canonical sum of a 1-D array (sorted halving tree)."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    offsets = np.array([0, values.shape[0]], dtype=np.int64)
    return float(seg_sum_sorted(values, offsets)[0])
