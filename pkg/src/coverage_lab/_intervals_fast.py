"""Order-statistic width table for the intervals-1d class.

For a calibration set sorted by feature value, the local width at a query x
is the maximum, over eligible contiguous runs of calibration points whose
witness interval can contain x, of the run's indexed residual order statistic.
A query is characterized by its insertion position pos in the sorted
calibration values; the runs [a..b] compatible with pos are exactly those
with a <= pos <= b+1 (b = a-1 is the empty run realized by a small interval
around x alone). This module computes the whole table of widths over
pos = 0..n1 in O(n1^2 log n1) with a Fenwick tree over residual ranks,
compiled with numba when available.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return deco


@njit(cache=True)
def _width_table_kernel(res_sorted, rank_by_x, k_table, threshold):  # pragma: no cover - jit
    n = rank_by_x.shape[0]
    out = np.full(n + 1, -np.inf)
    tree = np.zeros(n + 1, dtype=np.int64)
    row = np.empty(n + 1, dtype=np.float64)
    log = 0
    while (1 << (log + 1)) <= n:
        log += 1
    empty_q = np.inf if 0.0 >= threshold else -np.inf
    for a in range(n):
        for t in range(n + 1):
            tree[t] = 0
        row[a] = empty_q  # slot for the empty run b = a-1
        for b in range(a, n):
            i = rank_by_x[b]
            while i <= n:
                tree[i] += 1
                i += i & (-i)
            cnt = b - a + 1
            if cnt >= threshold:
                k = k_table[cnt]
                if k > cnt:
                    row[b + 1] = np.inf
                else:
                    pos = 0
                    rem = k
                    step = 1 << log
                    while step > 0:
                        nxt = pos + step
                        if nxt <= n and tree[nxt] < rem:
                            pos = nxt
                            rem -= tree[nxt]
                        step >>= 1
                    row[b + 1] = res_sorted[pos]
            else:
                row[b + 1] = -np.inf
        m = -np.inf
        for t in range(n, a - 1, -1):
            if row[t] > m:
                m = row[t]
            row[t] = m
        if row[a] > out[a]:
            out[a] = row[a]
        for pos in range(a + 1, n + 1):
            if row[pos] > out[pos]:
                out[pos] = row[pos]
    return out


def _width_table_python(res_sorted, rank_by_x, k_table, threshold):
    """Pure-Python twin of the kernel, for fallback and cross-checking."""
    import bisect

    n = rank_by_x.shape[0]
    out = np.full(n + 1, -np.inf)
    empty_q = np.inf if 0.0 >= threshold else -np.inf
    res_by_rank = res_sorted
    for a in range(n):
        row = np.empty(n + 1)
        row[a] = empty_q
        ranks: list[int] = []
        for b in range(a, n):
            bisect.insort(ranks, rank_by_x[b])
            cnt = b - a + 1
            if cnt >= threshold:
                k = k_table[cnt]
                row[b + 1] = np.inf if k > cnt else res_by_rank[ranks[k - 1] - 1]
            else:
                row[b + 1] = -np.inf
        m = -np.inf
        for t in range(n, a - 1, -1):
            m = max(m, row[t])
            row[t] = m
        out[a] = max(out[a], row[a])
        for pos in range(a + 1, n + 1):
            out[pos] = max(out[pos], row[pos])
    return out


def interval_width_table(residuals_by_x: np.ndarray, k_table: np.ndarray, threshold: float) -> np.ndarray:
    """Widths indexed by insertion position, for calibration residuals given in
    ascending feature order.

    ``k_table[c]`` is the 1-based order-statistic index required for a run of
    c calibration points (entries may exceed c, meaning +inf); ``threshold``
    is the eligibility cutoff on the run size. Returns an array of length
    n1 + 1.
    """
    res = np.ascontiguousarray(residuals_by_x, dtype=np.float64)
    order = np.argsort(res, kind="stable")
    rank_by_x = np.empty(res.shape[0], dtype=np.int64)
    rank_by_x[order] = np.arange(1, res.shape[0] + 1)
    res_sorted = res[order]
    k_arr = np.ascontiguousarray(k_table, dtype=np.int64)
    fn = _width_table_kernel if HAVE_NUMBA else _width_table_python
    return fn(res_sorted, rank_by_x, k_arr, float(threshold))
