"""O(N^2) pairwise sums for the Gaussian kernel.

Each sum is computed in row blocks: a compiled pass fills ``log K(x_i - y_j)``,
numpy's vectorised ``exp`` turns the block into kernel values, and a second
compiled pass reduces every row over sources in index order. Row results do
not depend on the block size, so outputs are reproducible bit for bit.
Positions are ``(n, d)`` float arrays; ``w`` are source weights.
"""

from __future__ import annotations

import os
import threading

import numba
import numpy as np
from numba import njit

_threads = os.environ.get("STEINFLOW_THREADS")
if _threads:
    numba.set_num_threads(max(1, min(int(_threads), numba.config.NUMBA_NUM_THREADS)))

BLOCK_ELEMENTS = 1 << 22
# no nnan/ninf: non-finite values must survive for blow-up detection
FAST = {"reassoc", "contract", "arcp", "nsz"}
_local = threading.local()


def _scratch(rows, cols):
    buf = getattr(_local, "buf", None)
    if buf is None or buf.size < rows * cols:
        buf = np.empty(max(rows * cols, 1))
        _local.buf = buf
    return buf[: rows * cols].reshape(rows, cols)


@njit(cache=True)
def _fill_log_kernel(x, y, c, c0, out):
    n, d = x.shape
    m = y.shape[0]
    for i in range(n):
        for j in range(m):
            r2 = 0.0
            for a in range(d):
                z = x[i, a] - y[j, a]
                r2 += z * z
            out[i, j] = c0 + c * r2


@njit(cache=True, fastmath=FAST)
def _fill_log_kernel_1d(x, y, c, c0, out):
    n = x.shape[0]
    m = y.shape[0]
    for i in range(n):
        xi = x[i, 0]
        for j in range(m):
            z = xi - y[j, 0]
            out[i, j] = c0 + c * z * z


@njit(cache=True, fastmath=FAST)
def _drift_rows_1d(e, x, y, w, gv, s, out):
    n = x.shape[0]
    m = y.shape[0]
    inv = 1.0 / s
    for i in range(n):
        xi = x[i, 0]
        acc = 0.0
        for j in range(m):
            acc += w[j] * e[i, j] * ((xi - y[j, 0]) * inv - gv[j, 0])
        out[i, 0] = acc


@njit(cache=True, fastmath=FAST)
def _divergence_rows_1d(e, x, y, w, gv, s, out):
    n = x.shape[0]
    m = y.shape[0]
    inv = 1.0 / s
    for i in range(n):
        xi = x[i, 0]
        acc = 0.0
        for j in range(m):
            z = xi - y[j, 0]
            acc += w[j] * e[i, j] * (z * gv[j, 0] * inv - (z * z * inv - 1.0) * inv)
        out[i] = acc


@njit(cache=True, fastmath=FAST)
def _stein_rows_1d(e, x, y, wx, wy, gx, gy, s, out):
    n = x.shape[0]
    m = y.shape[0]
    inv = 1.0 / s
    for i in range(n):
        xi = x[i, 0]
        gi = gx[i, 0]
        acc = 0.0
        for j in range(m):
            z = xi - y[j, 0]
            gj = gy[j, 0]
            acc += wy[j] * e[i, j] * (gi * gj - (gi - gj) * z * inv - (z * z * inv - 1.0) * inv)
        out[i] = wx[i] * acc


@njit(cache=True)
def _drift_rows(e, x, y, w, gv, s, out):
    n, d = x.shape
    m = y.shape[0]
    for i in range(n):
        for a in range(d):
            acc = 0.0
            xi = x[i, a]
            for j in range(m):
                acc += w[j] * e[i, j] * ((xi - y[j, a]) / s - gv[j, a])
            out[i, a] = acc


@njit(cache=True)
def _repulsion_rows(e, x, y, w, s, out):
    n, d = x.shape
    m = y.shape[0]
    for i in range(n):
        for a in range(d):
            acc = 0.0
            xi = x[i, a]
            for j in range(m):
                acc += w[j] * e[i, j] * (xi - y[j, a])
            out[i, a] = acc / s


@njit(cache=True)
def _divergence_rows(e, x, y, w, gv, s, out):
    n, d = x.shape
    m = y.shape[0]
    for i in range(n):
        acc = 0.0
        for j in range(m):
            r2 = 0.0
            zg = 0.0
            for a in range(d):
                z = x[i, a] - y[j, a]
                r2 += z * z
                zg += z * gv[j, a]
            acc += w[j] * e[i, j] * (zg / s - (r2 / (s * s) - d / s))
        out[i] = acc


@njit(cache=True)
def _stein_rows(e, x, y, wx, wy, gx, gy, s, out):
    n, d = x.shape
    m = y.shape[0]
    for i in range(n):
        acc = 0.0
        for j in range(m):
            r2 = 0.0
            dot = 0.0
            cross = 0.0
            for a in range(d):
                z = x[i, a] - y[j, a]
                r2 += z * z
                dot += gx[i, a] * gy[j, a]
                cross += (gx[i, a] - gy[j, a]) * z
            acc += wy[j] * e[i, j] * (dot - cross / s - (r2 / (s * s) - d / s))
        out[i] = wx[i] * acc


@njit(cache=True)
def _gram_rows(e, wx, wy, gx, gy, out):
    n, d = gx.shape
    m = gy.shape[0]
    for i in range(n):
        acc = 0.0
        for j in range(m):
            dot = 0.0
            for a in range(d):
                dot += gx[i, a] * gy[j, a]
            acc += wy[j] * e[i, j] * dot
        out[i] = wx[i] * acc


@njit(cache=True)
def _plain_rows(e, w, out):
    n, m = e.shape
    for i in range(n):
        acc = 0.0
        for j in range(m):
            acc += w[j] * e[i, j]
        out[i] = acc


def _blocks(n, m):
    rows = max(1, min(n, BLOCK_ELEMENTS // max(m, 1)))
    for start in range(0, n, rows):
        yield slice(start, min(n, start + rows))


def kernel_block(xb, y, s, norm):
    """K(x_i - y_j) for a block of rows; returns a scratch view, do not keep it."""
    e = _scratch(len(xb), len(y))
    fill = _fill_log_kernel_1d if xb.shape[1] == 1 else _fill_log_kernel
    fill(xb, y, -0.5 / s, np.log(norm), e)
    np.exp(e, out=e)
    return e


def stein_drift(x, y, w, gv, s, norm):
    """-sum_j w_j [grad K(x_i - y_j) + K(x_i - y_j) grad V(y_j)]."""
    out = np.empty_like(x)
    rows = _drift_rows_1d if x.shape[1] == 1 else _drift_rows
    for b in _blocks(len(x), len(y)):
        rows(kernel_block(x[b], y, s, norm), x[b], y, w, gv, s, out[b])
    return out


def repulsion(x, y, w, s, norm):
    """-sum_j w_j grad K(x_i - y_j)."""
    out = np.empty_like(x)
    for b in _blocks(len(x), len(y)):
        _repulsion_rows(kernel_block(x[b], y, s, norm), x[b], y, w, s, out[b])
    return out


def stein_divergence(x, y, w, gv, s, norm):
    """Divergence of :func:`stein_drift` in x: -sum_j w_j [lap K + grad K . grad V(y_j)]."""
    out = np.empty(len(x))
    rows = _divergence_rows_1d if x.shape[1] == 1 else _divergence_rows
    for b in _blocks(len(x), len(y)):
        rows(kernel_block(x[b], y, s, norm), x[b], y, w, gv, s, out[b])
    return out


def stein_kernel_rows(x, w, gv, s, norm):
    """w_i sum_j w_j u(x_i, x_j) for the Stein kernel

    u(x, y) = K(x-y) gv(x).gv(y) + (gv(x) - gv(y)).grad K(x-y) - lap K(x-y).
    """
    out = np.empty(len(x))
    rows = _stein_rows_1d if x.shape[1] == 1 else _stein_rows
    for b in _blocks(len(x), len(x)):
        rows(kernel_block(x[b], x, s, norm), x[b], x, w[b], w, gv[b], gv, s, out[b])
    return out


def weighted_gram_rows(x, w, gv, s, norm):
    """w_i sum_j w_j K(x_i - x_j) gv_i.gv_j."""
    out = np.empty(len(x))
    for b in _blocks(len(x), len(x)):
        _gram_rows(kernel_block(x[b], x, s, norm), w[b], w, gv[b], gv, out[b])
    return out


def kernel_rows(x, y, w, s, norm):
    """sum_j w_j K(x_i - y_j)."""
    out = np.empty(len(x))
    for b in _blocks(len(x), len(y)):
        _plain_rows(kernel_block(x[b], y, s, norm), w, out[b])
    return out


def as_points(x, d=None):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if d is not None and x.shape[1] != d:
        raise ValueError(f"expected points of dimension {d}, got shape {x.shape}")
    return np.ascontiguousarray(x)


def fixed_sum(a) -> float:
    """Sequential left-to-right sum; keeps reductions order-stable."""
    a = np.asarray(a, dtype=float)
    return float(np.add.accumulate(a)[-1]) if a.size else 0.0
