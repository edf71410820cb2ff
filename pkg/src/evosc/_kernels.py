"""Hot numeric kernels, each with a numba and a pure-numpy implementation.

Public wrappers (``bin_counts``, ``window_counts``, ``dft_onesided``,
``conv1d_forward``, ``conv1d_backward``) dispatch on
:func:`evosc.backend.active_backend` at call time. Both paths compute the
same quantities; integer kernels agree exactly, float kernels to rounding.
"""

import numpy as np

from . import backend

if backend.HAVE_NUMBA:
    from numba import njit
else:  # pragma: no cover - exercised only without numba

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        if args and callable(args[0]):
            return args[0]
        return wrap


# ---------------------------------------------------------------------------
# per-bin polarity counts of one event window


@njit(cache=True)
def _bin_counts_numba(rel_us, pol, dt_us, n_bins):
    on = np.zeros(n_bins, np.int64)
    off = np.zeros(n_bins, np.int64)
    for i in range(rel_us.shape[0]):
        k = rel_us[i] // dt_us
        if pol[i] > 0:
            on[k] += 1
        else:
            off[k] += 1
    return on, off


def _bin_counts_np(rel_us, pol, dt_us, n_bins):
    k = rel_us // dt_us
    on = np.bincount(k[pol > 0], minlength=n_bins).astype(np.int64)
    off = np.bincount(k[pol < 0], minlength=n_bins).astype(np.int64)
    return on, off


def bin_counts(rel_us, pol, dt_us, n_bins):
    """ON/OFF counts per bin for event offsets ``rel_us`` in [0, n_bins*dt_us)."""
    rel_us = np.ascontiguousarray(rel_us, dtype=np.int64)
    pol = np.ascontiguousarray(pol, dtype=np.int8)
    if backend.use_numba():
        return _bin_counts_numba(rel_us, pol, np.int64(dt_us), n_bins)
    return _bin_counts_np(rel_us, pol, np.int64(dt_us), n_bins)


# ---------------------------------------------------------------------------
# per-bin polarity counts for many sliding windows of one stream


@njit(cache=True)
def _window_counts_numba(t, pol, starts, dt_us, n_bins):
    n_win = starts.shape[0]
    span = dt_us * n_bins
    on = np.zeros((n_win, n_bins), np.int64)
    off = np.zeros((n_win, n_bins), np.int64)
    for w in range(n_win):
        lo = np.searchsorted(t, starts[w])
        hi = np.searchsorted(t, starts[w] + span)
        for i in range(lo, hi):
            k = (t[i] - starts[w]) // dt_us
            if pol[i] > 0:
                on[w, k] += 1
            else:
                off[w, k] += 1
    return on, off


def _window_counts_np(t, pol, starts, dt_us, n_bins):
    n_win = starts.shape[0]
    span = dt_us * n_bins
    on = np.zeros((n_win, n_bins), np.int64)
    off = np.zeros((n_win, n_bins), np.int64)
    lo = np.searchsorted(t, starts)
    hi = np.searchsorted(t, starts + span)
    for w in range(n_win):
        sl = slice(lo[w], hi[w])
        k = (t[sl] - starts[w]) // dt_us
        p = pol[sl]
        on[w] = np.bincount(k[p > 0], minlength=n_bins)
        off[w] = np.bincount(k[p < 0], minlength=n_bins)
    return on, off


def window_counts(t, pol, starts, dt_us, n_bins):
    """ON/OFF count matrices (n_windows, n_bins) for windows starting at ``starts``.

    ``t`` must be sorted; every window [start, start + n_bins*dt_us) is binned
    independently, so overlapping windows are fine.
    """
    t = np.ascontiguousarray(t, dtype=np.int64)
    pol = np.ascontiguousarray(pol, dtype=np.int8)
    starts = np.ascontiguousarray(starts, dtype=np.int64)
    if backend.use_numba():
        return _window_counts_numba(t, pol, starts, np.int64(dt_us), n_bins)
    return _window_counts_np(t, pol, starts, np.int64(dt_us), n_bins)


# ---------------------------------------------------------------------------
# direct O(n^2) one-sided DFT (the correctness oracle for the fast transform)


@njit(cache=True)
def _dft_onesided_numba(x):
    n = x.shape[0]
    n_out = n // 2 + 1
    out = np.empty(n_out, np.complex128)
    for j in range(n_out):
        w = -2.0 * np.pi * j / n
        re = 0.0
        im = 0.0
        for k in range(n):
            a = w * k
            re += x[k] * np.cos(a)
            im += x[k] * np.sin(a)
        out[j] = complex(re, im)
    return out


def _dft_onesided_np(x):
    n = x.shape[0]
    n_out = n // 2 + 1
    out = np.empty(n_out, np.complex128)
    k = np.arange(n)
    # row-blocked to keep the (j, k) phase matrix small for long inputs
    block = 512
    for j0 in range(0, n_out, block):
        j = np.arange(j0, min(j0 + block, n_out))
        ang = (-2.0 * np.pi / n) * np.outer(j, k)
        out[j] = (np.cos(ang) + 1j * np.sin(ang)) @ x
    return out


def dft_onesided(x):
    """One-sided DFT bins f = 0 .. floor(n/2) of a real sequence, by direct sum."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if backend.use_numba():
        return _dft_onesided_numba(x)
    return _dft_onesided_np(x)


# ---------------------------------------------------------------------------
# strided 1-D convolution used by the conv1d classifier


@njit(cache=True)
def _conv1d_fwd_numba(x, w, b, stride):
    n_b, c_in, l_in = x.shape
    c_out, _, k_len = w.shape
    l_out = (l_in - k_len) // stride + 1
    y = np.empty((n_b, c_out, l_out))
    for n in range(n_b):
        for co in range(c_out):
            for t in range(l_out):
                base = t * stride
                s = b[co]
                for ci in range(c_in):
                    for k in range(k_len):
                        s += w[co, ci, k] * x[n, ci, base + k]
                y[n, co, t] = s
    return y


def _patches(x, k_len, stride, l_out):
    idx = np.arange(l_out)[:, None] * stride + np.arange(k_len)[None, :]
    return x[:, :, idx]  # (B, C_in, L_out, K)


def _conv1d_fwd_np(x, w, b, stride):
    c_out, _, k_len = w.shape
    l_out = (x.shape[2] - k_len) // stride + 1
    patches = _patches(x, k_len, stride, l_out)
    return np.einsum("bctk,ock->bot", patches, w) + b[None, :, None]


@njit(cache=True)
def _conv1d_bwd_numba(x, w, dy, stride):
    n_b, c_in, l_in = x.shape
    c_out, _, k_len = w.shape
    l_out = dy.shape[2]
    dx = np.zeros((n_b, c_in, l_in))
    dw = np.zeros((c_out, c_in, k_len))
    db = np.zeros(c_out)
    for n in range(n_b):
        for co in range(c_out):
            for t in range(l_out):
                g = dy[n, co, t]
                db[co] += g
                base = t * stride
                for ci in range(c_in):
                    for k in range(k_len):
                        dw[co, ci, k] += g * x[n, ci, base + k]
                        dx[n, ci, base + k] += g * w[co, ci, k]
    return dx, dw, db


def _conv1d_bwd_np(x, w, dy, stride):
    c_out, _, k_len = w.shape
    l_out = dy.shape[2]
    patches = _patches(x, k_len, stride, l_out)
    dw = np.einsum("bot,bctk->ock", dy, patches)
    db = dy.sum(axis=(0, 2))
    dpatch = np.einsum("bot,ock->bctk", dy, w)
    dx = np.zeros_like(x)
    for k in range(k_len):
        dx[:, :, k : k + stride * l_out : stride] += dpatch[:, :, :, k]
    return dx, dw, db


def conv1d_forward(x, w, b, stride):
    """Valid strided conv of x (B, C_in, L) with kernels w (C_out, C_in, K)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if backend.use_numba():
        return _conv1d_fwd_numba(x, w, b, stride)
    return _conv1d_fwd_np(x, w, b, stride)


def conv1d_backward(x, w, dy, stride):
    """Gradients (dx, dw, db) of the strided conv given upstream dy."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    dy = np.ascontiguousarray(dy, dtype=np.float64)
    if backend.use_numba():
        return _conv1d_bwd_numba(x, w, dy, stride)
    return _conv1d_bwd_np(x, w, dy, stride)
