"""Hot numeric kernels with two interchangeable backends.

Every kernel exists twice: a numba ``@njit`` loop version and a vectorized
pure-numpy version. The active backend is chosen at import time — numba when
available, unless ``CHARTREC_NUMBA=0`` forces the numpy path. Both variants
are exported (``numba_kernels`` / ``numpy_kernels``) so the benchmark suite
and the numerical-agreement tests can compare them directly.

Gate layout for the GRU kernels is ``[reset | update | candidate]`` along the
last axis of the ``(B, 3H)`` pre-activation matrices.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

_ENV_FLAG = os.environ.get("CHARTREC_NUMBA", "1")

try:
    from numba import njit

    _NUMBA_OK = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _NUMBA_OK = False

USE_NUMBA = _NUMBA_OK and _ENV_FLAG != "0"


# ---------------------------------------------------------------------------
# loop implementations (numba targets)
# ---------------------------------------------------------------------------


def _gru_cell_fwd_loops(gi, gh, h):
    B, H = h.shape
    h_new = np.empty_like(h)
    r = np.empty_like(h)
    u = np.empty_like(h)
    n = np.empty_like(h)
    for b in range(B):
        for j in range(H):
            rr = 1.0 / (1.0 + np.exp(-(gi[b, j] + gh[b, j])))
            uu = 1.0 / (1.0 + np.exp(-(gi[b, H + j] + gh[b, H + j])))
            nn = np.tanh(gi[b, 2 * H + j] + rr * gh[b, 2 * H + j])
            r[b, j] = rr
            u[b, j] = uu
            n[b, j] = nn
            h_new[b, j] = (1.0 - uu) * nn + uu * h[b, j]
    return h_new, r, u, n


def _gru_cell_bwd_loops(d_out, r, u, n, h, gh_n):
    B, H = h.shape
    dgi = np.empty((B, 3 * H), dtype=h.dtype)
    dgh = np.empty((B, 3 * H), dtype=h.dtype)
    dh = np.empty_like(h)
    for b in range(B):
        for j in range(H):
            g = d_out[b, j]
            dn = g * (1.0 - u[b, j])
            du = g * (h[b, j] - n[b, j])
            da_n = dn * (1.0 - n[b, j] * n[b, j])
            dr = da_n * gh_n[b, j]
            da_r = dr * r[b, j] * (1.0 - r[b, j])
            da_u = du * u[b, j] * (1.0 - u[b, j])
            dgi[b, j] = da_r
            dgi[b, H + j] = da_u
            dgi[b, 2 * H + j] = da_n
            dgh[b, j] = da_r
            dgh[b, H + j] = da_u
            dgh[b, 2 * H + j] = da_n * r[b, j]
            dh[b, j] = g * u[b, j]
    return dgi, dgh, dh


def _adamw_update_loops(p, g, m, v, lr, beta1, beta2, eps, weight_decay, bc1, bc2):
    for i in range(p.shape[0]):
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i]
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i]
        m_hat = m[i] / bc1
        v_hat = v[i] / bc2
        p[i] -= lr * (m_hat / (np.sqrt(v_hat) + eps) + weight_decay * p[i])


def _monotonic_conf_loops(xs):
    n = xs.shape[0]
    if n < 2:
        return 0.0, 0.0
    inc = 0
    dec = 0
    for i in range(n - 1):
        if xs[i + 1] >= xs[i]:
            inc += 1
        if xs[i + 1] <= xs[i]:
            dec += 1
    return inc / (n - 1.0), dec / (n - 1.0)


def _progression_conf_loops(xs):
    n = xs.shape[0]
    if n < 3:
        return 0.0, 0.0
    diffs = np.empty(n - 1, dtype=xs.dtype)
    for i in range(n - 1):
        diffs[i] = xs[i + 1] - xs[i]
    med_d = np.median(diffs)
    tol_d = 1e-9 + 1e-6 * abs(med_d)
    ap_hits = 0
    for i in range(n - 1):
        if abs(diffs[i] - med_d) <= tol_d:
            ap_hits += 1
    ap = ap_hits / (n - 1.0)

    gp = 0.0
    ok = True
    for i in range(n):
        if xs[i] == 0.0:
            ok = False
            break
    if ok:
        ratios = np.empty(n - 1, dtype=xs.dtype)
        for i in range(n - 1):
            ratios[i] = xs[i + 1] / xs[i]
        med_r = np.median(ratios)
        tol_r = 1e-9 + 1e-6 * abs(med_r)
        gp_hits = 0
        for i in range(n - 1):
            if abs(ratios[i] - med_r) <= tol_r:
                gp_hits += 1
        gp = gp_hits / (n - 1.0)
    return ap, gp


def _gini_sorted_loops(xs):
    # xs must be sorted ascending; Gini via the rank formula.
    n = xs.shape[0]
    if n == 0:
        return 0.0
    total = 0.0
    weighted = 0.0
    for i in range(n):
        total += xs[i]
        weighted += (2.0 * (i + 1) - n - 1.0) * xs[i]
    if total <= 0.0:
        return 0.0
    g = weighted / (n * total)
    if g < 0.0:
        return 0.0
    if g > 1.0:
        return 1.0
    return g


def _benford_deviation_loops(xs):
    counts = np.zeros(9, dtype=np.float64)
    total = 0
    for i in range(xs.shape[0]):
        x = abs(xs[i])
        if x <= 0.0 or not np.isfinite(x):
            continue
        while x < 1.0:
            x *= 10.0
        while x >= 10.0:
            x /= 10.0
        counts[int(x) - 1] += 1.0
        total += 1
    if total == 0:
        return 0.0
    dev = 0.0
    for d in range(9):
        expected = np.log10(1.0 + 1.0 / (d + 1))
        dev += abs(counts[d] / total - expected)
    return 0.5 * dev


# ---------------------------------------------------------------------------
# vectorized numpy implementations
# ---------------------------------------------------------------------------


def _gru_cell_fwd_numpy(gi, gh, h):
    H = h.shape[1]
    r = 1.0 / (1.0 + np.exp(-(gi[:, :H] + gh[:, :H])))
    u = 1.0 / (1.0 + np.exp(-(gi[:, H : 2 * H] + gh[:, H : 2 * H])))
    n = np.tanh(gi[:, 2 * H :] + r * gh[:, 2 * H :])
    h_new = (1.0 - u) * n + u * h
    return h_new, r, u, n


def _gru_cell_bwd_numpy(d_out, r, u, n, h, gh_n):
    dn = d_out * (1.0 - u)
    du = d_out * (h - n)
    da_n = dn * (1.0 - n * n)
    dr = da_n * gh_n
    da_r = dr * r * (1.0 - r)
    da_u = du * u * (1.0 - u)
    dgi = np.concatenate([da_r, da_u, da_n], axis=1)
    dgh = np.concatenate([da_r, da_u, da_n * r], axis=1)
    dh = d_out * u
    return dgi, dgh, dh


def _adamw_update_numpy(p, g, m, v, lr, beta1, beta2, eps, weight_decay, bc1, bc2):
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    p -= lr * ((m / bc1) / (np.sqrt(v / bc2) + eps) + weight_decay * p)


def _monotonic_conf_numpy(xs):
    n = xs.shape[0]
    if n < 2:
        return 0.0, 0.0
    d = np.diff(xs)
    return float(np.mean(d >= 0)), float(np.mean(d <= 0))


def _progression_conf_numpy(xs):
    n = xs.shape[0]
    if n < 3:
        return 0.0, 0.0
    diffs = np.diff(xs)
    med_d = np.median(diffs)
    ap = float(np.mean(np.abs(diffs - med_d) <= 1e-9 + 1e-6 * abs(med_d)))
    gp = 0.0
    if np.all(xs != 0.0):
        ratios = xs[1:] / xs[:-1]
        med_r = np.median(ratios)
        gp = float(np.mean(np.abs(ratios - med_r) <= 1e-9 + 1e-6 * abs(med_r)))
    return ap, gp


def _gini_sorted_numpy(xs):
    n = xs.shape[0]
    if n == 0:
        return 0.0
    total = float(xs.sum())
    if total <= 0.0:
        return 0.0
    idx = np.arange(1, n + 1, dtype=np.float64)
    g = float(((2.0 * idx - n - 1.0) * xs).sum() / (n * total))
    return float(min(max(g, 0.0), 1.0))


_BENFORD = np.log10(1.0 + 1.0 / np.arange(1, 10))


def _benford_deviation_numpy(xs):
    x = np.abs(xs[np.isfinite(xs) & (xs != 0.0)])
    x = x[x > 0.0]
    if x.size == 0:
        return 0.0
    digits = (x / 10.0 ** np.floor(np.log10(x))).astype(np.int64)
    digits = np.clip(digits, 1, 9)
    counts = np.bincount(digits - 1, minlength=9).astype(np.float64)
    return float(0.5 * np.abs(counts / counts.sum() - _BENFORD).sum())


def _make_numba_namespace():
    jit = lambda f: njit(cache=True, fastmath=False)(f)  # noqa: E731
    return SimpleNamespace(
        name="numba",
        gru_cell_fwd=jit(_gru_cell_fwd_loops),
        gru_cell_bwd=jit(_gru_cell_bwd_loops),
        adamw_update=jit(_adamw_update_loops),
        monotonic_conf=jit(_monotonic_conf_loops),
        progression_conf=jit(_progression_conf_loops),
        gini_sorted=jit(_gini_sorted_loops),
        benford_deviation=jit(_benford_deviation_loops),
    )


numpy_kernels = SimpleNamespace(
    name="numpy",
    gru_cell_fwd=_gru_cell_fwd_numpy,
    gru_cell_bwd=_gru_cell_bwd_numpy,
    adamw_update=_adamw_update_numpy,
    monotonic_conf=_monotonic_conf_numpy,
    progression_conf=_progression_conf_numpy,
    gini_sorted=_gini_sorted_numpy,
    benford_deviation=_benford_deviation_numpy,
)

numba_kernels = _make_numba_namespace() if _NUMBA_OK else None

kernels = numba_kernels if USE_NUMBA else numpy_kernels


def backend_name() -> str:
    return kernels.name
