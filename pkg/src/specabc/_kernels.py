"""Compiled inner loops for the trajectory generators.

One kernel per scheme, all shaped the same way: take the initial state, the
precomputed per-step coefficients, a (n_total, k) block of standard normals
and the burn-in length, iterate, and return the recorded post-burn-in states
plus the step index of the first non-finite state (-1 if none). Recorded rows
from the overflow step onward are NaN; callers turn the index into a flag.

The linear step in run_linear and run_strang_ode is kept textually identical
so that with a vanishing forcing both kernels execute the same float ops and
produce bitwise-equal paths from the same normals.
"""

import numpy as np
from numba import njit

from .models import G_NEURAL_MASS, G_SINE


@njit(cache=True)
def _sigm(x, vmax, v0, r):
    arg = r * (v0 - x)
    if arg > 700.0:
        arg = 700.0
    return vmax / (1.0 + np.exp(arg))


@njit(cache=True)
def _fill_g(g_kind, gp, q, g):
    if g_kind == G_SINE:
        g[0] = gp[0] * np.sin(q[0])
    elif g_kind == G_NEURAL_MASS:
        # gp = (Aa, Bb, mu, C1, C2, C3, C4, vmax, v0, r)
        g[0] = gp[0] * _sigm(q[1] - q[2], gp[7], gp[8], gp[9])
        g[1] = gp[0] * (gp[2] + gp[4] * _sigm(gp[3] * q[0], gp[7], gp[8], gp[9]))
        g[2] = gp[1] * gp[6] * _sigm(gp[5] * q[0], gp[7], gp[8], gp[9])
    else:
        for j in range(g.shape[0]):
            g[j] = 0.0


@njit(cache=True)
def run_linear(x0, prop, chol, normals, n_burn):
    n_total = normals.shape[0]
    dim = x0.shape[0]
    n_rec = n_total - n_burn
    out = np.empty((n_rec, dim))
    x = x0.copy()
    xn = np.empty(dim)
    overflow_at = -1
    for i in range(n_total):
        for r in range(dim):
            acc = 0.0
            for c in range(dim):
                acc += prop[r, c] * x[c]
            # chol is lower triangular
            for c in range(r + 1):
                acc += chol[r, c] * normals[i, c]
            xn[r] = acc
        ok = True
        for r in range(dim):
            x[r] = xn[r]
            if not np.isfinite(xn[r]):
                ok = False
        if i >= n_burn:
            for r in range(dim):
                out[i - n_burn, r] = x[r]
        if not ok:
            overflow_at = i
            break
    if overflow_at >= 0:
        start = overflow_at - n_burn
        if start < 0:
            start = 0
        for k in range(start, n_rec):
            for r in range(dim):
                out[k, r] = np.nan
    return out, overflow_at


@njit(cache=True)
def run_strang_ode(x0, prop, chol, normals, n_burn, dt, g_kind, gp):
    n_total = normals.shape[0]
    dim = x0.shape[0]
    d = dim // 2
    half_dt = 0.5 * dt
    n_rec = n_total - n_burn
    out = np.empty((n_rec, dim))
    x = x0.copy()
    xn = np.empty(dim)
    g = np.empty(d)
    overflow_at = -1
    for i in range(n_total):
        _fill_g(g_kind, gp, x[:d], g)
        for j in range(d):
            x[d + j] += half_dt * g[j]
        for r in range(dim):
            acc = 0.0
            for c in range(dim):
                acc += prop[r, c] * x[c]
            # chol is lower triangular
            for c in range(r + 1):
                acc += chol[r, c] * normals[i, c]
            xn[r] = acc
        ok = True
        for r in range(dim):
            x[r] = xn[r]
            if not np.isfinite(xn[r]):
                ok = False
        _fill_g(g_kind, gp, x[:d], g)
        for j in range(d):
            x[d + j] += half_dt * g[j]
            if not np.isfinite(x[d + j]):
                ok = False
        if i >= n_burn:
            for r in range(dim):
                out[i - n_burn, r] = x[r]
        if not ok:
            overflow_at = i
            break
    if overflow_at >= 0:
        start = overflow_at - n_burn
        if start < 0:
            start = 0
        for k in range(start, n_rec):
            for r in range(dim):
                out[k, r] = np.nan
    return out, overflow_at


@njit(cache=True)
def run_strang_sde(x0, half_prop, sig, normals, n_burn, dt, g_kind, gp):
    n_total = normals.shape[0]
    dim = x0.shape[0]
    d = dim // 2
    sqrt_dt = np.sqrt(dt)
    n_rec = n_total - n_burn
    out = np.empty((n_rec, dim))
    x = x0.copy()
    xn = np.empty(dim)
    g = np.empty(d)
    overflow_at = -1
    for i in range(n_total):
        for r in range(dim):
            acc = 0.0
            for c in range(dim):
                acc += half_prop[r, c] * x[c]
            xn[r] = acc
        for r in range(dim):
            x[r] = xn[r]
        _fill_g(g_kind, gp, x[:d], g)
        for j in range(d):
            x[d + j] += dt * g[j] + sig[j] * sqrt_dt * normals[i, j]
        for r in range(dim):
            acc = 0.0
            for c in range(dim):
                acc += half_prop[r, c] * x[c]
            xn[r] = acc
        ok = True
        for r in range(dim):
            x[r] = xn[r]
            if not np.isfinite(xn[r]):
                ok = False
        if i >= n_burn:
            for r in range(dim):
                out[i - n_burn, r] = x[r]
        if not ok:
            overflow_at = i
            break
    if overflow_at >= 0:
        start = overflow_at - n_burn
        if start < 0:
            start = 0
        for k in range(start, n_rec):
            for r in range(dim):
                out[k, r] = np.nan
    return out, overflow_at


@njit(cache=True)
def run_euler(x0, lam, gam, sig, normals, n_burn, dt, g_kind, gp):
    n_total = normals.shape[0]
    dim = x0.shape[0]
    d = dim // 2
    sqrt_dt = np.sqrt(dt)
    n_rec = n_total - n_burn
    out = np.empty((n_rec, dim))
    x = x0.copy()
    xn = np.empty(dim)
    g = np.empty(d)
    overflow_at = -1
    for i in range(n_total):
        _fill_g(g_kind, gp, x[:d], g)
        for j in range(d):
            xn[j] = x[j] + dt * x[d + j]
            xn[d + j] = (
                x[d + j]
                + dt * (-(lam[j] * lam[j]) * x[j] - 2.0 * gam[j] * x[d + j] + g[j])
                + sig[j] * sqrt_dt * normals[i, j]
            )
        ok = True
        for r in range(dim):
            x[r] = xn[r]
            if not np.isfinite(xn[r]):
                ok = False
        if i >= n_burn:
            for r in range(dim):
                out[i - n_burn, r] = x[r]
        if not ok:
            overflow_at = i
            break
    if overflow_at >= 0:
        start = overflow_at - n_burn
        if start < 0:
            start = 0
        for k in range(start, n_rec):
            for r in range(dim):
                out[k, r] = np.nan
    return out, overflow_at
