"""numba @njit kernel implementations.

Same signatures and uniform-consumption layout as ``_numpy``.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

NAME = "numba"
_LOG_2PI = math.log(2.0 * math.pi)


@njit(cache=True, inline="always")
def _search(row, v):
    # first i with row[i] > v (searchsorted side="right")
    lo, hi = 0, row.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        if row[mid] > v:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True, inline="always")
def _normal(u1, u2):
    return math.sqrt(-2.0 * math.log1p(-u1)) * math.cos(2.0 * math.pi * u2)


@njit(cache=True)
def discrete_chain(cdf, eps, xt0, u):
    K = cdf.shape[0]
    n = u.shape[0]
    xs = np.empty(n, dtype=np.int64)
    xts = np.empty(n, dtype=np.int64)
    xt = xt0
    for t in range(n):
        x = _search(cdf[xt], u[t, 0] * cdf[xt, K - 1])
        if u[t, 1] < eps:
            xt = min(int(u[t, 2] * K), K - 1)
        else:
            xt = x
        xs[t] = x
        xts[t] = xt
    return xs, xts


@njit(cache=True)
def parzen_chain(ax, axt, sigma_x, sigma_c, sigma, xt0, u):
    n = u.shape[0]
    m, d = ax.shape
    xs = np.empty((n, d))
    xts = np.empty((n, d))
    xt = xt0.copy()
    lw = np.empty(m)
    cdf = np.empty(m)
    scale = 0.5 / (sigma_c * sigma_c)
    for t in range(n):
        top = -np.inf
        for i in range(m):
            s = 0.0
            for j in range(d):
                diff = axt[i, j] - xt[j]
                s += diff * diff
            lw[i] = -s * scale
            if lw[i] > top:
                top = lw[i]
        acc = 0.0
        for i in range(m):
            acc += math.exp(lw[i] - top)
            cdf[i] = acc
        k = _search(cdf, u[t, 0] * acc)
        for j in range(d):
            xs[t, j] = ax[k, j] + sigma_x * _normal(u[t, 1 + 2 * j], u[t, 2 + 2 * j])
        off = 1 + 2 * d
        for j in range(d):
            xt[j] = xs[t, j] + sigma * _normal(u[t, off + 2 * j], u[t, off + 1 + 2 * j])
            xts[t, j] = xt[j]
    return xs, xts


@njit(cache=True)
def _log_weights(xt, axt, sigma_c, out):
    m, d = axt.shape
    top = -np.inf
    for i in range(m):
        s = 0.0
        for j in range(d):
            diff = axt[i, j] - xt[j]
            s += diff * diff
        out[i] = -0.5 * s / (sigma_c * sigma_c)
        if out[i] > top:
            top = out[i]
    acc = 0.0
    for i in range(m):
        acc += math.exp(out[i] - top)
    norm = top + math.log(acc)
    for i in range(m):
        out[i] -= norm


@njit(cache=True)
def _mixture_log(x, ax, lw, sigma_x):
    m, d = ax.shape
    const = d * (math.log(sigma_x) + 0.5 * _LOG_2PI)
    top = -np.inf
    terms = np.empty(m)
    for i in range(m):
        s = 0.0
        for j in range(d):
            diff = x[j] - ax[i, j]
            s += diff * diff
        terms[i] = lw[i] - 0.5 * s / (sigma_x * sigma_x) - const
        if terms[i] > top:
            top = terms[i]
    if top == -np.inf:
        return top
    acc = 0.0
    for i in range(m):
        acc += math.exp(terms[i] - top)
    return top + math.log(acc)


@njit(cache=True)
def parzen_log_prob_rows(X, XT, ax, axt, sigma_x, sigma_c):
    n = X.shape[0]
    out = np.empty(n)
    lw = np.empty(ax.shape[0])
    for r in range(n):
        _log_weights(XT[r], axt, sigma_c, lw)
        out[r] = _mixture_log(X[r], ax, lw, sigma_x)
    return out


@njit(cache=True)
def parzen_log_prob_matrix(X, XT, ax, axt, sigma_x, sigma_c):
    a = X.shape[0]
    b = XT.shape[0]
    out = np.empty((a, b))
    lw = np.empty(ax.shape[0])
    for c in range(b):
        _log_weights(XT[c], axt, sigma_c, lw)
        for r in range(a):
            out[r, c] = _mixture_log(X[r], ax, lw, sigma_x)
    return out


@njit(cache=True)
def power_iteration(T, tol, max_iter):
    K = T.shape[0]
    v = np.full(K, 1.0 / K)
    w = np.empty(K)
    for it in range(1, max_iter + 1):
        total = 0.0
        for i in range(K):
            s = 0.0
            for j in range(K):
                s += T[i, j] * v[j]
            w[i] = s
            total += s
        tv = 0.0
        for i in range(K):
            w[i] /= total
            tv += abs(w[i] - v[i])
            v[i] = w[i]
        if 0.5 * tv < tol:
            return v, it
    return v, -1


@njit(cache=True)
def discrete_walkback(cdf, eps, x0s, p, max_steps, fixed_steps, u):
    K = cdf.shape[0]
    R = x0s.shape[0]
    lengths = np.empty(R, dtype=np.int64)
    cap = R * (fixed_steps if fixed_steps > 0 else max_steps)
    out = np.empty(cap, dtype=np.int64)
    pos = 0
    k = 0
    for r in range(R):
        xstar = x0s[r]
        n = 0
        while True:
            if u[pos] < eps:
                xt = min(int(u[pos + 1] * K), K - 1)
            else:
                xt = xstar
            pos += 2
            n += 1
            out[k] = xt
            k += 1
            if fixed_steps > 0:
                if n >= fixed_steps:
                    break
            else:
                stop = u[pos] > p
                pos += 1
                if stop or n >= max_steps:
                    break
            xstar = _search(cdf[xt], u[pos] * cdf[xt, K - 1])
            pos += 1
        lengths[r] = n
    return lengths, out[:k], pos
