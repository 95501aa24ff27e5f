"""Pure-numpy kernel implementations (no JIT)."""
from __future__ import annotations

import numpy as np

NAME = "numpy"
_LOG_2PI = np.log(2.0 * np.pi)


def _normals(u):
    return np.sqrt(-2.0 * np.log1p(-u[0::2])) * np.cos(2.0 * np.pi * u[1::2])


def discrete_chain(cdf, eps, xt0, u):
    """Table model + uniform-flip corruption; ``u`` has 3 columns per step."""
    K = cdf.shape[0]
    n = u.shape[0]
    xs = np.empty(n, dtype=np.int64)
    xts = np.empty(n, dtype=np.int64)
    xt = int(xt0)
    for t in range(n):
        row = cdf[xt]
        x = int(np.searchsorted(row, u[t, 0] * row[-1], side="right"))
        if u[t, 1] < eps:
            xt = min(int(u[t, 2] * K), K - 1)
        else:
            xt = x
        xs[t] = x
        xts[t] = xt
    return xs, xts


def parzen_weights(xt, axt, sigma_c):
    lw = -0.5 * np.sum((axt - xt) ** 2, axis=-1) / sigma_c**2
    return lw - lw.max(axis=-1, keepdims=True)


def parzen_chain(ax, axt, sigma_x, sigma_c, sigma, xt0, u):
    """Parzen conditional + Gaussian corruption; ``u`` has ``1 + 4 d`` columns per step."""
    n = u.shape[0]
    d = ax.shape[1]
    xs = np.empty((n, d))
    xts = np.empty((n, d))
    xt = np.array(xt0, dtype=np.float64)
    for t in range(n):
        cdf = np.cumsum(np.exp(parzen_weights(xt, axt, sigma_c)))
        i = int(np.searchsorted(cdf, u[t, 0] * cdf[-1], side="right"))
        x = ax[i] + sigma_x * _normals(u[t, 1:1 + 2 * d])
        xt = x + sigma * _normals(u[t, 1 + 2 * d:])
        xs[t] = x
        xts[t] = xt
    return xs, xts


def _lse_rows(a):
    m = a.max(axis=-1, keepdims=True)
    return (np.log(np.exp(a - m).sum(axis=-1, keepdims=True)) + m)[..., 0]


def _sqdist(A, B, chunk=256):
    # explicit differences: the |a|^2 + |b|^2 - 2ab expansion loses precision
    out = np.empty((A.shape[0], B.shape[0]))
    for s in range(0, A.shape[0], chunk):
        out[s:s + chunk] = ((A[s:s + chunk, None, :] - B[None, :, :]) ** 2).sum(-1)
    return out


def _gauss_log(X, ax, sigma_x):
    d = ax.shape[1]
    return -0.5 * _sqdist(X, ax) / sigma_x**2 - d * (np.log(sigma_x) + 0.5 * _LOG_2PI)


def _log_weights(XT, axt, sigma_c):
    lw = -0.5 * _sqdist(XT, axt) / sigma_c**2
    return lw - _lse_rows(lw)[:, None]


def parzen_log_prob_rows(X, XT, ax, axt, sigma_x, sigma_c):
    """``log P(X[r] | XT[r])`` for each row r."""
    return _lse_rows(_gauss_log(X, ax, sigma_x) + _log_weights(XT, axt, sigma_c))


def parzen_log_prob_matrix(X, XT, ax, axt, sigma_x, sigma_c, chunk=64):
    """``out[a, b] = log P(X[a] | XT[b])``."""
    G = _gauss_log(X, ax, sigma_x)
    LW = _log_weights(XT, axt, sigma_c)
    out = np.empty((X.shape[0], XT.shape[0]))
    for s in range(0, XT.shape[0], chunk):
        out[:, s:s + chunk] = _lse_rows(G[:, None, :] + LW[None, s:s + chunk, :])
    return out


def power_iteration(T, tol, max_iter):
    """Iterate ``v <- T v`` from uniform until successive TV < tol."""
    K = T.shape[0]
    v = np.full(K, 1.0 / K)
    for it in range(1, max_iter + 1):
        w = T @ v
        w /= w.sum()
        tv = 0.5 * np.abs(w - v).sum()
        v = w
        if tv < tol:
            return v, it
    return v, -1


def discrete_walkback(cdf, eps, x0s, p, max_steps, fixed_steps, u):
    """Walkback rollouts for a table model + uniform-flip corruption.

    Returns ``(lengths, flat x_tilde list, uniforms consumed)``.
    """
    K = cdf.shape[0]
    lengths = np.empty(len(x0s), dtype=np.int64)
    out = []
    pos = 0
    for r, x0 in enumerate(x0s):
        xstar = int(x0)
        n = 0
        while True:
            if u[pos] < eps:
                xt = min(int(u[pos + 1] * K), K - 1)
            else:
                xt = xstar
            pos += 2
            n += 1
            out.append(xt)
            if fixed_steps > 0:
                if n >= fixed_steps:
                    break
            else:
                stop = u[pos] > p
                pos += 1
                if stop or n >= max_steps:
                    break
            row = cdf[xt]
            xstar = int(np.searchsorted(row, u[pos] * row[-1], side="right"))
            pos += 1
        lengths[r] = n
    return lengths, np.array(out, dtype=np.int64), pos
