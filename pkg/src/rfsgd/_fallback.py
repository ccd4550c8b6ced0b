"""Pure numpy versions of the compiled kernels in ``_core.pyx``.

Used when the extension is not built, or when ``RFSGD_BACKEND=python``.
"""
import numpy as np


def _dloss(code, z, y):
    u = z * y
    if code == 0:
        if u > 0:
            e = np.exp(-u)
            return -y * (e / (1.0 + e))
        return -y * (1.0 / (1.0 + np.exp(u)))
    return -y if u < 1.0 else 0.0


def rff_sgd_path(W, X, y, beta, betabar, t0, lam, gamma, loss_code, snaps):
    P = W.shape[0]
    M = 2 * P
    scale = 1.0 / np.sqrt(P)
    out = np.zeros((len(snaps), M))
    s_idx = 0
    while s_idx < len(snaps) and snaps[s_idx] == t0:
        out[s_idx] = betabar
        s_idx += 1
    proj_all = X @ W.T
    phi = np.empty(M)
    for i in range(X.shape[0]):
        t = float(t0 + i + 1)
        phi[0::2] = np.cos(proj_all[i]) * scale
        phi[1::2] = np.sin(proj_all[i]) * scale
        g = _dloss(loss_code, float(beta @ phi), y[i])
        eta = 2.0 / (lam * (gamma + t))
        theta = 2.0 * (gamma + t) / ((t + 1.0) * (2.0 * gamma + t))
        beta -= eta * (g * phi + lam * beta)
        betabar *= 1.0 - theta
        betabar += theta * beta
        if not np.isfinite(beta @ beta):
            raise FloatingPointError(
                f"non-finite weights after iteration {t0 + i + 1} (eta={eta:.6g}, dloss={g:.6g})")
        while s_idx < len(snaps) and snaps[s_idx] == t0 + i + 1:
            out[s_idx] = betabar
            s_idx += 1
    return out


def _kernel_row(kernel_code, X, i, sigma, W):
    diff = X[:i] - X[i]
    if kernel_code == 0:
        return np.exp(-np.einsum("ij,ij->i", diff, diff) / (2.0 * sigma * sigma))
    return np.cos(diff @ W.T).mean(axis=1)


def kernel_sgd_path(X, y, lam, gamma, loss_code, kernel_code, sigma, W, snaps):
    T = X.shape[0]
    c = np.zeros(T)
    cbar = np.zeros(T)
    out = np.zeros((len(snaps), T))
    s_idx = 0
    while s_idx < len(snaps) and snaps[s_idx] == 0:
        s_idx += 1
    for i in range(T):
        t = float(i + 1)
        pred = float(c[:i] @ _kernel_row(kernel_code, X, i, sigma, W)) if i else 0.0
        g = _dloss(loss_code, pred, y[i])
        eta = 2.0 / (lam * (gamma + t))
        theta = 2.0 * (gamma + t) / ((t + 1.0) * (2.0 * gamma + t))
        c[:i] -= eta * lam * c[:i]
        c[i] = -eta * g
        cbar[: i + 1] = (1.0 - theta) * cbar[: i + 1] + theta * c[: i + 1]
        if not np.isfinite(c[: i + 1] @ c[: i + 1]):
            raise FloatingPointError(
                f"non-finite coefficients after iteration {i + 1} (eta={eta:.6g})")
        while s_idx < len(snaps) and snaps[s_idx] == i + 1:
            out[s_idx, : i + 1] = cbar[: i + 1]
            s_idx += 1
    return c, cbar, out


def rff_gram(W, X, chunk=4096):
    n = X.shape[0]
    P = W.shape[0]
    K = np.eye(n)
    iu, ju = np.triu_indices(n, k=1)
    for start in range(0, len(iu), chunk):
        a, b = iu[start:start + chunk], ju[start:start + chunk]
        vals = np.cos((X[a] - X[b]) @ W.T).sum(axis=1) / P
        K[a, b] = vals
        K[b, a] = vals
    return K
