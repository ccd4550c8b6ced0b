# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled SGD and Gram-matrix kernels.

Signatures and semantics mirror ``rfsgd._fallback`` exactly.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, exp, sqrt, isfinite

cnp.import_array()


cdef inline double _dloss(int code, double z, double y) nogil:
    cdef double u = z * y
    cdef double e
    if code == 0:
        if u > 0:
            e = exp(-u)
            return -y * (e / (1.0 + e))
        return -y * (1.0 / (1.0 + exp(u)))
    if u < 1.0:
        return -y
    return 0.0


def rff_sgd_path(const double[:, ::1] W, const double[:, ::1] X, const double[::1] y,
                 double[::1] beta, double[::1] betabar, long t0,
                 double lam, double gamma, int loss_code, const long[::1] snaps):
    cdef Py_ssize_t P = W.shape[0], d = W.shape[1], M = 2 * P
    cdef Py_ssize_t T = X.shape[0], n_snap = snaps.shape[0]
    cdef Py_ssize_t i, j, k, s_idx = 0
    cdef double scale = 1.0 / sqrt(<double>P)
    cdef double proj, z, g, eta, theta, t, sq
    cdef double[::1] phi = np.empty(M)
    out_arr = np.zeros((n_snap, M))
    cdef double[:, ::1] out = out_arr

    while s_idx < n_snap and snaps[s_idx] == t0:
        out[s_idx, :] = betabar
        s_idx += 1
    for i in range(T):
        t = <double>(t0 + i + 1)
        with nogil:
            z = 0.0
            for k in range(P):
                proj = 0.0
                for j in range(d):
                    proj = proj + W[k, j] * X[i, j]
                phi[2 * k] = cos(proj) * scale
                phi[2 * k + 1] = sin(proj) * scale
            for k in range(M):
                z = z + beta[k] * phi[k]
            g = _dloss(loss_code, z, y[i])
            eta = 2.0 / (lam * (gamma + t))
            theta = 2.0 * (gamma + t) / ((t + 1.0) * (2.0 * gamma + t))
            sq = 0.0
            for k in range(M):
                beta[k] = beta[k] - eta * (g * phi[k] + lam * beta[k])
                betabar[k] = (1.0 - theta) * betabar[k] + theta * beta[k]
                sq = sq + beta[k] * beta[k]
        if not isfinite(sq):
            raise FloatingPointError(
                f"non-finite weights after iteration {t0 + i + 1} (eta={eta:.6g}, dloss={g:.6g})")
        while s_idx < n_snap and snaps[s_idx] == t0 + i + 1:
            out[s_idx, :] = betabar
            s_idx += 1
    return out_arr


cdef inline double _kval(int kcode, const double[:, ::1] X, Py_ssize_t a, Py_ssize_t b,
                         double inv2s2, const double[:, ::1] W) nogil:
    cdef Py_ssize_t j, k, d = X.shape[1], P
    cdef double acc = 0.0, diff, proj
    if kcode == 0:
        for j in range(d):
            diff = X[a, j] - X[b, j]
            acc = acc + diff * diff
        return exp(-acc * inv2s2)
    P = W.shape[0]
    for k in range(P):
        proj = 0.0
        for j in range(d):
            proj = proj + W[k, j] * (X[a, j] - X[b, j])
        acc = acc + cos(proj)
    return acc / P


def kernel_sgd_path(const double[:, ::1] X, const double[::1] y, double lam, double gamma,
                    int loss_code, int kernel_code, double sigma,
                    const double[:, ::1] W, const long[::1] snaps):
    cdef Py_ssize_t T = X.shape[0], n_snap = snaps.shape[0]
    cdef Py_ssize_t i, s, s_idx = 0
    cdef double inv2s2 = 1.0 / (2.0 * sigma * sigma) if sigma > 0 else 0.0
    cdef double pred, g, eta, theta, t, shrink, sq
    c_arr = np.zeros(T)
    cbar_arr = np.zeros(T)
    out_arr = np.zeros((n_snap, T))
    cdef double[::1] c = c_arr, cbar = cbar_arr
    cdef double[:, ::1] out = out_arr

    while s_idx < n_snap and snaps[s_idx] == 0:
        s_idx += 1
    for i in range(T):
        t = <double>(i + 1)
        with nogil:
            pred = 0.0
            for s in range(i):
                pred = pred + c[s] * _kval(kernel_code, X, s, i, inv2s2, W)
            g = _dloss(loss_code, pred, y[i])
            eta = 2.0 / (lam * (gamma + t))
            theta = 2.0 * (gamma + t) / ((t + 1.0) * (2.0 * gamma + t))
            sq = 0.0
            for s in range(i):
                c[s] = c[s] - eta * lam * c[s]
                sq = sq + c[s] * c[s]
            c[i] = -eta * g
            sq = sq + c[i] * c[i]
            for s in range(i + 1):
                cbar[s] = (1.0 - theta) * cbar[s] + theta * c[s]
        if not isfinite(sq):
            raise FloatingPointError(
                f"non-finite coefficients after iteration {i + 1} (eta={eta:.6g})")
        while s_idx < n_snap and snaps[s_idx] == i + 1:
            out[s_idx, :i + 1] = cbar[:i + 1]
            s_idx += 1
    return c_arr, cbar_arr, out_arr


def rff_gram(const double[:, ::1] W, const double[:, ::1] X):
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], P = W.shape[0]
    cdef Py_ssize_t a, b, j, k
    cdef double acc, proj
    K_arr = np.empty((n, n))
    cdef double[:, ::1] K = K_arr
    with nogil:
        for a in range(n):
            K[a, a] = 1.0
            for b in range(a + 1, n):
                acc = 0.0
                for k in range(P):
                    proj = 0.0
                    for j in range(d):
                        proj = proj + W[k, j] * (X[a, j] - X[b, j])
                    acc = acc + cos(proj)
                K[a, b] = acc / P
                K[b, a] = K[a, b]
    return K_arr
