"""Gram matrices of the exact and approximate kernels and their spectral gap.

The difference ``K - K_M`` normalised by ``n`` is the empirical-measure
version of the integral-operator difference; its operator norm should shrink
like ``M^{-1/2}``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from . import _backend
from .features import FeatureSet, GaussianKernel, sample_features


class PowerIterationError(RuntimeError):
    """Power iteration hit its cap; ``estimate`` holds the last value."""

    def __init__(self, estimate, iterations):
        super().__init__(f"power iteration did not converge in {iterations} steps "
                         f"(last estimate {estimate:.10g})")
        self.estimate = estimate
        self.iterations = iterations


def gram(kernel, points, backend=None) -> np.ndarray:
    """Symmetric Gram matrix of ``points`` under a kernel or a feature set.

    The diagonal is exactly 1 in both cases.
    """
    X = np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=float)))
    if isinstance(kernel, GaussianKernel):
        if X.shape[1] != kernel.dimension:
            raise ValueError("point dimension does not match kernel")
        if X.shape[0] == 1:
            return np.ones((1, 1))
        return squareform(np.exp(-pdist(X, "sqeuclidean") / (2.0 * kernel.bandwidth**2)), checks=False) \
            + np.eye(X.shape[0])
    if isinstance(kernel, FeatureSet):
        if X.shape[1] != kernel.dimension:
            raise ValueError("point dimension does not match feature set")
        impl = _backend.get_backend(backend) if backend else _backend.impl
        return impl.rff_gram(kernel.frequencies, X)
    raise TypeError(f"unsupported kernel type {type(kernel).__name__}")


def spectral_norm(A, tol=1e-8, max_iter=20000, seed=0) -> float:
    """Largest absolute eigenvalue of a symmetric matrix by power iteration.

    Iterates ``v <- A v / ||A v||`` and stops once ``||A v||`` changes by less
    than ``tol`` relative to itself. Raises :class:`PowerIterationError` after
    ``max_iter`` steps.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    v = np.random.default_rng(seed).standard_normal(A.shape[0])
    v /= np.linalg.norm(v)
    est = 0.0
    for it in range(1, max_iter + 1):
        w = A @ v
        new = float(np.linalg.norm(w))
        if new == 0.0:
            return 0.0
        v = w / new
        if abs(new - est) <= tol * new:
            return new
        est = new
    raise PowerIterationError(est, max_iter)


def concentration_bound(n_terms, op_norm, delta=0.05, R=1.0) -> float:
    """High-probability bound on ``||T - T_M||_op`` from ``n_terms`` i.i.d. rank terms.

    ``R^2 (2 b / (3 m) + sqrt(2 b / m))`` with ``b = log(2 R^2 / (||T|| delta))``.
    """
    b = np.log(2.0 * R**2 / (op_norm * delta))
    return R**2 * (2.0 * b / (3.0 * n_terms) + np.sqrt(2.0 * b / n_terms))


@dataclass
class NormDecayStudy:
    M_list: np.ndarray
    replicates: int
    normalized_norm: np.ndarray  # (len(M_list), replicates)
    frobenius: np.ndarray  # same shape, also divided by n
    bound: np.ndarray  # (len(M_list),)
    plugin_op_norm: float
    slope: float

    @property
    def mean(self):
        return self.normalized_norm.mean(axis=1)

    @property
    def std(self):
        return self.normalized_norm.std(axis=1, ddof=1) if self.replicates > 1 \
            else np.zeros(len(self.M_list))

    @property
    def violations(self) -> int:
        return int(np.sum(self.normalized_norm > self.bound[:, None]))

    ROWS_HEADER = "M,replicate,normalized_norm,bound_value"
    SUMMARY_HEADER = "M,mean,std,slope_overall"

    def csv_rows(self):
        for i, M in enumerate(self.M_list):
            for r in range(self.replicates):
                yield f"{int(M)},{r},{float(self.normalized_norm[i, r])!r},{float(self.bound[i])!r}"

    def summary_rows(self):
        for M, m, s in zip(self.M_list, self.mean, self.std):
            yield f"{int(M)},{float(m)!r},{float(s)!r},{self.slope!r}"


def norm_decay_study(kernel: GaussianKernel, points, M_list, replicates=10, seed=0,
                     delta=0.05, backend=None) -> NormDecayStudy:
    """Measure ``||K - K_M||_op / n`` over replicated feature draws for each ``M``.

    The bound uses the plug-in ``||K||_op / n`` for the population operator norm
    and counts one i.i.d. term per frequency pair (``M / 2`` terms, each of
    norm at most ``R^2 = 1``).
    """
    M_list = np.asarray(M_list, dtype=np.int64)
    if np.any(np.diff(M_list) <= 0):
        raise ValueError("M_list must be strictly increasing")
    if replicates < 5:
        raise ValueError("need at least 5 replicates")
    X = np.ascontiguousarray(np.asarray(points, dtype=float))
    n = X.shape[0]
    K = gram(kernel, X)
    op_T = spectral_norm(K) / n
    norms = np.empty((len(M_list), replicates))
    frob = np.empty_like(norms)
    if isinstance(seed, np.random.SeedSequence):
        seeds = [np.random.SeedSequence(seed.entropy, spawn_key=(*seed.spawn_key, r))
                 for r in range(replicates)]
    else:
        seeds = np.random.SeedSequence(seed).spawn(replicates)
    for r, ss in enumerate(seeds):
        # One frequency stream per replicate; smaller M use a prefix of it.
        W_max = sample_features(kernel, int(M_list[-1]), ss).frequencies
        for i, M in enumerate(M_list):
            fs = FeatureSet(W_max[: M // 2])
            D = K - gram(fs, X, backend=backend)
            norms[i, r] = spectral_norm(D, seed=r) / n
            frob[i, r] = np.linalg.norm(D, "fro") / n
    bound = np.array([concentration_bound(M // 2, op_T, delta) for M in M_list])
    slope = float("nan")
    if len(M_list) > 1:
        slope = float(np.polyfit(np.log(M_list), np.log(norms.mean(axis=1)), 1)[0])
    return NormDecayStudy(M_list, replicates, norms, frob, bound, op_T, slope)
