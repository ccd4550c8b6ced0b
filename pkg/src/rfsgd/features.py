"""Gaussian kernel and its random Fourier feature approximation.

Features are real and paired: each sampled frequency ``w`` contributes the two
entries ``cos(w.x)/sqrt(P)`` and ``sin(w.x)/sqrt(P)``, so ``M = 2P`` and the
feature vector has unit norm for every input.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist


@dataclass(frozen=True)
class GaussianKernel:
    """``k(x, y) = exp(-||x - y||^2 / (2 sigma^2))`` on ``R^d``.

    Its spectral measure is ``N(0, sigma^-2 I)``.
    """

    bandwidth: float
    dimension: int = 2

    def __post_init__(self):
        if not (np.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.dimension}")

    def __call__(self, X, Y):
        """Kernel matrix between the rows of ``X`` and ``Y``."""
        X = _as_points(X, self.dimension)
        Y = _as_points(Y, self.dimension)
        d2 = cdist(X, Y, "sqeuclidean")
        return np.exp(-d2 / (2.0 * self.bandwidth**2))


@dataclass(frozen=True, eq=False)
class FeatureSet:
    """Sampled frequencies, stored as a dense ``(P, d)`` array.

    The array is made read-only on construction so a feature set can be shared
    between runs.
    """

    frequencies: np.ndarray
    bound: float = field(default=1.0)

    def __post_init__(self):
        W = np.array(self.frequencies, dtype=np.float64, order="C", copy=True)
        if W.ndim != 2 or W.shape[0] < 1:
            raise ValueError("frequencies must be a non-empty (P, d) array")
        W.setflags(write=False)
        object.__setattr__(self, "frequencies", W)

    @property
    def n_pairs(self) -> int:
        return self.frequencies.shape[0]

    @property
    def n_features(self) -> int:
        return 2 * self.frequencies.shape[0]

    @property
    def dimension(self) -> int:
        return self.frequencies.shape[1]

    def __call__(self, X, Y):
        """Approximate kernel matrix ``k_M`` between rows of ``X`` and ``Y``."""
        return feature_map(self, X) @ feature_map(self, Y).T


def _as_points(x, d):
    x = np.asarray(x, dtype=np.float64)
    x2 = np.atleast_2d(x)
    if x2.ndim != 2 or x2.shape[1] != d:
        raise ValueError(f"expected points of dimension {d}, got shape {x.shape}")
    return x2


def sample_features(kernel: GaussianKernel, M: int, seed) -> FeatureSet:
    """Draw ``M // 2`` frequencies from the kernel's spectral measure.

    ``seed`` is anything accepted by :func:`numpy.random.default_rng`.
    Frequencies for a smaller ``M`` are a prefix of those for a larger one
    under the same seed.
    """
    if int(M) != M or M < 2 or M % 2:
        raise ValueError(f"M must be a positive even integer (cos/sin pairs), got {M}")
    if not kernel.bandwidth > 0:
        raise ValueError("kernel bandwidth must be positive")
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((int(M) // 2, kernel.dimension)) / kernel.bandwidth
    return FeatureSet(W)


def feature_map(fs: FeatureSet, x) -> np.ndarray:
    """Interleaved ``(cos, sin)`` features scaled by ``1/sqrt(P)``.

    A single point gives shape ``(M,)``; an ``(n, d)`` array gives ``(n, M)``.
    """
    X = _as_points(x, fs.dimension)
    proj = X @ fs.frequencies.T
    out = np.empty((X.shape[0], fs.n_features))
    scale = 1.0 / np.sqrt(fs.n_pairs)
    out[:, 0::2] = np.cos(proj) * scale
    out[:, 1::2] = np.sin(proj) * scale
    return out[0] if np.ndim(x) == 1 else out


def kernel_exact(kernel: GaussianKernel, x, y) -> float:
    x = _as_points(x, kernel.dimension)[0]
    y = _as_points(y, kernel.dimension)[0]
    diff = x - y
    return float(np.exp(-(diff @ diff) / (2.0 * kernel.bandwidth**2)))


def kernel_approx(fs: FeatureSet, x, y) -> float:
    """``k_M(x, y) = (1/P) sum_i cos(w_i . (x - y))``.

    Computed in difference form, which makes ``k_M(x, x) == 1`` exact and the
    value invariant to a common shift of both arguments.
    """
    x = _as_points(x, fs.dimension)[0]
    y = _as_points(y, fs.dimension)[0]
    return float(np.mean(np.cos(fs.frequencies @ (x - y))))


def median_bandwidth(X) -> float:
    """Median pairwise Euclidean distance of the rows of ``X``."""
    from scipy.spatial.distance import pdist

    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] < 2:
        raise ValueError("need at least two points for the median heuristic")
    return float(np.median(pdist(X)))


# FeatureSet dumps: binary is '<qq' (P, d) followed by P*d little-endian
# float64 values in row-major order; CSV is a "P,d" line then one row per
# frequency.
_HEADER = struct.Struct("<qq")


def save_features(fs: FeatureSet, path) -> None:
    path = Path(path)
    W = fs.frequencies
    if path.suffix == ".csv":
        lines = [f"{W.shape[0]},{W.shape[1]}"]
        lines += [",".join(repr(float(v)) for v in row) for row in W]
        path.write_text("\n".join(lines) + "\n")
    else:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(*W.shape))
            fh.write(W.astype("<f8").tobytes(order="C"))


def load_features(path) -> FeatureSet:
    path = Path(path)
    if path.suffix == ".csv":
        lines = path.read_text().split()
        P, d = (int(v) for v in lines[0].split(","))
        W = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
        if W.shape != (P, d):
            raise ValueError(f"{path}: header says ({P}, {d}) but found {W.shape}")
        return FeatureSet(W)
    raw = path.read_bytes()
    P, d = _HEADER.unpack_from(raw)
    body = raw[_HEADER.size:]
    if len(body) != 8 * P * d:
        raise ValueError(f"{path}: truncated feature dump")
    return FeatureSet(np.frombuffer(body, dtype="<f8").reshape(P, d).copy())
