"""Averaged SGD in random-feature space and the full-kernel baseline.

Step size ``eta_t = 2 / (lam (gamma + t))``; the averaged iterate follows
``bbar_{t+1} = (1 - theta_t) bbar_t + theta_t b_{t+1}`` with
``theta_t = 2 (gamma + t) / ((t + 1)(2 gamma + t))``, which equals the
``alpha``-weighted average of all iterates at horizon ``t``.
"""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import _backend
from .evaluation import Evaluator, RunTrace
from .features import FeatureSet, GaussianKernel, _as_points, feature_map
from .loss import SurrogateLoss, loss_deriv


class DivergenceError(FloatingPointError):
    """Raised when an SGD iterate stops being finite."""


class SchedulePreconditionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Schedule:
    lam: float = 1e-3
    gamma: float = 500.0
    lipschitz: float = 1.0
    bound: float = 1.0

    def __post_init__(self):
        for name in ("lam", "gamma", "lipschitz", "bound"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def eta(self, t):
        return 2.0 / (self.lam * (self.gamma + t))

    def theta(self, t):
        return 2.0 * (self.gamma + t) / ((t + 1.0) * (2.0 * self.gamma + t))

    def alpha(self, t, T):
        return 2.0 * (self.gamma + t - 1.0) / ((2.0 * self.gamma + T) * (T + 1.0))


def step_size(s: Schedule, t: int, T: int | None = None):
    """Return ``(eta_t, alpha_t, theta_t)``; ``alpha_t`` is None without a horizon."""
    if t < 1:
        raise ValueError(f"iteration index must be >= 1, got {t}")
    alpha = None if T is None else s.alpha(t, T)
    return s.eta(t), alpha, s.theta(t)


def check_schedule_preconditions(s: Schedule, init_norm: float = 0.0) -> list[str]:
    """Warn about violated step-size and initial-norm conditions of the rate bound.

    Violations are returned (and emitted as warnings) rather than raised,
    since commonly used settings such as ``gamma=500, lam=1e-3`` break the
    step-size condition.
    """
    msgs = []
    eta1 = s.eta(1)
    if eta1 > 1.0 / s.lipschitz:
        msgs.append(f"eta_1 = {eta1:.6g} exceeds 1/L = {1.0 / s.lipschitz:.6g}")
    if eta1 > 1.0 / (2.0 * s.lam):
        msgs.append(f"eta_1 = {eta1:.6g} exceeds 1/(2 lam) = {1.0 / (2.0 * s.lam):.6g}")
    limit = (2.0 * eta1 + 1.0 / s.lam) * s.lipschitz * s.bound
    if init_norm > limit:
        msgs.append(f"initial norm {init_norm:.6g} exceeds (2 eta_1 + 1/lam) L R = {limit:.6g}")
    for m in msgs:
        warnings.warn(m, SchedulePreconditionWarning, stacklevel=2)
    return msgs


@dataclass
class RffHypothesis:
    """Current and averaged weights over a fixed feature set.

    Calling the hypothesis evaluates the averaged predictor ``bbar . phi(x)``.
    """

    fs: FeatureSet
    beta: np.ndarray = None
    betabar: np.ndarray = None
    t: int = 0

    def __post_init__(self):
        M = self.fs.n_features
        self.beta = np.zeros(M) if self.beta is None else np.array(self.beta, dtype=float)
        self.betabar = np.zeros(M) if self.betabar is None else np.array(self.betabar, dtype=float)

    def __call__(self, X):
        return feature_map(self.fs, X) @ self.betabar

    def current(self, X):
        """Prediction of the last (non-averaged) iterate."""
        return feature_map(self.fs, X) @ self.beta

    def copy(self):
        return replace(self, beta=self.beta.copy(), betabar=self.betabar.copy())


@dataclass
class KernelHypothesis:
    """Kernel expansion over the points seen so far, one coefficient per point."""

    kernel: object
    support: np.ndarray
    coef: np.ndarray
    coef_bar: np.ndarray
    t: int = 0

    def __call__(self, X):
        return kernel_scores(self.kernel, self.support, self.coef_bar[None, :], X)[:, 0]

    def current(self, X):
        return kernel_scores(self.kernel, self.support, self.coef[None, :], X)[:, 0]


def _kernel_args(kernel):
    if isinstance(kernel, GaussianKernel):
        return 0, kernel.bandwidth, np.zeros((1, kernel.dimension))
    if isinstance(kernel, FeatureSet):
        return 1, 0.0, kernel.frequencies
    raise TypeError(f"unsupported kernel type {type(kernel).__name__}")


def rff_sgd_step(h: RffHypothesis, s: Schedule, loss: SurrogateLoss, sample) -> RffHypothesis:
    """One SGD step on ``l(b . phi(x), y) + lam/2 ||b||^2``; returns a new hypothesis."""
    x, y = sample
    x = _as_points(x, h.fs.dimension)[0]
    t = h.t + 1
    phi = feature_map(h.fs, x)
    g = loss_deriv(loss, float(h.beta @ phi), float(y))
    beta = h.beta - s.eta(t) * (g * phi + s.lam * h.beta)
    if not np.all(np.isfinite(beta)):
        raise DivergenceError(f"non-finite weights after iteration {t}")
    theta = s.theta(t)
    betabar = (1.0 - theta) * h.betabar + theta * beta
    return RffHypothesis(h.fs, beta, betabar, t)


def _snap_array(snapshots, lo, hi):
    snaps = np.asarray(sorted(set(int(c) for c in snapshots)), dtype=np.int64)
    if snaps.size and (snaps[0] < lo or snaps[-1] > hi):
        raise ValueError(f"checkpoints must lie in [{lo}, {hi}], got {snaps[0]}..{snaps[-1]}")
    return snaps


def fit_rff(fs, X, y, schedule, loss, snapshots=(), h0=None, backend=None):
    """Run averaged SGD over the rows of ``X``.

    Returns the final hypothesis and an array whose rows are the averaged
    weights after each requested total iteration count.
    """
    impl = _backend.get_backend(backend) if backend else _backend.impl
    h = RffHypothesis(fs) if h0 is None else h0.copy()
    X = np.ascontiguousarray(_as_points(X, fs.dimension)) if len(X) else np.zeros((0, fs.dimension))
    y = np.ascontiguousarray(y, dtype=float)
    snaps = _snap_array(snapshots, h.t, h.t + len(X))
    try:
        B = impl.rff_sgd_path(fs.frequencies, X, y, h.beta, h.betabar, h.t,
                              schedule.lam, schedule.gamma, loss.code, snaps)
    except FloatingPointError as exc:
        raise DivergenceError(str(exc)) from None
    h.t += len(X)
    return h, B


def fit_kernel(kernel, X, y, schedule, loss, snapshots=(), backend=None):
    """Functional averaged SGD; the expansion gains one point per iteration."""
    impl = _backend.get_backend(backend) if backend else _backend.impl
    code, sigma, W = _kernel_args(kernel)
    d = kernel.dimension
    X = np.ascontiguousarray(_as_points(X, d)) if len(X) else np.zeros((0, d))
    y = np.ascontiguousarray(y, dtype=float)
    snaps = _snap_array(snapshots, 0, len(X))
    try:
        c, cbar, C = impl.kernel_sgd_path(X, y, schedule.lam, schedule.gamma, loss.code,
                                          code, sigma, W, snaps)
    except FloatingPointError as exc:
        raise DivergenceError(str(exc)) from None
    return KernelHypothesis(kernel, X, c, cbar, len(X)), C


def rff_scores(fs, B, X, chunk=4096):
    """Scores of each weight row of ``B`` on each row of ``X``: shape ``(n, k)``."""
    X = _as_points(X, fs.dimension)
    out = np.empty((X.shape[0], B.shape[0]))
    for i in range(0, X.shape[0], chunk):
        out[i:i + chunk] = feature_map(fs, X[i:i + chunk]) @ B.T
    return out


def kernel_scores(kernel, support, C, X, chunk=2048):
    """Scores of each coefficient row of ``C`` (aligned with ``support``) on ``X``."""
    X = _as_points(X, kernel.dimension)
    out = np.zeros((X.shape[0], C.shape[0]))
    if len(support) == 0:
        return out
    width = C.shape[1]
    for i in range(0, X.shape[0], chunk):
        out[i:i + chunk] = kernel(X[i:i + chunk], support[:width]) @ C.T
    return out


def default_checkpoints(T: int, n: int = 60) -> np.ndarray:
    """``n`` distinct integers, roughly log-spaced on ``[1, T]``, ending at ``T``."""
    if T < 1:
        return np.array([0], dtype=np.int64)
    n = min(n, T)
    g = np.round(np.geomspace(1, T, n)).astype(np.int64)
    for i in range(1, n):
        g[i] = max(g[i], g[i - 1] + 1)
    return g


def run_rff_sgd(fs, stream, T, schedule, loss, checkpoints, evaluator: Evaluator,
                run_id=0, backend=None) -> RunTrace:
    """Run ``T`` steps on draws from ``stream`` and score the averaged predictor at checkpoints."""
    checkpoints = _snap_array(checkpoints, 0, T)
    if T:
        X, y = stream.take(T)
    else:
        X, y = np.zeros((0, fs.dimension)), np.zeros(0)
    start = time.perf_counter()
    _, B = fit_rff(fs, X, y, schedule, loss, checkpoints, backend=backend)
    elapsed = time.perf_counter() - start
    scores = rff_scores(fs, B, evaluator.X)
    return evaluator.trace(scores, checkpoints, fs.n_features * checkpoints,
                           run_id=run_id, wall_time=elapsed)


def run_kernel_sgd(kernel, stream, T, schedule, loss, checkpoints, evaluator: Evaluator,
                   run_id=0, backend=None) -> RunTrace:
    checkpoints = _snap_array(checkpoints, 0, T)
    if T:
        X, y = stream.take(T)
    else:
        X, y = np.zeros((0, kernel.dimension)), np.zeros(0)
    start = time.perf_counter()
    h, C = fit_kernel(kernel, X, y, schedule, loss, checkpoints, backend=backend)
    elapsed = time.perf_counter() - start
    scores = kernel_scores(kernel, h.support, C, evaluator.X)
    return evaluator.trace(scores, checkpoints, checkpoints * (checkpoints + 1) // 2,
                           run_id=run_id, wall_time=elapsed)
