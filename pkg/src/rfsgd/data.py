"""Synthetic four-square distribution with piecewise-constant label noise.

The support is the union of four squares of side 0.9 separated from the axes
by a gap of 0.1. ``x`` is uniform on the union and ``P(Y = 1 | x)`` is constant
on each square.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Square order: (x1 sign, x2 sign) = (-,-), (-,+), (+,-), (+,+).
SQUARE_SIGNS = np.array([[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]])
INNER, OUTER = 0.1, 1.0

# Uniform draws consumed per sample: square, x1, x2, label.
DRAWS_PER_SAMPLE = 4

PAIRINGS = {
    "diagonal": (0.8, 0.2, 0.2, 0.8),
    "anti": (0.2, 0.8, 0.8, 0.2),
}


@dataclass(frozen=True)
class SyntheticDistribution:
    """Four-square distribution.

    Attributes
    ----------
    probs : tuple of float
        ``P(Y = 1 | x)`` on each square, in ``SQUARE_SIGNS`` order. The default
        gives 0.8 where ``sgn(x1) == sgn(x2)`` and 0.2 elsewhere.
    delta : float
        Noise margin reported alongside results; not used for sampling.
    """

    probs: tuple = PAIRINGS["diagonal"]
    delta: float = 0.3

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        if len(probs) != 4 or not all(0.0 <= p <= 1.0 for p in probs):
            raise ValueError("probs must be four probabilities in [0, 1]")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_pairing(cls, pairing: str = "diagonal", delta: float = 0.3):
        try:
            return cls(PAIRINGS[pairing], delta)
        except KeyError:
            raise ValueError(f"unknown pairing {pairing!r}; expected {sorted(PAIRINGS)}") from None

    def square_index(self, X) -> np.ndarray:
        """Square index of each row; raises if a point is off the support."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        a = np.abs(X)
        if X.shape[1] != 2 or not np.all((a >= INNER) & (a <= OUTER)):
            raise ValueError("point outside the support of the distribution")
        return 2 * (X[:, 0] > 0) + (X[:, 1] > 0)

    def conditional(self, X) -> np.ndarray:
        """``P(Y = 1 | x)`` for each row of ``X``."""
        return np.asarray(self.probs)[self.square_index(X)]

    def _from_uniforms(self, U):
        q = np.minimum((U[:, 0] * 4).astype(np.int64), 3)
        X = SQUARE_SIGNS[q] * (INNER + (OUTER - INNER) * U[:, 1:3])
        y = np.where(U[:, 3] < np.asarray(self.probs)[q], 1.0, -1.0)
        return X, y


def sample(dist: SyntheticDistribution, n: int, seed):
    """Draw ``n`` i.i.d. pairs; returns ``X`` of shape ``(n, 2)`` and ``y`` in {-1, +1}."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    return dist._from_uniforms(rng.random((n, DRAWS_PER_SAMPLE)))


class SampleStream:
    """Sequential cursor over the same draws :func:`sample` would return.

    ``next(stream)`` yields one ``(x, y)``; :meth:`take` yields a block. Any
    interleaving of the two reproduces the batch sample element-wise.
    """

    def __init__(self, dist: SyntheticDistribution, seed):
        self.dist = dist
        self._rng = np.random.default_rng(seed)
        self.position = 0

    def take(self, n: int):
        U = self._rng.random((n, DRAWS_PER_SAMPLE))
        self.position += n
        return self.dist._from_uniforms(U)

    def __iter__(self):
        return self

    def __next__(self):
        X, y = self.take(1)
        return X[0], float(y[0])


def bayes_predict(dist: SyntheticDistribution, x):
    """Sign of ``2 P(Y=1|x) - 1``, with ties sent to -1."""
    p = dist.conditional(x)
    out = np.where(2.0 * p - 1.0 > 0, 1.0, -1.0)
    return int(out[0]) if np.ndim(x) == 1 else out


def bayes_risk(dist: SyntheticDistribution) -> float:
    """``E[min(p, 1 - p)]`` under the uniform mixture of squares."""
    return float(np.mean([min(p, 1.0 - p) for p in dist.probs]))
