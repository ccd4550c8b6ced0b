"""Lipschitz convex surrogate losses for binary classification.

Both losses have the margin form ``l(zeta, y) = phi(zeta * y)`` and are
1-Lipschitz in ``zeta``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LOSS_CODES = {"logistic": 0, "hinge": 1}


@dataclass(frozen=True)
class SurrogateLoss:
    """Margin loss selected by name.

    Attributes
    ----------
    kind : str
        ``"logistic"`` or ``"hinge"``.
    lipschitz : float
        Lipschitz constant in the score argument; 1 for both kinds.
    """

    kind: str = "logistic"
    lipschitz: float = 1.0

    def __post_init__(self):
        if self.kind not in LOSS_CODES:
            raise ValueError(
                f"unknown loss {self.kind!r}; expected one of {sorted(LOSS_CODES)}"
            )
        if not self.lipschitz > 0:
            raise ValueError("lipschitz constant must be positive")

    @property
    def code(self) -> int:
        return LOSS_CODES[self.kind]

    def __call__(self, zeta, y):
        return loss_value(self, zeta, y)


def _check_labels(y):
    y = np.asarray(y, dtype=float)
    if not np.all((y == 1.0) | (y == -1.0)):
        raise ValueError("labels must be -1 or +1")
    return y


def _scalar_or_array(out, *inputs):
    if all(np.ndim(v) == 0 for v in inputs):
        return float(out)
    return out


def loss_value(loss: SurrogateLoss, zeta, y):
    """Evaluate ``l(zeta, y)``; broadcasts over arrays."""
    y_arr = _check_labels(y)
    z = np.asarray(zeta, dtype=float) * y_arr
    if loss.kind == "logistic":
        # logaddexp(0, -z) = log(1 + exp(-z)) without overflow
        out = np.logaddexp(0.0, -z)
    else:
        out = np.maximum(0.0, 1.0 - z)
    return _scalar_or_array(out, zeta, y)


def loss_deriv(loss: SurrogateLoss, zeta, y):
    """Derivative of the loss in its score argument.

    For the hinge loss the subgradient at the kink ``zeta * y == 1`` is 0.
    """
    y_arr = _check_labels(y)
    z = np.asarray(zeta, dtype=float) * y_arr
    if loss.kind == "logistic":
        # -y / (1 + exp(z)), evaluated through the stable sigmoid
        out = -y_arr * _sigmoid(-z)
    else:
        out = np.where(z < 1.0, -y_arr, 0.0)
    return _scalar_or_array(out, zeta, y)


def _sigmoid(u):
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    e = np.exp(u[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def link(loss: SurrogateLoss, mu):
    """Pointwise minimiser of the conditional surrogate risk (log-odds).

    Only defined for the logistic loss; the hinge minimiser is a sign and
    cannot be inverted.
    """
    if loss.kind != "logistic":
        raise NotImplementedError(f"link function is not invertible for {loss.kind!r} loss")
    mu_arr = np.asarray(mu, dtype=float)
    if not np.all((mu_arr > 0.0) & (mu_arr < 1.0)):
        raise ValueError("mu must lie strictly inside (0, 1)")
    out = np.log(mu_arr) - np.log1p(-mu_arr)
    return _scalar_or_array(out, mu)


def m_delta(loss: SurrogateLoss, delta: float) -> float:
    """Smallest magnitude of the optimal score when ``|mu - 1/2| >= delta``."""
    if loss.kind != "logistic":
        raise NotImplementedError("m(delta) is only available for the logistic loss")
    if not 0.0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    return max(link(loss, 0.5 + delta), abs(link(loss, 0.5 - delta)))


def optimal_score(loss: SurrogateLoss, mu):
    """Bayes-optimal surrogate score for conditional probability ``mu``.

    Logistic scores are clipped at ``mu`` in {0, 1} to keep them finite.
    """
    mu_arr = np.asarray(mu, dtype=float)
    if loss.kind == "logistic":
        eps = 1e-12
        return link(loss, np.clip(mu_arr, eps, 1.0 - eps))
    return np.where(mu_arr > 0.5, 1.0, -1.0)
