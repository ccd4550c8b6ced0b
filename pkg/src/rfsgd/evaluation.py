"""Held-out classification error, surrogate risk and multi-run aggregation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import SyntheticDistribution, bayes_predict
from .loss import SurrogateLoss, loss_value, optimal_score


def _check_test(test):
    X, y = test
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise ValueError("test set is empty")
    return np.atleast_2d(np.asarray(X, dtype=float)), y


def sign(scores):
    """Sign with ``sign(0) = -1``."""
    return np.where(np.asarray(scores) > 0, 1.0, -1.0)


def classification_error(g, test) -> float:
    """Fraction of test points where ``sign(g(x)) != y``."""
    X, y = _check_test(test)
    return float(np.mean(sign(g(X)) != y))


def expected_loss(g, loss: SurrogateLoss, test) -> float:
    X, y = _check_test(test)
    return float(np.mean(loss_value(loss, np.asarray(g(X), dtype=float), y)))


@dataclass
class RunTrace:
    """Metrics of one run at each checkpoint.

    ``excess_error`` is measured against the Bayes classifier's error on the
    same test set, and ``excess_loss`` against the loss of the pointwise
    optimal score on that set.
    """

    run_id: int
    iterations: np.ndarray
    cumulative_updates: np.ndarray
    error: np.ndarray
    excess_error: np.ndarray
    loss: np.ndarray
    excess_loss: np.ndarray
    wall_time: float = 0.0

    CSV_HEADER = "run_id,iteration,cumulative_updates,excess_error,excess_loss"

    def csv_rows(self):
        for it, up, ee, el in zip(self.iterations, self.cumulative_updates,
                                  self.excess_error, self.excess_loss):
            yield f"{self.run_id},{int(it)},{int(up)},{float(ee)!r},{float(el)!r}"


class Evaluator:
    """Scores hypotheses against a fixed test sample.

    Bayes predictions and the reference surrogate loss are computed once.
    """

    def __init__(self, dist: SyntheticDistribution, loss: SurrogateLoss, X, y):
        self.X, self.y = _check_test((X, y))
        self.dist = dist
        self.loss = loss
        mu = dist.conditional(self.X)
        self.bayes_error = float(np.mean(bayes_predict(dist, self.X) != self.y))
        self.reference_loss = float(np.mean(loss_value(loss, optimal_score(loss, mu), self.y)))

    def errors(self, scores):
        """Per-column error and loss for a score matrix of shape ``(n_test, k)``."""
        scores = np.asarray(scores, dtype=float).reshape(len(self.y), -1)
        err = np.mean(sign(scores) != self.y[:, None], axis=0)
        lv = np.mean(loss_value(self.loss, scores, self.y[:, None]), axis=0)
        return err, lv

    def trace(self, scores, iterations, updates, run_id=0, wall_time=0.0) -> RunTrace:
        err, lv = self.errors(scores)
        return RunTrace(
            run_id=run_id,
            iterations=np.asarray(iterations, dtype=np.int64),
            cumulative_updates=np.asarray(updates, dtype=np.int64),
            error=err,
            excess_error=err - self.bayes_error,
            loss=lv,
            excess_loss=lv - self.reference_loss,
            wall_time=wall_time,
        )


@dataclass
class Aggregate:
    iterations: np.ndarray
    cumulative_updates: np.ndarray
    n_runs: int
    mean_excess_error: np.ndarray
    std_excess_error: np.ndarray
    mean_excess_loss: np.ndarray
    std_excess_loss: np.ndarray
    mean_error: np.ndarray
    mean_loss: np.ndarray

    CSV_HEADER = ("iteration,cumulative_updates,mean_excess_error,std_excess_error,"
                  "mean_excess_loss,std_excess_loss")

    def csv_rows(self):
        cols = (self.mean_excess_error, self.std_excess_error,
                self.mean_excess_loss, self.std_excess_loss)
        for i, (it, up) in enumerate(zip(self.iterations, self.cumulative_updates)):
            yield f"{int(it)},{int(up)}," + ",".join(repr(float(c[i])) for c in cols)


def _mean_std(rows):
    rows = np.asarray(rows, dtype=float)
    std = rows.std(axis=0, ddof=1) if rows.shape[0] > 1 else np.zeros(rows.shape[1])
    return rows.mean(axis=0), std


def aggregate_runs(traces) -> Aggregate:
    """Per-checkpoint mean and sample standard deviation (0 for a single run)."""
    traces = list(traces)
    if not traces:
        raise ValueError("no traces to aggregate")
    it0 = traces[0].iterations
    for tr in traces[1:]:
        if not np.array_equal(tr.iterations, it0):
            raise ValueError(f"run {tr.run_id} has different checkpoints from run {traces[0].run_id}")
    me, se = _mean_std([t.excess_error for t in traces])
    ml, sl = _mean_std([t.excess_loss for t in traces])
    return Aggregate(
        iterations=it0.copy(),
        cumulative_updates=traces[0].cumulative_updates.copy(),
        n_runs=len(traces),
        mean_excess_error=me,
        std_excess_error=se,
        mean_excess_loss=ml,
        std_excess_loss=sl,
        mean_error=np.mean([t.error for t in traces], axis=0),
        mean_loss=np.mean([t.loss for t in traces], axis=0),
    )
