import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from rfsgd.data import SampleStream, SyntheticDistribution, sample
from rfsgd.evaluation import Evaluator
from rfsgd.features import GaussianKernel, feature_map, sample_features
from rfsgd.loss import SurrogateLoss, loss_value
from rfsgd.optim import (DivergenceError, RffHypothesis, Schedule,
                         SchedulePreconditionWarning, check_schedule_preconditions,
                         default_checkpoints, fit_kernel, fit_rff, rff_scores, rff_sgd_step,
                         run_kernel_sgd, run_rff_sgd, step_size)

LOGISTIC = SurrogateLoss("logistic")
HINGE = SurrogateLoss("hinge")
DIST = SyntheticDistribution()
KERNEL = GaussianKernel(0.5, 2)


def test_step_size_values():
    s = Schedule(lam=0.001, gamma=500)
    eta, alpha, theta = step_size(s, 1)
    assert_allclose(eta, 2 / (0.001 * 501))
    assert_allclose(eta, 3.992016, atol=1e-6)
    assert_allclose(theta, 501 / 1001)
    assert alpha is None
    assert_allclose(step_size(s, 3, T=10)[1], 2 * 502 / (1010 * 11))


def test_step_size_rejects_t0():
    with pytest.raises(ValueError):
        step_size(Schedule(), 0)


@pytest.mark.parametrize("gamma", [1, 500])
@pytest.mark.parametrize("T", [1, 10, 1000])
def test_alpha_sums_to_one(T, gamma):
    s = Schedule(gamma=gamma)
    total = sum(s.alpha(t, T) for t in range(1, T + 2))
    assert abs(total - 1.0) < 1e-12


@pytest.mark.parametrize("gamma", [1, 3.5, 500])
def test_schedule_monotone_and_theta_range(gamma):
    s = Schedule(gamma=gamma)
    t = np.arange(1, 5000)
    assert np.all(np.diff(s.eta(t)) < 0)
    th = s.theta(t)
    assert np.all((th > 0) & (th <= 1))


def test_first_step_from_zero():
    fs = sample_features(KERNEL, 16, seed=0)
    s = Schedule()
    x = np.array([0.4, -0.3])
    h = rff_sgd_step(RffHypothesis(fs), s, LOGISTIC, (x, 1))
    assert h.t == 1
    assert_allclose(h.beta, s.eta(1) * 0.5 * feature_map(fs, x))
    assert_allclose(h.betabar, s.theta(1) * h.beta)


def test_zero_derivative_gives_pure_shrinkage():
    fs = sample_features(KERNEL, 16, seed=0)
    s = Schedule()
    x = np.array([0.4, -0.3])
    beta = 3.0 * feature_map(fs, x)
    h = rff_sgd_step(RffHypothesis(fs, beta=beta), s, HINGE, (x, 1))
    assert_allclose(h.beta, (1 - s.eta(1) * s.lam) * beta)


def test_step_direction_matches_finite_differences(rng):
    fs = sample_features(KERNEL, 8, seed=1)
    s = Schedule(lam=0.05, gamma=3)
    h_eps = 1e-6
    for _ in range(100):
        beta = rng.normal(scale=2, size=8)
        t = int(rng.integers(0, 50))
        x = rng.uniform(-1, 1, size=2)
        y = float(rng.choice([-1, 1]))
        new = rff_sgd_step(RffHypothesis(fs, beta=beta, t=t), s, LOGISTIC, (x, y))
        direction = (beta - new.beta) / s.eta(t + 1)
        phi = feature_map(fs, x)

        def objective(b):
            return loss_value(LOGISTIC, b @ phi, y) + 0.5 * s.lam * b @ b

        fd = np.array([(objective(beta + h_eps * e) - objective(beta - h_eps * e)) / (2 * h_eps)
                       for e in np.eye(8)])
        assert np.linalg.norm(direction - fd) <= 1e-5 * np.linalg.norm(fd)


def test_recursive_average_equals_weighted_sum():
    T = 200
    fs = sample_features(KERNEL, 20, seed=2)
    s = Schedule(lam=0.01, gamma=5)
    X, y = sample(DIST, T, seed=3)
    h = RffHypothesis(fs)
    iterates = [h.beta.copy()]
    for i in range(T):
        h = rff_sgd_step(h, s, LOGISTIC, (X[i], y[i]))
        iterates.append(h.beta.copy())
    direct = sum(s.alpha(t, T) * b for t, b in enumerate(iterates, start=1))
    assert np.max(np.abs(h.betabar - direct)) < 1e-10
    h2, _ = fit_rff(fs, X, y, s, LOGISTIC)
    assert np.max(np.abs(h2.betabar - direct)) < 1e-10


def test_step_and_path_agree():
    fs = sample_features(KERNEL, 30, seed=4)
    s = Schedule()
    X, y = sample(DIST, 50, seed=5)
    h = RffHypothesis(fs)
    for xi, yi in zip(X, y):
        h = rff_sgd_step(h, s, LOGISTIC, (xi, yi))
    h2, _ = fit_rff(fs, X, y, s, LOGISTIC)
    assert_allclose(h2.beta, h.beta, rtol=1e-10, atol=1e-12)
    assert_allclose(h2.betabar, h.betabar, rtol=1e-10, atol=1e-12)


def test_fit_resumes_from_hypothesis():
    fs = sample_features(KERNEL, 30, seed=4)
    s = Schedule()
    X, y = sample(DIST, 60, seed=5)
    full, _ = fit_rff(fs, X, y, s, LOGISTIC)
    half, _ = fit_rff(fs, X[:25], y[:25], s, LOGISTIC)
    rest, _ = fit_rff(fs, X[25:], y[25:], s, LOGISTIC, h0=half)
    assert rest.t == 60
    assert_allclose(rest.betabar, full.betabar, rtol=1e-12, atol=1e-14)


def test_regularisation_contracts_in_flat_region():
    fs = sample_features(KERNEL, 16, seed=0)
    x = np.array([0.5, 0.5])
    X = np.tile(x, (50, 1))
    y = np.ones(50)
    h = RffHypothesis(fs, beta=10 * feature_map(fs, x))
    norms = [np.linalg.norm(h.beta)]
    for xi, yi in zip(X, y):
        h = rff_sgd_step(h, Schedule(), HINGE, (xi, yi))
        norms.append(np.linalg.norm(h.beta))
    assert np.all(np.diff(norms) < 0)


def test_rff_equals_kernel_sgd_with_approximate_kernel():
    fs = sample_features(KERNEL, 40, seed=6)
    s = Schedule()
    X, y = sample(DIST, 100, seed=7)
    Xt, _ = sample(DIST, 50, seed=8)
    h_rff, _ = fit_rff(fs, X, y, s, LOGISTIC)
    h_ker, _ = fit_kernel(fs, X, y, s, LOGISTIC)
    assert len(h_ker.support) == 100
    assert np.max(np.abs(h_rff.current(Xt) - h_ker.current(Xt))) < 1e-8
    assert np.max(np.abs(h_rff(Xt) - h_ker(Xt))) < 1e-8


def test_large_M_tracks_exact_kernel():
    s = Schedule()
    X, y = sample(DIST, 500, seed=9)
    Xt, _ = sample(DIST, 100, seed=10)
    fs = sample_features(KERNEL, 8192, seed=11)
    h_rff, _ = fit_rff(fs, X, y, s, LOGISTIC)
    h_ker, _ = fit_kernel(KERNEL, X, y, s, LOGISTIC)
    rms = np.sqrt(np.mean((h_rff(Xt) - h_ker(Xt)) ** 2))
    assert rms < 0.05


def test_snapshots_match_separate_fits():
    fs = sample_features(KERNEL, 10, seed=12)
    s = Schedule()
    X, y = sample(DIST, 40, seed=13)
    _, B = fit_rff(fs, X, y, s, LOGISTIC, snapshots=[0, 7, 40])
    assert_array_equal(B[0], 0.0)
    h7, _ = fit_rff(fs, X[:7], y[:7], s, LOGISTIC)
    assert_allclose(B[1], h7.betabar, rtol=1e-12)
    _, C = fit_kernel(KERNEL, X, y, s, LOGISTIC, snapshots=[7, 40])
    h7k, _ = fit_kernel(KERNEL, X[:7], y[:7], s, LOGISTIC)
    assert_allclose(C[0, :7], h7k.coef_bar, rtol=1e-12)
    assert_array_equal(C[0, 7:], 0.0)


@pytest.fixture(scope="module")
def evaluator():
    X, y = sample(DIST, 2000, seed=99)
    return Evaluator(DIST, LOGISTIC, X, y)


def test_empty_run(evaluator):
    fs = sample_features(KERNEL, 10, seed=0)
    tr = run_rff_sgd(fs, SampleStream(DIST, 0), 0, Schedule(), LOGISTIC, [0], evaluator)
    assert_array_equal(tr.cumulative_updates, [0])
    assert_allclose(tr.loss, np.log(2))
    assert_allclose(tr.error, np.mean(evaluator.y == 1))


def test_run_is_deterministic(evaluator):
    fs = sample_features(KERNEL, 50, seed=0)
    cps = default_checkpoints(300, 10)
    a = run_rff_sgd(fs, SampleStream(DIST, 4), 300, Schedule(), LOGISTIC, cps, evaluator)
    b = run_rff_sgd(fs, SampleStream(DIST, 4), 300, Schedule(), LOGISTIC, cps, evaluator)
    assert list(a.csv_rows()) == list(b.csv_rows())
    assert_array_equal(a.cumulative_updates, 50 * cps)


def test_run_rejects_checkpoint_past_horizon(evaluator):
    fs = sample_features(KERNEL, 10, seed=0)
    with pytest.raises(ValueError):
        run_rff_sgd(fs, SampleStream(DIST, 0), 10, Schedule(), LOGISTIC, [5, 11], evaluator)


def test_kernel_run_update_counts(evaluator):
    T = 120
    cps = default_checkpoints(T, 15)
    tr = run_kernel_sgd(KERNEL, SampleStream(DIST, 1), T, Schedule(), LOGISTIC, cps, evaluator)
    assert_array_equal(tr.cumulative_updates, cps * (cps + 1) // 2)
    assert tr.cumulative_updates[-1] == T * (T + 1) // 2


def test_divergence_is_reported():
    fs = sample_features(KERNEL, 10, seed=0)
    X, y = sample(DIST, 5, seed=0)
    with pytest.raises(DivergenceError, match="iteration"):
        fit_rff(fs, X, y, Schedule(lam=1e-320, gamma=1.0), LOGISTIC)
    with pytest.raises(DivergenceError):
        fit_kernel(KERNEL, X, y, Schedule(lam=1e-320, gamma=1.0), LOGISTIC)


def test_precondition_warnings():
    with pytest.warns(SchedulePreconditionWarning, match="1/L"):
        msgs = check_schedule_preconditions(Schedule(lam=0.001, gamma=500))
    assert len(msgs) == 1
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert check_schedule_preconditions(Schedule(lam=0.001, gamma=2000)) == []
        assert check_schedule_preconditions(Schedule(lam=0.001, gamma=2000), init_norm=0.0) == []


def test_default_checkpoints():
    c = default_checkpoints(12000, 60)
    assert len(c) == 60 and c[0] == 1 and c[-1] == 12000
    assert np.all(np.diff(c) > 0)
    assert_array_equal(default_checkpoints(5, 60), [1, 2, 3, 4, 5])
    assert_array_equal(default_checkpoints(0), [0])


def test_rff_scores_chunking():
    fs = sample_features(KERNEL, 12, seed=0)
    B = np.random.default_rng(0).normal(size=(3, 12))
    X, _ = sample(DIST, 25, seed=1)
    assert_allclose(rff_scores(fs, B, X, chunk=7), feature_map(fs, X) @ B.T)
