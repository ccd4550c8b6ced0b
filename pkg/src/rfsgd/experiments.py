"""Named experiments on the four-square distribution, written out as CSV."""
from __future__ import annotations

import logging
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _backend
from .config import DATA, FEATURES, SCATTER, SPECTRA, TEST, ExperimentConfig, stream
from .data import SampleStream, SyntheticDistribution, sample
from .evaluation import Aggregate, Evaluator, RunTrace, aggregate_runs
from .features import GaussianKernel, sample_features
from .loss import SurrogateLoss, m_delta
from .optim import (Schedule, SchedulePreconditionWarning, check_schedule_preconditions,
                    default_checkpoints, run_kernel_sgd, run_rff_sgd)
from .spectra import norm_decay_study

log = logging.getLogger(__name__)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    files: list = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)
    crossover: dict = field(default_factory=dict)
    study: object = None
    summary: str = ""


class Context:
    """Objects shared by every run of one experiment."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.dist = SyntheticDistribution.from_pairing(cfg.pairing)
        self.loss = SurrogateLoss(cfg.loss)
        self.schedule = Schedule(cfg.lam, cfg.gamma)
        self.kernel = GaussianKernel(float(cfg.sigma), 2)
        X, y = sample(self.dist, cfg.n_test, stream(cfg.base_seed, TEST))
        self.evaluator = Evaluator(self.dist, self.loss, X, y)


def _one_run(ctx: Context, model, T, checkpoints, run_id) -> RunTrace:
    cfg = ctx.cfg
    data = SampleStream(ctx.dist, stream(cfg.base_seed, DATA, run_id))
    if model == "kernel":
        return run_kernel_sgd(ctx.kernel, data, T, ctx.schedule, ctx.loss, checkpoints,
                              ctx.evaluator, run_id=run_id)
    fs = sample_features(ctx.kernel, model, stream(cfg.base_seed, FEATURES, run_id))
    return run_rff_sgd(fs, data, T, ctx.schedule, ctx.loss, checkpoints,
                       ctx.evaluator, run_id=run_id)


_WORKER_CTX = None


def _init_worker(cfg):
    global _WORKER_CTX
    _WORKER_CTX = Context(cfg)


def _worker(args):
    return _one_run(_WORKER_CTX, *args)


def run_many(ctx: Context, model, T, checkpoints, n_jobs=1):
    """Independent seeded runs; ``model`` is a feature count or ``"kernel"``.

    Results come back in run order, so the worker count never changes output.
    """
    jobs = [(model, T, checkpoints, r) for r in range(ctx.cfg.n_runs)]
    if n_jobs <= 1:
        return [_one_run(ctx, *j) for j in jobs]
    with ProcessPoolExecutor(n_jobs, initializer=_init_worker, initargs=(ctx.cfg,)) as ex:
        return list(ex.map(_worker, jobs))


def first_hit(agg: Aggregate, threshold):
    """First checkpoint whose mean excess error is at most ``threshold``."""
    ok = agg.mean_excess_error <= threshold
    if not ok.any():
        return None
    i = int(np.argmax(ok))
    return int(agg.iterations[i]), int(agg.cumulative_updates[i])


def provenance_header(cfg: ExperimentConfig) -> str:
    return "".join(f"# {line}\n" for line in cfg.to_lines())


def write_csv(path: Path, cfg, header, rows):
    body = "\n".join([header, *rows]) + "\n"
    path.write_text(provenance_header(cfg) + body)
    return path


def _trace_rows(traces):
    for tr in traces:
        yield from tr.csv_rows()


def _write_model(out, cfg, name, traces, agg, files):
    files.append(write_csv(out / f"{cfg.experiment}_{name}runs.csv", cfg,
                           RunTrace.CSV_HEADER, _trace_rows(traces)))
    files.append(write_csv(out / f"{cfg.experiment}_{name}summary.csv", cfg,
                           Aggregate.CSV_HEADER, agg.csv_rows()))


def _fig1(cfg, out, res):
    dist = SyntheticDistribution.from_pairing(cfg.pairing)
    X, y = sample(dist, cfg.n_scatter, stream(cfg.base_seed, SCATTER))
    rows = (f"{x1!r},{x2!r},{int(lab)}" for (x1, x2), lab in zip(X.tolist(), y))
    res.files.append(write_csv(out / "fig1-data_samples.csv", cfg, "x1,x2,y", rows))
    res.summary = f"wrote {cfg.n_scatter} labelled samples"


def _fig2(cfg, out, res):
    ctx = Context(cfg)
    cps = default_checkpoints(cfg.T, cfg.n_checkpoints)
    traces = run_many(ctx, cfg.M, cfg.T, cps, cfg.n_jobs)
    agg = aggregate_runs(traces)
    res.traces[cfg.M], res.aggregates[cfg.M] = traces, agg
    _write_model(out, cfg, "", traces, agg, res.files)
    err_rows = (f"{int(i)},{int(u)},{float(m)!r},{float(s)!r},{float(r)!r}" for i, u, m, s, r in
                zip(agg.iterations, agg.cumulative_updates, agg.mean_excess_error,
                    agg.std_excess_error, agg.mean_error))
    loss_rows = (f"{int(i)},{int(u)},{float(m)!r},{float(s)!r},{float(r)!r}" for i, u, m, s, r in
                 zip(agg.iterations, agg.cumulative_updates, agg.mean_excess_loss,
                     agg.std_excess_loss, agg.mean_loss))
    res.files.append(write_csv(out / "fig2_error.csv", cfg,
                               "iteration,cumulative_updates,mean_excess_error,std_excess_error,mean_error",
                               err_rows))
    res.files.append(write_csv(out / "fig2_loss.csv", cfg,
                               "iteration,cumulative_updates,mean_excess_loss,std_excess_loss,mean_loss",
                               loss_rows))
    res.summary = (f"M={cfg.M}: final excess error {agg.mean_excess_error[-1]:.5f} "
                   f"+/- {agg.std_excess_error[-1]:.5f}, final excess loss "
                   f"{agg.mean_excess_loss[-1]:.5f} +/- {agg.std_excess_loss[-1]:.5f}")


def _fig4(cfg, out, res):
    ctx = Context(cfg)
    cps = default_checkpoints(cfg.T, cfg.n_checkpoints)
    lines = []
    for M in cfg.M_list:
        traces = run_many(ctx, M, cfg.T, cps, cfg.n_jobs)
        agg = aggregate_runs(traces)
        res.traces[M], res.aggregates[M] = traces, agg
        _write_model(out, cfg, f"M{M}_", traces, agg, res.files)
        lines.append(f"M={M}: final excess error {agg.mean_excess_error[-1]:.5f} "
                     f"+/- {agg.std_excess_error[-1]:.5f}")
    res.summary = "\n".join(lines)


def _fig5(cfg, out, res):
    ctx = Context(cfg)
    models = [*cfg.fig5_M_list, "kernel"]
    for model in models:
        T = cfg.T_kernel if model == "kernel" else cfg.T
        cps = default_checkpoints(T, cfg.n_checkpoints)
        traces = run_many(ctx, model, T, cps, cfg.n_jobs)
        agg = aggregate_runs(traces)
        res.traces[model], res.aggregates[model] = traces, agg
        name = "kernel_" if model == "kernel" else f"M{model}_"
        _write_model(out, cfg, name, traces, agg, res.files)
    rows, lines = [], []
    for thr in cfg.thresholds:
        hits = {m: first_hit(res.aggregates[m], thr) for m in models}
        res.crossover[thr] = hits
        parts = []
        for m in models:
            label = "kernel" if m == "kernel" else f"rff-M{m}"
            h = hits[m]
            rows.append(f"{label},{thr!r},{h[0] if h else ''},{h[1] if h else ''}")
            parts.append(f"{label} {'never' if h is None else f'{h[1]} updates (t={h[0]})'}")
        lines.append(f"excess error <= {thr:g}: " + "; ".join(parts))
    res.files.append(write_csv(out / "fig5_crossover.csv", cfg,
                               "model,threshold,iteration,cumulative_updates", rows))
    res.summary = "\n".join(lines)


def _norm_decay(cfg, out, res):
    dist = SyntheticDistribution.from_pairing(cfg.pairing)
    X, _ = sample(dist, cfg.n_points, stream(cfg.base_seed, SPECTRA))
    study = norm_decay_study(GaussianKernel(float(cfg.sigma), 2), X, cfg.norm_M_list,
                             cfg.replicates, seed=stream(cfg.base_seed, SPECTRA, 1),
                             delta=cfg.delta)
    res.study = study
    res.files.append(write_csv(out / "norm-decay_study.csv", cfg, study.ROWS_HEADER,
                               study.csv_rows()))
    res.files.append(write_csv(out / "norm-decay_summary.csv", cfg, study.SUMMARY_HEADER,
                               study.summary_rows()))
    res.summary = (f"log-log slope {study.slope:.4f}; bound violations "
                   f"{study.violations}/{study.normalized_norm.size} "
                   f"(plug-in ||T||_op = {study.plugin_op_norm:.4f})")


_RUNNERS = {"fig1-data": _fig1, "fig2": _fig2, "fig4": _fig4, "fig5": _fig5,
            "norm-decay": _norm_decay}


def prepare_outdir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror}") from None
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")
    return out


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run the configured experiment; CSV files land in ``cfg.outdir``."""
    cfg.validate()
    if cfg.sigma == "median":
        raise ValueError("sigma must be resolved before running; use resolve_config")
    out = prepare_outdir(cfg.outdir)
    res = ExperimentResult(cfg)
    if cfg.experiment not in ("fig1-data", "norm-decay"):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SchedulePreconditionWarning)
            notes = check_schedule_preconditions(Schedule(cfg.lam, cfg.gamma))
        for msg in notes:
            log.warning("rate-bound precondition not met: %s", msg)
    _RUNNERS[cfg.experiment](cfg, out, res)
    header = f"{cfg.experiment} (sigma={float(cfg.sigma):.5g}, backend={_backend.BACKEND})"
    if cfg.loss == "logistic":
        delta = SyntheticDistribution.from_pairing(cfg.pairing).delta
        header += f", m({delta:g})={m_delta(SurrogateLoss(), delta):.5f}"
    res.summary = header + "\n" + res.summary
    return res
