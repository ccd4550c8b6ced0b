import dataclasses

import numpy as np
import pytest

from rfsgd import experiments
from rfsgd.cli import main
from rfsgd.config import (ConfigError, ExperimentConfig, median_sigma, read_provenance,
                          resolve_config)
from rfsgd.experiments import run_experiment

SMALL = {"n_runs": "3", "n_test": "500", "T": "300", "T_kernel": "200",
         "n_checkpoints": "12"}


def _body(path):
    return "".join(l for l in open(path) if not l.startswith("#"))


def test_defaults_from_empty_file(tmp_path):
    f = tmp_path / "empty.cfg"
    f.write_text("")
    cfg = resolve_config(f, resolve_sigma=False)
    assert cfg == ExperimentConfig()
    assert (cfg.lam, cfg.gamma, cfg.T, cfg.M, cfg.n_runs, cfg.n_test) == \
        (0.001, 500.0, 12000, 1000, 20, 20000)


def test_paper_profile():
    cfg = resolve_config(overrides={"profile": "paper"}, resolve_sigma=False)
    assert (cfg.n_runs, cfg.n_test) == (100, 100000)
    cfg = resolve_config(overrides={"profile": "paper", "n_runs": "7"}, resolve_sigma=False)
    assert cfg.n_runs == 7


def test_flag_overrides_file(tmp_path):
    f = tmp_path / "a.cfg"
    f.write_text("# comment\nlam = 0.01\nM_list=100,1000\n\nsigma=0.4\n")
    cfg = resolve_config(f, {"lam": "0.001"})
    assert cfg.lam == 0.001
    assert cfg.M_list == (100, 1000)
    assert cfg.sigma == 0.4


def test_unknown_key_rejected(tmp_path):
    f = tmp_path / "a.cfg"
    f.write_text("lamda=0.01\n")
    with pytest.raises(ConfigError, match="lamda"):
        resolve_config(f)


def test_type_error_names_key():
    with pytest.raises(ConfigError, match="n_runs"):
        resolve_config(overrides={"n_runs": "many"})


@pytest.mark.parametrize("key,value", [("M", "101"), ("lam", "-1"), ("n_runs", "0"),
                                       ("loss", "squared"), ("sigma", "-2"),
                                       ("experiment", "fig3")])
def test_config_violations(key, value):
    with pytest.raises(ConfigError, match=key):
        resolve_config(overrides={key: value})


def test_median_sigma_stable_across_seeds():
    vals = np.array([median_sigma(ExperimentConfig(base_seed=s)) for s in range(10)])
    assert np.all(vals > 0)
    assert np.all(np.abs(vals - vals.mean()) < 0.05 * vals.mean())


def test_sigma_resolved_to_number():
    cfg = resolve_config()
    assert isinstance(cfg.sigma, float) and cfg.sigma > 0


def test_fig2_outputs_and_provenance(tmp_path):
    cfg = resolve_config(overrides={**SMALL, "experiment": "fig2", "outdir": str(tmp_path)})
    res = run_experiment(cfg)
    names = sorted(p.name for p in res.files)
    assert names == ["fig2_error.csv", "fig2_loss.csv", "fig2_runs.csv", "fig2_summary.csv"]
    for p in res.files:
        assert read_provenance(p) == cfg
    err = _body(tmp_path / "fig2_error.csv").splitlines()
    assert err[0] == "iteration,cumulative_updates,mean_excess_error,std_excess_error,mean_error"
    assert len(err) == 1 + 12
    summary = _body(tmp_path / "fig2_summary.csv").splitlines()
    assert summary[0] == ("iteration,cumulative_updates,mean_excess_error,std_excess_error,"
                          "mean_excess_loss,std_excess_loss")
    runs = _body(tmp_path / "fig2_runs.csv").splitlines()
    assert len(runs) == 1 + 3 * 12
    assert [r.split(",")[0] for r in runs[1:13]] == ["0"] * 12


def test_byte_identical_reruns(tmp_path):
    over = {**SMALL, "experiment": "fig5"}
    a = run_experiment(resolve_config(overrides={**over, "outdir": str(tmp_path / "a")}))
    b = run_experiment(resolve_config(overrides={**over, "outdir": str(tmp_path / "b")}))
    for fa, fb in zip(a.files, b.files):
        assert fa.name == fb.name
        assert _body(fa) == _body(fb)


def test_worker_count_does_not_change_output(tmp_path):
    over = {**SMALL, "experiment": "fig2"}
    a = run_experiment(resolve_config(overrides={**over, "outdir": str(tmp_path / "a")}))
    b = run_experiment(resolve_config(overrides={**over, "n_jobs": "2",
                                                 "outdir": str(tmp_path / "b")}))
    for fa, fb in zip(a.files, b.files):
        assert _body(fa) == _body(fb)


def test_fig4_data_streams_independent_of_M(tmp_path, monkeypatch):
    seen = []
    orig = experiments.SampleStream.take

    def spy(self, n):
        X, y = orig(self, n)
        seen.append((X.copy(), y.copy()))
        return X, y

    monkeypatch.setattr(experiments.SampleStream, "take", spy)
    cfg = resolve_config(overrides={**SMALL, "experiment": "fig4", "M_list": "100,1000",
                                    "outdir": str(tmp_path)})
    res = run_experiment(cfg)
    assert len(seen) == 6
    for r in range(3):
        assert np.array_equal(seen[r][0], seen[3 + r][0])
        assert np.array_equal(seen[r][1], seen[3 + r][1])
    assert {p.name for p in res.files} >= {"fig4_M100_summary.csv", "fig4_M1000_runs.csv"}


def test_fig5_crossover_report(tmp_path):
    cfg = resolve_config(overrides={**SMALL, "experiment": "fig5", "outdir": str(tmp_path)})
    res = run_experiment(cfg)
    assert "excess error <= 0.02" in res.summary
    rows = _body(tmp_path / "fig5_crossover.csv").splitlines()
    assert rows[0] == "model,threshold,iteration,cumulative_updates"
    assert len(rows) == 1 + 3 * len(cfg.thresholds)
    ker = res.aggregates["kernel"]
    assert np.array_equal(ker.cumulative_updates, ker.iterations * (ker.iterations + 1) // 2)
    assert np.array_equal(res.aggregates[500].cumulative_updates, 500 * res.aggregates[500].iterations)


def test_norm_decay_and_fig1(tmp_path):
    cfg = resolve_config(overrides={"experiment": "norm-decay", "n_points": "40",
                                    "norm_M_list": "16,64,256", "replicates": "5",
                                    "outdir": str(tmp_path)})
    res = run_experiment(cfg)
    assert {p.name for p in res.files} == {"norm-decay_study.csv", "norm-decay_summary.csv"}
    assert len(_body(tmp_path / "norm-decay_study.csv").splitlines()) == 1 + 15
    cfg = dataclasses.replace(cfg, experiment="fig1-data", n_scatter=50)
    res = run_experiment(cfg)
    lines = _body(res.files[0]).splitlines()
    assert lines[0] == "x1,x2,y" and len(lines) == 51


def test_run_requires_resolved_sigma(tmp_path):
    with pytest.raises(ValueError, match="sigma"):
        run_experiment(ExperimentConfig(outdir=str(tmp_path)))


def test_cli_runs(tmp_path, capsys):
    args = ["fig2", "--outdir", str(tmp_path)]
    for k, v in SMALL.items():
        args += [f"--{k}", v]
    assert main(args) == 0
    out = capsys.readouterr().out
    assert "final excess error" in out
    assert (tmp_path / "fig2_error.csv").exists()


def test_cli_config_file_and_equals_syntax(tmp_path, capsys):
    f = tmp_path / "run.cfg"
    f.write_text("n_scatter=10\n")
    assert main(["fig1-data", "--config", str(f), f"--outdir={tmp_path}"]) == 0
    assert read_provenance(tmp_path / "fig1-data_samples.csv").n_scatter == 10


def test_cli_unknown_experiment(capsys):
    with pytest.raises(SystemExit):
        main(["fig3"])
    assert "unknown experiment" in capsys.readouterr().err


def test_cli_bad_config(capsys):
    with pytest.raises(SystemExit):
        main(["fig2", "--M", "99"])
    assert "feature counts must be positive and even" in capsys.readouterr().err


def test_cli_unwritable_outdir(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["fig1-data", "--outdir", str(blocker / "sub")]) == 2
    assert "cannot create output directory" in capsys.readouterr().err
