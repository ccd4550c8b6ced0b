"""Experiment configuration: flat ``key=value`` files plus command-line overrides."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

EXPERIMENTS = ("fig1-data", "fig2", "fig4", "fig5", "norm-decay")
PROFILES = {
    "desk": {"n_runs": 20, "n_test": 20000},
    "paper": {"n_runs": 100, "n_test": 100000},
}

# Independent RNG streams derived from the base seed.
DATA, FEATURES, TEST, PILOT, SPECTRA, SCATTER = range(6)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "fig2"
    profile: str = "desk"
    base_seed: int = 0
    lam: float = 1e-3
    gamma: float = 500.0
    sigma: object = "median"
    pilot_size: int = 500
    loss: str = "logistic"
    pairing: str = "diagonal"
    M: int = 1000
    M_list: tuple = (100, 200, 500, 1000)
    T: int = 12000
    n_runs: int = 20
    n_test: int = 20000
    n_checkpoints: int = 60
    fig5_M_list: tuple = (500, 1000)
    T_kernel: int = 4000
    thresholds: tuple = (0.02, 0.005, 0.002)
    n_scatter: int = 2000
    n_points: int = 200
    norm_M_list: tuple = (16, 32, 64, 128, 256, 512, 1024, 2048, 4096)
    replicates: int = 10
    delta: float = 0.05
    n_jobs: int = 1
    outdir: str = "results"

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.profile not in PROFILES:
            raise ConfigError(f"profile: expected one of {sorted(PROFILES)}, got {self.profile!r}")
        for name in ("lam", "gamma", "delta"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name}: must be positive")
        for name in ("pilot_size", "n_runs", "n_test", "n_checkpoints", "n_scatter",
                     "n_points", "replicates", "n_jobs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name}: must be at least 1")
        for name in ("T", "T_kernel"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name}: must be non-negative")
        for name in ("M", "M_list", "fig5_M_list", "norm_M_list"):
            vals = np.atleast_1d(getattr(self, name))
            if np.any(vals < 2) or np.any(vals % 2):
                raise ConfigError(f"{name}: feature counts must be positive and even")
        if list(self.norm_M_list) != sorted(set(self.norm_M_list)):
            raise ConfigError("norm_M_list: must be strictly increasing")
        if self.replicates < 5 and self.experiment == "norm-decay":
            raise ConfigError("replicates: need at least 5")
        if self.loss not in ("logistic", "hinge"):
            raise ConfigError(f"loss: expected 'logistic' or 'hinge', got {self.loss!r}")
        if self.pairing not in ("diagonal", "anti"):
            raise ConfigError(f"pairing: expected 'diagonal' or 'anti', got {self.pairing!r}")
        if self.sigma != "median" and not (isinstance(self.sigma, float) and self.sigma > 0):
            raise ConfigError(f"sigma: expected 'median' or a positive number, got {self.sigma!r}")
        return self

    def to_lines(self):
        """``key=value`` lines that :func:`parse_text` reads back to this config."""
        return [f"{f.name}={_format(getattr(self, f.name))}" for f in fields(self)]


def _format(v):
    if isinstance(v, tuple):
        return ",".join(_format(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_int(s):
    return int(s)


def _parse_float(s):
    return float(s)


def _parse_sigma(s):
    return "median" if s.strip() == "median" else float(s)


def _tuple_of(conv):
    def parse(s):
        return tuple(conv(p) for p in s.split(",") if p.strip())
    return parse


_PARSERS = {
    "experiment": str, "profile": str, "loss": str, "pairing": str, "outdir": str,
    "sigma": _parse_sigma,
    "lam": _parse_float, "gamma": _parse_float, "delta": _parse_float,
    "M_list": _tuple_of(int), "fig5_M_list": _tuple_of(int), "norm_M_list": _tuple_of(int),
    "thresholds": _tuple_of(float),
}
KEYS = tuple(f.name for f in fields(ExperimentConfig))


def parse_text(text: str) -> dict:
    """Parse ``key=value`` lines into typed values; ``#`` starts a comment line."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        out[key] = value
    return coerce(out)


def coerce(raw: dict) -> dict:
    out = {}
    for key, value in raw.items():
        key = key.replace("-", "_")
        if key not in KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        if not isinstance(value, str):
            out[key] = value
            continue
        try:
            out[key] = _PARSERS.get(key, _parse_int)(value)
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {value!r}") from None
    return out


def resolve_config(path=None, overrides=None, resolve_sigma=True) -> ExperimentConfig:
    """Merge defaults, the profile, a config file and overrides (in that order).

    With ``resolve_sigma``, ``sigma=median`` is replaced by the median pairwise
    distance of a pilot sample drawn from its own RNG stream.
    """
    values = parse_text(Path(path).read_text()) if path else {}
    values.update(coerce(dict(overrides or {})))
    profile = values.get("profile", "desk")
    if profile not in PROFILES:
        raise ConfigError(f"profile: expected one of {sorted(PROFILES)}, got {profile!r}")
    merged = {**PROFILES[profile], **values}
    cfg = ExperimentConfig(**merged).validate()
    if resolve_sigma and cfg.sigma == "median":
        cfg = dataclasses.replace(cfg, sigma=median_sigma(cfg))
    return cfg


def median_sigma(cfg: ExperimentConfig) -> float:
    from .data import SyntheticDistribution, sample
    from .features import median_bandwidth

    X, _ = sample(SyntheticDistribution.from_pairing(cfg.pairing), cfg.pilot_size,
                  stream(cfg.base_seed, PILOT))
    return median_bandwidth(X)


def stream(base_seed, kind, *extra):
    return np.random.SeedSequence([int(base_seed), kind, *map(int, extra)])


def read_provenance(path) -> ExperimentConfig:
    """Rebuild the config recorded in a CSV file's ``#`` header."""
    lines = []
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            lines.append(line[1:].strip())
    return ExperimentConfig(**parse_text("\n".join(lines)))
