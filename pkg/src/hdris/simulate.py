"""Monte Carlo sweep drivers and experiment configuration.

Reproducibility contract: every (snr point, trial) pair derives its own RNG
stream from the root seed by counter-based spawning, so results are identical
no matter how trials are scheduled across workers; aggregation uses
compensated sums and full sorts.  Re-running a config (any thread count)
produces byte-identical CSV output.

Config files are JSON with keys mirroring ExperimentConfig; angles, when
pinned, are given in degrees and converted at the parse boundary.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, SystemDims, build_channels, sample_params
from .estimators import (
    build_permutations,
    hdr_estimate,
    ideal_estimate,
    krf_estimate,
    ls_estimate,
    matched_filter,
    simulate_observation,
)
from .metrics import (
    TrialMetrics,
    flops_analytic,
    flops_measured,
    nmse,
    spectral_efficiency,
    summarize,
)
from .training import TrainingInfeasibleError, make_training, validate_training

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "default_config",
    "load_config",
    "config_hash",
    "run_nmse_sweep",
    "run_se_sweep",
    "run_complexity_sweep",
    "write_csv",
]

ALLOWED_METHODS = ("hdr", "krf", "ls", "ideal")

_ANGLE_KEYS = (
    "az_bs", "el_bs",
    "az_ris_arr", "el_ris_arr",
    "az_ris_dep", "el_ris_dep",
    "az_ue", "el_ue",
)

_DIM_KEYS = (
    "n_bs_y", "n_bs_z", "n_ue_y", "n_ue_z",
    "n_ris_y", "n_ris_z", "n_pilots", "n_blocks",
)


class ConfigError(ValueError):
    """The experiment configuration is malformed or infeasible."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a sweep needs, minus scheduling details.

    ``threads`` and ``output_path`` affect execution only and are excluded
    from the config hash.  ``fixed_params``, when set, pins the link geometry
    for every trial instead of drawing it per trial.
    """

    dims: SystemDims
    snr_grid_db: tuple = (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0)
    n_trials: int = 500
    methods: tuple = ("hdr", "krf", "ls")
    seed: int = 0
    output_path: str | None = None
    threads: int = 1
    tx_power_watts: float = 1.0
    ris_grid: tuple = (16, 100, 400, 2500)
    measured_max_unknowns: int = 4096
    fixed_params: ChannelParams | None = None

    def __post_init__(self):
        if self.n_trials < 1:
            raise ConfigError("n_trials must be >= 1")
        if len(self.snr_grid_db) == 0:
            raise ConfigError("snr_grid_db must not be empty")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.tx_power_watts <= 0:
            raise ConfigError("tx_power_watts must be > 0")
        bad = [m for m in self.methods if m not in ALLOWED_METHODS]
        if bad:
            raise ConfigError(
                "unknown methods %s (allowed: %s)" % (bad, list(ALLOWED_METHODS))
            )
        if not self.dims.training_feasible():
            raise ConfigError(
                "infeasible dims: n_pilots*n_blocks=%d < n_bs*n_ris=%d"
                % (
                    self.dims.n_pilots * self.dims.n_blocks,
                    self.dims.n_bs * self.dims.n_ris,
                )
            )

    def to_dict(self) -> dict:
        d = {
            "dims": {k: getattr(self.dims, k) for k in _DIM_KEYS},
            "snr_grid_db": [float(s) for s in self.snr_grid_db],
            "n_trials": self.n_trials,
            "methods": list(self.methods),
            "seed": self.seed,
            "tx_power_watts": self.tx_power_watts,
            "ris_grid": [int(n) for n in self.ris_grid],
            "measured_max_unknowns": self.measured_max_unknowns,
        }
        if self.fixed_params is not None:
            d["angles_deg"] = {
                k: float(np.rad2deg(getattr(self.fixed_params, k)))
                for k in _ANGLE_KEYS
            }
        return d


def default_config() -> ExperimentConfig:
    """4x4 arrays at both ends and on the surface, 16 pilots x 16 blocks."""
    return ExperimentConfig(
        dims=SystemDims(
            n_bs_y=4, n_bs_z=4, n_ue_y=4, n_ue_z=4,
            n_ris_y=4, n_ris_z=4, n_pilots=16, n_blocks=16,
        )
    )


def load_config(path: str) -> ExperimentConfig:
    """Parse a JSON config file.  Unknown keys are rejected."""
    with open(path, "r", encoding="utf-8") as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError("invalid JSON in %s: %s" % (path, exc)) from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")

    known = {
        "dims", "snr_grid_db", "n_trials", "methods", "seed", "output_path",
        "threads", "tx_power_watts", "ris_grid", "measured_max_unknowns",
        "angles_deg",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigError("unknown config keys: %s" % sorted(unknown))

    kwargs = {}
    if "dims" in raw:
        dims_raw = raw["dims"]
        missing = [k for k in _DIM_KEYS if k not in dims_raw]
        extra = [k for k in dims_raw if k not in _DIM_KEYS]
        if missing or extra:
            raise ConfigError(
                "dims must have exactly keys %s (missing %s, extra %s)"
                % (list(_DIM_KEYS), missing, extra)
            )
        try:
            kwargs["dims"] = SystemDims(**{k: int(dims_raw[k]) for k in _DIM_KEYS})
        except (TypeError, ValueError) as exc:
            raise ConfigError("bad dims: %s" % exc) from exc
    else:
        kwargs["dims"] = default_config().dims

    if "angles_deg" in raw:
        ang = raw["angles_deg"]
        missing = [k for k in _ANGLE_KEYS if k not in ang]
        extra = [k for k in ang if k not in _ANGLE_KEYS]
        if missing or extra:
            raise ConfigError(
                "angles_deg must have exactly keys %s (missing %s, extra %s)"
                % (list(_ANGLE_KEYS), missing, extra)
            )
        kwargs["fixed_params"] = ChannelParams(
            **{k: float(np.deg2rad(float(ang[k]))) for k in _ANGLE_KEYS}
        )

    simple = {
        "snr_grid_db": lambda v: tuple(float(s) for s in v),
        "n_trials": int,
        "methods": lambda v: tuple(str(m).lower() for m in v),
        "seed": int,
        "output_path": str,
        "threads": int,
        "tx_power_watts": float,
        "ris_grid": lambda v: tuple(int(n) for n in v),
        "measured_max_unknowns": int,
    }
    for key, conv in simple.items():
        if key in raw:
            try:
                kwargs[key] = conv(raw[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError("bad value for %r: %s" % (key, exc)) from exc
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def config_hash(cfg: ExperimentConfig) -> str:
    """12 hex chars identifying the scientific content of a config."""
    blob = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


# ------------------------------------------------------------------ sweeps #


def _trial_rng(seed: int, snr_idx: int, trial: int) -> np.random.Generator:
    """Independent stream per (snr point, trial), stable under scheduling."""
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(snr_idx, trial))
    )


def _run_point(cfg, design, plan, methods, snr_idx, trial, want_se):
    """All requested methods scored on one shared observation."""
    snr_db = float(cfg.snr_grid_db[snr_idx])
    noise_var = cfg.tx_power_watts / 10.0 ** (snr_db / 10.0)
    rng = _trial_rng(cfg.seed, snr_idx, trial)
    params = cfg.fixed_params if cfg.fixed_params is not None else sample_params(rng)
    ch = build_channels(cfg.dims, params)
    obs = simulate_observation(ch, design, noise_var, rng=rng)
    cascade_obs = matched_filter(obs, design, check=False)

    out = {}
    for method in methods:
        if method == "hdr":
            est = hdr_estimate(cascade_obs, cfg.dims, plan=plan)
        elif method == "krf":
            est = krf_estimate(cascade_obs, cfg.dims)
        elif method == "ls":
            est = ls_estimate(cascade_obs, cfg.dims)
        elif method == "ideal":
            est = ideal_estimate(ch, plan=plan)
        else:  # pragma: no cover - filtered by config validation
            raise ConfigError("unknown method %r" % method)
        se = (
            spectral_efficiency(ch, est, cfg.tx_power_watts, noise_var)
            if want_se else None
        )
        out[method] = TrialMetrics(
            method=method,
            snr_db=snr_db,
            nmse=nmse(ch.cascade, est.cascade),
            se_bits=se,
        )
    return out


def _sweep(cfg: ExperimentConfig, methods, want_se: bool):
    """Run the trial grid and return {method: {snr_idx: [TrialMetrics]}}."""
    design = make_training(cfg.dims)
    report = validate_training(design)
    if not report.ok(1e-8):
        raise TrainingInfeasibleError(
            "constructed training design failed validation: %s" % (report,)
        )
    plan = build_permutations(cfg.dims)

    jobs = [(s, t) for s in range(len(cfg.snr_grid_db)) for t in range(cfg.n_trials)]

    def job(pair):
        s, t = pair
        return _run_point(cfg, design, plan, methods, s, t, want_se)

    if cfg.threads == 1:
        results = [job(p) for p in jobs]
    else:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(job, jobs))

    collected = {m: {s: [] for s in range(len(cfg.snr_grid_db))} for m in methods}
    for (s, _t), res in zip(jobs, results):
        for m in methods:
            collected[m][s].append(res[m])
    return collected


def _metric_rows(cfg, collected, metric_name, value_of):
    digest = config_hash(cfg)
    rows = []
    for method in collected:
        for s, snr_db in enumerate(cfg.snr_grid_db):
            values = [value_of(tm) for tm in collected[method][s]]
            mean, median = summarize(values)
            for stat, value in (("mean", mean), ("median", median)):
                rows.append({
                    "method": method,
                    "snr_db": float(snr_db),
                    "metric": metric_name,
                    "stat": stat,
                    "value": value,
                    "n_trials": cfg.n_trials,
                    "config_hash": digest,
                })
    return rows


def run_nmse_sweep(cfg: ExperimentConfig):
    """Estimation error vs SNR for the configured methods."""
    methods = tuple(m for m in cfg.methods if m != "ideal")
    if not methods:
        raise ConfigError("nmse sweep needs at least one estimator method")
    collected = _sweep(cfg, methods, want_se=False)
    return _metric_rows(cfg, collected, "nmse", lambda tm: tm.nmse)


def run_se_sweep(cfg: ExperimentConfig):
    """Beamformed spectral efficiency vs SNR, always including the perfect-CSI
    benchmark row."""
    methods = tuple(cfg.methods) + (("ideal",) if "ideal" not in cfg.methods else ())
    collected = _sweep(cfg, methods, want_se=True)
    return _metric_rows(cfg, collected, "se_bits_per_hz", lambda tm: tm.se_bits)


def _complexity_dims(cfg: ExperimentConfig, n_ris: int) -> SystemDims:
    root = math.isqrt(n_ris)
    if root * root != n_ris:
        raise ConfigError(
            "complexity grid entries must be perfect squares (square surface), "
            "got %d" % n_ris
        )
    base = cfg.dims
    n_bs, n_pilots = base.n_bs, base.n_pilots
    n_blocks = max(n_ris, math.ceil(n_bs * n_ris / n_pilots))
    return SystemDims(
        n_bs_y=base.n_bs_y, n_bs_z=base.n_bs_z,
        n_ue_y=base.n_ue_y, n_ue_z=base.n_ue_z,
        n_ris_y=root, n_ris_z=root,
        n_pilots=n_pilots, n_blocks=n_blocks,
    )


def run_complexity_sweep(cfg: ExperimentConfig):
    """Analytic MAC counts per method over the surface-size grid, plus
    instrumented counts where the training operator fits in memory
    (n_bs*n_ris <= measured_max_unknowns)."""
    digest = config_hash(cfg)
    rows = []
    for n_ris in cfg.ris_grid:
        dims_n = _complexity_dims(cfg, n_ris)
        for method in ("hdr", "krf", "ls"):
            rows.append({
                "method": method,
                "n_ris": n_ris,
                "metric": "flops_analytic",
                "stat": "exact",
                "value": flops_analytic(method, dims_n),
                "n_trials": 1,
                "config_hash": digest,
            })
        if dims_n.n_bs * dims_n.n_ris <= cfg.measured_max_unknowns:
            for method in ("hdr", "krf", "ls"):
                rows.append({
                    "method": method,
                    "n_ris": n_ris,
                    "metric": "flops_measured",
                    "stat": "exact",
                    "value": flops_measured(method, dims_n, seed=cfg.seed),
                    "n_trials": 1,
                    "config_hash": digest,
                })
    return rows


def write_csv(rows, dest) -> None:
    """Write rows (list of dicts sharing one key set) as UTF-8, LF-terminated
    CSV to a path or file-like object."""
    import csv

    if not rows:
        raise ValueError("no rows to write")
    fieldnames = list(rows[0].keys())

    def _emit(f):
        writer = csv.DictWriter(f, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)

    if hasattr(dest, "write"):
        _emit(dest)
    else:
        with open(dest, "w", newline="", encoding="utf-8") as f:
            _emit(f)
