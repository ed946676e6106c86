"""Config-driven simulation: one validated config in, one trace out."""

from __future__ import annotations

import numpy as np

from . import __version__
from .config import ExperimentConfig, sweep_grid
from .experiments import ExperimentSpec, point_rng, run_experiment
from .io import TraceRecord
from .photodynamics import g2_curve, saturation_curve

# (name, unit) of the sweep column written for each sequence kind
SWEEP_COLUMNS = {
    "odmr": ("mw_frequency", "MHz"),
    "rabi": ("mw_duration", "us"),
    "ramsey": ("free_evolution", "us"),
    "g2": ("delay", "ns"),
    "saturation": ("power", "uW"),
}
SIGNAL_UNITS = {
    "odmr": "contrast",
    "rabi": "contrast",
    "ramsey": "contrast difference",
    "g2": "normalized coincidences",
    "saturation": "counts/s",
}


def experiment_spec(cfg: ExperimentConfig) -> ExperimentSpec:
    s, r = cfg.sequence, cfg.run
    common = dict(
        laser=s.laser_ns, delay=s.delay_ns, window=s.window_ns,
        repetitions=r.repetitions, shot_noise=r.shot_noise, sample_sites=r.sample_sites,
        unit_contrast=r.unit_contrast, seed=r.seed,
    )
    grid = tuple(sweep_grid(cfg))
    if s.kind == "odmr":
        return ExperimentSpec("odmr", grid, pulse=s.pi_pulse_ns, **common)
    if s.kind == "rabi":
        return ExperimentSpec("rabi", grid, mw_freq=s.mw_mhz, **common)
    return ExperimentSpec("ramsey", grid, mw_freq=s.mw_mhz, pulse=s.half_pi_ns, **common)


def _poisson(expected: np.ndarray, scale: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    counts = np.array([point_rng(seed, i).poisson(m * scale) for i, m in enumerate(expected)])
    return counts / scale, np.sqrt(np.maximum(counts, 1)) / scale


def simulate(cfg: ExperimentConfig, jobs: int = 1, seed: int | None = None) -> TraceRecord:
    """Run the configured sweep.  ``seed`` overrides ``run.seed``."""
    if seed is not None:
        cfg = cfg.model_copy(update={"run": cfg.run.model_copy(update={"seed": int(seed)})})
    system = cfg.build_system()
    s, r = cfg.sequence, cfg.run
    grid = sweep_grid(cfg)
    extra = {}
    if s.kind in ("odmr", "rabi", "ramsey"):
        trace = run_experiment(experiment_spec(cfg), system, jobs)
        sweep = grid / 1000.0 if s.kind != "odmr" else grid
        signal, sigma = trace.signal, trace.sigma
        extra["photons_per_shot"] = trace.photons_per_shot
    elif s.kind == "g2":
        dyn = system.dynamics if s.power_uw is None else system.dynamics.at_power(s.power_uw)
        bg = dyn.background + dyn.background_per_uw * (s.power_uw or 0.0)
        g = g2_curve(dyn, grid, background_cps=bg, jitter_ns=s.jitter_ns)
        sweep = grid
        if r.shot_noise:
            signal, sigma = _poisson(g, s.pairs_per_bin, r.seed)
        else:
            signal, sigma = g, np.zeros_like(g)
    else:
        rate = saturation_curve(system.dynamics, grid)
        sweep = grid
        if r.shot_noise:
            signal, sigma = _poisson(rate, s.integration_s, r.seed)
        else:
            signal, sigma = rate, np.zeros_like(rate)
    name, unit = SWEEP_COLUMNS[s.kind]
    meta = {
        "kind": s.kind,
        "sweep": name,
        "sweep_unit": unit,
        "signal_unit": SIGNAL_UNITS[s.kind],
        "seed": r.seed,
        "config_hash": cfg.digest(),
        "config": cfg.canonical(),
        "version": __version__,
        **extra,
    }
    return TraceRecord(sweep, signal, sigma, meta)

