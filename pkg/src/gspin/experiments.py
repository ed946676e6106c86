"""Sweeps over pulse sequences: ODMR spectra, Rabi and Ramsey traces.

Every sweep point is an independent work item.  Its random stream comes from
``SeedSequence(seed, spawn_key=(index,))``, a counter-based derivation from
the master seed, so results do not depend on how points are scheduled.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import N_SITES
from .sequences import (
    DEFAULT_DELAY_NS,
    DEFAULT_LASER_NS,
    DEFAULT_WINDOW_NS,
    PulseSequence,
    SpinSystem,
    pulsed_odmr_sequence,
    ramsey_sequence,
    reference_photons,
    simulate_repetition,
    site_lines,
)

SWEEPS = {"odmr": "mw_frequency", "rabi": "mw_duration", "ramsey": "free_evolution"}


@dataclass(frozen=True)
class ExperimentSpec:
    """One pulsed sweep.

    ``pulse`` is the MW pulse length in ns: the fixed pulse of an ODMR sweep
    and the pi/2 pulse of a Ramsey sweep; Rabi sweeps take it from the grid.
    Grid units are MHz for ODMR and ns otherwise.
    """

    kind: str
    grid: tuple[float, ...]
    mw_freq: float | None = None
    pulse: float | None = None
    laser: float = DEFAULT_LASER_NS
    delay: float = DEFAULT_DELAY_NS
    window: float = DEFAULT_WINDOW_NS
    repetitions: int = 1
    shot_noise: bool = False
    sample_sites: bool = False
    unit_contrast: bool = False
    seed: int = 0
    photons_per_shot: float | None = None

    def __post_init__(self):
        if self.kind not in SWEEPS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        grid = tuple(float(v) for v in self.grid)
        object.__setattr__(self, "grid", grid)
        d = np.diff(grid)
        if len(grid) < 1 or not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("grid must be strictly monotone")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.kind != "odmr" and self.mw_freq is None:
            raise ValueError(f"{self.kind} needs mw_freq")
        if self.kind in ("odmr", "ramsey") and not (self.pulse and self.pulse > 0):
            raise ValueError(f"{self.kind} needs a positive pulse duration")

    @property
    def sweep_variable(self) -> str:
        return SWEEPS[self.kind]

    def arms(self, x: float) -> list[tuple[float, PulseSequence]]:
        """Signed sequences whose readouts combine into the signal at ``x``."""
        common = dict(laser=self.laser, delay=self.delay, window=self.window)
        if self.kind == "odmr":
            return [(1.0, pulsed_odmr_sequence(x, self.pulse, **common))]
        if self.kind == "rabi":
            return [(1.0, pulsed_odmr_sequence(self.mw_freq, x, **common))]
        # +pi/2 minus -pi/2 second pulse; positive fringe at zero delay
        return [
            (1.0, ramsey_sequence(self.mw_freq, self.pulse, x, 0.0, **common)),
            (-1.0, ramsey_sequence(self.mw_freq, self.pulse, x, np.pi, **common)),
        ]


@dataclass(frozen=True)
class Trace:
    """Site-averaged sweep result.

    ``arms`` holds the noiseless occupancy-weighted mean readout of each
    signed arm; ``signal`` is their signed sum, possibly resampled.
    """

    sweep: np.ndarray
    signal: np.ndarray
    sigma: np.ndarray
    arms: np.ndarray
    signs: tuple[float, ...]
    photons_per_shot: float
    sweep_unit: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def clean(self) -> np.ndarray:
        return np.asarray(self.signs) @ self.arms


def point_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


def site_values(spec: ExperimentSpec, system: SpinSystem, x: float) -> np.ndarray:
    """Readout of every arm for every site, shape ``(n_arms, 6)``."""
    d = system.defect
    return np.array([
        [simulate_repetition(seq, s, d, system.drive, system.dynamics, spec.unit_contrast)[0]
         for s in range(N_SITES)]
        for _, seq in spec.arms(x)
    ])


def photons_per_shot(spec: ExperimentSpec, system: SpinSystem) -> float:
    """Detected photons per repetition for unit signal (the off-resonant reference)."""
    if spec.photons_per_shot is not None:
        return float(spec.photons_per_shot)
    _, seq = spec.arms(spec.grid[0])[0]
    return float(reference_photons(seq, system.dynamics)[0])


def _resample(arm_means, signs, repetitions, lam, rng):
    n_lam = repetitions * lam
    counts = rng.poisson(np.clip(arm_means, 0, None) * n_lam)
    signal = float(np.dot(signs, counts) / n_lam)
    sigma = float(np.sqrt(max(counts.sum(), 1)) / n_lam)
    return signal, sigma


def evaluate_point(spec: ExperimentSpec, system: SpinSystem, index: int, lam: float):
    """Return ``(arm_means, signal, sigma)`` for grid point ``index``."""
    x = spec.grid[index]
    w = system.ensemble.weights
    vals = site_values(spec, system, x)
    arm_means = vals @ w
    signs = np.array([s for s, _ in spec.arms(x)])
    rng = point_rng(spec.seed, index)
    sampled = arm_means
    sigma = 0.0
    if spec.sample_sites:
        n = spec.repetitions
        sampled = np.array([rng.multinomial(n, w) @ v / n for v in vals])
        if not spec.shot_noise:
            var = sum(w @ (v - m) ** 2 for v, m in zip(vals, arm_means)) / n
            sigma = float(np.sqrt(var))
    if spec.shot_noise:
        signal, sigma = _resample(sampled, signs, spec.repetitions, lam, rng)
    else:
        signal = float(signs @ sampled)
    return arm_means, signal, sigma


def _evaluate_chunk(args):
    spec, system, indices, lam = args
    return [evaluate_point(spec, system, i, lam) for i in indices]


def run_experiment(spec: ExperimentSpec, system: SpinSystem, jobs: int = 1) -> Trace:
    n = len(spec.grid)
    lam = photons_per_shot(spec, system)
    if jobs > 1 and n > 1:
        chunks = [list(c) for c in np.array_split(np.arange(n), min(jobs * 4, n))]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = pool.map(_evaluate_chunk, [(spec, system, c, lam) for c in chunks])
            results = [r for part in parts for r in part]
    else:
        results = [evaluate_point(spec, system, i, lam) for i in range(n)]
    arms = np.array([r[0] for r in results]).T
    unit = "MHz" if spec.kind == "odmr" else "ns"
    return Trace(
        sweep=np.array(spec.grid),
        signal=np.array([r[1] for r in results]),
        sigma=np.array([r[2] for r in results]),
        arms=arms,
        signs=tuple(s for s, _ in spec.arms(spec.grid[0])),
        photons_per_shot=lam,
        sweep_unit=unit,
        meta={"kind": spec.kind, "seed": spec.seed, "repetitions": spec.repetitions},
    )


def shot_noise(trace: Trace, repetitions: int, seed: int) -> Trace:
    """Poisson-resample the photon counts behind each point of a noiseless trace."""
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    signs = np.asarray(trace.signs)
    out = [
        _resample(trace.arms[:, i], signs, repetitions, trace.photons_per_shot, point_rng(seed, i))
        for i in range(trace.sweep.size)
    ]
    return replace(
        trace,
        signal=np.array([o[0] for o in out]),
        sigma=np.array([o[1] for o in out]),
        meta={**trace.meta, "seed": seed, "repetitions": repetitions},
    )


def odmr_spectrum(freqs, pi_pulse: float, system: SpinSystem, jobs: int = 1, **options) -> Trace:
    """Site-averaged contrast versus MW frequency for a fixed MW pulse (ns)."""
    return run_experiment(ExperimentSpec("odmr", tuple(freqs), pulse=pi_pulse, **options), system, jobs)


def rabi_trace(durations, mw_freq: float, system: SpinSystem, jobs: int = 1, **options) -> Trace:
    """Site-averaged readout versus MW pulse duration (ns) at carrier ``mw_freq``."""
    return run_experiment(ExperimentSpec("rabi", tuple(durations), mw_freq=mw_freq, **options), system, jobs)


def ramsey_trace(delays, mw_freq: float, half_pi: float, system: SpinSystem, jobs: int = 1,
                 **options) -> Trace:
    """Difference signal of the +pi/2 and -pi/2 Ramsey sequences versus free evolution (ns)."""
    spec = ExperimentSpec("ramsey", tuple(delays), mw_freq=mw_freq, pulse=half_pi, **options)
    return run_experiment(spec, system, jobs)


def ramsey_closed_form(delays_ns, system: SpinSystem, branch: str, mw_freq: float) -> np.ndarray:
    """Ideal-pulse Ramsey difference in unit-contrast mode.

    Sum over allowed sites of ``w_i cos(2 pi delta_i tau) exp(-tau / T2*)``
    with ``delta_i`` the detuning of the site's line from the carrier.
    """
    tau_us = np.asarray(delays_ns, dtype=float) / 1000.0
    total = np.zeros_like(tau_us)
    for i, w in enumerate(system.ensemble.weights):
        lines = site_lines(i, system.defect, system.drive)
        if lines.omega[branch] == 0:
            continue
        delta = lines.nu[branch] - mw_freq
        total += w * np.cos(2 * np.pi * delta * tau_us)
    return total * np.exp(-tau_us / system.defect.t2star(branch))
