"""Pulse sequences and the single-repetition simulator.

One repetition holds the defect on a single site.  Laser pulses and waits
propagate the five-state rate equations; a MW pulse rotates each branch pair
(|0>, |+>) or (|0>, |->) whose transition lies within the coupling window of
the carrier.  Coherences are stored in the interaction picture of the site's
zero-field Hamiltonian and referenced to absolute sequence time, so the MW
phase is that of a continuous source.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

import numpy as np
from scipy.linalg import expm, null_space

from .geometry import (
    N_SITES,
    OrientationEnsemble,
    SitePerturbation,
    mw_projection,
    perturbed_zfs,
    site_axes,
)
from .photodynamics import ES, MS0, MSM, MSP, NS_PER_US, PhotoDynamics, propagator
from .spin import BRANCHES, GAMMA_E, ZfsParameters, eigenstructure, rabi_closed_form

DEFAULT_DELAY_NS = 5000.0
DEFAULT_LASER_NS = 1000.0
DEFAULT_WINDOW_NS = 50.0
COUPLING_WINDOW_MHZ = 50.0

_BRANCH_STATE = {"plus": MSP, "minus": MSM}


@dataclass(frozen=True)
class LaserPulse:
    duration: float = DEFAULT_LASER_NS


@dataclass(frozen=True)
class MwPulse:
    freq: float
    duration: float
    phase: float = 0.0
    amplitude_scale: float = 1.0


@dataclass(frozen=True)
class Wait:
    duration: float = DEFAULT_DELAY_NS


@dataclass(frozen=True)
class Readout:
    """PL integration over the first ``window`` ns of the next laser pulse.

    The readout pulse itself is the initialization pulse of the following
    repetition, so it takes no time in this repetition's timeline.
    """

    window: float = DEFAULT_WINDOW_NS
    duration: float = field(default=0.0, init=False)


Element = Union[LaserPulse, MwPulse, Wait, Readout]


@dataclass(frozen=True)
class PulseSequence:
    elements: tuple[Element, ...]

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if not any(isinstance(e, Readout) for e in self.elements):
            raise ValueError("a sequence needs at least one Readout")
        for e in self.elements:
            if isinstance(e, Readout):
                if e.window <= 0:
                    raise ValueError("readout window must be positive")
            elif not e.duration > 0:
                raise ValueError(f"{type(e).__name__} duration must be positive")

    def without_mw(self) -> "PulseSequence":
        return PulseSequence(tuple(
            Wait(e.duration) if isinstance(e, MwPulse) else e for e in self.elements
        ))

    @property
    def total_duration(self) -> float:
        return sum(e.duration for e in self.elements)


def pulsed_odmr_sequence(
    mw_freq: float,
    mw_duration: float,
    laser: float = DEFAULT_LASER_NS,
    delay: float = DEFAULT_DELAY_NS,
    window: float = DEFAULT_WINDOW_NS,
) -> PulseSequence:
    """Laser init, delay, one MW pulse, delay, readout.  Also the Rabi sequence.

    A zero-length pulse is dropped, which makes the first point of a Rabi
    sweep the MW-free reference.
    """
    if mw_duration < 0:
        raise ValueError("MW duration must be non-negative")
    mw = (MwPulse(mw_freq, mw_duration),) if mw_duration > 0 else ()
    return PulseSequence((LaserPulse(laser), Wait(delay), *mw, Wait(delay), Readout(window)))


def ramsey_sequence(
    mw_freq: float,
    half_pi: float,
    free_evolution: float,
    second_phase: float = 0.0,
    laser: float = DEFAULT_LASER_NS,
    delay: float = DEFAULT_DELAY_NS,
    window: float = DEFAULT_WINDOW_NS,
) -> PulseSequence:
    elements: list[Element] = [LaserPulse(laser), Wait(delay), MwPulse(mw_freq, half_pi)]
    if free_evolution > 0:
        elements.append(Wait(free_evolution))
    elements += [MwPulse(mw_freq, half_pi, phase=second_phase), Wait(delay), Readout(window)]
    return PulseSequence(tuple(elements))


@dataclass(frozen=True)
class Defect:
    """Static description of the tumbling defect."""

    zfs: ZfsParameters = ZfsParameters(-1205.0, 516.0)
    perturbations: tuple[SitePerturbation, ...] = (SitePerturbation(),) * N_SITES
    t2star_plus: float = 0.8
    t2star_minus: float = 1.1
    gamma_e: float = GAMMA_E

    def __post_init__(self):
        perts = tuple(self.perturbations)
        if len(perts) != N_SITES:
            raise ValueError("need one perturbation per site")
        object.__setattr__(self, "perturbations", perts)
        if self.t2star_plus <= 0 or self.t2star_minus <= 0:
            raise ValueError("T2* must be positive")
        for p in perts:
            perturbed_zfs(self.zfs, p)

    def t2star(self, branch: str) -> float:
        return self.t2star_plus if branch == "plus" else self.t2star_minus


@dataclass(frozen=True)
class Drive:
    """MW field in crystal coordinates and the per-carrier amplitude table."""

    b_lab: tuple[float, float, float] = (0.0, 0.0, 0.1)
    calibration: tuple[tuple[float, float], ...] = ()
    coupling_window: float = COUPLING_WINDOW_MHZ

    def __post_init__(self):
        object.__setattr__(self, "b_lab", tuple(float(v) for v in self.b_lab))
        cal = tuple(sorted((float(f), float(s)) for f, s in self.calibration))
        if any(s < 0 for _, s in cal):
            raise ValueError("calibration scales must be non-negative")
        object.__setattr__(self, "calibration", cal)

    def scale(self, freq: float) -> float:
        """Amplitude multiplier at ``freq`` (linear interpolation, flat outside)."""
        if not self.calibration:
            return 1.0
        f, s = zip(*self.calibration)
        return float(np.interp(freq, f, s))


@dataclass(frozen=True)
class SpinSystem:
    defect: Defect = Defect()
    drive: Drive = Drive()
    dynamics: PhotoDynamics = PhotoDynamics()
    ensemble: OrientationEnsemble = OrientationEnsemble()


@dataclass(frozen=True)
class SiteLines:
    """Transition frequencies and unit-amplitude Rabi frequencies of one site."""

    nu: dict
    omega: dict
    t2star: dict


@lru_cache(maxsize=64)
def site_lines(site: int, defect: Defect, drive: Drive) -> SiteLines:
    basis = eigenstructure(perturbed_zfs(defect.zfs, defect.perturbations[site]))
    b_perp, phi = mw_projection(drive.b_lab, site_axes(site))
    omega = {b: rabi_closed_form(b_perp, phi, defect.gamma_e, b) for b in BRANCHES}
    omega = {b: (0.0 if w <= 1e-6 else w) for b, w in omega.items()}
    return SiteLines(
        nu={b: basis.nu(b) for b in BRANCHES},
        omega=omega,
        t2star={b: defect.t2star(b) for b in BRANCHES},
    )


@dataclass
class SpinState:
    """Populations (GS, ES, |0>, |+>, |->) and the |0>-|+>, |0>-|-> coherences."""

    pops: np.ndarray
    coherence: dict = field(default_factory=lambda: {"plus": 0j, "minus": 0j})

    def copy(self) -> "SpinState":
        return SpinState(self.pops.copy(), dict(self.coherence))

    @classmethod
    def polarized(cls) -> "SpinState":
        """Metastable triplet with |+> and |-> equally populated."""
        return cls(np.array([0.0, 0.0, 0.0, 0.5, 0.5]))

    def check(self, tol: float = 1e-9) -> None:
        p = self.pops
        if np.any(p < -tol) or abs(p.sum() - 1) > tol:
            raise AssertionError(f"invalid populations {p}")
        for b in BRANCHES:
            c = self.coherence[b]
            if abs(c) ** 2 > p[MS0] * p[_BRANCH_STATE[b]] + tol:
                raise AssertionError(f"coherence {c} exceeds population bound")


def two_level_unitary(omega: float, delta: float, phase: float, duration_ns: float) -> np.ndarray:
    """Rotating-frame propagator in the (|0>, |b>) basis.

    ``H = 2 pi [delta/2 sz + omega/2 (cos(phase) sx + sin(phase) sy)]`` with
    frequencies in MHz; on resonance ``P0 = sin^2(pi omega t)`` from |b>.
    """
    w = np.hypot(omega, delta)
    if w == 0:
        return np.eye(2, dtype=complex)
    a = np.pi * w * duration_ns / NS_PER_US
    nx, ny, nz = omega * np.cos(phase) / w, omega * np.sin(phase) / w, delta / w
    c, s = np.cos(a), np.sin(a)
    return np.array([
        [c - 1j * s * nz, -1j * s * (nx - 1j * ny)],
        [-1j * s * (nx + 1j * ny), c + 1j * s * nz],
    ])


def _apply_mw(state: SpinState, pulse: MwPulse, lines: SiteLines, drive: Drive, t0: float,
              check: bool) -> None:
    amp = pulse.amplitude_scale * drive.scale(pulse.freq)
    t1 = t0 + pulse.duration
    for b in BRANCHES:
        nu = lines.nu[b]
        omega = lines.omega[b] * amp
        if omega == 0 or abs(nu - pulse.freq) > drive.coupling_window:
            continue
        delta = nu - pulse.freq
        k = _BRANCH_STATE[b]
        rot = np.exp(-2j * np.pi * delta * t0 / NS_PER_US)
        c = state.coherence[b] * rot
        rho = np.array([[state.pops[MS0], c], [np.conj(c), state.pops[k]]])
        u = two_level_unitary(omega, delta, pulse.phase, pulse.duration)
        rho = u @ rho @ u.conj().T
        state.pops[MS0], state.pops[k] = rho[0, 0].real, rho[1, 1].real
        state.coherence[b] = rho[0, 1] * np.exp(2j * np.pi * delta * t1 / NS_PER_US)
        if check:
            state.check()


def _free_evolution(state: SpinState, duration: float, laser_on: bool, lines: SiteLines,
                    dyn: PhotoDynamics | None) -> None:
    tau_us = duration / NS_PER_US
    if dyn is not None:
        state.pops = propagator(dyn, float(duration), laser_on) @ state.pops
    for b in BRANCHES:
        if laser_on:
            state.coherence[b] = 0j
            continue
        # T2* is the total coherence time, but never longer than the
        # population lifetimes allow (keeps rho positive)
        rate = 1.0 / lines.t2star[b]
        if dyn is not None:
            rate = max(rate, 0.5 * (dyn.decay0 + dyn.decay_pm))
        state.coherence[b] *= np.exp(-tau_us * rate)


def _relax(state: SpinState, duration: float, dyn: PhotoDynamics) -> None:
    state.pops = propagator(dyn, float(duration), False) @ state.pops
    # lifetime-limited coherence decay; dephasing is charged to the waits
    damp = np.exp(-0.5 * (dyn.decay0 + dyn.decay_pm) * duration / NS_PER_US)
    for b in BRANCHES:
        state.coherence[b] *= damp


@lru_cache(maxsize=64)
def _readout_weights(dyn: PhotoDynamics, window: float) -> np.ndarray:
    a = np.zeros((6, 6))
    a[:5, :5] = dyn.rate_matrix(True)
    a[5, ES] = 1.0
    w = expm(a * (window / NS_PER_US))[5, :5] * dyn.collection_efficiency * dyn.radiative_rate
    w.setflags(write=False)
    return w


@lru_cache(maxsize=64)
def periodic_state(seq: PulseSequence, dyn: PhotoDynamics) -> np.ndarray:
    """Populations at the start of a repetition once the MW-free sequence repeats forever."""
    m = np.eye(5)
    for e in seq.without_mw().elements:
        if isinstance(e, LaserPulse):
            m = propagator(dyn, float(e.duration), True) @ m
        elif isinstance(e, Wait):
            m = propagator(dyn, float(e.duration), False) @ m
    ns = null_space(m - np.eye(5))
    v = np.abs(ns[:, 0])
    v.setflags(write=False)
    return v / v.sum()


@lru_cache(maxsize=64)
def reference_photons(seq: PulseSequence, dyn: PhotoDynamics) -> np.ndarray:
    """Expected detected photons per readout for the MW-free sequence."""
    return _run(seq.without_mw(), None, None, dyn, unit_contrast=False, check=False, raw=True)


def _run(seq, lines, drive, dyn, unit_contrast, check, raw=False):
    if unit_contrast:
        state = SpinState.polarized()
    else:
        state = SpinState(periodic_state(seq, dyn).copy())
    t = 0.0
    out = []
    for e in seq.elements:
        if isinstance(e, LaserPulse):
            if unit_contrast:
                state = SpinState.polarized()
            else:
                _free_evolution(state, e.duration, True, lines, dyn)
        elif isinstance(e, Wait):
            if lines is not None:
                _free_evolution(state, e.duration, False, lines, None if unit_contrast else dyn)
            elif not unit_contrast:
                state.pops = propagator(dyn, float(e.duration), False) @ state.pops
        elif isinstance(e, MwPulse):
            if unit_contrast:
                _apply_mw(state, e, lines, drive, t, check)
            else:
                # Strang splitting: metastable relaxation around the coherent rotation
                _relax(state, e.duration / 2, dyn)
                _apply_mw(state, e, lines, drive, t, check)
                _relax(state, e.duration / 2, dyn)
        elif isinstance(e, Readout):
            if unit_contrast:
                out.append(state.pops[MS0] / 0.5)
            else:
                out.append(float(_readout_weights(dyn, float(e.window)) @ state.pops))
        if check:
            state.check()
        t += e.duration
    out = np.array(out)
    if raw or unit_contrast:
        return out
    return out / reference_photons(seq, dyn)


def simulate_repetition(
    seq: PulseSequence,
    site: int,
    defect: Defect,
    drive: Drive,
    dyn: PhotoDynamics,
    unit_contrast: bool = False,
    check: bool = False,
) -> np.ndarray:
    """Readout values of one repetition with the defect held on ``site``.

    In the default mode each value is the ODMR contrast, PL in the readout
    window divided by the same readout of the MW-free sequence.  With
    ``unit_contrast`` the photodynamics is bypassed: the triplet starts with
    |+> and |-> half populated and each readout reports ``P0 / 0.5``, the
    fraction transferred out of one branch.  ``check`` asserts trace and
    positivity preservation after every element.
    """
    lines = site_lines(site, defect, drive)
    return _run(seq, lines, drive, dyn, unit_contrast, check)
