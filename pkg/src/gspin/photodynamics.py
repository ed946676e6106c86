"""Five-state kinetic model of the optical cycle.

States: ground singlet (GS), excited singlet (ES), and the metastable triplet
sublevels |0>, |+>, |->.  Rates are in MHz (events per microsecond), durations
handed to the public functions are in ns, optical power in uW.

The default rate constants are illustrative, not measured: they give a
bunching shoulder in g2, a saturation count rate of ~260 kcounts/s and a
pulsed ODMR contrast of a few percent.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.linalg import expm, null_space

GS, ES, MS0, MSP, MSM = range(5)
STATE_NAMES = ("gs", "es", "ms0", "ms_plus", "ms_minus")
NS_PER_US = 1000.0


@dataclass(frozen=True)
class PhotoDynamics:
    pump_rate: float = 2.5
    radiative_rate: float = 80.0
    isc_rate0: float = 1.0
    isc_rate_pm: float = 1.0
    decay0: float = 1.5
    decay_pm: float = 0.05
    collection_efficiency: float = 0.135
    background: float = 0.0
    pump_per_uw: float = 0.25
    background_per_uw: float = 0.0

    def __post_init__(self):
        rates = (self.pump_rate, self.radiative_rate, self.isc_rate0, self.isc_rate_pm,
                 self.decay0, self.decay_pm, self.pump_per_uw)
        if any(r < 0 for r in rates):
            raise ValueError("rates must be non-negative")
        if self.decay0 <= self.decay_pm and (self.decay0 or self.decay_pm):
            raise ValueError("decay0 must exceed decay_pm (|0> is the short-lived sublevel)")
        if not 0 <= self.collection_efficiency <= 1:
            raise ValueError("collection_efficiency must lie in [0, 1]")
        if self.background < 0 or self.background_per_uw < 0:
            raise ValueError("background must be non-negative")

    def at_power(self, power_uw: float) -> "PhotoDynamics":
        """Same defect with the pump rate set by the linear power calibration."""
        return replace(self, pump_rate=self.pump_per_uw * power_uw)

    @property
    def es_outflow(self) -> float:
        return self.radiative_rate + self.isc_rate0 + 2 * self.isc_rate_pm

    def rate_matrix(self, laser_on: bool = True) -> np.ndarray:
        """Generator ``M`` of ``dp/dt = M p`` (per microsecond)."""
        m = np.zeros((5, 5))

        def link(src, dst, k):
            m[dst, src] += k
            m[src, src] -= k

        if laser_on:
            link(GS, ES, self.pump_rate)
        link(ES, GS, self.radiative_rate)
        link(ES, MS0, self.isc_rate0)
        link(ES, MSP, self.isc_rate_pm)
        link(ES, MSM, self.isc_rate_pm)
        link(MS0, GS, self.decay0)
        link(MSP, GS, self.decay_pm)
        link(MSM, GS, self.decay_pm)
        return m

    # saturation parameters of the steady-state count rate
    @property
    def shelving_factor(self) -> float:
        s = 1.0
        if self.isc_rate0:
            s += self.isc_rate0 / self.decay0
        if self.isc_rate_pm:
            s += 2 * self.isc_rate_pm / self.decay_pm
        return s

    @property
    def saturation_count_rate(self) -> float:
        """Asymptotic detected count rate (counts/s) without background."""
        return self.collection_efficiency * self.radiative_rate * 1e6 / self.shelving_factor

    @property
    def saturation_power(self) -> float:
        """Power (uW) at which the count rate reaches half its asymptote."""
        return self.es_outflow / (self.pump_per_uw * self.shelving_factor)


@dataclass(frozen=True)
class PopulationState:
    p_gs: float = 1.0
    p_es: float = 0.0
    p0: float = 0.0
    p_plus: float = 0.0
    p_minus: float = 0.0

    def __post_init__(self):
        v = self.as_array()
        if np.any(v < -1e-12) or np.any(v > 1 + 1e-12):
            raise ValueError(f"populations must lie in [0, 1]: {v}")
        if abs(v.sum() - 1) > 1e-9:
            raise ValueError(f"populations must sum to 1, got {v.sum()}")

    def as_array(self) -> np.ndarray:
        return np.array([self.p_gs, self.p_es, self.p0, self.p_plus, self.p_minus])

    @classmethod
    def from_array(cls, v) -> "PopulationState":
        v = np.clip(np.asarray(v, dtype=float), 0.0, None)
        return cls(*(v / v.sum()))


@lru_cache(maxsize=256)
def propagator(dyn: PhotoDynamics, duration_ns: float, laser_on: bool) -> np.ndarray:
    if duration_ns < 0:
        raise ValueError("duration must be non-negative")
    p = expm(dyn.rate_matrix(laser_on) * (duration_ns / NS_PER_US))
    p.setflags(write=False)
    return p


def evolve_populations(
    state: PopulationState, dyn: PhotoDynamics, duration: float, laser_on: bool
) -> PopulationState:
    """Propagate the rate equations for ``duration`` ns."""
    if duration < 0:
        raise ValueError("duration must be non-negative")
    return PopulationState.from_array(propagator(dyn, float(duration), laser_on) @ state.as_array())


def steady_state(dyn: PhotoDynamics, laser_on: bool = True) -> PopulationState:
    m = dyn.rate_matrix(laser_on)
    ns = null_space(m)
    if ns.shape[1] != 1:
        raise ValueError("rate matrix has no unique stationary state")
    return PopulationState.from_array(np.abs(ns[:, 0]))


def _es_trajectory(dyn: PhotoDynamics, tau_us: np.ndarray) -> np.ndarray:
    # p_ES(tau) after a photon emission (system reset to GS), via the
    # eigendecomposition of the laser-on generator
    lam, vec = np.linalg.eig(dyn.rate_matrix(True))
    coeff = np.linalg.solve(vec, np.eye(5)[GS])
    amps = vec[ES] * coeff
    return np.real(np.exp(np.outer(tau_us, lam)) @ amps)


def g2_bin_average(dyn: PhotoDynamics, bin_edges_ns) -> np.ndarray:
    """Ideal g2 averaged over each bin ``[edges[k], edges[k+1])`` (ns, edges >= 0)."""
    edges = np.asarray(bin_edges_ns, dtype=float) / NS_PER_US
    lam, vec = np.linalg.eig(dyn.rate_matrix(True))
    amps = vec[ES] * np.linalg.solve(vec, np.eye(5)[GS])
    small = np.abs(lam) < 1e-12
    safe = np.where(small, 1.0, lam)
    # antiderivative of exp(lam t); the stationary eigenvalue integrates to t
    prim = np.where(small, edges[:, None], np.exp(np.outer(edges, lam)) / safe)
    integral = np.real(np.diff(prim, axis=0) @ amps)
    return integral / np.diff(edges) / steady_state(dyn).p_es


def g2_curve(
    dyn: PhotoDynamics,
    tau_grid,
    background_cps: float = 0.0,
    jitter_ns: float = 0.0,
) -> np.ndarray:
    """Normalized intensity autocorrelation at delays ``tau_grid`` (ns).

    Background photons dilute the correlation as ``1 + rho^2 (g2 - 1)`` with
    ``rho = S / (S + B)``; detector timing jitter is a Gaussian convolution of
    standard deviation ``jitter_ns``.  Both are off by default.
    """
    tau = np.abs(np.asarray(tau_grid, dtype=float))
    p_ss = steady_state(dyn).p_es

    def ideal(t_ns):
        return _es_trajectory(dyn, np.abs(t_ns) / NS_PER_US) / p_ss

    if jitter_ns > 0:
        x, w = np.polynomial.hermite.hermgauss(64)
        shifts = np.sqrt(2) * jitter_ns * x
        g = sum(wk * ideal(tau + s) for wk, s in zip(w, shifts)) / np.sqrt(np.pi)
    else:
        g = ideal(tau)
    if background_cps > 0:
        signal = dyn.collection_efficiency * dyn.radiative_rate * 1e6 * p_ss
        rho = signal / (signal + background_cps)
        g = 1 + rho**2 * (g - 1)
    return g


def saturation_curve(dyn: PhotoDynamics, power_grid) -> np.ndarray:
    """Steady-state detected count rate (counts/s) versus optical power (uW)."""
    powers = np.asarray(power_grid, dtype=float)
    if np.any(powers <= 0):
        raise ValueError("powers must be positive")
    rate = np.array([
        steady_state(dyn.at_power(p)).p_es for p in powers
    ]) * dyn.collection_efficiency * dyn.radiative_rate * 1e6
    return rate + dyn.background + dyn.background_per_uw * powers


def integrated_pl(state: PopulationState, dyn: PhotoDynamics, window: float) -> float:
    """Expected detected photons in the first ``window`` ns of a laser pulse."""
    if window <= 0:
        raise ValueError("window must be positive")
    a = np.zeros((6, 6))
    a[:5, :5] = dyn.rate_matrix(True)
    a[5, ES] = 1.0
    v = expm(a * (window / NS_PER_US)) @ np.append(state.as_array(), 0.0)
    return float(dyn.collection_efficiency * dyn.radiative_rate * v[5])


def readout_contrast(
    state_pre: PopulationState,
    dyn: PhotoDynamics,
    window: float,
    reference: PopulationState | None = None,
) -> float:
    """PL in the readout window normalized by the off-resonant reference.

    ``reference`` defaults to the optically pumped (laser-on) steady state.
    """
    reference = steady_state(dyn) if reference is None else reference
    return integrated_pl(state_pre, dyn, window) / integrated_pl(reference, dyn, window)
