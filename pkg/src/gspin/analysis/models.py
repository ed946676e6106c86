"""Parameterized curve models and data-driven starting points."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks, peak_widths

KINDS = ("lorentzian_sum", "sinusoid", "damped_cosine_sum", "g2_three_level", "saturation")


def lorentzian_sum(x, offset, *comps):
    y = np.full_like(x, offset, dtype=float)
    for amp, center, fwhm in zip(comps[0::3], comps[1::3], comps[2::3]):
        hw2 = (fwhm / 2) ** 2
        y += amp * hw2 / ((x - center) ** 2 + hw2)
    return y


def sinusoid(x, offset, amp, freq, phase):
    return offset + amp * np.cos(2 * np.pi * freq * x + phase)


def damped_cosine_sum(x, offset, t2, *comps):
    osc = np.zeros_like(x, dtype=float)
    for amp, freq, phase in zip(comps[0::3], comps[1::3], comps[2::3]):
        osc += amp * np.cos(2 * np.pi * freq * x + phase)
    return offset + np.exp(-x / t2) * osc


def g2_three_level(x, a, tau1, tau2):
    """Empirical three-level autocorrelation: antibunching plus a bunching shoulder."""
    t = np.abs(x)
    return 1 - (1 + a) * np.exp(-t / tau1) + a * np.exp(-t / tau2)


def saturation(x, i_sat, p_sat, slope):
    return i_sat * x / (x + p_sat) + slope * x


_FUNCS = {
    "lorentzian_sum": lorentzian_sum,
    "sinusoid": sinusoid,
    "damped_cosine_sum": damped_cosine_sum,
    "g2_three_level": g2_three_level,
    "saturation": saturation,
}


def parameter_names(kind: str, n: int = 1) -> list[str]:
    if kind == "lorentzian_sum":
        return ["offset"] + [f"{p}_{k}" for k in range(n) for p in ("amp", "center", "fwhm")]
    if kind == "sinusoid":
        return ["offset", "amp", "freq", "phase"]
    if kind == "damped_cosine_sum":
        return ["offset", "t2"] + [f"{p}_{k}" for k in range(n) for p in ("amp", "freq", "phase")]
    if kind == "g2_three_level":
        return ["a", "tau1", "tau2"]
    if kind == "saturation":
        return ["i_sat", "p_sat", "slope"]
    raise ValueError(f"unknown model kind {kind!r}")


_POSITIVE = {"fwhm", "t2", "freq", "tau1", "tau2", "p_sat"}


def default_bounds(kind: str, n: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Non-negative widths, rates and frequencies; phases confined to +-4 pi."""
    names = parameter_names(kind, n)
    lo = np.full(len(names), -np.inf)
    hi = np.full(len(names), np.inf)
    for i, name in enumerate(names):
        base = name.rsplit("_", 1)[0] if name[-1].isdigit() else name
        if base in _POSITIVE:
            lo[i] = 0.0
        elif base == "phase":
            lo[i], hi[i] = -4 * np.pi, 4 * np.pi
    return lo, hi


@dataclass(frozen=True)
class FitModel:
    kind: str
    n: int = 1
    p0: tuple[float, ...] | None = None
    lower: tuple[float, ...] | None = None
    upper: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("component count must be >= 1")
        if self.kind not in ("lorentzian_sum", "damped_cosine_sum") and self.n != 1:
            raise ValueError(f"{self.kind} has a single component")
        lo, hi = default_bounds(self.kind, self.n)
        lower = lo if self.lower is None else np.asarray(self.lower, dtype=float)
        upper = hi if self.upper is None else np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", tuple(lower))
        object.__setattr__(self, "upper", tuple(upper))
        if self.p0 is not None:
            p0 = np.asarray(self.p0, dtype=float)
            if p0.size != len(self.names):
                raise ValueError(f"{self.kind} expects {len(self.names)} parameters, got {p0.size}")
            if np.any(p0 < lower) or np.any(p0 > upper):
                raise ValueError("initial guess lies outside the bounds")
            object.__setattr__(self, "p0", tuple(p0))

    @property
    def names(self) -> list[str]:
        return parameter_names(self.kind, self.n)

    def __call__(self, x, params) -> np.ndarray:
        return _FUNCS[self.kind](np.asarray(x, dtype=float), *params)

    def with_guess(self, x, y) -> "FitModel":
        """Copy of the model with starting values seeded from the data."""
        p0 = initial_guess(self.kind, self.n, np.asarray(x, float), np.asarray(y, float))
        p0 = np.clip(p0, np.asarray(self.lower) + 1e-12, np.asarray(self.upper) - 1e-12)
        return FitModel(self.kind, self.n, tuple(p0), self.lower, self.upper)


def noise_floor(y) -> float:
    """Median plus three median absolute deviations."""
    med = np.median(y)
    return float(med + 3 * np.median(np.abs(y - med)))


def _lorentzian_guess(x, y, n):
    offset = float(np.median(y))
    step = float(np.median(np.abs(np.diff(x))))
    peaks, props = find_peaks(y, prominence=0)
    if peaks.size:
        above = y[peaks] > noise_floor(y)
        order = np.lexsort((-props["prominences"], ~above))
        peaks = peaks[order][:n]
    widths = peak_widths(y, peaks, rel_height=0.5)[0] * step if peaks.size else np.array([])
    comps = [[float(y[p] - offset), float(x[p]), max(float(w), 2 * step)] for p, w in zip(peaks, widths)]
    # too few maxima: split the widest line into two seeds
    while len(comps) < n:
        if comps:
            k = int(np.argmax([c[2] for c in comps]))
            amp, c0, w = comps[k]
            comps[k] = [amp, c0 - w / 4, w / 2]
            comps.append([amp, c0 + w / 4, w / 2])
        else:
            comps.append([float(np.ptp(y)), float(np.mean(x)), float(np.ptp(x)) / 4])
    comps.sort(key=lambda c: c[1])
    return [offset] + [v for c in comps for v in c]


def _spectrum_peaks(x, y, n):
    """Frequencies, amplitudes and phases of the ``n`` strongest spectral peaks."""
    y = y - y.mean()
    dt = float(np.mean(np.diff(x)))
    pad = 16 * x.size
    spec = np.fft.rfft(y, pad)
    freqs = np.fft.rfftfreq(pad, dt)
    power = np.abs(spec)
    peaks, props = find_peaks(power, prominence=0)
    if peaks.size == 0:
        peaks = np.array([int(np.argmax(power[1:]) + 1)])
        props = {"prominences": np.array([1.0])}
    peaks = peaks[np.argsort(-props["prominences"])][:n]
    while peaks.size < n:
        peaks = np.append(peaks, peaks[-1] + 4)
    amps = 2 * power[peaks] / x.size
    phases = np.angle(spec[peaks] * np.exp(2j * np.pi * freqs[peaks] * x[0]))
    return freqs[peaks], amps, phases


def initial_guess(kind: str, n: int, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    if kind == "lorentzian_sum":
        return np.array(_lorentzian_guess(x, y, n))
    if kind == "sinusoid":
        f, a, ph = _spectrum_peaks(x, y, 1)
        return np.array([y.mean(), a[0], f[0], ph[0]])
    if kind == "damped_cosine_sum":
        f, a, ph = _spectrum_peaks(x, y, n)
        t2 = float(np.ptp(x)) / 3
        order = np.argsort(f)
        comps = [v for k in order for v in (a[k] * 2, f[k], ph[k])]
        return np.array([float(np.median(y[-max(3, y.size // 10):])), t2, *comps])
    if kind == "g2_three_level":
        t = np.abs(x)
        a = max(float(y.max()) - 1, 0.05)
        below = t[y < 0.5]
        tau1 = float(below.max()) if below.size else float(np.ptp(t)) / 100
        tau1 = max(tau1, float(np.min(np.diff(np.sort(t)))))
        return np.array([a, tau1, max(float(np.ptp(t)) / 5, 2 * tau1)])
    if kind == "saturation":
        return np.array([float(y.max()) * 1.5, float(np.median(x)), 0.0])
    raise ValueError(f"unknown model kind {kind!r}")
