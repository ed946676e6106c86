"""One-sided power spectra of uniformly sampled traces."""

from __future__ import annotations

import numpy as np
from scipy.signal import find_peaks, get_window


def fft_power_spectrum(t, y, window: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Mean-subtracted one-sided power spectrum.

    Normalized so the bins sum to the variance of the (windowed, mean
    subtracted) signal; a unit-amplitude cosine on a bin therefore shows a
    peak of 1/2.  Frequencies are in inverse units of ``t`` (MHz for us).
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size < 2 or t.size != y.size:
        raise ValueError("need matching time and signal arrays with >= 2 samples")
    dt = np.diff(t)
    if not np.allclose(dt, dt[0], rtol=1e-6, atol=0):
        raise ValueError("time grid must be uniform")
    v = y - y.mean()
    if window is not None:
        w = get_window(window, v.size)
        v = v * w / np.sqrt(np.mean(w**2))
    n = v.size
    spec = np.fft.rfft(v) / n
    power = np.abs(spec) ** 2
    power[1:] *= 2
    if n % 2 == 0:
        power[-1] /= 2
    return np.fft.rfftfreq(n, dt[0]), power


def spectral_peaks(freq, power, count: int | None = None, rel_height: float = 0.05) -> np.ndarray:
    """Frequencies of local maxima standing out from their surroundings.

    A maximum counts when its prominence exceeds ``rel_height`` times the
    largest power, so ripples riding on the skirt of a strong line are
    ignored.
    """
    power = np.asarray(power, dtype=float)
    peaks, props = find_peaks(power, prominence=rel_height * power.max())
    order = np.argsort(-props["prominences"])
    if count is not None:
        order = order[:count]
    return np.sort(freq[peaks[order]])
