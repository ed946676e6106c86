"""Physical parameters from fit results."""

from __future__ import annotations

import numpy as np

from ..spin import ZfsParameters, correct_detuning, zfs_from_transitions
from .fitting import FitResult


def extract_zfs(odmr_fit: FitResult) -> tuple[ZfsParameters, float, float]:
    """ZFS parameters and their 1-sigma errors from a two-line ODMR fit.

    Uses the lowest and highest fitted centers as nu_+ and nu_-.  Both |D| and
    E carry half the quadrature sum of the two center errors.
    """
    if odmr_fit.model.kind != "lorentzian_sum" or odmr_fit.model.n < 2:
        raise ValueError("need a Lorentzian fit with at least two lines")
    centers = odmr_fit.component("center")
    errors = odmr_fit.component_errors("center")
    lo, hi = int(np.argmin(centers)), int(np.argmax(centers))
    zfs = zfs_from_transitions(centers[lo], centers[hi])
    err = 0.5 * float(np.hypot(errors[lo], errors[hi]))
    return zfs, err, err


def rabi_ratio(fit_fast: FitResult, fit_slow: FitResult, delta: float = 0.0) -> tuple[float, float]:
    """Ratio of resonant Rabi frequencies and its 1-sigma error.

    ``fit_fast`` was measured at detuning ``delta`` (MHz) and is corrected to
    resonance first; ``fit_slow`` is taken as resonant.
    """
    f_fast, e_fast = fit_fast.params["freq"], fit_fast.errors["freq"]
    f_slow, e_slow = fit_slow.params["freq"], fit_slow.errors["freq"]
    if f_fast <= 0 or f_slow <= 0:
        raise ValueError("fitted frequencies must be positive")
    omega = correct_detuning(f_fast, delta)
    ratio = omega / f_slow
    # d(omega)/d(f_fast) = f_fast / omega
    e_omega = e_fast * f_fast / omega if omega > 0 else np.inf
    err = ratio * float(np.hypot(e_omega / omega, e_slow / f_slow))
    return float(ratio), err
