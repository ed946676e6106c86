"""Kinetic Monte Carlo photon streams for cross-checking the rate-equation g2."""

from __future__ import annotations

import numpy as np
from numba import njit

from .photodynamics import NS_PER_US, PhotoDynamics


@njit(cache=True)
def _gillespie(rates, n_photons, seed):
    np.random.seed(seed)
    n = rates.shape[0]
    out = np.empty(n_photons)
    t = 0.0
    state = 0
    count = 0
    while count < n_photons:
        total = 0.0
        for j in range(n):
            total += rates[state, j]
        t += np.random.exponential(1.0 / total)
        u = np.random.random() * total
        acc = 0.0
        nxt = n - 1
        for j in range(n):
            acc += rates[state, j]
            if u < acc:
                nxt = j
                break
        if state == 1 and nxt == 0:
            out[count] = t
            count += 1
        state = nxt
    return out


def photon_stream(dyn: PhotoDynamics, n_photons: int, rng: np.random.Generator) -> np.ndarray:
    """Emission times (ns) of ``n_photons`` radiative ES -> GS jumps under CW pumping.

    Every emitted photon is kept; detection losses thin the stream uniformly
    and leave g2 unchanged.
    """
    gen = dyn.rate_matrix(True)
    rates = np.clip(gen.T.copy(), 0.0, None)
    np.fill_diagonal(rates, 0.0)
    # the jit kernel hard-codes ES -> GS as state 1 -> 0
    seed = int(rng.integers(0, 2**31 - 1))
    return _gillespie(rates, int(n_photons), seed) * NS_PER_US


def g2_histogram(times_ns: np.ndarray, bin_edges_ns) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Start-multi-stop coincidence histogram normalized to Poissonian light.

    Returns ``(g2, counts, expected_uncorrelated_counts)`` per bin, bins being
    ``[edges[k], edges[k+1])``.  Only start photons at least the largest edge
    away from the stream end are used so every start sees the full window.
    """
    t = np.sort(np.asarray(times_ns, dtype=float))
    edges = np.asarray(bin_edges_ns, dtype=float)
    if np.any(np.diff(edges) <= 0) or edges[0] < 0:
        raise ValueError("bin edges must be non-negative and increasing")
    nbin = edges.size - 1
    n_starts = int(np.count_nonzero(t <= t[-1] - edges[-1]))
    counts = np.zeros(nbin)
    # pair photons k emissions apart until every such delay leaves the window
    for k in range(1, t.size):
        d = t[k:k + n_starts] - t[:n_starts][: t.size - k]
        if d.size == 0 or d.min() >= edges[-1]:
            break
        idx = np.searchsorted(edges, d, side="right") - 1
        counts += np.bincount(idx[(idx >= 0) & (idx < nbin)], minlength=nbin)
    rate = t.size / (t[-1] - t[0])
    expected = n_starts * rate * np.diff(edges)
    return counts / expected, counts, expected


def pearson_chi2(counts, model) -> tuple[float, int]:
    """Pearson chi-square of ``counts`` against ``model`` with a free overall scale.

    The scale absorbs the uncertainty of the empirical mean rate, which long
    shelving times make much larger than Poisson.  Returns ``(chi2, dof)``.
    """
    counts = np.asarray(counts, dtype=float)
    model = np.asarray(model, dtype=float)
    scaled = model * counts.sum() / model.sum()
    return float(np.sum((counts - scaled) ** 2 / scaled)), counts.size - 1
