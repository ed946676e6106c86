"""Six interstitial-silicon sites, their spin axes, and MW field projections.

All six sites share the [111] spin z axis.  Site 0 has x along [-1 1 0] and
y along [-1 -1 2]; site k is site 0 rotated by k * 60 degrees about z.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from .spin import BRANCHES, GAMMA_E, ZfsParameters, eigenstructure, rabi_closed_form

N_SITES = 6
ALLOWED_THRESHOLD_MHZ = 1e-6

_X0 = np.array([-1.0, 1.0, 0.0]) / np.sqrt(2)
_Y0 = np.array([-1.0, -1.0, 2.0]) / np.sqrt(6)
_Z0 = np.array([1.0, 1.0, 1.0]) / np.sqrt(3)


@dataclass(frozen=True)
class SiteGeometry:
    site_index: int
    x_axis: np.ndarray
    y_axis: np.ndarray
    z_axis: np.ndarray

    def rotation_matrix(self) -> np.ndarray:
        """Rows are the spin axes, so ``R @ v_crystal`` gives spin-frame components."""
        return np.vstack([self.x_axis, self.y_axis, self.z_axis])

    def to_spin_frame(self, v) -> np.ndarray:
        return self.rotation_matrix() @ np.asarray(v, dtype=float)


@lru_cache(maxsize=N_SITES)
def site_axes(site_index: int) -> SiteGeometry:
    if not isinstance(site_index, (int, np.integer)) or not 0 <= site_index < N_SITES:
        raise ValueError(f"site index must be an integer in [0, 5], got {site_index!r}")
    k = int(site_index)
    # exact half turn for site 3 so that x -> -x, y -> -y bitwise
    if k == 0:
        x, y = _X0.copy(), _Y0.copy()
    elif k == 3:
        x, y = -_X0, -_Y0
    else:
        rot = Rotation.from_rotvec(_Z0 * k * np.pi / 3)
        x, y = rot.apply(_X0), rot.apply(_Y0)
    z = _Z0.copy()
    for a in (x, y, z):
        a.setflags(write=False)
    return SiteGeometry(k, x, y, z)


def all_sites() -> list[SiteGeometry]:
    return [site_axes(k) for k in range(N_SITES)]


def mw_projection(b_lab, site: SiteGeometry) -> tuple[float, float]:
    """Transverse field magnitude (mT) and azimuth (rad) in the site's spin frame."""
    b = np.asarray(b_lab, dtype=float)
    bx, by = float(b @ site.x_axis), float(b @ site.y_axis)
    return float(np.hypot(bx, by)), float(np.arctan2(by, bx))


def _normalize(p: np.ndarray) -> np.ndarray:
    # rounding the ratios to the largest entry makes the result independent of
    # a common scale factor on the input
    r = np.round(p / p.max(), 12)
    return r / r.sum()


@dataclass(frozen=True)
class OrientationEnsemble:
    occupancy: tuple[float, ...] = (1 / 6,) * N_SITES

    def __post_init__(self):
        p = np.asarray(self.occupancy, dtype=float)
        if p.shape != (N_SITES,):
            raise ValueError("occupancy needs exactly six entries")
        if np.any(p < 0) or not np.all(np.isfinite(p)) or p.sum() <= 0:
            raise ValueError("occupancies must be finite, non-negative and not all zero")
        object.__setattr__(self, "occupancy", tuple(float(v) for v in _normalize(p)))

    @property
    def weights(self) -> np.ndarray:
        return np.array(self.occupancy)


@dataclass(frozen=True)
class SitePerturbation:
    delta_d: float = 0.0
    delta_e: float = 0.0


def perturbed_zfs(zfs: ZfsParameters, pert: SitePerturbation) -> ZfsParameters:
    e = zfs.e + pert.delta_e
    if e < 0:
        raise ValueError(f"perturbed E = {e} MHz is negative")
    return ZfsParameters(zfs.d + pert.delta_d, e, zfs.axes_swapped)


def perturbations_from_lines(
    zfs: ZfsParameters, nu_plus: Sequence[float], nu_minus: Sequence[float]
) -> list[SitePerturbation]:
    """Per-site (dD, dE) placing each site's lines at the requested frequencies.

    Assumes D < 0 < E with shifts small enough that the ordering is kept.
    """
    out = []
    for npl, nmi in zip(nu_plus, nu_minus):
        target = ZfsParameters(-(npl + nmi) / 2, (nmi - npl) / 2)
        out.append(SitePerturbation(target.d - zfs.d, target.e - zfs.e))
    return out


@dataclass(frozen=True)
class FineTransition:
    site: int
    branch: str
    nu: float
    omega: float
    weight: float
    allowed: bool


@dataclass(frozen=True)
class FineTransitionTable:
    nu_plus: np.ndarray
    nu_minus: np.ndarray
    omega_plus: np.ndarray
    omega_minus: np.ndarray
    allowed_plus: np.ndarray
    allowed_minus: np.ndarray
    weights: np.ndarray

    def nu(self, branch):
        return self.nu_plus if branch == "plus" else self.nu_minus

    def omega(self, branch):
        return self.omega_plus if branch == "plus" else self.omega_minus

    def allowed(self, branch):
        return self.allowed_plus if branch == "plus" else self.allowed_minus

    def transitions(self, branch: str | None = None) -> list[FineTransition]:
        branches = BRANCHES if branch is None else (branch,)
        return [
            FineTransition(i, b, float(self.nu(b)[i]), float(self.omega(b)[i]),
                           float(self.weights[i]), bool(self.allowed(b)[i]))
            for b in branches
            for i in range(N_SITES)
        ]

    def resolvable_lines(self, branch: str, linewidth: float) -> list[float]:
        """Distinct allowed line positions once lines closer than ``linewidth`` merge.

        Lines are clustered in frequency order; each cluster is reported at its
        mean position.
        """
        nus = np.sort(self.nu(branch)[self.allowed(branch)])
        groups: list[list[float]] = []
        for v in nus:
            if groups and v - groups[-1][-1] < linewidth:
                groups[-1].append(float(v))
            else:
                groups.append([float(v)])
        return [float(np.mean(g)) for g in groups]


def fine_transition_table(
    zfs: ZfsParameters,
    perturbations: Sequence[SitePerturbation] | None,
    b_lab,
    gamma_e: float = GAMMA_E,
    ensemble: OrientationEnsemble | None = None,
    threshold: float = ALLOWED_THRESHOLD_MHZ,
) -> FineTransitionTable:
    perturbations = list(perturbations or [SitePerturbation()] * N_SITES)
    if len(perturbations) != N_SITES:
        raise ValueError("need one perturbation per site")
    ensemble = ensemble or OrientationEnsemble()
    rows = {k: np.zeros(N_SITES) for k in ("nup", "num", "omp", "omm")}
    for i, (site, pert) in enumerate(zip(all_sites(), perturbations)):
        basis = eigenstructure(perturbed_zfs(zfs, pert))
        b_perp, phi = mw_projection(b_lab, site)
        rows["nup"][i], rows["num"][i] = basis.nu_plus, basis.nu_minus
        rows["omp"][i] = rabi_closed_form(b_perp, phi, gamma_e, "plus")
        rows["omm"][i] = rabi_closed_form(b_perp, phi, gamma_e, "minus")
    # cos(pi/2) is ~6e-17, not 0: snap geometric zeros
    for key in ("omp", "omm"):
        rows[key][rows[key] <= threshold] = 0.0
    return FineTransitionTable(
        nu_plus=rows["nup"],
        nu_minus=rows["num"],
        omega_plus=rows["omp"],
        omega_minus=rows["omm"],
        allowed_plus=rows["omp"] > threshold,
        allowed_minus=rows["omm"] > threshold,
        weights=ensemble.weights,
    )
