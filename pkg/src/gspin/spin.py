"""Spin-1 operator algebra and zero-field-split triplet eigenstructure.

Conventions: frequencies in MHz, magnetic fields in mT, hbar = 1.  Matrices
are written in the ``|m_s=+1>, |0>, |m_s=-1>`` basis.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

#: Free-electron gyromagnetic ratio (MHz/mT).
GAMMA_E = 28.02495

BRANCHES = ("plus", "minus")


@dataclass(frozen=True)
class SpinOperators:
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray

    def as_vector(self):
        return np.stack([self.sx, self.sy, self.sz])


@lru_cache(maxsize=1)
def _spin1():
    r = 1 / np.sqrt(2)
    sx = r * np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex)
    sy = r * np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex)
    sz = np.diag([1.0, 0.0, -1.0]).astype(complex)
    for m in (sx, sy, sz):
        m.setflags(write=False)
    return SpinOperators(sx, sy, sz)


def build_spin_operators() -> SpinOperators:
    """Return the S=1 matrices; the arrays are shared and read-only."""
    return _spin1()


@dataclass(frozen=True)
class ZfsParameters:
    """Zero-field splitting parameters.

    ``e`` is stored non-negative.  A negative input is folded onto ``e >= 0``
    and ``axes_swapped`` records that the x and y principal axes were
    relabeled, so the Hamiltonian in the caller's frame keeps its sign.
    """

    d: float
    e: float = 0.0
    axes_swapped: bool = False

    def __post_init__(self):
        d, e = float(self.d), float(self.e)
        swapped = self.axes_swapped
        if e < 0:
            e, swapped = -e, not swapped
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "axes_swapped", swapped)
        if e > abs(d) and d != 0:
            warnings.warn(
                f"|E| = {e} exceeds |D| = {abs(d)}; axis labeling is unconventional",
                stacklevel=3,
            )

    @property
    def signed_e(self) -> float:
        """E in the caller's original axis frame."""
        return -self.e if self.axes_swapped else self.e

    def shifted(self, delta_d: float = 0.0, delta_e: float = 0.0) -> "ZfsParameters":
        return ZfsParameters(self.d + delta_d, self.e + delta_e, self.axes_swapped)


def build_hamiltonian(zfs: ZfsParameters) -> np.ndarray:
    ops = build_spin_operators()
    return zfs.d * (ops.sz @ ops.sz) + zfs.signed_e * (ops.sx @ ops.sx - ops.sy @ ops.sy)


def _fix_phase(v):
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k])


_KET0 = np.array([0, 1, 0], dtype=complex)
_KETP = _fix_phase(np.array([1, 0, 1], dtype=complex) / np.sqrt(2))
_KETM = _fix_phase(np.array([1, 0, -1], dtype=complex) / np.sqrt(2))


@dataclass(frozen=True)
class SpinEigenbasis:
    ket0: np.ndarray
    ket_plus: np.ndarray
    ket_minus: np.ndarray
    nu_plus: float
    nu_minus: float
    energies: tuple[float, float, float] = field(default=(0.0, 0.0, 0.0))

    def ket(self, branch: str) -> np.ndarray:
        return {"plus": self.ket_plus, "minus": self.ket_minus}[_check_branch(branch)]

    def nu(self, branch: str) -> float:
        return {"plus": self.nu_plus, "minus": self.nu_minus}[_check_branch(branch)]

    def unitary(self) -> np.ndarray:
        """Columns |0>, |+>, |->."""
        return np.column_stack([self.ket0, self.ket_plus, self.ket_minus])


def _check_branch(branch):
    if branch not in BRANCHES:
        raise ValueError(f"branch must be 'plus' or 'minus', got {branch!r}")
    return branch


def eigenstructure(zfs: ZfsParameters) -> SpinEigenbasis:
    """Zero-field eigenstates |0>, |+>, |-> and the two transition frequencies.

    The ZFS Hamiltonian only couples |+1> and |-1>, so the eigenvectors are
    fixed for every (D, E) and the energies are 0 and ``D +- E``.
    ``nu_plus`` is the |0> <-> |+> transition, i.e. ``|D + E|`` with E taken
    in the caller's axis frame.
    """
    e0, ep, em = 0.0, zfs.d + zfs.signed_e, zfs.d - zfs.signed_e
    return SpinEigenbasis(
        ket0=_KET0.copy(),
        ket_plus=_KETP.copy(),
        ket_minus=_KETM.copy(),
        nu_plus=abs(ep - e0),
        nu_minus=abs(em - e0),
        energies=(e0, ep, em),
    )


def zfs_from_transitions(nu_plus: float, nu_minus: float) -> ZfsParameters:
    """Invert ``nu_pm = |D +- E|`` assuming D < 0 and E >= 0."""
    if not (nu_plus > 0 and nu_minus > 0):
        raise ValueError("transition frequencies must be positive")
    if nu_plus > nu_minus:
        raise ValueError(f"expected nu_plus <= nu_minus, got {nu_plus} > {nu_minus}")
    return ZfsParameters(d=-(nu_plus + nu_minus) / 2, e=(nu_minus - nu_plus) / 2)


@dataclass(frozen=True)
class MwDrive:
    """Microwave field amplitude in the spin principal-axis frame."""

    b_field: np.ndarray
    gamma_e: float = GAMMA_E

    def __post_init__(self):
        b = np.asarray(self.b_field, dtype=float).reshape(3)
        if not self.gamma_e > 0:
            raise ValueError("gamma_e must be positive")
        object.__setattr__(self, "b_field", b)


def rabi_matrix_element(drive: MwDrive, basis: SpinEigenbasis, branch: str) -> float:
    """|<0| -gamma_e B.S |branch>| in MHz."""
    ops = build_spin_operators()
    coupling = -drive.gamma_e * np.tensordot(drive.b_field, ops.as_vector(), axes=1)
    return float(abs(np.vdot(basis.ket0, coupling @ basis.ket(branch))))


def rabi_closed_form(b_perp: float, phi: float, gamma_e: float, branch: str) -> float:
    """Rabi frequency from the transverse field magnitude and azimuth.

    The plus branch couples through B_x (``|cos phi|``), the minus branch
    through B_y (``|sin phi|``).
    """
    if b_perp < 0:
        raise ValueError("b_perp must be non-negative")
    trig = np.cos(phi) if _check_branch(branch) == "plus" else np.sin(phi)
    return float(abs(gamma_e * b_perp * trig))


def detuned_rabi(omega: float, delta: float) -> float:
    return float(np.hypot(omega, delta))


def correct_detuning(omega_det: float, delta: float) -> float:
    """Resonant Rabi frequency from an oscillation measured at detuning ``delta``."""
    if omega_det < abs(delta):
        raise ValueError(f"omega_det={omega_det} is smaller than |delta|={abs(delta)}")
    return float(np.sqrt(omega_det**2 - delta**2))
