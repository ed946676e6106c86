import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gspin.geometry import SiteGeometry, mw_projection
from gspin.spin import (
    GAMMA_E,
    MwDrive,
    ZfsParameters,
    build_hamiltonian,
    build_spin_operators,
    correct_detuning,
    detuned_rabi,
    eigenstructure,
    rabi_closed_form,
    rabi_matrix_element,
    zfs_from_transitions,
)

freq = st.floats(-3000, 3000, allow_nan=False)
unit_frame = SiteGeometry(0, np.eye(3)[0], np.eye(3)[1], np.eye(3)[2])


def comm(a, b):
    return a @ b - b @ a


class TestOperators:
    def test_hermitian(self):
        for m in build_spin_operators().as_vector():
            np.testing.assert_array_equal(m, m.conj().T)

    def test_commutators(self):
        s = build_spin_operators()
        np.testing.assert_allclose(comm(s.sx, s.sy), 1j * s.sz, atol=1e-12)
        np.testing.assert_allclose(comm(s.sy, s.sz), 1j * s.sx, atol=1e-12)
        np.testing.assert_allclose(comm(s.sz, s.sx), 1j * s.sy, atol=1e-12)

    def test_casimir(self):
        s = build_spin_operators()
        np.testing.assert_allclose(s.sx @ s.sx + s.sy @ s.sy + s.sz @ s.sz, 2 * np.eye(3), atol=1e-12)

    def test_sz_and_ladder(self):
        s = build_spin_operators()
        np.testing.assert_array_equal(s.sz, np.diag([1, 0, -1]))
        np.testing.assert_allclose(s.sx @ [1, 0, 0], [0, 1 / np.sqrt(2), 0], atol=1e-15)

    def test_read_only(self):
        with pytest.raises(ValueError):
            build_spin_operators().sx[0, 0] = 1


class TestZfs:
    def test_negative_e_folded(self):
        z = ZfsParameters(-1205, -516)
        assert z.e == 516 and z.axes_swapped and z.signed_e == -516

    def test_large_e_warns(self):
        with pytest.warns(UserWarning):
            ZfsParameters(-100, 200)

    def test_reference_values_silent(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            ZfsParameters(-1205, 516)

    def test_hamiltonian_gaps(self):
        w = np.linalg.eigvalsh(build_hamiltonian(ZfsParameters(-1205, 516)))
        # |0> sits at zero energy
        gaps = sorted(abs(v) for v in w if abs(v) > 1e-9)
        np.testing.assert_allclose(gaps, [689, 1721], atol=1e-9)

    def test_zero_hamiltonian(self):
        np.testing.assert_array_equal(build_hamiltonian(ZfsParameters(0, 0)), np.zeros((3, 3)))

    def test_axial_limit(self):
        b = eigenstructure(ZfsParameters(-1205, 0))
        assert b.nu_plus == b.nu_minus == 1205


class TestEigenstructure:
    def test_reference_frequencies(self):
        b = eigenstructure(ZfsParameters(-1205, 516))
        assert abs(b.nu_plus - 689) <= 1e-9 and abs(b.nu_minus - 1721) <= 1e-9

    def test_kets(self):
        b = eigenstructure(ZfsParameters(-1205, 516))
        r = 1 / np.sqrt(2)
        np.testing.assert_allclose(b.ket_plus, [r, 0, r], atol=1e-15)
        np.testing.assert_allclose(b.ket_minus, [r, 0, -r], atol=1e-15)
        u = b.unitary()
        np.testing.assert_allclose(u.conj().T @ u, np.eye(3), atol=1e-12)

    def test_sign_swap_exchanges_branches(self):
        a = eigenstructure(ZfsParameters(-1205, 516))
        b = eigenstructure(ZfsParameters(-1205, -516))
        assert (a.nu_plus, a.nu_minus) == (b.nu_minus, b.nu_plus)

    @settings(max_examples=1000, deadline=None)
    @given(freq, freq)
    def test_frequencies_property(self, d, e):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            zfs = ZfsParameters(d, e)
        b = eigenstructure(zfs)
        assert abs(b.nu_plus - abs(d + e)) <= 1e-9
        assert abs(b.nu_minus - abs(d - e)) <= 1e-9
        h = build_hamiltonian(zfs)
        u = b.unitary()
        off = u.conj().T @ h @ u
        assert np.max(np.abs(off - np.diag(np.diag(off)))) <= 1e-9

    @settings(max_examples=1000, deadline=None)
    @given(st.floats(-3000, -1), st.floats(0, 0.999))
    def test_round_trip_property(self, d, frac):
        e = frac * abs(d)
        b = eigenstructure(ZfsParameters(d, e))
        back = zfs_from_transitions(b.nu_plus, b.nu_minus)
        assert abs(abs(back.d) - abs(d)) <= 1e-9 and abs(back.e - e) <= 1e-9


class TestInversion:
    def test_reference_values(self):
        z = zfs_from_transitions(689, 1721)
        assert z.d == -1205 and z.e == 516

    def test_equal_lines(self):
        assert zfs_from_transitions(900, 900).e == 0

    def test_round_trip(self):
        b = eigenstructure(zfs_from_transitions(689.3, 1720.7))
        assert abs(b.nu_plus - 689.3) <= 1e-9 and abs(b.nu_minus - 1720.7) <= 1e-9

    @pytest.mark.parametrize("args", [(0, 10), (-1, 10), (20, 10)])
    def test_rejects(self, args):
        with pytest.raises(ValueError):
            zfs_from_transitions(*args)


class TestRabi:
    basis = eigenstructure(ZfsParameters(-1205, 516))

    def test_x_field(self):
        d = MwDrive(np.array([0.2, 0, 0]))
        assert rabi_matrix_element(d, self.basis, "plus") == pytest.approx(GAMMA_E * 0.2, rel=1e-12)
        assert rabi_matrix_element(d, self.basis, "minus") < 1e-15

    def test_z_field(self):
        d = MwDrive(np.array([0, 0, 1.0]))
        assert rabi_matrix_element(d, self.basis, "plus") < 1e-15
        assert rabi_matrix_element(d, self.basis, "minus") < 1e-15

    def test_selection_rules(self):
        s = build_spin_operators()
        b = self.basis
        assert abs(np.vdot(b.ket0, s.sx @ b.ket_minus)) < 1e-15
        assert abs(np.vdot(b.ket0, s.sy @ b.ket_plus)) < 1e-15
        for k in (b.ket_plus, b.ket_minus):
            assert abs(np.vdot(b.ket0, s.sz @ k)) < 1e-15

    def test_gamma_positive(self):
        with pytest.raises(ValueError):
            MwDrive(np.zeros(3), gamma_e=0)

    def test_closed_form_examples(self):
        assert rabi_closed_form(1.0, np.pi / 2, GAMMA_E, "plus") < 1e-12
        ratio = rabi_closed_form(1.0, np.pi / 2, GAMMA_E, "minus") / rabi_closed_form(
            1.0, np.pi / 6, GAMMA_E, "minus")
        assert ratio == pytest.approx(2, abs=1e-12)
        with pytest.raises(ValueError):
            rabi_closed_form(-1, 0, GAMMA_E, "plus")
        with pytest.raises(ValueError):
            rabi_closed_form(1, 0, GAMMA_E, "up")

    @settings(max_examples=1000, deadline=None)
    @given(st.lists(st.floats(-10, 10), min_size=3, max_size=3), st.sampled_from(["plus", "minus"]))
    def test_matrix_element_equals_closed_form(self, b, branch):
        b = np.array(b)
        b_perp, phi = mw_projection(b, unit_frame)
        m = rabi_matrix_element(MwDrive(b), self.basis, branch)
        c = rabi_closed_form(b_perp, phi, GAMMA_E, branch)
        assert abs(m - c) <= 1e-9 * max(1.0, abs(c))

    @settings(max_examples=300, deadline=None)
    @given(st.floats(0, 10), st.floats(-7, 7))
    def test_quadrature_sum(self, b_perp, phi):
        p = rabi_closed_form(b_perp, phi, GAMMA_E, "plus")
        m = rabi_closed_form(b_perp, phi, GAMMA_E, "minus")
        assert p**2 + m**2 == pytest.approx((GAMMA_E * b_perp) ** 2, rel=1e-9, abs=1e-12)


class TestDetuning:
    def test_example(self):
        assert round(correct_detuning(3.8, 1.9), 2) == 3.29

    def test_zero_detuning(self):
        assert detuned_rabi(2.5, 0) == 2.5

    def test_rejects(self):
        with pytest.raises(ValueError):
            correct_detuning(1.0, 2.0)

    @given(st.floats(1e-6, 100), st.floats(0, 1))
    def test_round_trip(self, omega_det, frac):
        delta = frac * omega_det
        back = detuned_rabi(correct_detuning(omega_det, delta), delta)
        assert back == pytest.approx(omega_det, rel=1e-12, abs=1e-300)
