import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import NU_MINUS, NU_PLUS
from gspin.geometry import (
    N_SITES,
    OrientationEnsemble,
    SitePerturbation,
    all_sites,
    fine_transition_table,
    mw_projection,
    perturbations_from_lines,
    perturbed_zfs,
    site_axes,
)
from gspin.spin import ZfsParameters

B001 = np.array([0.0, 0.0, 1.0])


def test_site0_axes():
    s = site_axes(0)
    np.testing.assert_allclose(s.x_axis, np.array([-1, 1, 0]) / np.sqrt(2), atol=1e-15)
    np.testing.assert_allclose(s.y_axis, np.array([-1, -1, 2]) / np.sqrt(6), atol=1e-15)
    np.testing.assert_allclose(s.z_axis, np.ones(3) / np.sqrt(3), atol=1e-15)


def test_site3_half_turn():
    np.testing.assert_array_equal(site_axes(3).x_axis, -site_axes(0).x_axis)
    np.testing.assert_array_equal(site_axes(3).y_axis, -site_axes(0).y_axis)


@pytest.mark.parametrize("k", range(N_SITES))
def test_orthonormal_right_handed_shared_z(k):
    s = site_axes(k)
    r = s.rotation_matrix()
    np.testing.assert_allclose(r @ r.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(r) == pytest.approx(1, abs=1e-12)
    np.testing.assert_array_equal(s.z_axis, site_axes(0).z_axis)


def test_sixty_degree_steps():
    for k in range(N_SITES):
        a, b = site_axes(k).x_axis, site_axes((k + 1) % N_SITES).x_axis
        assert a @ b == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("bad", [-1, 6, 1.5])
def test_bad_index(bad):
    with pytest.raises(ValueError):
        site_axes(bad)


def test_phi_multisets():
    phis = [mw_projection(B001, s)[1] for s in all_sites()]
    np.testing.assert_allclose(sorted(abs(np.sin(phis))), [0.5] * 4 + [1, 1], atol=1e-12)
    np.testing.assert_allclose(sorted(abs(np.cos(phis))), [0, 0] + [np.sqrt(3) / 2] * 4, atol=1e-12)
    assert abs(abs(phis[0]) - np.pi / 2) < 1e-12
    for k in (1, 2, 4, 5):
        assert min(abs(abs(phis[k]) - np.pi / 6), abs(abs(phis[k]) - 5 * np.pi / 6)) < 1e-12


def test_field_along_z_has_no_transverse_part():
    for s in all_sites():
        assert mw_projection(np.ones(3), s)[0] < 1e-15


def test_ensemble_default_and_validation():
    np.testing.assert_allclose(OrientationEnsemble().weights, np.full(6, 1 / 6))
    for bad in ([1] * 5, [-1, 1, 1, 1, 1, 1], [0] * 6):
        with pytest.raises(ValueError):
            OrientationEnsemble(tuple(bad))


@given(st.lists(st.floats(0.01, 10), min_size=6, max_size=6), st.floats(1e-3, 1e3))
def test_ensemble_scale_invariant(p, c):
    a = OrientationEnsemble(tuple(p)).weights
    b = OrientationEnsemble(tuple(np.array(p) * c)).weights
    assert abs(a.sum() - 1) < 1e-12
    np.testing.assert_array_equal(a, b)


def test_perturbation_keeps_e_nonnegative():
    with pytest.raises(ValueError):
        perturbed_zfs(ZfsParameters(-1205, 5), SitePerturbation(0, -6))


def test_table_zero_perturbations():
    t = fine_transition_table(ZfsParameters(-1205, 516), None, B001)
    assert t.allowed_plus.sum() == 4 and t.allowed_minus.sum() == 6
    assert t.omega_plus[0] == 0 and t.omega_plus[3] == 0
    allowed = t.omega_plus[t.allowed_plus]
    np.testing.assert_allclose(allowed, allowed[0], rtol=1e-12)
    weak = t.omega_minus[[1, 2, 4, 5]]
    np.testing.assert_allclose(t.omega_minus[[0, 3]], 2 * weak[0], rtol=1e-12)
    assert len(set(np.round(np.r_[t.nu_plus, t.nu_minus], 9))) == 2


def test_example_lines_five_minus():
    zfs = ZfsParameters(-1205, 516)
    t = fine_transition_table(zfs, perturbations_from_lines(zfs, NU_PLUS, NU_MINUS), B001)
    np.testing.assert_allclose(t.nu_plus, NU_PLUS, atol=1e-9)
    np.testing.assert_allclose(t.nu_minus, NU_MINUS, atol=1e-9)
    assert len(t.resolvable_lines("plus", 2.0)) == 4
    assert len(t.resolvable_lines("minus", 2.0)) == 5
    assert len(t.transitions()) == 12
