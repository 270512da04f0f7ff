import numpy as np
import pytest

from xlris import (NumericalError, array_response_ula, array_response_uspa,
                   correlation_matrix, element_grid, element_position,
                   path_loss, psd_sqrt)


def test_ula_first_entry_is_one():
    v = array_response_ula(5, 1.234, 0.567, 0.5)
    assert v[0] == 1.0 + 0.0j


def test_ula_zero_elevation_gives_all_ones():
    v = array_response_ula(7, 2.1, 0.0, 0.5)
    np.testing.assert_allclose(v, np.ones(7), atol=1e-12)


def test_ula_broadside_alternates_sign():
    v = array_response_ula(4, np.pi / 2, np.pi / 2, 0.5)
    np.testing.assert_allclose(v, [1, -1, 1, -1], atol=1e-12)


def test_ula_unit_modulus():
    rng = np.random.default_rng(0)
    for _ in range(10):
        v = array_response_ula(16, rng.uniform(0, 2 * np.pi),
                               rng.uniform(0, 2 * np.pi), rng.uniform(0.1, 1.0))
        np.testing.assert_allclose(np.abs(v), 1.0, atol=1e-12)


def test_ula_rejects_empty_array():
    with pytest.raises(ValueError):
        array_response_ula(0, 0.0, 0.0, 0.5)


def test_uspa_first_entry_and_singleton():
    v = array_response_uspa(3, 3, 0.3, 1.7, 0.5)
    assert v[0] == 1.0 + 0.0j
    np.testing.assert_allclose(array_response_uspa(1, 1, 0.9, 0.4, 0.5), [1.0])


def test_uspa_two_by_two_broadside():
    # rows contribute pi each, columns multiply cos(pi/2) ~ 0
    v = array_response_uspa(2, 2, np.pi / 2, np.pi / 2, 0.5)
    np.testing.assert_allclose(v, [1, 1, -1, -1], atol=1e-12)


def test_uspa_matches_square_root_indexing():
    # on a square grid the row/column split coincides with sqrt(N) indexing
    n = 3
    theta_a, theta_e = 0.8, 2.4
    v = array_response_uspa(n, n, theta_a, theta_e, 0.5)
    idx = np.arange(n * n)
    expected = np.exp(1j * 2 * np.pi * 0.5 * (
        (idx // n) * np.sin(theta_e) * np.sin(theta_a)
        + (idx % n) * np.cos(theta_e)))
    np.testing.assert_allclose(v, expected, rtol=1e-14)


def test_uspa_rejects_zero_dimension():
    with pytest.raises(ValueError):
        array_response_uspa(0, 4, 0.0, 0.0, 0.5)


def test_element_position_cases():
    np.testing.assert_allclose(element_position(1, 4, 0.05, 0.05), [0, 0, 0])
    np.testing.assert_allclose(element_position(5, 4, 0.05, 0.07), [0, 0, 0.07])
    np.testing.assert_allclose(element_position(7, 4, 0.05, 0.05), [0, 0.10, 0.05])
    with pytest.raises(ValueError):
        element_position(0, 4, 0.05, 0.05)


def test_element_grid_matches_single_positions():
    grid = element_grid(3, 5, 0.04, 0.06)
    for p in range(1, 16):
        np.testing.assert_allclose(grid[p - 1], element_position(p, 5, 0.04, 0.06))


def test_correlation_unit_diagonal_and_symmetry():
    r = correlation_matrix(4, 5, 0.03, 0.1)
    np.testing.assert_array_equal(np.diag(r), np.ones(20))
    np.testing.assert_array_equal(r, r.T)


def test_correlation_half_wavelength_neighbours_decorrelated():
    r = correlation_matrix(1, 4, 0.05, 0.1)   # spacing = lambda / 2
    np.testing.assert_allclose(r[0, 1], 0.0, atol=1e-14)
    np.testing.assert_allclose(r[1, 2], 0.0, atol=1e-14)


def test_correlation_quarter_wavelength_value():
    r = correlation_matrix(1, 2, 0.025, 0.1)  # spacing = lambda / 4
    np.testing.assert_allclose(r[0, 1], 2.0 / np.pi, rtol=1e-12)


def test_correlation_min_eigenvalue_near_psd():
    for spacing in (0.05, 0.025, 0.0125):
        r = correlation_matrix(6, 6, spacing, 0.1)
        assert np.linalg.eigvalsh(r).min() >= -1e-8


def test_path_loss_values():
    assert path_loss(1.0, 2.0) == pytest.approx(1e-3, rel=1e-15)
    assert path_loss(15.0, 2.0) == pytest.approx(4.444444444444444e-06, rel=1e-12)
    assert path_loss(800.0, 2.5) == pytest.approx(5.524271728019903e-11, rel=1e-12)
    with pytest.raises(ValueError):
        path_loss(0.0, 2.0)


def test_psd_sqrt_roundtrip():
    rng = np.random.default_rng(3)
    for n1, n2, spacing in ((4, 4, 0.05), (3, 6, 0.025), (5, 5, 0.0125)):
        r = correlation_matrix(n1, n2, spacing, 0.1)
        root = psd_sqrt(r)
        err = np.linalg.norm(root @ root - r) / np.linalg.norm(r)
        assert err <= 1e-10
    # also on a random PSD matrix
    a = rng.standard_normal((12, 12))
    r = a @ a.T
    root = psd_sqrt(r)
    assert np.linalg.norm(root @ root - r) / np.linalg.norm(r) <= 1e-10


def test_psd_sqrt_rejects_indefinite():
    r = np.diag([1.0, -0.5])
    with pytest.raises(NumericalError):
        psd_sqrt(r)
