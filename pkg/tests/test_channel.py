import math

import numpy as np
import pytest

from xlris import (AngleSet, PhaseConfig, SystemConfig, build_scenario,
                   build_statistical_channel, build_vr, cascaded_channel,
                   full_region, half_wavelength_config, los_weights,
                   random_visibility_set, rect_region, sample_realization,
                   vr_covariance)
from xlris.geometry import correlation_matrix


def small_config(**overrides):
    base = dict(m_bs=4, n1=4, n2=4, k_users=2, eps=(10.0, 10.0), seed=7)
    base.update(overrides)
    return SystemConfig(**base)


def small_scenario(**overrides):
    return build_scenario(small_config(**overrides), vr_spec="random")


# ---------------------------------------------------------------- visibility
def test_full_region_mask():
    vr = full_region(3, 4)
    assert vr.size == 12
    np.testing.assert_array_equal(vr.mask, np.ones(12))


def test_rect_region_first_row():
    vr = rect_region(2, 2, 0, 0, 1, 2)
    np.testing.assert_array_equal(vr.nu, [0, 1])


def test_rect_region_interior_block():
    # rows 1-2, columns 1-2 of a 4x4 grid, row-major indexing
    vr = rect_region(4, 4, 1, 1, 2, 2)
    np.testing.assert_array_equal(vr.nu, [5, 6, 9, 10])


def test_rect_region_rejects_oversized_and_empty():
    with pytest.raises(ValueError):
        rect_region(4, 4, 3, 0, 2, 1)
    with pytest.raises(ValueError):
        rect_region(4, 4, 0, 0, 0, 1)


def test_build_vr_specs():
    assert build_vr("full", 3, 3).size == 9
    np.testing.assert_array_equal(build_vr((1, 1, 2, 2), 4, 4).nu, [5, 6, 9, 10])
    np.testing.assert_array_equal(build_vr([3, 1, 2], 2, 2).nu, [1, 2, 3])
    rng = np.random.default_rng(0)
    vr = build_vr({"kind": "random"}, 6, 6, rng)
    assert 1 <= vr.size <= 36


def test_random_vr_deterministic_under_seed():
    a = build_vr({"kind": "random"}, 8, 8, np.random.default_rng(11))
    b = build_vr({"kind": "random"}, 8, 8, np.random.default_rng(11))
    np.testing.assert_array_equal(a.nu, b.nu)


def test_overlap_zero_gives_disjoint_bands():
    regions = random_visibility_set(8, 8, 4, np.random.default_rng(1), overlap=0.0)
    masks = np.stack([r.mask for r in regions])
    assert np.all(masks.sum(axis=0) <= 1.0)
    assert masks.sum() == 64  # bands cover the panel


def test_overlap_one_gives_identical_regions():
    regions = random_visibility_set(8, 8, 4, np.random.default_rng(2), overlap=1.0)
    for r in regions[1:]:
        np.testing.assert_array_equal(r.nu, regions[0].nu)


def test_vr_covariance_masking():
    r = correlation_matrix(4, 4, 0.025, 0.1)
    vr = rect_region(4, 4, 1, 1, 2, 2)
    masked = vr_covariance(r, vr)
    np.testing.assert_array_equal(masked[np.ix_(vr.nu, vr.nu)],
                                  r[np.ix_(vr.nu, vr.nu)])
    outside = np.setdiff1d(np.arange(16), vr.nu)
    assert np.all(masked[outside, :] == 0.0)
    assert np.all(masked[:, outside] == 0.0)
    # full visibility leaves the correlation untouched
    np.testing.assert_array_equal(vr_covariance(r, full_region(4, 4)), r)


def test_vr_covariance_index_list_subblock():
    rng = np.random.default_rng(5)
    a = rng.standard_normal((4, 4))
    r = a @ a.T
    vr = build_vr([0, 2], 2, 2)
    masked = vr_covariance(r, vr)
    expected = np.zeros_like(r)
    for p in (0, 2):
        for q in (0, 2):
            expected[p, q] = r[p, q]
    np.testing.assert_array_equal(masked, expected)


# ---------------------------------------------------------- statistical CSI
def test_los_matrix_is_rank_one_unit_modulus():
    stat = small_scenario()
    h2bar = stat.hbar2
    assert np.linalg.matrix_rank(h2bar) == 1
    np.testing.assert_allclose(np.abs(h2bar), 1.0, atol=1e-12)


def test_composite_gain_value():
    cfg = small_config(delta=1.0, eps=(10.0, 10.0), d_ui=1.0, d_ib=1.0,
                       pl_exp_ur=2.0, pl_exp_rb=2.5)
    stat = build_scenario(cfg)
    # alpha = beta = 1e-3 at unit distance, so c = 1e-6 / (2 * 11)
    np.testing.assert_allclose(stat.c, 1e-6 / 22.0, rtol=1e-12)
    assert np.all(stat.c > 0)


def test_sqrt_caches_reconstruct():
    stat = small_scenario()
    err = np.linalg.norm(stat.r_ris_sqrt @ stat.r_ris_sqrt - stat.r_ris)
    assert err / np.linalg.norm(stat.r_ris) <= 1e-10
    for r, root in zip(stat.r_vr, stat.r_vr_sqrt):
        norm = np.linalg.norm(r)
        if norm > 0:
            assert np.linalg.norm(root @ root - r) / norm <= 1e-10


def test_masked_correlation_matches_subblock():
    stat = small_scenario()
    for k, vr in enumerate(stat.vrs):
        np.testing.assert_array_equal(stat.r_vr[k][np.ix_(vr.nu, vr.nu)],
                                      stat.r_ris[np.ix_(vr.nu, vr.nu)])
        outside = np.setdiff1d(np.arange(stat.n_ris), vr.nu)
        assert np.all(stat.r_vr[k][outside, :] == 0.0)


def test_angles_frozen_per_seed():
    a = build_scenario(small_config()).angles
    b = build_scenario(small_config()).angles
    assert a == b


# --------------------------------------------------------------- realizations
def test_seed_determinism():
    stat = small_scenario()
    r1 = sample_realization(stat, np.random.default_rng(42))
    r2 = sample_realization(stat, np.random.default_rng(42))
    np.testing.assert_array_equal(r1.h_users, r2.h_users)
    np.testing.assert_array_equal(r1.h2, r2.h2)


def test_pure_los_user_limit():
    stat = build_scenario(small_config(eps=(math.inf, math.inf)), vr_spec="random")
    real = sample_realization(stat, np.random.default_rng(0))
    for k in range(2):
        expected = np.sqrt(stat.alpha[k]) * stat.masked_los(k)
        np.testing.assert_array_equal(real.h_users[k], expected)


def test_pure_nlos_bs_limit():
    stat = build_scenario(small_config(delta=0.0))
    real = sample_realization(stat, np.random.default_rng(0))
    expected = np.sqrt(stat.beta) * (real.htilde2 @ stat.r_ris_sqrt)
    np.testing.assert_allclose(real.h2, expected, rtol=1e-12)


def test_los_weights_inf_flag():
    assert los_weights(math.inf) == (1.0, 0.0)
    w_los, w_nlos = los_weights(3.0)
    assert w_los ** 2 + w_nlos ** 2 == pytest.approx(1.0)


def test_diffuse_entry_variance_matches_masked_correlation():
    # entries of w_nlos * R^{1/2} htilde have variance diag(R) / (eps + 1)
    cfg = small_config()
    stat = build_scenario(cfg, vr_spec="random")
    k = 0
    eps = cfg.eps[k]
    rng = np.random.default_rng(9)
    trials = 100_000
    draws = (rng.standard_normal((trials, cfg.n_ris))
             + 1j * rng.standard_normal((trials, cfg.n_ris))) / np.sqrt(2.0)
    scaled = draws @ stat.r_vr_sqrt[k].T / np.sqrt(eps + 1.0)
    var = np.mean(np.abs(scaled) ** 2, axis=0)
    expected = np.diag(stat.r_vr[k]) / (eps + 1.0)
    active = expected > 0
    np.testing.assert_allclose(var[active], expected[active], rtol=0.03)
    # the eigendecomposition square root leaves ~1e-19 residue in masked rows
    assert np.all(var[~active] <= 1e-16)


def test_sample_mean_converges_to_los_component():
    cfg = small_config(m_bs=2)
    stat = build_scenario(cfg, vr_spec="random")
    rng = np.random.default_rng(123)
    trials = 100_000
    acc = np.zeros((cfg.k_users, cfg.n_ris), dtype=complex)
    for _ in range(trials):
        acc += sample_realization(stat, rng).h_users
    mean = acc / trials
    for k in range(cfg.k_users):
        eps = cfg.eps[k]
        expected = np.sqrt(stat.alpha[k] * eps / (eps + 1.0)) * stat.masked_los(k)
        # per-entry std of the mean: alpha/(eps+1) * diag(R) / trials per part
        entry_var = stat.alpha[k] / (eps + 1.0) * np.diag(stat.r_vr[k])
        tol = 3.0 * np.sqrt(np.maximum(entry_var, 1e-30) / trials)
        assert np.all(np.abs(mean[k] - expected) <= tol + 1e-12)


# ------------------------------------------------------------------ cascades
def test_cascaded_identity_phase():
    stat = small_scenario()
    real = sample_realization(stat, np.random.default_rng(1))
    phases = PhaseConfig.zeros(stat.n_ris).phases
    q = cascaded_channel(real.h2, phases, real.h_users[0])
    np.testing.assert_allclose(q, real.h2 @ real.h_users[0], rtol=1e-12)


def test_cascaded_zero_channel():
    h2 = np.ones((3, 2), dtype=complex)
    q = cascaded_channel(h2, np.exp(1j * np.array([0.3, 1.1])), np.zeros(2, complex))
    np.testing.assert_array_equal(q, np.zeros(3, complex))


def test_cascaded_hand_case():
    h2 = np.eye(2, dtype=complex)
    phases = np.exp(1j * np.array([0.0, np.pi]))
    q = cascaded_channel(h2, phases, np.ones(2, dtype=complex))
    np.testing.assert_allclose(q, [1.0, -1.0], atol=1e-12)


def test_cascaded_dimension_mismatch():
    with pytest.raises(ValueError):
        cascaded_channel(np.ones((2, 3), complex), np.ones(2, complex),
                         np.ones(3, complex))
