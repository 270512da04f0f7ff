import numpy as np
import pytest

from xlris import (PhaseConfig, SystemConfig, aux_values, build_scenario,
                   build_statistical_channel, closed_form_report,
                   half_wavelength_config, interference_term, noise_term,
                   signal_term)
from xlris.channel import AngleSet
from xlris.visibility import build_vr, full_region

from oracles import dense_aux_values

ORACLE_FIELDS = ("beam", "bs_gain", "bs_gain_prod", "mix", "ris_gain",
                 "ris_gain_mix", "loop_user", "loop_bs", "loop_beam", "beam_prod")


def scenario(m_bs=4, n1=2, n2=4, k_users=2, seed=0, vr_spec="random", **overrides):
    cfg = half_wavelength_config(m_bs, n1, n2, k_users, seed=seed, **overrides)
    return build_scenario(cfg, vr_spec=vr_spec)


def test_aux_values_match_dense_oracle():
    rng = np.random.default_rng(10)
    for trial in range(6):
        stat = scenario(seed=trial, delta=float(rng.uniform(0.1, 4.0)))
        theta = rng.uniform(0, 2 * np.pi, size=stat.n_ris)
        phi = PhaseConfig(theta)
        for k in range(stat.k_users):
            for i in range(stat.k_users):
                got = aux_values(stat, phi, k, i)
                want = dense_aux_values(stat, phi.theta, k, i)
                for name in ORACLE_FIELDS:
                    g, w = getattr(got, name), want[name]
                    assert abs(g - w) <= 1e-12 * max(abs(w), 1.0), \
                        f"{name} mismatch at pair ({k},{i}): {g} vs {w}"


def test_aux_reality_properties():
    stat = scenario(seed=3)
    phi = PhaseConfig.random(stat.n_ris, np.random.default_rng(1))
    for k in range(stat.k_users):
        vals = aux_values(stat, phi, k, k)
        assert vals.bs_gain >= 0.0
        assert vals.ris_gain >= 0.0
        assert np.imag(vals.mix) == pytest.approx(0.0, abs=1e-12)
        assert np.real(vals.mix) >= -1e-12


def test_scalar_panel_beam():
    # single-element panel: the beam gain is just the rotated LoS product
    cfg = half_wavelength_config(2, 1, 1, 1)
    stat = build_scenario(cfg, vr_spec="full")
    phi = PhaseConfig(np.array([0.7]))
    vals = aux_values(stat, phi, 0, 0)
    expected = np.conj(stat.a_n[0]) * np.exp(0.7j) * stat.hbar[0, 0]
    assert vals.beam == pytest.approx(expected, rel=1e-12)


def test_ris_gain_identity_correlation():
    # one-row panel at half-wavelength spacing has identity correlation
    stat = scenario(m_bs=3, n1=1, n2=6, k_users=1, vr_spec="full")
    np.testing.assert_allclose(stat.r_ris, np.eye(6), atol=1e-14)
    phi = PhaseConfig.random(6, np.random.default_rng(0))
    vals = aux_values(stat, phi, 0, 0)
    assert vals.ris_gain == pytest.approx(6.0, rel=1e-12)


def test_noise_term_rayleigh_case():
    # with no LoS on either hop only the correlation trace survives
    stat = scenario(m_bs=3, n1=1, n2=6, k_users=1, vr_spec="full",
                    delta=0.0, eps=(0.0,))
    phi = PhaseConfig.random(6, np.random.default_rng(2))
    expected = stat.c[0] * 3 * 6
    assert noise_term(stat, phi, 0) == pytest.approx(expected, rel=1e-12)


def test_noise_term_single_element_symbolic():
    cfg = half_wavelength_config(1, 1, 1, 1, delta=0.8, eps=(2.5,))
    stat = build_scenario(cfg, vr_spec="full")
    phi = PhaseConfig(np.array([1.2]))
    d, e, c = 0.8, 2.5, stat.c[0]
    # N = M = 1 with unit-modulus vectors: every building block is 1
    expected = c * (d * e + d + e + 1.0)
    assert noise_term(stat, phi, 0) == pytest.approx(expected, rel=1e-12)
    # which is exactly alpha * beta: both hops have unit average power
    assert expected == pytest.approx(stat.alpha[0] * stat.beta, rel=1e-12)


def test_signal_term_rayleigh_reduces_to_single_group():
    stat = scenario(m_bs=4, n1=2, n2=4, seed=5, delta=0.0, eps=(0.0, 0.0))
    phi = PhaseConfig.random(stat.n_ris, np.random.default_rng(3))
    m, c = 4, stat.c[0]
    vals = aux_values(stat, phi, 0, 0)
    expected = c ** 2 * m * (m + 1) * (vals.ris_gain_mix + vals.ris_gain ** 2)
    assert signal_term(stat, phi, 0) == pytest.approx(expected, rel=1e-12)


def test_interference_rayleigh_reduces_to_correlation_groups():
    stat = scenario(m_bs=4, n1=2, n2=4, seed=6, delta=0.0, eps=(0.0, 0.0))
    phi = PhaseConfig.random(stat.n_ris, np.random.default_rng(4))
    m = 4
    ck, ci = stat.c[0], stat.c[1]
    vals = aux_values(stat, phi, 0, 1)
    expected = ck * ci * m * (vals.ris_gain * aux_values(stat, phi, 1, 0).ris_gain
                              + m * vals.ris_gain_mix)
    assert interference_term(stat, phi, 0, 1) == pytest.approx(expected, rel=1e-12)


def test_interference_rejects_same_user():
    stat = scenario()
    with pytest.raises(ValueError):
        interference_term(stat, PhaseConfig.zeros(stat.n_ris), 1, 1)


def test_fourth_moment_dominates_squared_second():
    # E|q|^4 >= (E|q|^2)^2 must hold for the closed forms as well
    rng = np.random.default_rng(8)
    for trial in range(8):
        stat = scenario(seed=20 + trial, delta=float(rng.uniform(0, 3)))
        phi = PhaseConfig.random(stat.n_ris, rng)
        for k in range(stat.k_users):
            e2 = noise_term(stat, phi, k)
            e4 = signal_term(stat, phi, k)
            assert e4 >= e2 ** 2 * (1.0 - 1e-10)


def test_terms_nonnegative():
    rng = np.random.default_rng(31)
    for trial in range(10):
        stat = scenario(m_bs=3, n1=3, n2=3, k_users=3, seed=40 + trial,
                        eps=(10.0, 1.0, 0.3), delta=float(rng.uniform(0, 4)))
        phi = PhaseConfig.random(stat.n_ris, rng)
        rep = closed_form_report(stat, phi)
        assert np.all(rep.noise >= -1e-9)
        assert np.all(rep.signal >= -1e-9)
        assert np.all(rep.interference >= -1e-9)
        assert np.all(np.isfinite(rep.rates))


def test_report_vanishing_power():
    stat = scenario(seed=2)
    phi = PhaseConfig.random(stat.n_ris, np.random.default_rng(5))
    rep = closed_form_report(stat, phi, p=1e-30)
    assert np.all(rep.sinr < 1e-10)
    assert np.all(rep.rates < 1e-10)


def test_report_is_deterministic():
    stat = scenario(seed=4)
    phi = PhaseConfig.random(stat.n_ris, np.random.default_rng(6))
    a = closed_form_report(stat, phi)
    b = closed_form_report(stat, phi)
    np.testing.assert_array_equal(a.rates, b.rates)
    assert a.min_rate == b.min_rate
    # consistency with the standalone term functions
    for k in range(stat.k_users):
        assert a.noise[k] == noise_term(stat, phi, k)
        assert a.signal[k] == signal_term(stat, phi, k)


def test_rate_identity():
    stat = scenario(seed=9)
    phi = PhaseConfig.random(stat.n_ris, np.random.default_rng(7))
    rep = closed_form_report(stat, phi)
    np.testing.assert_allclose(rep.rates, np.log2(1.0 + rep.sinr), rtol=1e-15)
    assert rep.min_rate == rep.rates.min()


def test_phase_periodicity():
    stat = scenario(seed=11)
    rng = np.random.default_rng(12)
    theta = rng.uniform(0, 2 * np.pi, size=stat.n_ris)
    base = closed_form_report(stat, PhaseConfig(theta))
    for n in (0, stat.n_ris - 1):
        shifted = theta.copy()
        shifted[n] += 2 * np.pi
        rep = closed_form_report(stat, PhaseConfig(shifted))
        np.testing.assert_allclose(rep.rates, base.rates, rtol=1e-12)


def test_user_permutation_equivariance():
    cfg = half_wavelength_config(4, 3, 3, 3, eps=(10.0, 2.0, 0.5), seed=0)
    rng = np.random.default_rng(13)
    angles = AngleSet.random(3, rng)
    vrs = [build_vr({"kind": "random"}, 3, 3, rng) for _ in range(3)]
    stat = build_statistical_channel(cfg, angles, vrs)

    perm = [2, 0, 1]
    angles_p = AngleSet(
        bs_aoa_az=angles.bs_aoa_az, bs_aoa_el=angles.bs_aoa_el,
        ris_aod_az=angles.ris_aod_az, ris_aod_el=angles.ris_aod_el,
        user_aoa_az=tuple(angles.user_aoa_az[j] for j in perm),
        user_aoa_el=tuple(angles.user_aoa_el[j] for j in perm))
    cfg_p = cfg.with_updates(eps=tuple(cfg.eps[j] for j in perm))
    stat_p = build_statistical_channel(cfg_p, angles_p, [vrs[j] for j in perm])

    phi = PhaseConfig.random(9, np.random.default_rng(14))
    rep = closed_form_report(stat, phi)
    rep_p = closed_form_report(stat_p, phi)
    np.testing.assert_allclose(rep_p.rates, rep.rates[perm], rtol=1e-10)
    assert rep_p.min_rate == pytest.approx(rep.min_rate, rel=1e-10)
