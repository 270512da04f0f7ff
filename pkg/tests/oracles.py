"""Independent reference implementations used only by the tests.

Everything here is written as literal dense matrix products over the full
N x N matrices (explicit diagonal phase matrix, explicit rank-one LoS
matrix), deliberately ignoring every structural shortcut the package takes.
"""
import numpy as np


def dense_aux_values(stat, theta, k, i):
    """The ten moment building blocks for the pair (k, i), dense-matrix form."""
    n = stat.n_ris
    phi = np.diag(np.exp(1j * np.asarray(theta)))
    phi_h = phi.conj().T
    a_n = stat.a_n
    h2bar = np.outer(stat.a_m, a_n.conj())
    h2bar_h = h2bar.conj().T
    dk = np.diag(stat.vrs[k].mask)
    di = np.diag(stat.vrs[i].mask)
    hk, hi = stat.hbar[k], stat.hbar[i]
    r, rk, ri = stat.r_ris, stat.r_vr[k], stat.r_vr[i]

    bs_k = h2bar @ phi @ rk @ phi_h @ h2bar_h
    bs_i = h2bar @ phi @ ri @ phi_h @ h2bar_h
    ris_k = r @ phi @ rk @ phi_h
    ris_i = r @ phi @ ri @ phi_h

    beam = a_n.conj() @ phi @ dk @ hk
    beam_i = a_n.conj() @ phi @ di @ hi
    return {
        "beam": beam,
        "bs_gain": np.trace(bs_k),
        "bs_gain_prod": np.trace(bs_k @ bs_i),
        "mix": hk.conj() @ dk @ phi_h @ r @ phi @ di @ hi,
        "ris_gain": np.trace(ris_k),
        "ris_gain_mix": np.trace(ris_k @ ris_i),
        "loop_user": hk.conj() @ dk @ phi_h @ r @ phi @ ri @ phi_h @ r @ phi @ dk @ hk,
        "loop_bs": np.trace(h2bar @ phi @ rk @ phi_h @ r @ phi @ ri @ phi_h @ h2bar_h),
        "loop_beam": hk.conj() @ dk @ phi_h @ h2bar_h @ h2bar @ phi @ ri
                     @ phi_h @ r @ phi @ dk @ hk,
        "beam_prod": np.conj(beam) * beam_i,
    }


def dense_trace_gradient(a, b, theta, h=1e-7):
    """Finite-difference gradient of Tr(A Phi B Phi^H) wrt theta."""
    theta = np.asarray(theta, dtype=float)

    def value(t):
        phi = np.diag(np.exp(1j * t))
        return np.trace(a @ phi @ b @ phi.conj().T)

    grad = np.zeros(theta.size, dtype=complex)
    for idx in range(theta.size):
        step = np.zeros_like(theta)
        step[idx] = h
        grad[idx] = (value(theta + step) - value(theta - step)) / (2.0 * h)
    return grad


def mc_term_moments(stat, theta, trials, rng):
    """Brute-force sample moments of the cascaded channels: E|q_k|^2,
    E|q_k|^4 and E|q_k^H q_i|^2, sampling through the package channel model
    but combining with explicit per-trial linear algebra."""
    from xlris.channel import sample_realization

    phases = np.exp(1j * np.asarray(theta))
    k_users = stat.k_users
    noise = np.zeros(k_users)
    signal = np.zeros(k_users)
    interf = np.zeros((k_users, k_users))
    for _ in range(trials):
        real = sample_realization(stat, rng)
        q = np.stack([real.h2 @ (phases * real.h_users[k]) for k in range(k_users)])
        for k in range(k_users):
            pk = np.vdot(q[k], q[k]).real
            noise[k] += pk
            signal[k] += pk * pk
            for i in range(k_users):
                if i != k:
                    interf[k, i] += abs(np.vdot(q[k], q[i])) ** 2
    return noise / trials, signal / trials, interf / trials
