"""Monte-Carlo oracles for the closed-form rate and its moment terms.

These sample instantaneous channels and evaluate the exact MRC SINR, giving
an independent ground truth for the analytic approximations.  Sampling is
vectorized over trial batches; with ``batch=1`` the generator stream is
consumed exactly as by per-trial ``sample_realization`` calls.
"""
from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from .channel import StatisticalChannel, complex_normal, los_weights
from .rates import PhaseConfig, RateReport


def _auto_batch(trials: int, m: int, n: int) -> int:
    return max(1, min(trials, int(3e6 / max(m * n, 1))))


def _batch_cascaded(stat: StatisticalChannel, phases: NDArray[np.complexfloating],
                    rng: np.random.Generator, t: int) -> NDArray[np.complexfloating]:
    """``t`` realizations of all cascaded channels, shape (t, M, K)."""
    cfg = stat.cfg
    k, n, m = cfg.k_users, cfg.n_ris, cfg.m_bs
    htilde = complex_normal(rng, (t, k, n))
    htilde2 = complex_normal(rng, (t, m, n))

    h_users = np.empty((t, k, n), dtype=complex)
    for i in range(k):
        w_los, w_nlos = los_weights(cfg.eps[i])
        h = np.broadcast_to(w_los * stat.masked_los(i), (t, n)).copy()
        if w_nlos != 0.0:
            h += w_nlos * (htilde[:, i, :] @ stat.r_vr_sqrt[i])
        h_users[:, i, :] = np.sqrt(stat.alpha[i]) * h

    w_los, w_nlos = los_weights(cfg.delta)
    h2 = np.broadcast_to(w_los * stat.hbar2, (t, m, n)).copy()
    if w_nlos != 0.0:
        h2 += w_nlos * (htilde2 @ stat.r_ris_sqrt)
    h2 *= np.sqrt(stat.beta)
    return h2 @ (phases[None, :, None] * h_users.transpose(0, 2, 1))


def _gram_stats(q: NDArray[np.complexfloating]):
    """Per-trial |q_k|^2 and |q_k^H q_i|^2 (zero diagonal) from (t, M, K)."""
    gram = q.conj().transpose(0, 2, 1) @ q
    power = np.real(np.einsum("tkk->tk", gram))
    cross = np.abs(gram) ** 2
    idx = np.arange(gram.shape[1])
    cross[:, idx, idx] = 0.0
    return power, cross


def monte_carlo_report(stat: StatisticalChannel, phi: PhaseConfig, trials: int,
                       rng: np.random.Generator,
                       p: float | None = None,
                       sigma2: float | None = None,
                       batch: int | None = None) -> RateReport:
    """Sample-average rate: per trial, the exact MRC SINR

        p |q_k|^4 / (sum_{i != k} p |q_k^H q_i|^2 + sigma2 |q_k|^2)

    is evaluated with instantaneous cascaded channels q, and log2(1 + SINR)
    is averaged across trials.  Reports the mean and its standard error.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    p = stat.cfg.p if p is None else p
    sigma2 = stat.cfg.sigma2 if sigma2 is None else sigma2
    cfg = stat.cfg
    batch = _auto_batch(trials, cfg.m_bs, cfg.n_ris) if batch is None else batch
    phases = phi.phases
    k_users = stat.k_users
    rate_sum = np.zeros(k_users)
    rate_sq_sum = np.zeros(k_users)
    mean_noise = np.zeros(k_users)
    mean_signal = np.zeros(k_users)
    mean_interf = np.zeros(k_users)
    done = 0
    while done < trials:
        t = min(batch, trials - done)
        q = _batch_cascaded(stat, phases, rng, t)
        power, cross = _gram_stats(q)
        interf = cross.sum(axis=2)
        sinr = p * power ** 2 / (p * interf + sigma2 * power)
        r = np.log2(1.0 + sinr)
        rate_sum += r.sum(axis=0)
        rate_sq_sum += (r * r).sum(axis=0)
        mean_noise += power.sum(axis=0)
        mean_signal += (power ** 2).sum(axis=0)
        mean_interf += interf.sum(axis=0)
        done += t
    rates = rate_sum / trials
    var = np.maximum(rate_sq_sum / trials - rates ** 2, 0.0)
    std_err = np.sqrt(var / trials)
    mean_noise /= trials
    mean_signal /= trials
    mean_interf /= trials
    sinr = p * mean_signal / (p * mean_interf + sigma2 * mean_noise)
    return RateReport(method="monte-carlo", noise=mean_noise, signal=mean_signal,
                      interference=mean_interf, sinr=sinr, rates=rates,
                      min_rate=float(rates.min()), trials=trials, std_err=std_err)


def monte_carlo_moments(stat: StatisticalChannel, phi: PhaseConfig, trials: int,
                        rng: np.random.Generator, batch: int | None = None):
    """Sample estimates of E|q_k|^2, E|q_k|^4 and E|q_k^H q_i|^2.

    Returns (noise, signal, interference) where interference has shape
    (K, K) with zero diagonal.
    """
    cfg = stat.cfg
    batch = _auto_batch(trials, cfg.m_bs, cfg.n_ris) if batch is None else batch
    phases = phi.phases
    k_users = stat.k_users
    noise = np.zeros(k_users)
    signal = np.zeros(k_users)
    interf = np.zeros((k_users, k_users))
    done = 0
    while done < trials:
        t = min(batch, trials - done)
        q = _batch_cascaded(stat, phases, rng, t)
        power, cross = _gram_stats(q)
        noise += power.sum(axis=0)
        signal += (power ** 2).sum(axis=0)
        interf += cross.sum(axis=0)
        done += t
    return noise / trials, signal / trials, interf / trials


def quartic_trace_identity_error(m: int, n: int,
                                 a: NDArray[np.complexfloating],
                                 b: NDArray[np.complexfloating],
                                 w: NDArray[np.complexfloating],
                                 trials: int, rng: np.random.Generator) -> float:
    """Relative Frobenius error of the Gaussian quartic moment identity

        E{ H^H A H W H^H B H } = Tr(W) Tr(AB) I + Tr(A) Tr(B) W

    for H with i.i.d. unit-variance complex Gaussian entries, estimated by
    sampling.  Test utility, not production code.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    w = np.asarray(w, dtype=complex)
    closed = np.trace(w) * np.trace(a @ b) * np.eye(n) + np.trace(a) * np.trace(b) * w
    batch = max(1, min(trials, 20000))
    acc = np.zeros((n, n), dtype=complex)
    done = 0
    while done < trials:
        t = min(batch, trials - done)
        h = (rng.standard_normal((t, m, n)) + 1j * rng.standard_normal((t, m, n))) \
            / np.sqrt(2.0)
        ga = np.einsum("tmi,mn,tnj->tij", h.conj(), a, h, optimize=True)
        gb = np.einsum("tmi,mn,tnj->tij", h.conj(), b, h, optimize=True)
        acc += np.einsum("tij,jk,tkl->il", ga, w, gb, optimize=True)
        done += t
    estimate = acc / trials
    denom = np.linalg.norm(closed)
    if denom == 0.0:
        return float(np.linalg.norm(estimate))
    return float(np.linalg.norm(estimate - closed) / denom)
