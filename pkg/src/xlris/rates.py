"""Closed-form ergodic-rate evaluation from statistical CSI.

With MRC at the BS, the per-user SINR is a ratio of fourth/second moments of
the cascaded channels.  Averaging those moments analytically over the
diffuse fading leaves ten scalar building blocks per user pair, all cheap
quadratic/trace forms in the phase-rotated correlation matrices:

    u_k   = Phi m_k                 (m_k: masked user-k LoS vector)
    X_k   = Phi C_k Phi^H           (C_k: masked RIS correlation of user k)

    beam(k)          a^H u_k
    bs_gain(k)       M a^H X_k a
    bs_gain_prod(k,i)    bs_gain(k) bs_gain(i)
    mix(k,i)         u_k^H R u_i
    ris_gain(k)      Tr(R X_k)
    ris_gain_mix(k,i)    Tr(R X_k R X_i)
    loop_user(k,i)   (R u_k)^H X_i (R u_k)
    loop_bs(k,i)     M (X_k a)^H R (X_i a)
    loop_beam(k,i)   M conj(beam(k)) (X_i a)^H (R u_k)
    beam_prod(k,i)   conj(beam(k)) beam(i)

where a is the RIS steering vector toward the BS and R the full RIS
correlation.  The rank-one LoS RIS-BS matrix never has to be materialized;
the BS size M enters only through explicit scalar factors.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .config import NumericalError
from .channel import StatisticalChannel

TWO_PI = 2.0 * np.pi


def _abs2(z) -> float:
    return float(np.real(z * np.conj(z)))


@dataclass(frozen=True)
class PhaseConfig:
    """RIS phase vector; the reflection coefficients are exp(j theta)."""

    theta: NDArray[np.floating]

    def __post_init__(self) -> None:
        theta = np.mod(np.asarray(self.theta, dtype=float).ravel(), TWO_PI)
        object.__setattr__(self, "theta", theta)

    @property
    def n_ris(self) -> int:
        return self.theta.size

    @property
    def phases(self) -> NDArray[np.complexfloating]:
        return np.exp(1j * self.theta)

    def matrix(self) -> NDArray[np.complexfloating]:
        return np.diag(self.phases)

    @classmethod
    def zeros(cls, n: int) -> "PhaseConfig":
        return cls(np.zeros(n))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "PhaseConfig":
        return cls(rng.uniform(0.0, TWO_PI, size=n))


@dataclass(frozen=True)
class AuxValues:
    """The ten moment building blocks for an ordered user pair (k, i);
    single-user entries (beam, bs_gain, ris_gain) refer to user k."""

    beam: complex
    bs_gain: float
    bs_gain_prod: float
    mix: complex
    ris_gain: float
    ris_gain_mix: float
    loop_user: float
    loop_bs: complex
    loop_beam: complex
    beam_prod: complex


@dataclass
class RateReport:
    """Per-user rate terms for one evaluation method."""

    method: str
    noise: NDArray[np.floating]
    signal: NDArray[np.floating]
    interference: NDArray[np.floating]
    sinr: NDArray[np.floating]
    rates: NDArray[np.floating]
    min_rate: float
    trials: int | None = None
    std_err: NDArray[np.floating] | None = None


class MomentEngine:
    """Shared assembly of the noise/signal/interference terms from the ten
    building blocks; subclasses provide the blocks themselves."""

    m_bs: int
    k_users: int
    delta: float
    eps: NDArray[np.floating]
    c: NDArray[np.floating]

    # ---- building blocks (implemented by subclasses) ----
    def beam(self, k: int) -> complex: ...
    def bs_gain(self, k: int) -> float: ...
    def mix(self, k: int, i: int) -> complex: ...
    def ris_gain(self, k: int) -> float: ...
    def ris_gain_mix(self, k: int, i: int) -> float: ...
    def loop_user(self, k: int, i: int) -> float: ...
    def loop_bs(self, k: int, i: int) -> complex: ...
    def loop_beam(self, k: int, i: int) -> complex: ...

    def bs_gain_prod(self, k: int, i: int) -> float:
        return self.bs_gain(k) * self.bs_gain(i)

    def beam_prod(self, k: int, i: int) -> complex:
        return np.conj(self.beam(k)) * self.beam(i)

    def aux_values(self, k: int, i: int) -> AuxValues:
        return AuxValues(
            beam=complex(self.beam(k)),
            bs_gain=self.bs_gain(k),
            bs_gain_prod=self.bs_gain_prod(k, i),
            mix=complex(self.mix(k, i)),
            ris_gain=self.ris_gain(k),
            ris_gain_mix=self.ris_gain_mix(k, i),
            loop_user=self.loop_user(k, i),
            loop_bs=complex(self.loop_bs(k, i)),
            loop_beam=complex(self.loop_beam(k, i)),
            beam_prod=complex(self.beam_prod(k, i)),
        )

    # ---- term assembly ----
    def noise_power(self, k: int) -> float:
        m, d = self.m_bs, self.delta
        e, ck = self.eps[k], self.c[k]
        fk2 = _abs2(self.beam(k))
        return ck * (m * d * e * fk2 + d * self.bs_gain(k)
                     + e * m * np.real(self.mix(k, k)) + m * self.ris_gain(k))

    def signal_power(self, k: int) -> float:
        m, d = self.m_bs, self.delta
        e, ck = self.eps[k], self.c[k]
        fk2 = _abs2(self.beam(k))
        f11 = self.bs_gain(k)
        f2 = np.real(self.mix(k, k))
        f31 = self.ris_gain(k)
        s = m ** 2 * (ck * d * e) ** 2 * fk2 ** 2
        s += (ck * d) ** 2 * (self.bs_gain_prod(k, k) + f11 ** 2)
        s += (ck * e) ** 2 * m * (m + 1) * f2 ** 2
        s += ck ** 2 * m * (m + 1) * (self.ris_gain_mix(k, k) + f31 ** 2)
        s += 4.0 * m * (ck * d) ** 2 * e * fk2 * f11
        s += 2.0 * m * (m + 1) * (ck * e) ** 2 * d * fk2 * f2
        s += 2.0 * m * (m + 1) * ck ** 2 * d * e * fk2 * f31
        s += 2.0 * (m + 1) * ck ** 2 * d * e * f11 * f2
        s += 2.0 * (m + 1) * ck ** 2 * d * (f11 * f31 + np.real(self.loop_bs(k, k)))
        s += 2.0 * m * (m + 1) * ck ** 2 * e * f2 * f31
        s += 2.0 * m * (m + 1) * ck ** 2 * e * self.loop_user(k, k)
        s += 4.0 * (m + 1) * ck ** 2 * d * e * np.real(self.loop_beam(k, k))
        return float(s)

    def interference_power(self, k: int, i: int) -> float:
        if k == i:
            raise ValueError("interference needs two distinct users")
        m, d = self.m_bs, self.delta
        ek, ei = self.eps[k], self.eps[i]
        ck, ci = self.c[k], self.c[i]
        fk2, fi2 = _abs2(self.beam(k)), _abs2(self.beam(i))
        f11k, f11i = self.bs_gain(k), self.bs_gain(i)
        f2kk, f2ii = np.real(self.mix(k, k)), np.real(self.mix(i, i))
        f2ki = self.mix(k, i)
        f31k, f31i = self.ris_gain(k), self.ris_gain(i)
        v = ck * ci * d ** 2 * ek * ei * m ** 2 * fk2 * fi2
        v += ck * ci * d ** 2 * self.bs_gain_prod(k, i)
        v += ck * ci * ek * ei * (m * f2kk * f2ii + m ** 2 * _abs2(f2ki))
        v += ck * ci * m * (f31k * f31i + m * self.ris_gain_mix(k, i))
        v += ck * ci * d * ek * ei * m * (fk2 * f2ii + fi2 * f2kk)
        v += ck * ci * d ** 2 * m * (ek * fk2 * f11i + ei * fi2 * f11k)
        v += ck * ci * d * ek * (m * fk2 * f31i + f11i * f2kk)
        v += ck * ci * d * ei * (m * fi2 * f31k + f11k * f2ii)
        v += ck * ci * d * (f11k * f31i + f11i * f31k)
        v += ck * ci * ek * m * (m * self.loop_user(k, i) + f2kk * f31i)
        v += ck * ci * ei * m * (m * self.loop_user(i, k) + f2ii * f31k)
        v += ck * ci * d * ek * ei * m ** 2 * 2.0 * np.real(
            self.beam_prod(k, i) * np.conj(f2ki))
        v += 2.0 * ck * ci * d * m * np.real(self.loop_bs(k, i))
        v += 2.0 * ck * ci * d * ek * m * np.real(self.loop_beam(k, i))
        v += 2.0 * ck * ci * d * ei * m * np.real(self.loop_beam(i, k))
        return float(v)

    def report(self, p: float, sigma2: float, method: str) -> RateReport:
        k_users = self.k_users
        noise = np.array([self.noise_power(k) for k in range(k_users)])
        signal = np.array([self.signal_power(k) for k in range(k_users)])
        interference = np.array([
            sum(self.interference_power(k, i) for i in range(k_users) if i != k)
            for k in range(k_users)
        ])
        denom = p * interference + sigma2 * noise
        if np.any(denom == 0.0):
            raise NumericalError("zero SINR denominator")
        sinr = p * signal / denom
        rates = np.log2(1.0 + sinr)
        return RateReport(method=method, noise=noise, signal=signal,
                          interference=interference, sinr=sinr, rates=rates,
                          min_rate=float(rates.min()))


def _check_finite_factors(delta: float, eps) -> None:
    if np.isinf(delta) or np.any(np.isinf(eps)):
        raise NumericalError(
            "closed-form terms are undefined at infinite Rician factors; "
            "use large finite values (the pure-LoS limit is only supported "
            "by the sampling path)")


class FullMoments(MomentEngine):
    """Building blocks computed on the full N-dimensional matrices."""

    def __init__(self, stat: StatisticalChannel, phases: NDArray[np.complexfloating]):
        _check_finite_factors(stat.cfg.delta, stat.cfg.eps)
        self.stat = stat
        self.m_bs = stat.m_bs
        self.k_users = stat.k_users
        self.delta = stat.cfg.delta
        self.eps = np.asarray(stat.cfg.eps)
        self.c = stat.c
        self.phases = phases
        r = stat.r_ris
        a = stat.a_n
        self.u = phases[None, :] * stat.masks * stat.hbar          # (K, N)
        self.r_u = self.u @ r                                      # R u_k rows (R symmetric)
        self.x = [np.multiply(phases[:, None] * rv, np.conj(phases)[None, :])
                  for rv in stat.r_vr]                             # Phi C_k Phi^H
        self.va = np.stack([xk @ a for xk in self.x])              # X_k a
        self.r_va = self.va @ r                                    # R X_k a
        self._beam = self.u @ np.conj(a)                           # a^H u_k
        self._y: list | None = None

    def _y_list(self):
        if self._y is None:
            self._y = [self.stat.r_ris @ xk for xk in self.x]
        return self._y

    def beam(self, k: int) -> complex:
        return self._beam[k]

    def bs_gain(self, k: int) -> float:
        return self.m_bs * float(np.real(np.vdot(self.stat.a_n, self.va[k])))

    def mix(self, k: int, i: int) -> complex:
        return complex(np.vdot(self.u[k], self.r_u[i]))

    def ris_gain(self, k: int) -> float:
        return float(np.real(np.einsum("ij,ji->", self.stat.r_ris, self.x[k])))

    def ris_gain_mix(self, k: int, i: int) -> float:
        y = self._y_list()
        return float(np.real(np.einsum("ij,ji->", y[k], y[i])))

    def loop_user(self, k: int, i: int) -> float:
        return float(np.real(np.vdot(self.r_u[k], self.x[i] @ self.r_u[k])))

    def loop_bs(self, k: int, i: int) -> complex:
        return self.m_bs * complex(np.vdot(self.va[k], self.r_va[i]))

    def loop_beam(self, k: int, i: int) -> complex:
        return self.m_bs * np.conj(self._beam[k]) * complex(
            np.vdot(self.va[i], self.r_u[k]))


def aux_values(stat: StatisticalChannel, phi: PhaseConfig, k: int, i: int) -> AuxValues:
    """All ten building blocks for the ordered pair (k, i)."""
    _check_users(stat, k, i)
    return FullMoments(stat, phi.phases).aux_values(k, i)


def _check_users(stat: StatisticalChannel, *users: int) -> None:
    for k in users:
        if not 0 <= k < stat.k_users:
            raise ValueError(f"user index {k} out of range")


def noise_term(stat: StatisticalChannel, phi: PhaseConfig, k: int) -> float:
    """Mean squared norm of user k's cascaded channel (thermal-noise term)."""
    _check_users(stat, k)
    return FullMoments(stat, phi.phases).noise_power(k)


def signal_term(stat: StatisticalChannel, phi: PhaseConfig, k: int) -> float:
    """Mean fourth power of user k's cascaded channel norm (signal term)."""
    _check_users(stat, k)
    return FullMoments(stat, phi.phases).signal_power(k)


def interference_term(stat: StatisticalChannel, phi: PhaseConfig, k: int, i: int) -> float:
    """Mean squared cross-inner-product of the cascaded channels of k and i."""
    _check_users(stat, k, i)
    return FullMoments(stat, phi.phases).interference_power(k, i)


def closed_form_report(stat: StatisticalChannel, phi: PhaseConfig,
                       p: float | None = None,
                       sigma2: float | None = None) -> RateReport:
    """Deterministic per-user rate approximation from statistical CSI only."""
    p = stat.cfg.p if p is None else p
    sigma2 = stat.cfg.sigma2 if sigma2 is None else sigma2
    return FullMoments(stat, phi.phases).report(p, sigma2, "closed-form")
