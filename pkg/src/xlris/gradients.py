"""Analytic phase gradients of the closed-form rate terms.

Everything reduces to one identity: for constant matrices A, B and
Phi = diag(exp(j theta)),

    d Tr(A Phi B Phi^H) / d theta
        = j Phi^T (A^T o B) c* - j Phi^H (A o B^T) c,      c = exp(j theta)

(o is the elementwise product).  For Hermitian A, B this equals
2 Im{Phi^H (A o B^T) c} and is real.  Each building block of the rate terms
is a sum of such traces, with the matrix arguments frequently rank one, so
the identity is evaluated through matrix-vector products wherever possible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .config import NumericalError
from .channel import StatisticalChannel
from .rates import FullMoments, PhaseConfig, _abs2

# A matrix argument is either a dense ndarray or a (x, y) pair denoting the
# rank-one product x y^H.
_Rank1 = tuple


def _transpose(mat):
    if isinstance(mat, _Rank1):
        x, y = mat
        return (np.conj(y), np.conj(x))
    return mat.T


def _mixed_matvec(a, b, v):
    """Entry p of sum_n A[p,n] B[n,p] v[n] for dense or rank-one A, B."""
    a_r1 = isinstance(a, _Rank1)
    b_r1 = isinstance(b, _Rank1)
    if a_r1 and b_r1:
        x, y = a
        s, t = b
        return x * np.conj(t) * np.sum(np.conj(y) * s * v)
    if a_r1:
        x, y = a
        return x * (b.T @ (np.conj(y) * v))
    if b_r1:
        s, t = b
        return np.conj(t) * (a @ (s * v))
    return (a * b.T) @ v


def trace_phase_gradient(a, b, phases: NDArray[np.complexfloating]
                         ) -> NDArray[np.complexfloating]:
    """Exact (complex in general) derivative of Tr(A Phi B Phi^H) wrt theta."""
    term2 = -1j * np.conj(phases) * _mixed_matvec(a, b, phases)
    term1 = 1j * phases * _mixed_matvec(_transpose(a), _transpose(b), np.conj(phases))
    return term1 + term2


def _real_gradient(a, b, phases, tol: float = 1e-10) -> NDArray[np.floating]:
    g = trace_phase_gradient(a, b, phases)
    scale = max(np.max(np.abs(g)), 1.0)
    residue = np.max(np.abs(g.imag)) / scale
    if residue > tol:
        raise NumericalError(f"trace gradient has imaginary residue {residue:.3e}")
    return g.real


def grad_f_a(a: NDArray, b: NDArray, phi: PhaseConfig) -> NDArray[np.floating]:
    """Real-valued trace derivative for Hermitian argument pairs; raises
    ``NumericalError`` if the imaginary residue exceeds 1e-10."""
    return _real_gradient(np.asarray(a), np.asarray(b), phi.phases)


def central_difference(fun, theta: NDArray[np.floating], h: float = 1e-6):
    """Central finite-difference gradient of ``fun`` (scalar, possibly
    complex valued) at ``theta``."""
    theta = np.asarray(theta, dtype=float)
    probe = fun(theta)
    grad = np.zeros(theta.size, dtype=complex if np.iscomplexobj(np.asarray(probe))
                    else float)
    for n in range(theta.size):
        step = np.zeros_like(theta)
        step[n] = h
        grad[n] = (fun(theta + step) - fun(theta - step)) / (2.0 * h)
    return grad


@dataclass(frozen=True)
class AuxGradients:
    """Phase gradients of the moment building blocks for the ordered pair
    (k, i); ``*_swap`` entries are the (i, k) orientation and
    ``loop_beam_conj_swap`` is the gradient of the conjugated (i, k) loop."""

    d_beam2: NDArray              # |beam(k)|^2
    d_bs_gain: NDArray            # bs_gain(k)
    d_bs_gain_prod: NDArray       # bs_gain(k) bs_gain(i)
    d_mix: NDArray                # mix(k, i), complex for k != i
    d_ris_gain: NDArray           # ris_gain(k)
    d_ris_gain_mix: NDArray       # ris_gain_mix(k, i)
    d_loop_user: NDArray          # loop_user(k, i)
    d_loop_user_swap: NDArray     # loop_user(i, k)
    d_loop_bs: NDArray            # loop_bs(k, i), complex
    d_loop_bs_swap: NDArray       # loop_bs(i, k), complex
    d_loop_beam: NDArray          # loop_beam(k, i), complex
    d_loop_beam_swap: NDArray     # loop_beam(i, k), complex
    d_loop_beam_conj_swap: NDArray    # conj(loop_beam(i, k)), complex
    d_beam_prod: NDArray          # beam_prod(k, i), complex


class GradientMoments(FullMoments):
    """Extends the value cache with everything the gradients need.

    Per-user caches (u_k, R u_k, X_k a, R X_k a, beams) come from the value
    engine; this adds the unrotated masked LoS vectors and the per-user
    R X_k R products.
    """

    def __init__(self, stat: StatisticalChannel, phases: NDArray[np.complexfloating]):
        super().__init__(stat, phases)
        self.w = stat.masks * stat.hbar           # masked LoS vectors (K, N)
        self.a1 = (float(self.m_bs) * stat.a_n, stat.a_n)   # M a a^H as rank one
        self._z: list | None = None

    def _z_list(self):
        if self._z is None:
            self._z = [y @ self.stat.r_ris for y in self._y_list()]
        return self._z

    # --- per-user gradients -------------------------------------------------
    def d_beam2(self, k: int) -> NDArray[np.floating]:
        a = self.stat.a_n
        return _real_gradient((a, a), (self.w[k], self.w[k]), self.phases)

    def d_bs_gain(self, k: int) -> NDArray[np.floating]:
        return _real_gradient(self.a1, self.stat.r_vr[k], self.phases)

    def d_ris_gain(self, k: int) -> NDArray[np.floating]:
        return _real_gradient(self.stat.r_ris, self.stat.r_vr[k], self.phases)

    # --- pair gradients -----------------------------------------------------
    def d_bs_gain_prod(self, k: int, i: int) -> NDArray[np.floating]:
        return self.bs_gain(i) * self.d_bs_gain(k) + self.bs_gain(k) * self.d_bs_gain(i)

    def d_mix(self, k: int, i: int) -> NDArray:
        if k == i:
            return _real_gradient(self.stat.r_ris, (self.w[k], self.w[k]), self.phases)
        return trace_phase_gradient(self.stat.r_ris, (self.w[i], self.w[k]), self.phases)

    def d_ris_gain_mix(self, k: int, i: int) -> NDArray[np.floating]:
        z = self._z_list()
        g = _real_gradient(z[i], self.stat.r_vr[k], self.phases)
        if k == i:
            return 2.0 * g
        return g + _real_gradient(z[k], self.stat.r_vr[i], self.phases)

    def d_loop_user(self, k: int, i: int) -> NDArray[np.floating]:
        rk = self.r_u[k]
        z = self._z_list()
        return (_real_gradient((rk, rk), self.stat.r_vr[i], self.phases)
                + _real_gradient(z[i], (self.w[k], self.w[k]), self.phases))

    def d_loop_bs(self, k: int, i: int) -> NDArray:
        m = float(self.m_bs)
        a = self.stat.a_n
        g = trace_phase_gradient((m * a, self.r_va[k]), self.stat.r_vr[i], self.phases)
        g = g + trace_phase_gradient((m * self.r_va[i], a), self.stat.r_vr[k],
                                     self.phases)
        if k == i:
            scale = max(np.max(np.abs(g)), 1.0)
            if np.max(np.abs(g.imag)) / scale > 1e-10:
                raise NumericalError("diagonal loop_bs gradient is not real")
            return g.real
        return g

    def d_loop_bs_split(self, k: int, i: int) -> NDArray:
        """Gradient of loop_bs(k, i) through the alternative split that keeps
        the phase-rotated correlation sandwich inside the constant factor."""
        a = self.stat.a_n
        m = float(self.m_bs)
        inner = (np.conj(self.phases)[:, None] * self.stat.r_ris) * self.phases[None, :]
        b1 = self.stat.r_vr[k] @ inner @ self.stat.r_vr[i]
        pa = np.conj(self.phases) * a
        g = trace_phase_gradient(self.a1, b1, self.phases)
        g = g + trace_phase_gradient(
            self.stat.r_ris,
            (m * (self.stat.r_vr[i] @ pa), self.stat.r_vr[k] @ pa), self.phases)
        return g

    def d_loop_beam(self, k: int, i: int) -> NDArray:
        m = float(self.m_bs)
        a = self.stat.a_n
        wk = (self.w[k], self.w[k])
        g = trace_phase_gradient((m * np.conj(self._beam[k]) * self.r_u[k], a),
                                 self.stat.r_vr[i], self.phases)
        return g + trace_phase_gradient((m * a, self.r_va[i]), wk, self.phases)

    def d_loop_beam_conj(self, k: int, i: int) -> NDArray:
        m = float(self.m_bs)
        a = self.stat.a_n
        wk = (self.w[k], self.w[k])
        g = trace_phase_gradient((m * self.r_va[i], a), wk, self.phases)
        return g + trace_phase_gradient((m * self._beam[k] * a, self.r_u[k]),
                                        self.stat.r_vr[i], self.phases)

    def d_beam_prod(self, k: int, i: int) -> NDArray:
        a = self.stat.a_n
        return trace_phase_gradient((a, a), (self.w[i], self.w[k]), self.phases)

    # --- rate-term gradients --------------------------------------------------
    def grad_noise(self, k: int) -> NDArray[np.floating]:
        m, d = self.m_bs, self.delta
        e, ck = self.eps[k], self.c[k]
        return ck * (m * d * e * self.d_beam2(k) + d * self.d_bs_gain(k)
                     + e * m * self.d_mix(k, k) + m * self.d_ris_gain(k))

    def grad_signal(self, k: int) -> NDArray[np.floating]:
        m, d = self.m_bs, self.delta
        e, ck = self.eps[k], self.c[k]
        fk2 = _abs2(self.beam(k))
        f11, f2 = self.bs_gain(k), np.real(self.mix(k, k))
        f31 = self.ris_gain(k)
        dfk2 = self.d_beam2(k)
        d11, d2 = self.d_bs_gain(k), self.d_mix(k, k)
        d31 = self.d_ris_gain(k)
        g = 2.0 * m ** 2 * (ck * d * e) ** 2 * fk2 * dfk2
        g += (ck * d) ** 2 * (self.d_bs_gain_prod(k, k) + 2.0 * f11 * d11)
        g += 2.0 * (ck * e) ** 2 * m * (m + 1) * f2 * d2
        g += ck ** 2 * m * (m + 1) * (self.d_ris_gain_mix(k, k) + 2.0 * f31 * d31)
        g += 4.0 * m * (ck * d) ** 2 * e * (dfk2 * f11 + fk2 * d11)
        g += 2.0 * m * (m + 1) * (ck * e) ** 2 * d * (dfk2 * f2 + fk2 * d2)
        g += 2.0 * m * (m + 1) * ck ** 2 * d * e * (dfk2 * f31 + fk2 * d31)
        g += 2.0 * (m + 1) * ck ** 2 * d * e * (d11 * f2 + f11 * d2)
        g += 2.0 * (m + 1) * ck ** 2 * d * (d11 * f31 + f11 * d31 + self.d_loop_bs(k, k))
        g += 2.0 * m * (m + 1) * ck ** 2 * e * (d2 * f31 + f2 * d31)
        g += 2.0 * m * (m + 1) * ck ** 2 * e * self.d_loop_user(k, k)
        g += 4.0 * (m + 1) * ck ** 2 * d * e * np.real(self.d_loop_beam(k, k))
        return g

    def grad_interference(self, k: int, i: int) -> NDArray[np.floating]:
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
        f7ki = self.beam_prod(k, i)
        dfk2, dfi2 = self.d_beam2(k), self.d_beam2(i)
        d11k, d11i = self.d_bs_gain(k), self.d_bs_gain(i)
        d2kk, d2ii = self.d_mix(k, k), self.d_mix(i, i)
        d2ki = self.d_mix(k, i)
        d31k, d31i = self.d_ris_gain(k), self.d_ris_gain(i)
        d7ki = self.d_beam_prod(k, i)
        g = ck * ci * d ** 2 * ek * ei * m ** 2 * (dfk2 * fi2 + fk2 * dfi2)
        g += ck * ci * d ** 2 * self.d_bs_gain_prod(k, i)
        g += ck * ci * ek * ei * (
            m * (d2kk * f2ii + f2kk * d2ii)
            + m ** 2 * 2.0 * np.real(np.conj(f2ki) * d2ki))
        g += ck * ci * m * (d31k * f31i + f31k * d31i + m * self.d_ris_gain_mix(k, i))
        g += ck * ci * d * ek * ei * m * (dfk2 * f2ii + fk2 * d2ii
                                          + dfi2 * f2kk + fi2 * d2kk)
        g += ck * ci * d ** 2 * m * (ek * (dfk2 * f11i + fk2 * d11i)
                                     + ei * (dfi2 * f11k + fi2 * d11k))
        g += ck * ci * d * ek * (m * (dfk2 * f31i + fk2 * d31i)
                                 + d11i * f2kk + f11i * d2kk)
        g += ck * ci * d * ei * (m * (dfi2 * f31k + fi2 * d31k)
                                 + d11k * f2ii + f11k * d2ii)
        g += ck * ci * d * (d11k * f31i + f11k * d31i + d11i * f31k + f11i * d31k)
        g += ck * ci * ek * m * (m * self.d_loop_user(k, i) + d2kk * f31i + f2kk * d31i)
        g += ck * ci * ei * m * (m * self.d_loop_user(i, k) + d2ii * f31k + f2ii * d31k)
        g += ck * ci * d * ek * ei * m ** 2 * 2.0 * np.real(
            d7ki * np.conj(f2ki) + f7ki * np.conj(d2ki))
        g += 2.0 * ck * ci * d * m * np.real(self.d_loop_bs(k, i))
        g += 2.0 * ck * ci * d * ek * m * np.real(self.d_loop_beam(k, i))
        g += 2.0 * ck * ci * d * ei * m * np.real(self.d_loop_beam(i, k))
        return g

    def aux_gradients(self, k: int, i: int) -> AuxGradients:
        return AuxGradients(
            d_beam2=self.d_beam2(k),
            d_bs_gain=self.d_bs_gain(k),
            d_bs_gain_prod=self.d_bs_gain_prod(k, i),
            d_mix=self.d_mix(k, i),
            d_ris_gain=self.d_ris_gain(k),
            d_ris_gain_mix=self.d_ris_gain_mix(k, i),
            d_loop_user=self.d_loop_user(k, i),
            d_loop_user_swap=self.d_loop_user(i, k),
            d_loop_bs=self.d_loop_bs(k, i),
            d_loop_bs_swap=self.d_loop_bs_split(i, k),   # loop_bs(i, k), split form
            d_loop_beam=self.d_loop_beam(k, i),
            d_loop_beam_swap=self.d_loop_beam(i, k),
            d_loop_beam_conj_swap=self.d_loop_beam_conj(i, k),
            d_beam_prod=self.d_beam_prod(k, i),
        )


def aux_gradients(stat: StatisticalChannel, phi: PhaseConfig,
                  k: int, i: int) -> AuxGradients:
    """All building-block gradients for the ordered pair (k, i)."""
    return GradientMoments(stat, phi.phases).aux_gradients(k, i)


def grad_terms(stat: StatisticalChannel, phi: PhaseConfig, k: int, i: int):
    """(noise, signal, interference) gradients for user k / pair (k, i)."""
    eng = GradientMoments(stat, phi.phases)
    return eng.grad_noise(k), eng.grad_signal(k), eng.grad_interference(k, i)


def rate_values_and_gradients(stat: StatisticalChannel,
                              theta: NDArray[np.floating],
                              p: float, sigma2: float):
    """Per-user rates, SINRs and rate gradients at an (unwrapped) phase
    vector.  The rate gradient follows from the SINR quotient rule:

        d rate / d theta = (d SINR / d theta) / ((1 + SINR) ln 2).
    """
    phases = np.exp(1j * np.asarray(theta, dtype=float))
    eng = GradientMoments(stat, phases)
    k_users = stat.k_users
    n = theta.size
    rates = np.zeros(k_users)
    sinr = np.zeros(k_users)
    grads = np.zeros((k_users, n))
    for k in range(k_users):
        sig = eng.signal_power(k)
        noi = eng.noise_power(k)
        d_sig = eng.grad_signal(k)
        d_noi = eng.grad_noise(k)
        intf = 0.0
        d_intf = np.zeros(n)
        for i in range(k_users):
            if i == k:
                continue
            intf += eng.interference_power(k, i)
            d_intf += eng.grad_interference(k, i)
        denom = p * intf + sigma2 * noi
        if denom == 0.0:
            raise NumericalError("zero SINR denominator")
        s = p * sig / denom
        d_s = p * d_sig / denom - p * sig * (p * d_intf + sigma2 * d_noi) / denom ** 2
        sinr[k] = s
        rates[k] = np.log2(1.0 + s)
        grads[k] = d_s / ((1.0 + s) * np.log(2.0))
    return rates, sinr, grads
