"""Dimension-reduced rate evaluation.

Rows and columns of masked matrices vanish outside a user's visibility
region, so every building block can be computed on the per-user sub-matrices
indexed by the region.  The result is numerically identical to the full-size
path while the cost scales with the region sizes instead of N.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .channel import StatisticalChannel
from .rates import MomentEngine, PhaseConfig, RateReport, _check_finite_factors


@dataclass
class ReducedChannel:
    """Per-user extracts of the scenario matrices.

    ``corr_block(k, i)`` is the RIS correlation restricted to rows from user
    k's region and columns from user i's; the (k, k) block doubles as the
    reduced masked correlation.
    """

    stat: StatisticalChannel
    nu: list[NDArray[np.intp]]                 # per-user element indices
    a_star: list[NDArray[np.complexfloating]]  # steering vector extracts
    hbar_star: list[NDArray[np.complexfloating]]
    theta_star: list[NDArray[np.floating]]
    _blocks: dict

    def corr_block(self, k: int, i: int) -> NDArray[np.floating]:
        return self._blocks[(k, i)]

    def phases_star(self, k: int) -> NDArray[np.complexfloating]:
        return np.exp(1j * self.theta_star[k])

    def phase_matrix(self, k: int) -> NDArray[np.complexfloating]:
        return np.diag(self.phases_star(k))

    def hbar2_star(self, k: int) -> NDArray[np.complexfloating]:
        """Reduced LoS RIS-BS matrix (columns restricted to the region)."""
        return np.outer(self.stat.a_m, self.a_star[k].conj())

    @property
    def sizes(self) -> list[int]:
        return [idx.size for idx in self.nu]


def reduce_channel(stat: StatisticalChannel, phi: PhaseConfig) -> ReducedChannel:
    """Extract the per-user sub-vectors/matrices and phase sub-vectors."""
    k_users = stat.k_users
    nu = [stat.vrs[k].nu for k in range(k_users)]
    blocks = {}
    for k in range(k_users):
        for i in range(k_users):
            if i < k:
                blocks[(k, i)] = blocks[(i, k)].T
            else:
                blocks[(k, i)] = stat.r_ris[np.ix_(nu[k], nu[i])]
    return ReducedChannel(
        stat=stat,
        nu=nu,
        a_star=[stat.a_n[idx] for idx in nu],
        hbar_star=[stat.hbar[k][nu[k]] for k in range(k_users)],
        theta_star=[phi.theta[idx] for idx in nu],
        _blocks=blocks,
    )


class ReducedMoments(MomentEngine):
    """Building blocks computed on the region-sized extracts."""

    def __init__(self, reduced: ReducedChannel):
        stat = reduced.stat
        _check_finite_factors(stat.cfg.delta, stat.cfg.eps)
        self.reduced = reduced
        self.m_bs = stat.m_bs
        self.k_users = stat.k_users
        self.delta = stat.cfg.delta
        self.eps = np.asarray(stat.cfg.eps)
        self.c = stat.c
        self.u = [reduced.phases_star(k) * reduced.hbar_star[k]
                  for k in range(self.k_users)]
        self.x = []
        self.va = []
        for k in range(self.k_users):
            ph = reduced.phases_star(k)
            xk = (ph[:, None] * reduced.corr_block(k, k)) * np.conj(ph)[None, :]
            self.x.append(xk)
            self.va.append(xk @ reduced.a_star[k])
        self._beam = [complex(np.vdot(reduced.a_star[k], self.u[k]))
                      for k in range(self.k_users)]

    def beam(self, k: int) -> complex:
        return self._beam[k]

    def bs_gain(self, k: int) -> float:
        return self.m_bs * float(np.real(np.vdot(self.reduced.a_star[k], self.va[k])))

    def mix(self, k: int, i: int) -> complex:
        return complex(np.vdot(self.u[k], self.reduced.corr_block(k, i) @ self.u[i]))

    def ris_gain(self, k: int) -> float:
        return float(np.real(np.einsum("ij,ji->", self.reduced.corr_block(k, k),
                                       self.x[k])))

    def ris_gain_mix(self, k: int, i: int) -> float:
        left = self.reduced.corr_block(i, k) @ self.x[k]
        right = self.reduced.corr_block(k, i) @ self.x[i]
        return float(np.real(np.einsum("ij,ji->", left, right)))

    def loop_user(self, k: int, i: int) -> float:
        t = self.reduced.corr_block(i, k) @ self.u[k]
        return float(np.real(np.vdot(t, self.x[i] @ t)))

    def loop_bs(self, k: int, i: int) -> complex:
        return self.m_bs * complex(
            np.vdot(self.va[k], self.reduced.corr_block(k, i) @ self.va[i]))

    def loop_beam(self, k: int, i: int) -> complex:
        t = self.reduced.corr_block(i, k) @ self.u[k]
        return self.m_bs * np.conj(self._beam[k]) * complex(np.vdot(self.va[i], t))


def closed_form_report_reduced(reduced: ReducedChannel,
                               stat: StatisticalChannel | None = None,
                               p: float | None = None,
                               sigma2: float | None = None) -> RateReport:
    """Rate report through the region-sized path; equal to the full path up
    to floating-point summation order."""
    stat = reduced.stat if stat is None else stat
    p = stat.cfg.p if p is None else p
    sigma2 = stat.cfg.sigma2 if sigma2 is None else sigma2
    rep = ReducedMoments(reduced).report(p, sigma2, "closed-form-reduced")
    return rep
