"""Statistical CSI construction and channel realization sampling.

The user-RIS and RIS-BS links are Rician: a deterministic steering-vector
LoS part plus a spatially correlated diffuse part.  Per-user visibility
regions mask both parts, so a user couples only to the RIS elements it sees.
Everything deterministic (angles, correlations, masks, gains) is assembled
once into a ``StatisticalChannel``; instantaneous realizations are drawn
from it with an explicit RNG.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .config import SystemConfig
from .geometry import array_response_ula, array_response_uspa, correlation_matrix, \
    path_loss, psd_sqrt
from .visibility import VisibilityRegion, build_vr, full_region, random_visibility_set


@dataclass(frozen=True)
class AngleSet:
    """Azimuth/elevation angles of the LoS paths, fixed per scenario."""

    bs_aoa_az: float          # arrival at the BS from the RIS
    bs_aoa_el: float
    ris_aod_az: float         # departure from the RIS toward the BS
    ris_aod_el: float
    user_aoa_az: tuple[float, ...]   # arrival at the RIS from each user
    user_aoa_el: tuple[float, ...]

    @classmethod
    def random(cls, k_users: int, rng: np.random.Generator) -> "AngleSet":
        draw = lambda: float(rng.uniform(0.0, 2.0 * np.pi))
        return cls(
            bs_aoa_az=draw(), bs_aoa_el=draw(),
            ris_aod_az=draw(), ris_aod_el=draw(),
            user_aoa_az=tuple(draw() for _ in range(k_users)),
            user_aoa_el=tuple(draw() for _ in range(k_users)),
        )


def los_weights(rician_factor: float) -> tuple[float, float]:
    """(LoS, diffuse) amplitude weights for a Rician factor; ``inf`` is the
    pure-LoS limit (1, 0)."""
    if math.isinf(rician_factor):
        return 1.0, 0.0
    return (math.sqrt(rician_factor / (rician_factor + 1.0)),
            math.sqrt(1.0 / (rician_factor + 1.0)))


def vr_covariance(r_ris: NDArray[np.floating],
                  vr: VisibilityRegion) -> NDArray[np.floating]:
    """Correlation restricted to a visibility region: rows and columns of
    invisible elements are zeroed (the 0/1 mask acts as its own square root)."""
    if r_ris.shape[0] != vr.n_total:
        raise ValueError("correlation matrix and region size disagree")
    d = vr.mask
    return r_ris * np.outer(d, d)


@dataclass
class StatisticalChannel:
    """Deterministic/statistical CSI bundle for one scenario.

    Immutable by convention after construction; the matrix square roots used
    only for sampling are cached lazily (a duplicated computation under
    concurrent first access is harmless).
    """

    cfg: SystemConfig
    angles: AngleSet
    vrs: list[VisibilityRegion]
    a_m: NDArray[np.complexfloating]          # BS steering vector, length M
    a_n: NDArray[np.complexfloating]          # RIS steering vector toward BS, length N
    hbar: NDArray[np.complexfloating]         # per-user LoS vectors, (K, N)
    r_ris: NDArray[np.floating]               # (N, N)
    r_vr: list[NDArray[np.floating]]          # per-user masked correlation
    alpha: NDArray[np.floating]               # per-user large-scale gains
    beta: float                               # RIS-BS large-scale gain
    c: NDArray[np.floating]                   # composite gains beta*alpha_k/((delta+1)(eps_k+1))
    _r_ris_sqrt: NDArray[np.floating] | None = field(default=None, repr=False)
    _r_vr_sqrt: list | None = field(default=None, repr=False)

    @property
    def m_bs(self) -> int:
        return self.cfg.m_bs

    @property
    def n_ris(self) -> int:
        return self.cfg.n_ris

    @property
    def k_users(self) -> int:
        return self.cfg.k_users

    @property
    def hbar2(self) -> NDArray[np.complexfloating]:
        """Rank-one LoS RIS-BS matrix a_M a_N^H, materialized on demand."""
        return np.outer(self.a_m, self.a_n.conj())

    @property
    def masks(self) -> NDArray[np.floating]:
        return np.stack([vr.mask for vr in self.vrs])

    @property
    def r_ris_sqrt(self) -> NDArray[np.floating]:
        if self._r_ris_sqrt is None:
            self._r_ris_sqrt = psd_sqrt(self.r_ris)
        return self._r_ris_sqrt

    @property
    def r_vr_sqrt(self) -> list[NDArray[np.floating]]:
        if self._r_vr_sqrt is None:
            self._r_vr_sqrt = [psd_sqrt(r) for r in self.r_vr]
        return self._r_vr_sqrt

    def masked_los(self, k: int) -> NDArray[np.complexfloating]:
        """Visible part of user k's LoS vector."""
        return self.vrs[k].mask * self.hbar[k]

    def restrict(self, indices: NDArray[np.intp]) -> "StatisticalChannel":
        """Sub-scenario on a subset of RIS elements (for rate/gradient work
        on the union of the visibility regions; sampling is not supported on
        the result because the restricted correlation loses its zero rows)."""
        idx = np.asarray(indices, dtype=np.intp)
        vrs = []
        lookup = {int(n): i for i, n in enumerate(idx)}
        for vr in self.vrs:
            kept = np.array([lookup[int(n)] for n in vr.nu if int(n) in lookup],
                            dtype=np.intp)
            vrs.append(VisibilityRegion(kept, idx.size))
        return StatisticalChannel(
            cfg=self.cfg, angles=self.angles, vrs=vrs,
            a_m=self.a_m, a_n=self.a_n[idx],
            hbar=self.hbar[:, idx],
            r_ris=self.r_ris[np.ix_(idx, idx)],
            r_vr=[r[np.ix_(idx, idx)] for r in self.r_vr],
            alpha=self.alpha, beta=self.beta, c=self.c,
        )


@dataclass(frozen=True)
class ChannelRealization:
    """One instantaneous draw of both hops."""

    h_users: NDArray[np.complexfloating]      # (K, N) composite user-RIS channels
    h2: NDArray[np.complexfloating]           # (M, N) composite RIS-BS channel
    htilde: NDArray[np.complexfloating]       # (K, N) diffuse user draws
    htilde2: NDArray[np.complexfloating]      # (M, N) diffuse RIS-BS draw


def build_statistical_channel(cfg: SystemConfig, angles: AngleSet,
                              vrs: list[VisibilityRegion]) -> StatisticalChannel:
    """Assemble all statistical CSI for a scenario."""
    if len(vrs) != cfg.k_users:
        raise ValueError("need exactly one visibility region per user")
    bs_ratio = cfg.d_bs / cfg.wavelength
    ris_ratio = cfg.d_ris / cfg.wavelength
    a_m = array_response_ula(cfg.m_bs, angles.bs_aoa_az, angles.bs_aoa_el, bs_ratio)
    a_n = array_response_uspa(cfg.n1, cfg.n2, angles.ris_aod_az, angles.ris_aod_el,
                              ris_ratio)
    hbar = np.stack([
        array_response_uspa(cfg.n1, cfg.n2, angles.user_aoa_az[k],
                            angles.user_aoa_el[k], ris_ratio)
        for k in range(cfg.k_users)
    ])
    r_ris = correlation_matrix(cfg.n1, cfg.n2, cfg.d_ris, cfg.wavelength)
    r_vr = [vr_covariance(r_ris, vr) for vr in vrs]
    alpha = np.full(cfg.k_users, path_loss(cfg.d_ui, cfg.pl_exp_ur))
    beta = path_loss(cfg.d_ib, cfg.pl_exp_rb)
    eps = np.asarray(cfg.eps)
    with np.errstate(invalid="ignore"):
        c = beta * alpha / ((cfg.delta + 1.0) * (eps + 1.0))
    c = np.nan_to_num(c, nan=0.0, posinf=0.0)
    return StatisticalChannel(cfg=cfg, angles=angles, vrs=vrs, a_m=a_m, a_n=a_n,
                              hbar=hbar, r_ris=r_ris, r_vr=r_vr, alpha=alpha,
                              beta=beta, c=c)


def build_scenario(cfg: SystemConfig, vr_spec="full", overlap: float | None = None,
                   min_frac: float = 0.4, max_frac: float = 0.9,
                   rng: np.random.Generator | None = None) -> StatisticalChannel:
    """One-call scenario builder.

    Angles are drawn first from the scenario RNG, then the visibility
    regions, so identical seeds give identical scenarios.  ``vr_spec`` is
    either ``"full"``, ``"random"`` (independent rectangles, or banded with
    the ``overlap`` knob), or a list with one per-user region spec.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    angles = AngleSet.random(cfg.k_users, rng)
    if vr_spec == "full":
        vrs = [full_region(cfg.n1, cfg.n2) for _ in range(cfg.k_users)]
    elif vr_spec == "random":
        vrs = random_visibility_set(cfg.n1, cfg.n2, cfg.k_users, rng,
                                    overlap=overlap, min_frac=min_frac,
                                    max_frac=max_frac)
    elif isinstance(vr_spec, (list, tuple)):
        if len(vr_spec) != cfg.k_users:
            raise ValueError("need one visibility spec per user")
        vrs = [build_vr(s, cfg.n1, cfg.n2, rng) for s in vr_spec]
    else:
        raise ValueError(f"unknown visibility spec: {vr_spec!r}")
    return build_statistical_channel(cfg, angles, vrs)


def complex_normal(rng: np.random.Generator, shape) -> NDArray[np.complexfloating]:
    """I.i.d. circularly symmetric complex Gaussians, unit variance per entry."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def sample_realization(stat: StatisticalChannel,
                       rng: np.random.Generator) -> ChannelRealization:
    """Draw one instantaneous channel pair.

    Draw order is fixed (user diffuse vectors first, then the RIS-BS diffuse
    matrix), so realizations are reproducible per seed.
    """
    cfg = stat.cfg
    k, n, m = cfg.k_users, cfg.n_ris, cfg.m_bs
    htilde = complex_normal(rng, (k, n))
    htilde2 = complex_normal(rng, (m, n))

    h_users = np.empty((k, n), dtype=complex)
    for i in range(k):
        w_los, w_nlos = los_weights(cfg.eps[i])
        los = stat.masked_los(i)
        if w_nlos == 0.0:
            diffuse = 0.0
        else:
            diffuse = stat.r_vr_sqrt[i] @ htilde[i]
        h_users[i] = np.sqrt(stat.alpha[i]) * (w_los * los + w_nlos * diffuse)

    w_los, w_nlos = los_weights(cfg.delta)
    if w_nlos == 0.0:
        diffuse2 = 0.0
    else:
        diffuse2 = htilde2 @ stat.r_ris_sqrt
    h2 = np.sqrt(stat.beta) * (w_los * stat.hbar2 + w_nlos * diffuse2)
    return ChannelRealization(h_users=h_users, h2=h2, htilde=htilde, htilde2=htilde2)


def cascaded_channel(h2: NDArray[np.complexfloating], phases: NDArray[np.complexfloating],
                     h_user: NDArray[np.complexfloating]) -> NDArray[np.complexfloating]:
    """Effective user-to-BS channel h2 diag(phases) h_user."""
    m, n = h2.shape
    if phases.shape != (n,) or h_user.shape != (n,):
        raise ValueError("dimension mismatch between hops and phase vector")
    return h2 @ (phases * h_user)
