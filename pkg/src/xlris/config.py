"""Scenario configuration and unit conversions.

All internal computation is done in linear units (watts, meters, radians);
dBm only appears at the configuration boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np


class NumericalError(RuntimeError):
    """A numerical operation left its validity domain (e.g. an indefinite
    matrix handed to a PSD square root, or a non-finite objective)."""


class ConfigError(ValueError):
    """An experiment specification field is missing or inconsistent."""


def dbm_to_watt(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def watt_to_dbm(x_w: float) -> float:
    if x_w <= 0.0:
        raise ValueError("power must be positive")
    return 10.0 * math.log10(x_w) + 30.0


@dataclass
class SystemConfig:
    """All scenario scalars.

    ``delta`` and the entries of ``eps`` are the LoS/NLoS power ratios of the
    RIS-BS and user-RIS links. ``math.inf`` is accepted for either as a pure
    LoS limit flag (the diffuse component is then dropped exactly).
    """

    m_bs: int = 64                    # BS antennas
    n1: int = 10                      # RIS rows
    n2: int = 20                      # RIS columns
    k_users: int = 4
    p: float = dbm_to_watt(30.0)      # per-user transmit power [W]
    sigma2: float = dbm_to_watt(-104.0)   # noise power [W]
    wavelength: float = 0.1           # carrier wavelength [m]
    d_bs: float = 0.05                # BS antenna spacing [m]
    d_ris: float = 0.05               # RIS element spacing [m]
    delta: float = 1.0                # Rician factor, RIS-BS link
    eps: tuple[float, ...] = (10.0, 10.0, 10.0, 10.0)   # per-user Rician factors
    d_ui: float = 15.0                # user-RIS distance [m]
    d_ib: float = 800.0               # RIS-BS distance [m]
    pl_exp_ur: float = 2.0            # path-loss exponent, user-RIS
    pl_exp_rb: float = 2.5            # path-loss exponent, RIS-BS
    seed: int = 0

    def __post_init__(self) -> None:
        self.eps = tuple(float(e) for e in np.atleast_1d(self.eps))
        if len(self.eps) == 1 and self.k_users > 1:
            self.eps = self.eps * self.k_users
        if self.m_bs < 1 or self.n1 < 1 or self.n2 < 1 or self.k_users < 1:
            raise ValueError("antenna/element/user counts must be >= 1")
        if len(self.eps) != self.k_users:
            raise ValueError(f"eps must have length {self.k_users}, got {len(self.eps)}")
        for name in ("p", "sigma2", "wavelength", "d_bs", "d_ris", "d_ui", "d_ib"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if math.isnan(self.delta) or self.delta < 0.0:
            raise ValueError("delta must be non-negative")
        for e in self.eps:
            if math.isnan(e) or e < 0.0:
                raise ValueError("all Rician factors must be non-negative")

    @property
    def n_ris(self) -> int:
        return self.n1 * self.n2

    def with_updates(self, **changes) -> "SystemConfig":
        return replace(self, **changes)

    @classmethod
    def default_scenario(cls, **overrides) -> "SystemConfig":
        """Base simulation scenario: 64-antenna BS, 10x20 RIS, four users on
        a 15 m semicircle, 800 m RIS-BS hop, 30 dBm per user."""
        return cls(**overrides)


def half_wavelength_config(m_bs: int, n1: int, n2: int, k_users: int,
                           **overrides) -> SystemConfig:
    """Scenario with the given array sizes and half-wavelength spacings."""
    base = dict(m_bs=m_bs, n1=n1, n2=n2, k_users=k_users,
                eps=(10.0,) * k_users)
    base.update(overrides)
    return SystemConfig(**base)
