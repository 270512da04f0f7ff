"""Array geometry: steering vectors, element positions, spatial correlation.

The RIS is a planar array with ``n1`` rows and ``n2`` columns, indexed
row-by-row starting at 1; element ``p`` sits at column ``(p-1) mod n2`` and
row ``(p-1) // n2``.  The same ordering is used everywhere (positions,
steering vectors, correlation and visibility matrices) so that entries of
different matrices line up.
"""
from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from .config import NumericalError

ComplexVector = NDArray[np.complexfloating]


def array_response_ula(m: int, theta_a: float, theta_e: float,
                       spacing_over_lambda: float) -> ComplexVector:
    """Steering vector of an ``m``-element uniform linear array.

    Entry x (1-based) is exp{j 2 pi (d/lambda) (x-1) sin(theta_e) sin(theta_a)}.
    """
    if m < 1:
        raise ValueError("array size must be >= 1")
    idx = np.arange(m)
    phase = 2.0 * np.pi * spacing_over_lambda * idx * np.sin(theta_e) * np.sin(theta_a)
    return np.exp(1j * phase)


def array_response_uspa(n1: int, n2: int, theta_a: float, theta_e: float,
                        spacing_over_lambda: float) -> ComplexVector:
    """Steering vector of an ``n1 x n2`` uniform planar array, row-major.

    The row index scales sin(theta_e) sin(theta_a), the column index scales
    cos(theta_e); for a square array this reduces to the usual sqrt(N)
    indexing.
    """
    if n1 < 1 or n2 < 1:
        raise ValueError("array dimensions must be >= 1")
    idx = np.arange(n1 * n2)
    row = idx // n2
    col = idx % n2
    phase = 2.0 * np.pi * spacing_over_lambda * (
        row * np.sin(theta_e) * np.sin(theta_a) + col * np.cos(theta_e)
    )
    return np.exp(1j * phase)


def element_position(p: int, n2: int, d_h: float, d_v: float) -> NDArray[np.floating]:
    """3-D position of RIS element ``p`` (1-based) in the array plane."""
    if p < 1:
        raise ValueError("element index is 1-based")
    return np.array([0.0, ((p - 1) % n2) * d_h, ((p - 1) // n2) * d_v])


def element_grid(n1: int, n2: int, d_h: float, d_v: float) -> NDArray[np.floating]:
    """Positions of all ``n1*n2`` elements, shape (N, 3), row-major order."""
    idx = np.arange(n1 * n2)
    pos = np.zeros((idx.size, 3))
    pos[:, 1] = (idx % n2) * d_h
    pos[:, 2] = (idx // n2) * d_v
    return pos


def correlation_matrix(n1: int, n2: int, d_ris: float,
                       wavelength: float) -> NDArray[np.floating]:
    """Sinc-kernel spatial correlation of the RIS elements.

    Entry (p, q) is sinc(2 ||u_p - u_q|| / lambda) with the normalized sinc,
    so correlation vanishes between elements exactly half a wavelength apart.
    """
    if n1 < 1 or n2 < 1:
        raise ValueError("array dimensions must be >= 1")
    pos = element_grid(n1, n2, d_ris, d_ris)
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    r = np.sinc(2.0 * dist / wavelength)
    # enforce exact symmetry / unit diagonal against rounding in the distances
    r = 0.5 * (r + r.T)
    np.fill_diagonal(r, 1.0)
    return r


def path_loss(d: float, exponent: float) -> float:
    """Distance-dependent large-scale gain 1e-3 * d**(-exponent)."""
    if d <= 0.0:
        raise ValueError("distance must be strictly positive")
    return 1e-3 * d ** (-exponent)


def psd_sqrt(r: NDArray[np.floating], neg_tol: float = 1e-8) -> NDArray[np.floating]:
    """Principal square root of a symmetric PSD matrix via eigendecomposition.

    Eigenvalues in [-neg_tol, 0) are clipped to zero; anything more negative
    raises ``NumericalError`` (the matrix is genuinely indefinite).
    """
    vals, vecs = np.linalg.eigh(r)
    min_val = vals.min() if vals.size else 0.0
    if min_val < -neg_tol:
        raise NumericalError(
            f"matrix is not PSD: smallest eigenvalue {min_val:.3e} < -{neg_tol:.0e}"
        )
    vals = np.clip(vals, 0.0, None)
    root = (vecs * np.sqrt(vals)) @ vecs.T
    return 0.5 * (root + root.T)
