"""Visibility regions: which RIS elements each user actually sees.

A region is stored as the sorted element indices (0-based internally) plus
the 0/1 mask of length N.  Construction supports full panels, explicit index
lists, rectangular blocks on the (row, column) grid, and seeded random
rectangles with a controllable inter-user overlap fraction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray


@dataclass(frozen=True)
class VisibilityRegion:
    """Subset of RIS elements visible to one user."""

    nu: NDArray[np.intp]      # sorted 0-based element indices
    n_total: int              # N = n1 * n2

    def __post_init__(self) -> None:
        nu = np.asarray(self.nu, dtype=np.intp)
        if nu.size == 0:
            raise ValueError("a visibility region must contain at least one element")
        if nu.min() < 0 or nu.max() >= self.n_total:
            raise ValueError("visibility indices out of range")
        if np.any(np.diff(nu) <= 0):
            raise ValueError("visibility indices must be strictly increasing")
        object.__setattr__(self, "nu", nu)

    @property
    def size(self) -> int:
        return int(self.nu.size)

    @property
    def mask(self) -> NDArray[np.float64]:
        d = np.zeros(self.n_total)
        d[self.nu] = 1.0
        return d

    def is_full(self) -> bool:
        return self.size == self.n_total


def full_region(n1: int, n2: int) -> VisibilityRegion:
    n = n1 * n2
    return VisibilityRegion(np.arange(n, dtype=np.intp), n)


def rect_region(n1: int, n2: int, row0: int, col0: int,
                rows: int, cols: int) -> VisibilityRegion:
    """Rectangular block of ``rows x cols`` elements with top-left corner
    (row0, col0) on the n1 x n2 grid."""
    if rows < 1 or cols < 1:
        raise ValueError("block must contain at least one element")
    if row0 < 0 or col0 < 0 or row0 + rows > n1 or col0 + cols > n2:
        raise ValueError("block exceeds the RIS grid")
    rr, cc = np.meshgrid(np.arange(row0, row0 + rows),
                         np.arange(col0, col0 + cols), indexing="ij")
    nu = np.sort(rr.ravel() * n2 + cc.ravel()).astype(np.intp)
    return VisibilityRegion(nu, n1 * n2)


def index_region(n1: int, n2: int, indices) -> VisibilityRegion:
    nu = np.unique(np.asarray(indices, dtype=np.intp))
    return VisibilityRegion(nu, n1 * n2)


def random_region(n1: int, n2: int, rng: np.random.Generator,
                  min_frac: float = 0.4, max_frac: float = 0.9) -> VisibilityRegion:
    """Uniformly placed rectangle with side fractions drawn from
    [min_frac, max_frac] of each grid dimension."""
    if not (0.0 < min_frac <= max_frac <= 1.0):
        raise ValueError("size fractions must satisfy 0 < min <= max <= 1")
    rows = max(1, int(round(rng.uniform(min_frac, max_frac) * n1)))
    cols = max(1, int(round(rng.uniform(min_frac, max_frac) * n2)))
    row0 = int(rng.integers(0, n1 - rows + 1))
    col0 = int(rng.integers(0, n2 - cols + 1))
    return rect_region(n1, n2, row0, col0, rows, cols)


def build_vr(spec, n1: int, n2: int,
             rng: np.random.Generator | None = None) -> VisibilityRegion:
    """Build one region from a declarative spec.

    Accepted forms: ``"full"``, a (row0, col0, rows, cols) tuple, a dict
    {"kind": "rect" | "full" | "indices" | "random", ...}, or an explicit
    index list.
    """
    if isinstance(spec, VisibilityRegion):
        return spec
    if spec == "full":
        return full_region(n1, n2)
    if isinstance(spec, dict):
        kind = spec.get("kind", "rect")
        if kind == "full":
            return full_region(n1, n2)
        if kind == "rect":
            return rect_region(n1, n2, spec["row0"], spec["col0"],
                               spec["rows"], spec["cols"])
        if kind == "indices":
            return index_region(n1, n2, spec["indices"])
        if kind == "random":
            if rng is None:
                rng = np.random.default_rng(spec.get("seed", 0))
            return random_region(n1, n2, rng,
                                 spec.get("min_frac", 0.4), spec.get("max_frac", 0.9))
        raise ValueError(f"unknown visibility spec kind: {kind!r}")
    if isinstance(spec, (tuple, list)) and len(spec) == 4 and all(
            isinstance(v, (int, np.integer)) for v in spec):
        return rect_region(n1, n2, *spec)
    return index_region(n1, n2, spec)


def random_visibility_set(n1: int, n2: int, k_users: int,
                          rng: np.random.Generator,
                          overlap: float | None = None,
                          min_frac: float = 0.4,
                          max_frac: float = 0.9) -> list[VisibilityRegion]:
    """Random regions for all users.

    With ``overlap=None`` each user gets an independent random rectangle.
    Otherwise ``overlap`` in [0, 1] interpolates between disjoint full-width
    row bands (0) and a single shared rectangle (1): block corners move
    linearly from the band layout toward a common randomly drawn block.
    """
    if overlap is None:
        return [random_region(n1, n2, rng, min_frac, max_frac) for _ in range(k_users)]
    if not 0.0 <= overlap <= 1.0:
        raise ValueError("overlap fraction must lie in [0, 1]")
    if k_users > n1:
        raise ValueError("row banding needs at least one row per user")
    common = random_region(n1, n2, rng, min_frac, max_frac)
    com_r0 = int(common.nu[0] // n2)
    com_c0 = int(common.nu[0] % n2)
    com_rows = int(common.nu[-1] // n2) - com_r0 + 1
    com_cols = int(common.nu[-1] % n2) - com_c0 + 1
    regions = []
    for k in range(k_users):
        band_r0 = (k * n1) // k_users
        band_r1 = ((k + 1) * n1) // k_users
        r0 = int(round((1.0 - overlap) * band_r0 + overlap * com_r0))
        r1 = int(round((1.0 - overlap) * band_r1 + overlap * (com_r0 + com_rows)))
        c0 = int(round(overlap * com_c0))
        c1 = int(round((1.0 - overlap) * n2 + overlap * (com_c0 + com_cols)))
        rows = max(1, r1 - r0)
        cols = max(1, c1 - c0)
        r0 = min(r0, n1 - rows)
        c0 = min(c0, n2 - cols)
        regions.append(rect_region(n1, n2, r0, c0, rows, cols))
    return regions
