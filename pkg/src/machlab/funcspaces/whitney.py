"""Whitney ball covers of open grid sets and their shell measures."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from machlab.errors import PreconditionError
from machlab.spectral import Grid

C1 = 1.0 / 8.0
C2 = 1.0 / 2.0


@dataclass(frozen=True)
class WhitneyCover:
    grid: Grid
    centers: np.ndarray  # (m, 2) physical coordinates
    radii: np.ndarray  # (m,)
    gaps: np.ndarray  # distance from each ball to the complement grid points

    @property
    def measures(self) -> np.ndarray:
        return np.pi * self.radii**2

    def ratios(self) -> np.ndarray:
        return self.radii / self.gaps

    def shell_V(self, k_max: int = 12) -> np.ndarray:
        """V_k: total |O_j| with e^{-k-1} < 4 r_j <= e^{-k}."""
        return self._shells(4.0 * self.radii, 1.0, k_max)

    def shell_U(self, r: float, jac_max: float, k_max: int = 12) -> np.ndarray:
        """U_k: total |O_j| with e^{-k-1} h(r) < r_j <= e^{-k} h(r), h(r) = r max(1, |J|)."""
        return self._shells(self.radii, r * max(1.0, jac_max), k_max)

    def _shells(self, sizes: np.ndarray, scale: float, k_max: int) -> np.ndarray:
        out = np.zeros(k_max + 1)
        meas = self.measures
        for k in range(k_max + 1):
            hi = math.exp(-k) * scale
            lo = math.exp(-k - 1) * scale
            sel = (sizes > lo) & (sizes <= hi)
            out[k] = meas[sel].sum()
        return out


def whitney_cover(open_set: np.ndarray, grid: Grid) -> WhitneyCover:
    """Dyadic-square decomposition of ``open_set`` followed by inscribed balls.

    A dyadic block of side s (grid points ``[i0, i0+2^j)``, geometric side
    ``s = 2^j h``) is admissible when its inscribed ball lies at distance at
    least ``s`` from every complement grid point. Maximal admissible blocks are
    kept; admissibility is inherited by children, so they are disjoint and
    cover every point whose single-cell block is admissible.
    """
    mask = np.asarray(open_set, dtype=bool)
    n, h = grid.n, grid.h
    if mask.shape != (n, n):
        raise PreconditionError("mask does not match grid")
    if not mask.any():
        raise PreconditionError("empty set")
    comp = np.argwhere(~mask)
    if len(comp) == 0:
        raise PreconditionError("the open set must have a nonempty complement")
    tree = cKDTree(comp * h, boxsize=grid.L)
    chosen_c, chosen_r, chosen_g = [], [], []
    covered = np.zeros_like(mask)

    levels = int(math.log2(n))
    # top-down: a block is kept when admissible and not inside a kept block
    for j in range(levels, -1, -1):
        side_pts = 2**j
        s = side_pts * h
        starts = np.arange(0, n, side_pts)
        ii, jj = np.meshgrid(starts, starts, indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()
        # skip blocks already covered (any kept ancestor covers them entirely)
        keep = ~covered[ii, jj]
        ii, jj = ii[keep], jj[keep]
        if len(ii) == 0:
            continue
        centers = np.stack([ii + 0.5 * (side_pts - 1), jj + 0.5 * (side_pts - 1)], axis=1) * h
        dist, _ = tree.query(np.mod(centers, grid.L))
        gap = dist - 0.5 * s
        ok = gap >= s * (1 - 1e-12)
        for a, b, c, gp in zip(ii[ok], jj[ok], centers[ok], gap[ok]):
            covered[a:a + side_pts, b:b + side_pts] = True
            chosen_c.append(c)
            chosen_r.append(0.5 * s)
            chosen_g.append(gp)
    if not chosen_c:
        raise PreconditionError("set too thin: no admissible block at grid resolution")
    centers = -0.5 * grid.L + np.asarray(chosen_c)
    return WhitneyCover(grid, centers, np.asarray(chosen_r), np.asarray(chosen_g))


def fit_shell_decay(shells: np.ndarray, skip_rise: bool = False) -> tuple[float, int]:
    """Least-squares slope of log(shell) against k over the nonempty shells.

    With ``skip_rise`` the fit starts at the first shell holding at least half
    of the largest shell measure, dropping the initial rise of covers whose
    biggest balls sit below the reference scale.
    """
    shells = np.asarray(shells, dtype=float)
    k = np.nonzero(shells > 0)[0]
    if skip_rise and len(k):
        k = k[k >= np.argmax(shells >= 0.5 * shells.max())]
    if len(k) < 2:
        return float("nan"), len(k)
    slope = np.polyfit(k, np.log(shells[k]), 1)[0]
    return float(slope), len(k)
