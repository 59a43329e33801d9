"""Ball-sampling estimators of BMO-type and log-Lipschitz norms.

Each estimator is a maximum over a finite family of balls, hence a lower bound
of the true supremum. Ball membership uses the torus metric and averages are
plain grid means.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from machlab.errors import ConfigurationError, PreconditionError
from machlab.funcspaces.classf import ClassF
from machlab.spectral import Grid, SpectralField, VectorField, lp_norm

GATHER_CHUNK = 4_000_000


@dataclass(frozen=True)
class BallSampler:
    """Center lattice, dyadic radii and the pair rule for nested balls.

    Oscillation radii are ``2^-m <= 1`` down to ``min_radius``; pair radii
    ``r2 = r1/4, r1/8, ...`` go down to ``pair_floor``. Eccentric pairs shift
    the inner ball by ``r1/4`` along each axis, which keeps ``2 B2`` inside ``B1``.
    """

    grid: Grid
    stride: int
    radii: tuple[float, ...]
    pair_floor: float
    eccentric: bool = True

    def __post_init__(self):
        n = self.grid.n
        if self.stride < 1 or n % self.stride:
            raise ConfigurationError(f"center stride {self.stride} must divide n={n}")
        if not self.radii:
            raise ConfigurationError("sampler has no radii; the grid is too coarse for unit balls")
        if max(self.radii) > 1.0 or max(self.radii) >= self.grid.L / 2:
            raise ConfigurationError("ball radii must be <= 1 and below L/2")
        if min(self.radii) < 2 * self.grid.h or self.pair_floor < 2 * self.grid.h * (1 - 1e-12):
            raise ConfigurationError("balls must contain at least 2x2 grid points (r >= 2h)")

    @classmethod
    def default(cls, grid: Grid, stride: int | None = None, eccentric: bool = True) -> "BallSampler":
        stride = stride if stride is not None else max(grid.n // 32, 1)
        radii = []
        m = 0
        while 2.0**-m >= 4 * grid.h * (1 - 1e-12):
            radii.append(2.0**-m)
            m += 1
        return cls(grid, stride, tuple(radii), 2 * grid.h, eccentric)

    def centers(self) -> np.ndarray:
        """Flat indices of the lattice centers; the lattice contains the origin."""
        n = self.grid.n
        ax = (n // 2 + self.stride * np.arange(n // self.stride)) % n
        ii, jj = np.meshgrid(ax, ax, indexing="ij")
        return (ii * n + jj).ravel()

    def pairs(self) -> list[tuple[float, float, tuple[tuple[int, int], ...]]]:
        h = self.grid.h
        out = []
        for r1 in self.radii:
            step = int(math.floor(r1 / (4 * h) + 1e-9))
            offs = [(0, 0)]
            if self.eccentric and step > 0:
                offs += [(step, 0), (-step, 0), (0, step), (0, -step)]
            r2 = r1 / 4
            while r2 >= self.pair_floor * (1 - 1e-12):
                out.append((r1, r2, tuple(offs)))
                r2 /= 2
        return out

    def digest(self) -> str:
        key = f"{self.grid.n}|{self.grid.L!r}|{self.stride}|{self.radii!r}|{self.pair_floor!r}|{self.eccentric}"
        return hashlib.sha256(key.encode()).hexdigest()[:16]


@lru_cache(maxsize=64)
def _stencil(grid: Grid, r: float) -> tuple[np.ndarray, np.ndarray]:
    h = grid.h
    m = int(math.floor(r / h + 1e-9))
    d = np.arange(-m, m + 1)
    di, dj = np.meshgrid(d, d, indexing="ij")
    inside = (di * di + dj * dj) * h * h <= r * r * (1 + 1e-12)
    return di[inside].astype(np.int64), dj[inside].astype(np.int64)


@lru_cache(maxsize=64)
def _disc_kernel_hat(grid: Grid, r: float) -> tuple[np.ndarray, int]:
    n = grid.n
    di, dj = _stencil(grid, r)
    k = np.zeros((n, n))
    k[di % n, dj % n] = 1.0
    return np.fft.rfft2(k), len(di)


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, SpectralField) else np.asarray(f, dtype=float)


def ball_average(f: SpectralField, center, r: float) -> float:
    g = f.grid
    if r < 2 * g.h * (1 - 1e-12):
        raise PreconditionError(f"ball radius {r} is below two grid cells ({2 * g.h})")
    mask = g.radius(center) <= r * (1 + 1e-12)
    return float(f.values[mask].mean())


def _oscillations(g: np.ndarray, grid: Grid, centers: np.ndarray, r: float) -> np.ndarray:
    """Mean oscillation over B(center, r) for each center."""
    n = grid.n
    di, dj = _stencil(grid, r)
    ci, cj = np.divmod(centers, n)
    flat = g.ravel()
    out = np.empty(len(centers))
    chunk = max(1, GATHER_CHUNK // len(di))
    for s in range(0, len(centers), chunk):
        a = ci[s:s + chunk, None]
        b = cj[s:s + chunk, None]
        idx = ((a + di) % n) * n + (b + dj) % n
        vals = flat[idx]
        d = vals - vals[:, :1]
        m = d.mean(axis=1, keepdims=True)
        out[s:s + chunk] = np.abs(d - m).mean(axis=1)
    return out


@dataclass(frozen=True)
class BallStatistics:
    """Raw maxima gathered once per (field, sampler)."""

    osc: dict  # r -> max oscillation over centers
    pair_gap: dict  # (r1, r2) -> max |mean_B2 - mean_B1|
    sampler_hash: str


def ball_statistics(f, sampler: BallSampler) -> BallStatistics:
    grid = sampler.grid
    vals = _values(f)
    if vals.shape != (grid.n, grid.n):
        raise ConfigurationError("field does not match the sampler grid")
    # a global reference value keeps constants exactly at zero
    g = vals - vals.flat[0]
    centers = sampler.centers()
    osc = {r: float(_oscillations(g, grid, centers, r).max()) for r in sampler.radii}
    n = grid.n
    ghat = np.fft.rfft2(g)
    means = {}

    def mean_field(r):
        if r not in means:
            kh, cnt = _disc_kernel_hat(grid, r)
            means[r] = np.fft.irfft2(ghat * kh, s=(n, n)) / cnt
        return means[r]

    ci, cj = np.divmod(centers, n)
    gaps = {}
    for r1, r2, offs in sampler.pairs():
        m1 = mean_field(r1)[ci, cj]
        m2f = mean_field(r2)
        best = 0.0
        for oi, oj in offs:
            m2 = m2f[(ci + oi) % n, (cj + oj) % n]
            best = max(best, float(np.abs(m2 - m1).max()))
        gaps[(r1, r2)] = best
    return BallStatistics(osc, gaps, sampler.digest())


def _sampler_for(f, sampler):
    if sampler is None:
        if not isinstance(f, SpectralField):
            raise ValueError("a sampler is needed for raw arrays")
        return BallSampler.default(f.grid)
    return sampler


def bmo_from_stats(st: BallStatistics) -> float:
    return max(st.osc.values())


def bmo_f_from_stats(st: BallStatistics, F: ClassF) -> float:
    pair = 0.0
    for (r1, r2), gap in st.pair_gap.items():
        w = float(F((1.0 - math.log(r2)) / (1.0 - math.log(r1))))
        pair = max(pair, gap / w)
    return bmo_from_stats(st) + pair


def lmo_f_from_stats(st: BallStatistics, F: ClassF) -> float:
    osc = max(float(F(1.0 - math.log(r))) * v for r, v in st.osc.items())
    pair = max((float(F(1.0 - math.log(r1))) * gap for (r1, _), gap in st.pair_gap.items()), default=0.0)
    return osc + pair


def bmo_norm(f, sampler: BallSampler | None = None) -> float:
    sampler = _sampler_for(f, sampler)
    return bmo_from_stats(ball_statistics(f, sampler))


def bmo_f_norm(f, F: ClassF, sampler: BallSampler | None = None) -> float:
    F.require_class_f()
    sampler = _sampler_for(f, sampler)
    return bmo_f_from_stats(ball_statistics(f, sampler), F)


def lmo_f_norm(f, F: ClassF, sampler: BallSampler | None = None) -> float:
    F.require_class_f()
    sampler = _sampler_for(f, sampler)
    return lmo_f_from_stats(ball_statistics(f, sampler), F)


def log_lipschitz_norm(v: VectorField, sampler: BallSampler | None = None, mask: np.ndarray | None = None,
                       quotient_only: bool = False) -> float:
    """max |v(x)-v(y)| / (|x-y| log(e/|x-y|)) over dyadic grid separations, plus ||v||_inf.

    ``mask`` restricts the pairs to those with both ends inside it. The sampler
    argument is accepted for interface symmetry; separations are always the
    dyadic multiples of h below 1.
    """
    grid = v.grid
    h = grid.h
    a1, a2 = v.v1.values, v.v2.values
    best = 0.0
    s = 1
    while s * h < 1.0:
        for d1, d2 in ((s, 0), (0, s), (s, s), (s, -s)):
            dist = h * math.hypot(d1, d2)
            if dist >= 1.0:
                continue
            diff = np.hypot(np.roll(a1, (-d1, -d2), (0, 1)) - a1, np.roll(a2, (-d1, -d2), (0, 1)) - a2)
            if mask is not None:
                diff = diff[mask & np.roll(mask, (-d1, -d2), (0, 1))]
                if diff.size == 0:
                    continue
            best = max(best, float(diff.max()) / (dist * math.log(math.e / dist)))
        s *= 2
    if quotient_only:
        return best
    sup = v.magnitude() if mask is None else v.magnitude()[mask]
    return best + float(sup.max())


@dataclass(frozen=True)
class InterpolationReport:
    ratio: float
    lp: float
    lq: float
    bmo: float
    note: str = ""


def interpolation_check(f: SpectralField, p: float, q: float, sampler: BallSampler | None = None) -> InterpolationReport:
    if not (1 <= p <= q < np.inf):
        raise ValueError("need 1 <= p <= q < inf")
    b = bmo_norm(f, sampler)
    lp = lp_norm(f, f.grid, p)
    lq = lp_norm(f, f.grid, q)
    if b <= 0 or lp <= 0:
        return InterpolationReport(float("nan"), lp, lq, b, "excluded: zero BMO or L^p norm (constant field)")
    return InterpolationReport(lq / (lp ** (p / q) * b ** (1 - p / q)), lp, lq, b)
