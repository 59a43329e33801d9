"""Dyadic frequency decomposition on the periodic grid and Besov norms.

Frequencies are measured in physical wavenumber units ``|k| = 2*pi*|m|/L``.
The top block ``q_max`` is the high-pass remainder ``1 - chi(2^-q_max xi)`` so
that the blocks sum to one on every resolved wavevector, corners included.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from machlab.errors import ConfigurationError, RangeError
from machlab.spectral import Grid, SpectralField, lp_norm


def _smooth_step(u: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for u <= 0, 1 for u >= 1, built from exp(-1/t)."""
    u = np.clip(u, 0.0, 1.0)
    a = np.zeros_like(u)
    b = np.zeros_like(u)
    pos = u > 0
    a[pos] = np.exp(-1.0 / u[pos])
    neg = u < 1
    b[neg] = np.exp(-1.0 / (1.0 - u[neg]))
    return a / (a + b)


def chi(r) -> np.ndarray:
    """Radial low-pass profile: 1 on r <= 1/2, 0 on r >= 1."""
    r = np.asarray(r, dtype=float)
    return 1.0 - _smooth_step(2.0 * r - 1.0)


def phi(r) -> np.ndarray:
    """Annulus profile chi(r/2) - chi(r), supported in 1/2 <= r <= 2."""
    r = np.asarray(r, dtype=float)
    return chi(0.5 * r) - chi(r)


@dataclass(frozen=True)
class DyadicPartition:
    grid: Grid
    q_max: int
    q_min: int
    blocks: dict = field(repr=False)  # q -> inhomogeneous mask, q >= -1
    homog: dict = field(repr=False)  # q -> homogeneous mask, q_min <= q <= q_max

    def low_pass(self, q: int) -> np.ndarray:
        """Mask of S_q = sum_{j <= q-1} Delta_j."""
        if q < 0:
            raise RangeError(f"S_q needs q >= 0, got {q}")
        if q > self.q_max:
            return np.ones_like(self.blocks[-1])
        return chi(self.grid.tables.kabs / 2.0**q)

    def block(self, q: int, kind: str = "delta_q") -> np.ndarray:
        if kind == "delta_q":
            if q not in self.blocks:
                raise RangeError(f"block q={q} outside [-1, {self.q_max}]")
            return self.blocks[q]
        if kind == "homog_delta_q":
            if q not in self.homog:
                raise RangeError(f"homogeneous block q={q} outside [{self.q_min}, {self.q_max}]")
            return self.homog[q]
        if kind == "s_q":
            return self.low_pass(q)
        raise ValueError(f"unknown projection kind {kind!r}")


def build_partition(grid: Grid) -> DyadicPartition:
    t = grid.tables
    k_nyq = math.pi * grid.n / grid.L
    q_max = int(math.floor(math.log2(k_nyq) + 1e-9)) - 1
    if q_max < 2:
        raise ConfigurationError(f"grid too small for a dyadic partition (q_max={q_max})")
    k_min = 2.0 * math.pi / grid.L
    q_min = int(math.floor(math.log2(k_min) + 1e-12))
    kabs = t.kabs
    blocks = {-1: chi(kabs)}
    for q in range(0, q_max):
        blocks[q] = phi(kabs / 2.0**q)
    blocks[q_max] = 1.0 - chi(kabs / 2.0**q_max)
    homog = {}
    nonzero = kabs > 0
    for q in range(q_min, q_max):
        homog[q] = phi(kabs / 2.0**q) * nonzero
    homog[q_max] = blocks[q_max] * nonzero
    for m in itertools.chain(blocks.values(), homog.values()):
        m.setflags(write=False)
    return DyadicPartition(grid, q_max, q_min, blocks, homog)


def _partition_for(f: SpectralField, partition: DyadicPartition | None) -> DyadicPartition:
    if partition is None:
        return build_partition(f.grid)
    if partition.grid != f.grid:
        raise ConfigurationError("partition built for a different grid")
    return partition


def project(f: SpectralField, q: int, kind: str = "delta_q",
            partition: DyadicPartition | None = None) -> SpectralField:
    part = _partition_for(f, partition)
    return SpectralField(f.grid, hat=f.hat * part.block(q, kind))


def besov_norm(f: SpectralField, s: float, p: float, r: float, homogeneous: bool = False,
               partition: DyadicPartition | None = None) -> float:
    if p < 1 or r < 1:
        raise ValueError("Besov indices p and r must be >= 1")
    part = _partition_for(f, partition)
    masks = part.homog if homogeneous else part.blocks
    terms = []
    for q, mask in masks.items():
        block = np.fft.irfft2(f.hat * mask, s=(f.grid.n, f.grid.n))
        terms.append(2.0 ** (q * s) * lp_norm(block, f.grid, p))
    terms = np.asarray(terms)
    if np.isinf(r):
        return float(terms.max())
    return float(np.sum(terms**r) ** (1.0 / r))


@dataclass(frozen=True)
class BernsteinReport:
    q: int
    k: int
    a: float
    b: float
    upper_ratio: float  # sup_{|alpha|<=k} ||d^a S_q f||_b / (2^{q(k+2(1/a-1/b))} ||S_q f||_a)
    # sup_{|alpha|=k} ||d^a Dq f||_b / (2^{qk} ||Dq f||_b); should sit in [C^-k, C^k]
    homog_ratio: float


def _derivative(hat: np.ndarray, grid: Grid, alpha: tuple[int, int]) -> np.ndarray:
    t = grid.tables
    mult = (1j * t.k1d) ** alpha[0] * (1j * t.k2d) ** alpha[1]
    return np.fft.irfft2(hat * mult, s=(grid.n, grid.n))


def bernstein_verify(f: SpectralField, q: int, k: int, a: float, b: float,
                     partition: DyadicPartition | None = None) -> BernsteinReport:
    if a > b:
        raise ValueError("Bernstein check needs a <= b")
    part = _partition_for(f, partition)
    g = f.grid
    s_hat = f.hat * part.low_pass(q)
    denom = 2.0 ** (q * (k + 2.0 * (1.0 / a - 1.0 / b))) * lp_norm(np.fft.irfft2(s_hat, s=(g.n, g.n)), g, a)
    upper = 0.0
    for order in range(k + 1):
        for a1 in range(order + 1):
            num = lp_norm(_derivative(s_hat, g, (a1, order - a1)), g, b)
            upper = max(upper, num / denom if denom > 0 else 0.0)
    homog = float("nan")
    if q in part.homog:
        d_hat = f.hat * part.homog[q]
        base = 2.0 ** (q * k) * lp_norm(np.fft.irfft2(d_hat, s=(g.n, g.n)), g, b)
        if base > 0:
            homog = max(lp_norm(_derivative(d_hat, g, (a1, k - a1)), g, b) for a1 in range(k + 1)) / base
    return BernsteinReport(q, k, a, b, upper, homog)
