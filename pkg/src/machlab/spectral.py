"""Periodic grid fields and spectral differential operators.

Fields live on the torus [-L/2, L/2)^2 sampled at n x n points, with array
axis 0 carrying x1 and axis 1 carrying x2. Real fields are stored through
their ``rfft2`` coefficients (unnormalized forward transform), so wavevectors
are ``k = 2*pi*m/L`` with ``m1`` in (-n/2, n/2] and ``m2`` in [0, n/2].

Differential operators act on the derivative lattice ``k_d``, which equals
``k`` except that Nyquist components are zeroed. Laplacian, Leray projector and
Biot-Savart all use ``|k_d|^2`` so that the identities between them hold
exactly, Nyquist modes included.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from machlab.errors import ConfigurationError, PreconditionError

TWO_PI = 2.0 * np.pi
MEAN_TOL = 1e-10


@dataclass(frozen=True)
class Grid:
    """Uniform n x n grid on a periodic box of side ``L``."""

    n: int
    L: float = TWO_PI * 4

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise ConfigurationError(f"grid size must be a power of two >= 8, got {n!r}")
        if not self.L > 2.0:
            raise ConfigurationError(f"box length must exceed 2, got {self.L!r}")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self) -> float:
        return self.L / self.n

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    def axis(self) -> np.ndarray:
        """1D coordinates, origin at index n/2."""
        return -0.5 * self.L + self.h * np.arange(self.n)

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.axis()
        return np.meshgrid(x, x, indexing="ij")

    def radius(self, center=(0.0, 0.0)) -> np.ndarray:
        """Torus distance from ``center`` to every grid point."""
        x1, x2 = self.coords()
        d1 = _wrap(x1 - center[0], self.L)
        d2 = _wrap(x2 - center[1], self.L)
        return np.hypot(d1, d2)

    @property
    def tables(self) -> "SpectralTables":
        return _tables(self)

    def k_max(self) -> float:
        """Largest wavenumber component kept by the dealiasing mask."""
        return self.tables.k_dealias_max


def _wrap(d, L):
    return (d + 0.5 * L) % L - 0.5 * L


@dataclass(frozen=True)
class SpectralTables:
    k1: np.ndarray  # (n, 1)
    k2: np.ndarray  # (1, n//2+1)
    k1d: np.ndarray  # odd-derivative multipliers, Nyquist zeroed
    k2d: np.ndarray
    ksq: np.ndarray  # true |k|^2
    kabs: np.ndarray  # true |k|, used for dyadic blocks and Sobolev weights
    kdsq: np.ndarray  # |k_d|^2 on the derivative lattice
    kdabs: np.ndarray
    inv_kdsq: np.ndarray  # zero where k_d = 0
    inv_kdabs: np.ndarray
    dealias: np.ndarray  # boolean mask, 2/3 rule
    k_dealias_max: float
    weights: np.ndarray  # multiplicity of each rfft column in the full spectrum


@lru_cache(maxsize=32)
def _tables(grid: Grid) -> SpectralTables:
    n, L = grid.n, grid.L
    m1 = np.fft.fftfreq(n, 1.0 / n)
    m2 = np.fft.rfftfreq(n, 1.0 / n)
    scale = TWO_PI / L
    k1 = (m1 * scale)[:, None]
    k2 = (m2 * scale)[None, :]
    nyq = n // 2
    k1d = np.where(np.abs(m1) == nyq, 0.0, m1 * scale)[:, None]
    k2d = np.where(m2 == nyq, 0.0, m2 * scale)[None, :]
    ksq = k1 * k1 + k2 * k2
    kabs = np.sqrt(ksq)
    kdsq = k1d * k1d + k2d * k2d
    kdabs = np.sqrt(kdsq)
    nz = kdsq > 0
    inv_kdsq = np.zeros_like(kdsq)
    inv_kdsq[nz] = 1.0 / kdsq[nz]
    inv_kdabs = np.zeros_like(kdsq)
    inv_kdabs[nz] = 1.0 / kdabs[nz]
    cut = n / 3.0
    dealias = (np.abs(m1)[:, None] < cut) & (np.abs(m2)[None, :] < cut)
    weights = np.full(m2.shape, 2.0)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[-1] = 1.0
    weights = weights[None, :]
    for arr in (k1, k2, k1d, k2d, ksq, kabs, kdsq, kdabs, inv_kdsq, inv_kdabs, dealias, weights):
        arr.setflags(write=False)
    kmax = float(np.floor((n - 1) / 3.0) * scale)
    return SpectralTables(k1, k2, k1d, k2d, ksq, kabs, kdsq, kdabs, inv_kdsq, inv_kdabs, dealias, kmax, weights)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class SpectralField:
    """Real scalar field with lazily synchronized physical and spectral data.

    Construct with either ``values`` (real n x n array) or ``hat`` (rfft2
    coefficients). The missing representation is computed on first access and
    cached; both are read-only afterwards.
    """

    __slots__ = ("grid", "_values", "_hat", "_lock")

    def __init__(self, grid: Grid, values=None, hat=None):
        if (values is None) == (hat is None):
            raise ValueError("give exactly one of values or hat")
        self.grid = grid
        self._lock = threading.Lock()
        n = grid.n
        if values is not None:
            values = np.asarray(values, dtype=float)
            if values.shape != (n, n):
                raise ConfigurationError(f"field shape {values.shape} does not match grid n={n}")
            self._values = _frozen(values.copy())
            self._hat = None
        else:
            hat = np.asarray(hat, dtype=complex)
            if hat.shape != (n, n // 2 + 1):
                raise ConfigurationError(f"coefficient shape {hat.shape} does not match grid n={n}")
            self._hat = _frozen(hat.copy())
            self._values = None

    @classmethod
    def from_hat(cls, grid: Grid, hat) -> "SpectralField":
        return cls(grid, hat=hat)

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls(grid, values=np.zeros((grid.n, grid.n)))

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            with self._lock:
                if self._values is None:
                    n = self.grid.n
                    self._values = _frozen(np.fft.irfft2(self._hat, s=(n, n)))
        return self._values

    @property
    def hat(self) -> np.ndarray:
        if self._hat is None:
            with self._lock:
                if self._hat is None:
                    self._hat = _frozen(np.fft.rfft2(self._values))
        return self._hat

    def full_hat(self) -> np.ndarray:
        """Coefficients on the full (n, n) wavevector lattice."""
        return np.fft.fft2(self.values)

    def mean(self) -> float:
        return float(self.hat[0, 0].real) / self.grid.n**2

    def with_values(self, values) -> "SpectralField":
        return SpectralField(self.grid, values=values)

    def __add__(self, other):
        if isinstance(other, SpectralField):
            return SpectralField(self.grid, hat=self.hat + other.hat)
        return SpectralField(self.grid, values=self.values + other)

    def __sub__(self, other):
        if isinstance(other, SpectralField):
            return SpectralField(self.grid, hat=self.hat - other.hat)
        return SpectralField(self.grid, values=self.values - other)

    def __mul__(self, scalar):
        return SpectralField(self.grid, hat=self.hat * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, hat=-self.hat)

    def __repr__(self):
        return f"SpectralField(n={self.grid.n}, L={self.grid.L:g})"


@dataclass(frozen=True)
class VectorField:
    v1: SpectralField
    v2: SpectralField

    def __post_init__(self):
        if self.v1.grid != self.v2.grid:
            raise ConfigurationError("vector components live on different grids")

    @property
    def grid(self) -> Grid:
        return self.v1.grid

    @classmethod
    def from_values(cls, grid: Grid, a1, a2) -> "VectorField":
        return cls(SpectralField(grid, values=a1), SpectralField(grid, values=a2))

    @classmethod
    def from_hats(cls, grid: Grid, h1, h2) -> "VectorField":
        return cls(SpectralField(grid, hat=h1), SpectralField(grid, hat=h2))

    @property
    def values(self) -> np.ndarray:
        return np.stack([self.v1.values, self.v2.values])

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.v1.values, self.v2.values)

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.v1 + other.v1, self.v2 + other.v2)

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.v1 - other.v1, self.v2 - other.v2)

    def __mul__(self, scalar) -> "VectorField":
        return VectorField(self.v1 * scalar, self.v2 * scalar)

    __rmul__ = __mul__


def transform(field: SpectralField, direction: str) -> SpectralField:
    """Populate the requested representation of ``field`` and return it."""
    if direction == "to_spectral":
        field.hat
    elif direction == "to_physical":
        field.values
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return field


def dealias(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, hat=f.hat * f.grid.tables.dealias)


def gradient(f: SpectralField) -> VectorField:
    t = f.grid.tables
    fh = f.hat
    return VectorField.from_hats(f.grid, 1j * t.k1d * fh, 1j * t.k2d * fh)


def divergence(v: VectorField) -> SpectralField:
    t = v.grid.tables
    return SpectralField(v.grid, hat=1j * (t.k1d * v.v1.hat + t.k2d * v.v2.hat))


def curl2d(v: VectorField) -> SpectralField:
    t = v.grid.tables
    return SpectralField(v.grid, hat=1j * (t.k1d * v.v2.hat - t.k2d * v.v1.hat))


def laplacian(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, hat=-f.grid.tables.kdsq * f.hat)


def leray_hats(h1: np.ndarray, h2: np.ndarray, t: SpectralTables):
    """Return ((Pv)^, (Qv)^) component hats; Q = grad inv_lap div."""
    proj = (t.k1d * h1 + t.k2d * h2) * t.inv_kdsq
    q1 = t.k1d * proj
    q2 = t.k2d * proj
    return (h1 - q1, h2 - q2), (q1, q2)


def leray_decompose(v: VectorField) -> tuple[VectorField, VectorField]:
    (p1, p2), (q1, q2) = leray_hats(v.v1.hat, v.v2.hat, v.grid.tables)
    g = v.grid
    return VectorField.from_hats(g, p1, p2), VectorField.from_hats(g, q1, q2)


def biot_savart_hats(wh: np.ndarray, t: SpectralTables):
    """v = grad_perp inv_lap omega, with grad_perp = (-d2, d1)."""
    psi = -wh * t.inv_kdsq
    return -1j * t.k2d * psi, 1j * t.k1d * psi


def biot_savart(omega: SpectralField) -> VectorField:
    n = omega.grid.n
    scale = max(float(np.max(np.abs(omega.values))), 1.0)
    if abs(omega.hat[0, 0].real) / n**2 > MEAN_TOL * scale:
        raise PreconditionError("vorticity must have zero mean on the torus")
    h1, h2 = biot_savart_hats(omega.hat, omega.grid.tables)
    return VectorField.from_hats(omega.grid, h1, h2)


def fractional_D(f: SpectralField, s: float) -> SpectralField:
    """Apply |D|^s; the k=0 mode is zeroed for s < 0 (and for s > 0 it is 0 anyway)."""
    t = f.grid.tables
    if s == 0:
        return f
    if s < 0:
        scale = max(float(np.max(np.abs(f.values))), 1.0)
        if abs(f.mean()) > MEAN_TOL * scale:
            raise PreconditionError("negative powers of |D| need a mean-zero field")
    mult = np.zeros_like(t.kabs)
    nz = t.kabs > 0
    mult[nz] = t.kabs[nz] ** s
    return SpectralField(f.grid, hat=f.hat * mult)


def lp_norm(a, grid: Grid, p: float) -> float:
    """Discrete L^p norm on the torus; ``a`` may be a field, vector field or array."""
    if isinstance(a, SpectralField):
        a = a.values
    elif isinstance(a, VectorField):
        a = a.magnitude()
    a = np.abs(np.asarray(a))
    if np.isinf(p):
        return float(a.max())
    return float((np.sum(a**p) * grid.cell_area) ** (1.0 / p))


def sobolev_norm(f: SpectralField, s: float) -> float:
    """H^s norm from (1+|k|^2)^s |f^|^2 with the torus Parseval weight."""
    t = f.grid.tables
    n = f.grid.n
    dens = (1.0 + t.ksq) ** s * np.abs(f.hat) ** 2 * t.weights
    return float(np.sqrt(dens.sum() * f.grid.cell_area / n**2))


def random_field(grid: Grid, rng: np.random.Generator, kcut: float | None = None, slope: float = 2.0,
                 mean_zero: bool = True) -> SpectralField:
    """Smooth random field with power-law spectrum, band-limited by the dealiasing mask."""
    t = grid.tables
    n = grid.n
    noise = rng.standard_normal((n, n))
    hat = np.fft.rfft2(noise)
    amp = (1.0 + t.ksq) ** (-slope / 2.0)
    mask = t.dealias.copy()
    if kcut is not None:
        mask &= t.kabs <= kcut
    hat = hat * amp * mask
    if mean_zero:
        hat[0, 0] = 0.0
    f = SpectralField(grid, hat=hat)
    peak = np.max(np.abs(f.values))
    return f * (1.0 / peak) if peak > 0 else f
