"""Initial data: the log-log vortex, cutoff and mollification, ill-prepared families."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from machlab.errors import ConfigurationError
from machlab.littlewood_paley import _smooth_step
from machlab.spectral import (
    Grid,
    SpectralField,
    VectorField,
    biot_savart,
    curl2d,
    gradient,
    leray_decompose,
    sobolev_norm,
)

FINE_SPACING = 1.0 / 64.0


def cutoff(r) -> np.ndarray:
    """Smooth radial cutoff: 1 on r <= 1, 0 on r >= 2."""
    return 1.0 - _smooth_step(np.asarray(r, dtype=float) - 1.0)


def cutoff_derivative(r) -> np.ndarray:
    """d/dr of ``cutoff``; exactly zero outside 1 < r < 2."""
    u = np.asarray(r, dtype=float) - 1.0
    out = np.zeros_like(u)
    inside = (u > 0) & (u < 1)
    w = u[inside]
    a = np.exp(-1.0 / w)
    b = np.exp(-1.0 / (1.0 - w))
    out[inside] = -(a * b) * (1.0 / w**2 + 1.0 / (1.0 - w) ** 2) / (a + b) ** 2
    return out


def bump(r) -> np.ndarray:
    """exp(-1/(1-r^2)) on r < 1, zero elsewhere (unnormalized)."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


def lbmo_vortex(grid: Grid, mean_correct: bool = True) -> SpectralField:
    """ln(1 + ln(1/|x|)) on |x| <= 1, zero outside, clamped for |x| < 2h."""
    if grid.h > FINE_SPACING * (1 + 1e-12):
        raise ConfigurationError(f"grid too coarse for the log-log vortex: h={grid.h:.4g} > 1/64")
    r = np.maximum(grid.radius(), 2.0 * grid.h)
    vals = np.zeros_like(r)
    inside = r <= 1.0
    vals[inside] = np.log1p(np.log(1.0 / r[inside]))
    if mean_correct:
        vals -= vals.mean()
    return SpectralField(grid, values=vals)


def _check_R(grid: Grid, R: float):
    if R <= 0 or 2.0 * R > 0.5 * grid.L:
        raise ConfigurationError(f"cutoff radius R={R} too large for box L={grid.L} (need 2R <= L/2)")


def mollifier_kernel(grid: Grid, k: float) -> np.ndarray:
    """rho_k(x) = k^2 rho(kx) on the grid, normalized to unit sum, centered at index 0."""
    r = grid.radius((grid.axis()[0], grid.axis()[0]))  # distance to the grid corner = index (0, 0)
    ker = bump(k * r)
    total = ker.sum()
    if total == 0.0:
        ker = np.zeros_like(r)
        ker[0, 0] = 1.0
        return ker
    return ker / total


def _convolve(values: np.ndarray, kernel_hat: np.ndarray) -> np.ndarray:
    n = values.shape[0]
    return np.fft.irfft2(np.fft.rfft2(values) * kernel_hat, s=(n, n))


def mollify_cutoff(v: VectorField, k: float, R: float) -> VectorField:
    """rho_k * (chi(./R) v)."""
    g = v.grid
    _check_R(g, R)
    chi_R = cutoff(g.radius() / R)
    kh = np.fft.rfft2(mollifier_kernel(g, k))
    return VectorField.from_values(g, _convolve(chi_R * v.v1.values, kh), _convolve(chi_R * v.v2.values, kh))


@dataclass(frozen=True)
class TruncationRot:
    total: SpectralField
    main: SpectralField  # chi(./R) omega
    boundary: SpectralField  # (1/R) grad_perp chi(./R) . v


def truncation_rot(v: VectorField, R: float) -> TruncationRot:
    g = v.grid
    _check_R(g, R)
    x1, x2 = g.coords()
    r = g.radius()
    omega = curl2d(v).values
    chi_R = cutoff(r / R)
    dchi = cutoff_derivative(r / R) / R
    with np.errstate(invalid="ignore", divide="ignore"):
        e1 = np.where(r > 0, x1 / r, 0.0)
        e2 = np.where(r > 0, x2 / r, 0.0)
    d1, d2 = dchi * e1, dchi * e2
    # grad_perp chi = (-d2 chi, d1 chi)
    boundary = -d2 * v.v1.values + d1 * v.v2.values
    main = chi_R * omega
    return TruncationRot(SpectralField(g, values=main + boundary), SpectralField(g, values=main),
                         SpectralField(g, values=boundary))


PROFILES = ("lbmo_vortex", "smooth_patch", "vortex_pair")


@dataclass(frozen=True)
class DataRecipe:
    """Parameters of an ill-prepared initial-data family member.

    ``k=None`` picks the largest integer mollifier index inside the budget
    ``k^{s+2} R <= C0 (ln 1/eps)^alpha``.
    """

    n: int = 128
    L: float = 2 * math.pi
    profile: str = "lbmo_vortex"
    epsilon: float = 0.1
    k: float | None = 8.0
    R: float = 1.5
    s: float = 0.5
    alpha: float = 0.5
    C0: float = 500.0
    gamma: float = 1.4
    vortex_amplitude: float = 1.0
    acoustic_amplitude: float = 0.3
    compressive_amplitude: float = 0.3
    acoustic_center: tuple[float, float] = (0.6, 0.0)
    acoustic_width: float = 0.6
    noise_amplitude: float = 0.0
    seed: int = 0
    well_prepared: bool = False

    @property
    def gamma_bar(self) -> float:
        return 0.5 * (self.gamma - 1.0)

    @property
    def grid(self) -> Grid:
        return Grid(self.n, self.L)

    def budget(self) -> float:
        if not 0 < self.epsilon < 1:
            raise ConfigurationError("epsilon must lie in (0, 1)")
        return self.C0 * math.log(1.0 / self.epsilon) ** self.alpha

    def mollifier_index(self) -> float:
        if self.k is not None:
            return float(self.k)
        k = math.floor((self.budget() / self.R) ** (1.0 / (self.s + 2.0)))
        if k < 1:
            raise ConfigurationError("budget too small for any mollifier index")
        return float(k)

    def check(self):
        if self.profile not in PROFILES:
            raise ConfigurationError(f"unknown profile {self.profile!r}; choose from {PROFILES}")
        k = self.mollifier_index()
        if k ** (self.s + 2.0) * self.R > self.budget() * (1 + 1e-12):
            raise ConfigurationError(
                f"recipe violates the budget: k^(s+2) R = {k ** (self.s + 2.0) * self.R:.4g} "
                f"> C0 (ln 1/eps)^alpha = {self.budget():.4g}")
        _check_R(self.grid, self.R)


def _fine_grid(grid: Grid) -> Grid:
    n = grid.n
    while grid.L / n > FINE_SPACING * (1 + 1e-12):
        n *= 2
    return Grid(n, grid.L)


def _restrict(hat_fine: np.ndarray, n_fine: int, n: int) -> np.ndarray:
    """Keep the coarse-resolvable Fourier modes (Nyquist dropped)."""
    half = n // 2
    out = np.zeros((n, half + 1), dtype=complex)
    rows = np.r_[0:half, n_fine - half + 1:n_fine]
    out[np.r_[0:half, n - half + 1:n], :half] = hat_fine[rows, :half]
    return out * (n / n_fine) ** 2


def _profile_vorticity(grid: Grid, recipe: DataRecipe) -> SpectralField:
    if recipe.profile == "lbmo_vortex":
        return lbmo_vortex(grid) * recipe.vortex_amplitude
    r = grid.radius()
    if recipe.profile == "smooth_patch":
        vals = (r <= 0.8).astype(float)
    else:
        x1, x2 = grid.coords()
        rp = np.hypot(x1, x2 - 0.5)
        rm = np.hypot(x1, x2 + 0.5)
        vals = 1.5 * (np.exp(-(rp / 0.35) ** 2) - np.exp(-(rm / 0.35) ** 2))
    vals = recipe.vortex_amplitude * (vals - vals.mean())
    return SpectralField(grid, values=vals)


@dataclass(frozen=True)
class InitialData:
    v: VectorField
    c: SpectralField
    recipe: DataRecipe
    k: float
    info: dict = field(default_factory=dict)

    @property
    def omega(self) -> SpectralField:
        return curl2d(self.v)

    def hs_norm(self, s: float) -> float:
        return math.sqrt(sobolev_norm(self.v.v1, s) ** 2 + sobolev_norm(self.v.v2, s) ** 2
                         + sobolev_norm(self.c, s) ** 2)


def ill_prepared_family(recipe: DataRecipe) -> InitialData:
    """Mollified, truncated vortex velocity plus O(1) acoustic data.

    The vortex part is generated on an auxiliary grid with h <= 1/64, cut off,
    mollified there and then restricted spectrally to the target grid, where the
    2/3 dealiasing mask is applied.
    """
    recipe.check()
    grid = recipe.grid
    fine = _fine_grid(grid)
    k = recipe.mollifier_index()
    omega_f = _profile_vorticity(fine, recipe)
    v_f = biot_savart(omega_f)
    v_f = mollify_cutoff(v_f, k, recipe.R)
    t = grid.tables
    mask = t.dealias
    h1 = _restrict(v_f.v1.hat, fine.n, grid.n) * mask
    h2 = _restrict(v_f.v2.hat, fine.n, grid.n) * mask
    h1[0, 0] = 0.0
    h2[0, 0] = 0.0
    v = VectorField.from_hats(grid, h1, h2)
    x1, x2 = grid.coords()
    xc = recipe.acoustic_center
    ra = np.hypot(x1 - xc[0], x2 - xc[1]) / recipe.acoustic_width
    prof = SpectralField(grid, values=np.exp(-ra * ra))
    if recipe.well_prepared:
        v, _ = leray_decompose(v)
        c = SpectralField.zeros(grid)
    else:
        gq = gradient(prof)
        v = v + VectorField.from_hats(grid, gq.v1.hat * recipe.compressive_amplitude * mask,
                                      gq.v2.hat * recipe.compressive_amplitude * mask)
        ch = prof.hat * recipe.acoustic_amplitude * mask
        if recipe.noise_amplitude > 0:
            rng = np.random.default_rng(recipe.seed)
            noise = np.fft.rfft2(rng.standard_normal((grid.n, grid.n)))
            noise *= np.exp(-t.ksq / 8.0) * mask
            nv = np.fft.irfft2(noise, s=(grid.n, grid.n))
            ch = ch + noise * (recipe.noise_amplitude / max(np.abs(nv).max(), 1e-300))
        ch[0, 0] = 0.0
        c = SpectralField(grid, hat=ch)
    return InitialData(v, c, recipe, k, {"fine_n": fine.n})


def with_epsilon(recipe: DataRecipe, eps: float) -> DataRecipe:
    return replace(recipe, epsilon=eps)
