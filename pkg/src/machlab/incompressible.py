"""Reference 2D incompressible Euler solver in vorticity form."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from machlab.errors import BlowUpError, PreconditionError
from machlab.funcspaces.balls import BallSampler, ball_statistics, bmo_f_from_stats, bmo_from_stats, log_lipschitz_norm
from machlab.funcspaces.classf import ClassF, one_plus_log
from machlab.spectral import Grid, SpectralField, VectorField, lp_norm

MEAN_TOL = 1e-10


@dataclass(frozen=True)
class VorticityState:
    omega: SpectralField
    t: float = 0.0

    def __post_init__(self):
        w = self.omega.values
        if abs(float(w.mean())) > MEAN_TOL * max(float(np.abs(w).max()), 1.0):
            raise PreconditionError("vorticity must have zero mean")

    @property
    def grid(self) -> Grid:
        return self.omega.grid

    def velocity(self) -> VectorField:
        v1h, v2h = _velocity_hats(self.omega.hat, self.grid)
        return VectorField.from_hats(self.grid, v1h, v2h)


def _velocity_hats(wh, grid: Grid):
    t = grid.tables
    # psi = -Delta^-1 omega, v = grad_perp psi = (d2 psi, -d1 psi)
    psi = wh * t.inv_kdsq
    return 1j * t.k2d * psi, -1j * t.k1d * psi


def _rhs(wh, grid: Grid):
    t = grid.tables
    n = grid.n
    v1h, v2h = _velocity_hats(wh, grid)
    v1, v2 = np.fft.irfft2(v1h, s=(n, n)), np.fft.irfft2(v2h, s=(n, n))
    w1 = np.fft.irfft2(1j * t.k1d * wh, s=(n, n))
    w2 = np.fft.irfft2(1j * t.k2d * wh, s=(n, n))
    return -np.fft.rfft2(v1 * w1 + v2 * w2) * t.dealias


def _rk4(wh, grid, dt):
    k1 = _rhs(wh, grid)
    k2 = _rhs(wh + 0.5 * dt * k1, grid)
    k3 = _rhs(wh + 0.5 * dt * k2, grid)
    k4 = _rhs(wh + dt * k3, grid)
    return wh + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def vorticity_cfl(state: VorticityState, safety: float = 0.5, dt_max: float = 0.01) -> float:
    vmax = float(np.max(state.velocity().magnitude()))
    if vmax <= 0:
        return dt_max
    return min(dt_max, safety / (state.grid.k_max() * vmax))


def vorticity_step(state: VorticityState, dt: float, blowup_threshold: float = 1e6) -> VorticityState:
    """RK4 on d_t omega = -v.grad omega with v = biot_savart(omega), dealiased."""
    g = state.grid
    wh = _rk4(state.omega.hat * g.tables.dealias, g, dt)
    if not np.all(np.isfinite(wh)):
        raise BlowUpError("non-finite vorticity", state.t + dt)
    wmax = float(np.abs(np.fft.irfft2(wh, s=(g.n, g.n))).max())
    if wmax > blowup_threshold:
        raise BlowUpError(f"|omega|_inf = {wmax:.3g} exceeds threshold", state.t + dt)
    return VorticityState(SpectralField(g, hat=wh), state.t + dt)


REFERENCE_COLUMNS = ("t", "omega_mean", "omega_l2", "omega_lp", "omega_inf", "omega_bmo", "omega_bmo_f", "v_ll",
                     "div_v_l2")


@dataclass
class ReferenceTrajectory:
    columns: tuple
    rows: list
    states: list = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    @property
    def final(self) -> VorticityState:
        return self.states[-1]


def simulate_reference(omega0: SpectralField, T: float, sample_stride: int = 1, dt_max: float = 0.01,
                       safety: float = 0.5, p: float = 1.5, F: ClassF | None = None,
                       ball_norms: bool = True, sampler: BallSampler | None = None,
                       keep_states: bool = True) -> ReferenceTrajectory:
    """Iterate ``vorticity_step`` to T, recording norms every ``sample_stride`` steps and at T.

    The time step is fixed per step by the CFL rule; the last step lands on T.
    """
    g = omega0.grid
    F = F or one_plus_log()
    if ball_norms:
        sampler = sampler or BallSampler.default(g)
    state = VorticityState(SpectralField(g, hat=omega0.hat * g.tables.dealias), 0.0)
    traj = ReferenceTrajectory(REFERENCE_COLUMNS, [])
    t_end = T

    def sample(st: VorticityState):
        w = st.omega.values
        v = st.velocity()
        div = np.fft.irfft2(1j * (g.tables.k1d * v.v1.hat + g.tables.k2d * v.v2.hat), s=(g.n, g.n))
        if ball_norms:
            stats = ball_statistics(st.omega, sampler)
            b, bf = bmo_from_stats(stats), bmo_f_from_stats(stats, F)
        else:
            b = bf = float("nan")
        traj.rows.append((st.t, float(w.mean()), lp_norm(w, g, 2), lp_norm(w, g, p), float(np.abs(w).max()), b, bf,
                          log_lipschitz_norm(v), lp_norm(div, g, 2)))
        if keep_states:
            traj.states.append(st)

    sample(state)
    nstep = 0
    while state.t < t_end - 1e-12:
        dt = min(vorticity_cfl(state, safety, dt_max), t_end - state.t)
        state = vorticity_step(state, dt)
        nstep += 1
        if nstep % sample_stride == 0 or state.t >= t_end - 1e-12:
            sample(state)
    if not keep_states:
        traj.states.append(state)
    return traj


def growth_rate(times: np.ndarray, values: np.ndarray) -> float:
    """Slope of log(values) against t, the exponent in a C e^{at} fit."""
    times = np.asarray(times, float)
    vals = np.asarray(values, float)
    if len(times) < 2 or np.any(vals <= 0):
        return float("nan")
    return float(np.polyfit(times, np.log(vals), 1)[0])


__all__ = [
    "VorticityState",
    "vorticity_step",
    "vorticity_cfl",
    "simulate_reference",
    "ReferenceTrajectory",
    "REFERENCE_COLUMNS",
    "growth_rate",
]
