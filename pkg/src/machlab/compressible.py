"""Rescaled isentropic compressible Euler on the torus.

    d_t v + v.grad v + (1/eps) grad c + gbar c grad c = 0
    d_t c + v.grad c + (1/eps) div v + gbar c div v = 0

The stiff acoustic part is propagated exactly in Fourier space through the
wave variables Gamma = Qv - i grad|D|^-1 c and Upsilon = |D|^-1 div v + i c,
which both evolve by exp(-i t |k| / eps). The nonlinear part is advanced by
RK4 inside a Strang splitting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special

from machlab.errors import AccuracyError, BlowUpError, PreconditionError
from machlab.littlewood_paley import besov_norm, build_partition
from machlab.funcspaces.balls import log_lipschitz_norm
from machlab.spectral import Grid, SpectralField, VectorField, lp_norm, sobolev_norm


@dataclass(frozen=True)
class CompressibleState:
    v: VectorField
    c: SpectralField
    epsilon: float
    gamma_bar: float
    t: float = 0.0

    def __post_init__(self):
        if self.v.grid != self.c.grid:
            raise PreconditionError("velocity and sound speed live on different grids")
        if not 0 < self.epsilon:
            raise PreconditionError("epsilon must be positive")

    @property
    def grid(self) -> Grid:
        return self.c.grid

    @classmethod
    def from_hats(cls, grid, v1h, v2h, ch, epsilon, gamma_bar, t=0.0) -> "CompressibleState":
        return cls(VectorField.from_hats(grid, v1h, v2h), SpectralField(grid, hat=ch), epsilon, gamma_bar, t)

    def hats(self):
        return self.v.v1.hat, self.v.v2.hat, self.c.hat


@dataclass(frozen=True)
class SolverConfig:
    dt_safety: float = 0.5
    dt_max: float = 0.01
    nonlinear: bool = True
    blowup_threshold: float = 1e4
    s: float = 0.5
    p: float = 1.5
    rho_constant: float = 1.0


def _irfft(h, n):
    return np.fft.irfft2(h, s=(n, n))


def _rhs_hats(v1h, v2h, ch, grid: Grid, gbar: float):
    """Dealiased (f, g) hats for dealiased inputs."""
    t = grid.tables
    n = grid.n
    ik1, ik2 = 1j * t.k1d, 1j * t.k2d
    v1, v2, c = _irfft(v1h, n), _irfft(v2h, n), _irfft(ch, n)
    d1v1, d2v1 = _irfft(ik1 * v1h, n), _irfft(ik2 * v1h, n)
    d1v2, d2v2 = _irfft(ik1 * v2h, n), _irfft(ik2 * v2h, n)
    d1c, d2c = _irfft(ik1 * ch, n), _irfft(ik2 * ch, n)
    f1 = -(v1 * d1v1 + v2 * d2v1) - gbar * c * d1c
    f2 = -(v1 * d1v2 + v2 * d2v2) - gbar * c * d2c
    g = -(v1 * d1c + v2 * d2c) - gbar * c * (d1v1 + d2v2)
    m = t.dealias
    return np.fft.rfft2(f1) * m, np.fft.rfft2(f2) * m, np.fft.rfft2(g) * m


def nonlinear_rhs(state: CompressibleState) -> tuple[VectorField, SpectralField]:
    g = state.grid
    f1, f2, gg = _rhs_hats(*state.hats(), g, state.gamma_bar)
    return VectorField.from_hats(g, f1, f2), SpectralField(g, hat=gg)


def _propagate_hats(v1h, v2h, ch, grid: Grid, dt: float, eps: float):
    t = grid.tables
    u = (t.k1d * v1h + t.k2d * v2h) * t.inv_kdabs
    p1 = v1h - t.k1d * t.inv_kdabs * u
    p2 = v2h - t.k2d * t.inv_kdabs * u
    theta = t.kdabs * (dt / eps)
    cs, sn = np.cos(theta), np.sin(theta)
    u_new = u * cs - 1j * ch * sn
    c_new = ch * cs - 1j * u * sn
    return p1 + t.k1d * t.inv_kdabs * u_new, p2 + t.k2d * t.inv_kdabs * u_new, c_new


def acoustic_propagator(state: CompressibleState, dt: float) -> CompressibleState:
    """Exact solution operator of the linear acoustic part over time dt."""
    g = state.grid
    v1h, v2h, ch = _propagate_hats(*state.hats(), g, dt, state.epsilon)
    return CompressibleState.from_hats(g, v1h, v2h, ch, state.epsilon, state.gamma_bar, state.t + dt)


def _full_kd(grid: Grid):
    n = grid.n
    m = np.fft.fftfreq(n, 1.0 / n)
    kd = np.where(np.abs(m) == n // 2, 0.0, m * 2 * np.pi / grid.L)
    k1, k2 = kd[:, None], kd[None, :]
    kabs = np.hypot(k1, k2)
    inv = np.zeros_like(kabs)
    inv[kabs > 0] = 1.0 / kabs[kabs > 0]
    return k1, k2, kabs, inv


def gamma_upsilon(state: CompressibleState) -> tuple[np.ndarray, np.ndarray]:
    """Complex wave variables in physical space: Gamma (2, n, n) and Upsilon (n, n)."""
    g = state.grid
    t = g.tables
    n = g.n
    v1h, v2h, ch = state.hats()
    u = (t.k1d * v1h + t.k2d * v2h) * t.inv_kdabs
    q1, q2 = _irfft(t.k1d * t.inv_kdabs * u, n), _irfft(t.k2d * t.inv_kdabs * u, n)
    b1, b2 = _irfft(1j * t.k1d * t.inv_kdabs * ch, n), _irfft(1j * t.k2d * t.inv_kdabs * ch, n)
    c = _irfft(ch, n)
    a = _irfft(1j * u, n)  # |D|^-1 div v
    gamma = np.stack([q1 - 1j * b1, q2 - 1j * b2])
    upsilon = a + 1j * c
    return gamma, upsilon


def state_from_wave_variables(pv: VectorField, gamma: np.ndarray, upsilon: np.ndarray, c_mean: float,
                              epsilon: float, gamma_bar: float, t: float = 0.0) -> CompressibleState:
    """Rebuild (v, c) from Pv, Gamma and Upsilon: Qv = Re Gamma, c = Im Upsilon + mean."""
    g = pv.grid
    v = VectorField.from_values(g, pv.v1.values + gamma[0].real, pv.v2.values + gamma[1].real)
    return CompressibleState(v, SpectralField(g, values=upsilon.imag + c_mean), epsilon, gamma_bar, t)


def propagate_wave_variables(gamma: np.ndarray, upsilon: np.ndarray, grid: Grid, dt: float, eps: float):
    """Multiply the full Fourier transforms of Gamma and Upsilon by exp(-i dt |k| / eps)."""
    _, _, kabs, _ = _full_kd(grid)
    ph = np.exp(-1j * kabs * (dt / eps))
    g2 = np.stack([np.fft.ifft2(np.fft.fft2(gamma[i]) * ph) for i in range(2)])
    return g2, np.fft.ifft2(np.fft.fft2(upsilon) * ph)


def wave_energy(state: CompressibleState) -> float:
    """l2 norm of the full coefficients of (Gamma, Upsilon)."""
    gamma, ups = gamma_upsilon(state)
    tot = sum(np.sum(np.abs(np.fft.fft2(gamma[i])) ** 2) for i in range(2)) + np.sum(np.abs(np.fft.fft2(ups)) ** 2)
    return float(np.sqrt(tot))


def _rk4_nonlinear(v1h, v2h, ch, grid, gbar, dt):
    k1 = _rhs_hats(v1h, v2h, ch, grid, gbar)
    k2 = _rhs_hats(v1h + 0.5 * dt * k1[0], v2h + 0.5 * dt * k1[1], ch + 0.5 * dt * k1[2], grid, gbar)
    k3 = _rhs_hats(v1h + 0.5 * dt * k2[0], v2h + 0.5 * dt * k2[1], ch + 0.5 * dt * k2[2], grid, gbar)
    k4 = _rhs_hats(v1h + dt * k3[0], v2h + dt * k3[1], ch + dt * k3[2], grid, gbar)
    w = dt / 6.0
    return (v1h + w * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            v2h + w * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
            ch + w * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]))


def _step_hats(v1h, v2h, ch, grid, eps, gbar, dt, nonlinear=True):
    v1h, v2h, ch = _propagate_hats(v1h, v2h, ch, grid, 0.5 * dt, eps)
    if nonlinear:
        v1h, v2h, ch = _rk4_nonlinear(v1h, v2h, ch, grid, gbar, dt)
    return _propagate_hats(v1h, v2h, ch, grid, 0.5 * dt, eps)


def _grad_inf(h1, h2, grid):
    t = grid.tables
    n = grid.n
    out = 0.0
    for h in (h1, h2):
        if h is None:
            continue
        out = max(out, float(np.max(np.abs(_irfft(1j * t.k1d * h, n)))), float(np.max(np.abs(_irfft(1j * t.k2d * h, n)))))
    return out


def step(state: CompressibleState, dt: float, config: SolverConfig = SolverConfig()) -> CompressibleState:
    """One Strang step: half acoustic, RK4 nonlinear, half acoustic."""
    g = state.grid
    v1h, v2h, ch = _step_hats(*state.hats(), g, state.epsilon, state.gamma_bar, dt, config.nonlinear)
    t_new = state.t + dt
    if not (np.all(np.isfinite(v1h)) and np.all(np.isfinite(v2h)) and np.all(np.isfinite(ch))):
        raise BlowUpError("non-finite state", t_new)
    gv = _grad_inf(v1h, v2h, g)
    if gv > config.blowup_threshold:
        raise BlowUpError(f"|grad v|_inf = {gv:.3g} exceeds threshold", t_new)
    return CompressibleState.from_hats(g, v1h, v2h, ch, state.epsilon, state.gamma_bar, t_new)


def cfl_dt(state: CompressibleState, safety: float = 0.5, dt_max: float = 0.01) -> float:
    """Nonlinear CFL time step; the 1/eps wave speed does not enter."""
    if not 0 < safety <= 1:
        raise PreconditionError("safety must lie in (0, 1]")
    speed = float(np.max(state.v.magnitude())) + state.gamma_bar * float(np.max(np.abs(state.c.values)))
    if speed <= 0:
        return dt_max
    return min(dt_max, safety / (state.grid.k_max() * speed))


RECORD_COLUMNS = (
    "t",
    "grad_v_inf",
    "grad_c_inf",
    "div_v_inf",
    "div_v_besov",
    "qv_inf",
    "c_inf",
    "omega_l2",
    "omega_lp",
    "omega_inf",
    "v_ll",
    "hs_norm",
    "energy_ratio",
    "V_eps",
    "W_eps",
    "rho_eps",
    "div_l1_linf",
    "qv_l4_linf",
    "weak_div",
)


@dataclass
class VelocityHistory:
    """Velocity snapshots for particle tracing, one per solver step."""

    grid: Grid
    times: np.ndarray
    velocity: np.ndarray  # (nt, 2, n, n)
    divergence: np.ndarray  # (nt, n, n)
    ll_norm: np.ndarray  # (nt,) log-Lipschitz estimate
    div_inf: np.ndarray  # (nt,)

    def save(self, path):
        np.savez_compressed(path, n=self.grid.n, L=self.grid.L, times=self.times, velocity=self.velocity,
                            divergence=self.divergence, ll_norm=self.ll_norm, div_inf=self.div_inf)

    @classmethod
    def load(cls, path) -> "VelocityHistory":
        with np.load(path) as z:
            grid = Grid(int(z["n"]), float(z["L"]))
            return cls(grid, z["times"], z["velocity"], z["divergence"], z["ll_norm"], z["div_inf"])


@dataclass
class TrajectoryRecord:
    columns: tuple
    rows: list
    final_state: CompressibleState | None = None
    blowup_time: float | None = None
    blowup_message: str = ""
    history: VelocityHistory | None = None
    snapshots: dict = field(default_factory=dict)  # t -> state at sample times
    steps: int = 0
    hs0: float = 0.0
    hs2_0: float = 0.0

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    @property
    def times(self) -> np.ndarray:
        return self.column("t")


def _test_function(grid: Grid) -> np.ndarray:
    x1, x2 = grid.coords()
    return np.fft.rfft2(np.exp(-(x1**2 + x2**2)))


def _inner(fh, gh, grid):
    t = grid.tables
    return float(np.sum(t.weights * (fh * np.conj(gh)).real)) * grid.cell_area / grid.n**2


def simulate(state0: CompressibleState, T: float, sample_stride: int = 1, config: SolverConfig = SolverConfig(),
             store_history: bool = False, keep_snapshots: bool = False, raise_on_blowup: bool = False) -> TrajectoryRecord:
    """Integrate to time T, sampling diagnostics every ``sample_stride`` steps and at T.

    Accumulators (V, W, the L1-Linf norm of div v, the L4-Linf norm of Qv and
    the weak pairing of div v with a fixed Gaussian) are updated every step by
    the trapezoid rule. On blow-up the record is returned with
    ``blowup_time`` set unless ``raise_on_blowup``.
    """
    g = state0.grid
    t = g.tables
    n = g.n
    eps, gbar = state0.epsilon, state0.gamma_bar
    part = build_partition(g)
    phi_h = _test_function(g)
    s = config.s
    eta = s / (4.0 * (2.0 * s + 3.0))

    def hs_pair(v1h, v2h, ch, order):
        tot = 0.0
        for h in (v1h, v2h, ch):
            tot += sobolev_norm(SpectralField(g, hat=h), order) ** 2
        return math.sqrt(tot)

    v1h, v2h, ch = (np.array(h) for h in state0.hats())
    hs0 = hs_pair(v1h, v2h, ch, s)
    hs2_0 = hs_pair(v1h, v2h, ch, s + 2.0)
    rec = TrajectoryRecord(RECORD_COLUMNS, [], hs0=hs0, hs2_0=hs2_0)
    hist_t, hist_v, hist_div, hist_ll, hist_dinf = [], [], [], [], []

    def quick(v1h, v2h, ch):
        v1, v2 = _irfft(v1h, n), _irfft(v2h, n)
        vf = VectorField.from_values(g, v1, v2)
        divh = 1j * (t.k1d * v1h + t.k2d * v2h)
        div = _irfft(divh, n)
        u = (t.k1d * v1h + t.k2d * v2h) * t.inv_kdabs
        qmag = np.hypot(_irfft(t.k1d * t.inv_kdabs * u, n), _irfft(t.k2d * t.inv_kdabs * u, n))
        return {
            "vf": vf,
            "div": div,
            "divh": divh,
            "grad_v_inf": _grad_inf(v1h, v2h, g),
            "grad_c_inf": _grad_inf(ch, None, g),
            "div_v_inf": float(np.abs(div).max()),
            "v_ll": log_lipschitz_norm(vf),
            "qv_inf": float(qmag.max()),
            "weak": _inner(divh, phi_h, g),
        }

    acc = {"V": 0.0, "W": 0.0, "D": 0.0, "Q4": 0.0, "weak": 0.0}

    def sample(tcur, v1h, v2h, ch, q):
        wh = 1j * (t.k1d * v2h - t.k2d * v1h)
        w = _irfft(wh, n)
        hs = hs_pair(v1h, v2h, ch, s)
        row = {
            "t": tcur,
            "grad_v_inf": q["grad_v_inf"],
            "grad_c_inf": q["grad_c_inf"],
            "div_v_inf": q["div_v_inf"],
            "div_v_besov": besov_norm(SpectralField(g, hat=q["divh"]), s / 3.0, np.inf, np.inf, partition=part),
            "qv_inf": q["qv_inf"],
            "c_inf": float(np.abs(_irfft(ch, n)).max()),
            "omega_l2": lp_norm(w, g, 2),
            "omega_lp": lp_norm(w, g, config.p),
            "omega_inf": float(np.abs(w).max()),
            "v_ll": q["v_ll"],
            "hs_norm": hs,
            "energy_ratio": hs / (hs0 * math.exp(acc["V"])) if hs0 > 0 else 0.0,
            "V_eps": acc["V"],
            "W_eps": acc["W"],
            "rho_eps": hs2_0 * (1.0 + tcur**1.75) * eps**eta * math.exp(config.rho_constant * acc["V"]),
            "div_l1_linf": acc["D"],
            "qv_l4_linf": acc["Q4"] ** 0.25,
            "weak_div": acc["weak"],
        }
        rec.rows.append(tuple(row[c] for c in RECORD_COLUMNS))
        if keep_snapshots:
            rec.snapshots[tcur] = CompressibleState.from_hats(g, v1h, v2h, ch, eps, gbar, tcur)

    tcur = state0.t
    q = quick(v1h, v2h, ch)
    if store_history:
        hist_t.append(tcur)
        hist_v.append(q["vf"].values)
        hist_div.append(q["div"])
        hist_ll.append(q["v_ll"])
        hist_dinf.append(q["div_v_inf"])
    sample(tcur, v1h, v2h, ch, q)
    nstep = 0
    t_end = state0.t + T
    while tcur < t_end - 1e-12:
        cur = CompressibleState.from_hats(g, v1h, v2h, ch, eps, gbar, tcur)
        dt = min(cfl_dt(cur, config.dt_safety, config.dt_max), t_end - tcur)
        try:
            nv1, nv2, nc = _step_hats(v1h, v2h, ch, g, eps, gbar, dt, config.nonlinear)
            if not (np.all(np.isfinite(nv1)) and np.all(np.isfinite(nv2)) and np.all(np.isfinite(nc))):
                raise BlowUpError("non-finite state", tcur + dt)
            qn = quick(nv1, nv2, nc)
            if not math.isfinite(qn["grad_v_inf"]) or qn["grad_v_inf"] > config.blowup_threshold:
                raise BlowUpError(f"|grad v|_inf = {qn['grad_v_inf']:.3g} exceeds threshold", tcur + dt)
        except BlowUpError as exc:
            rec.blowup_time = exc.time
            rec.blowup_message = str(exc)
            if raise_on_blowup:
                raise
            break
        half = 0.5 * dt
        acc["V"] += half * (q["grad_v_inf"] + q["grad_c_inf"] + qn["grad_v_inf"] + qn["grad_c_inf"])
        acc["W"] += half * (q["v_ll"] + qn["v_ll"])
        acc["D"] += half * (q["div_v_inf"] + qn["div_v_inf"])
        acc["Q4"] += half * (q["qv_inf"] ** 4 + qn["qv_inf"] ** 4)
        acc["weak"] += half * (q["weak"] + qn["weak"])
        v1h, v2h, ch, q = nv1, nv2, nc, qn
        tcur += dt
        nstep += 1
        if store_history:
            hist_t.append(tcur)
            hist_v.append(q["vf"].values)
            hist_div.append(q["div"])
            hist_ll.append(q["v_ll"])
            hist_dinf.append(q["div_v_inf"])
        if nstep % sample_stride == 0 or tcur >= t_end - 1e-12:
            sample(tcur, v1h, v2h, ch, q)
    rec.steps = nstep
    rec.final_state = CompressibleState.from_hats(g, v1h, v2h, ch, eps, gbar, tcur)
    if store_history:
        rec.history = VelocityHistory(g, np.array(hist_t), np.array(hist_v), np.array(hist_div),
                                      np.array(hist_ll), np.array(hist_dinf))
    return rec


# --- whole-space radial oracle -------------------------------------------------

@dataclass(frozen=True)
class DecayReport:
    times: np.ndarray
    sup_norms: np.ndarray
    exponent: float
    residual: float


def hankel0(values_r: np.ndarray, r: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """F(rho) = int_0^inf f(r) J0(rho r) r dr by the trapezoid rule on the given r grid."""
    w = np.full(r.shape, r[1] - r[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    return (special.j0(np.outer(rho, r)) * (values_r * r * w)).sum(axis=1)


@dataclass(frozen=True)
class RadialProfile:
    """Smooth compactly supported radial profile f(r) = bump(r / width)."""

    width: float = 2.0

    def __call__(self, r):
        r = np.asarray(r, dtype=float) / self.width
        out = np.zeros_like(r)
        inside = r < 1
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
        return out

    @property
    def support(self) -> float:
        return self.width


class RadialHalfWave:
    """e^{it|D|} on radial data in R^2 via the order-zero Hankel transform.

    phi(t, r) = int_0^inf F(rho) e^{i t rho} J0(rho r) rho drho,
    with F the Hankel transform of the profile, both by trapezoid quadrature.
    Raises AccuracyError when the truncated spectral tail is not negligible.
    """

    def __init__(self, profile, rho_max: float = 80.0, n_rho: int = 8000, n_r: int = 2000, tail_tol: float = 1e-3):
        self.profile = profile
        R = profile.support
        self.r_src = np.linspace(0.0, R, n_r)
        self.rho = np.linspace(0.0, rho_max, n_rho)
        self.F = hankel0(profile(self.r_src), self.r_src, self.rho)
        w = np.full(self.rho.shape, self.rho[1] - self.rho[0])
        w[0] *= 0.5
        w[-1] *= 0.5
        self.w = w
        # crude bound on the dropped part of the rho integral
        tail = np.abs(self.F[-n_rho // 20:]).max() * rho_max**2
        peak = float(np.abs(profile(np.array([0.0]))).max())
        if tail > tail_tol * peak:
            raise AccuracyError(f"spectral tail {tail:.2e} too large; raise rho_max")

    def evaluate(self, t: float, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if t == 0:
            return self.profile(r).astype(complex)
        kern = self.F * np.exp(1j * t * self.rho) * self.rho * self.w
        out = np.empty(len(r), dtype=complex)
        for s in range(0, len(r), 256):
            out[s:s + 256] = special.j0(np.outer(r[s:s + 256], self.rho)) @ kern
        return out

    def sup_norm(self, t: float, dr: float = 0.01) -> float:
        """Max |phi(t, r)| over the wavefront annulus |r - t| <= support + 1 and the core r <= 1.

        Outside these regions the solution is smaller by stationary phase.
        """
        R = self.profile.support
        lo = max(0.0, t - R - 1.0)
        r = np.arange(lo, t + R + 1.0, dr)
        if lo > 0:
            r = np.concatenate([np.arange(0.0, min(1.0, lo), dr), r])
        return float(np.abs(self.evaluate(t, r)).max())


def fit_power(x, y) -> tuple[float, float]:
    """Slope and RMS residual of the least-squares fit of log y against log x."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = ly - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(res**2)))


def radial_free_wave_decay(profile=None, t_list=None, p: float = np.inf, wave: RadialHalfWave | None = None) -> DecayReport:
    """Sup-norm of e^{it|D|} f over ``t_list`` and the fitted decay exponent."""
    if not np.isinf(p):
        raise NotImplementedError("only the L^inf decay is evaluated")
    profile = profile or RadialProfile()
    wave = wave or RadialHalfWave(profile)
    t_list = np.asarray(t_list if t_list is not None else np.geomspace(5.0, 50.0, 8), dtype=float)
    sups = np.array([wave.sup_norm(t) for t in t_list])
    positive = t_list > 0
    exp, res = fit_power(t_list[positive], sups[positive]) if positive.sum() >= 2 else (float("nan"), float("nan"))
    return DecayReport(t_list, sups, exp, res)


def l4_linf_scaling(eps_list, wave: RadialHalfWave, dtau: float = 0.2) -> tuple[np.ndarray, float, float]:
    """||e^{i t|D|/eps} f||_{L^4([0,1]; L^inf)} for each eps and its fitted exponent in eps.

    With tau = t/eps the norm is (eps int_0^{1/eps} sup_r |phi(tau)|^4 dtau)^{1/4};
    all eps share one fast-time grid.
    """
    eps_list = np.asarray(eps_list, dtype=float)
    tmax = 1.0 / eps_list.min()
    taus = np.union1d(np.linspace(0.0, min(5.0, tmax), 51), np.arange(5.0, tmax + 1e-9, dtau))
    taus = np.union1d(taus, 1.0 / eps_list)
    sups = np.array([wave.sup_norm(tau) for tau in taus])
    vals = []
    for eps in eps_list:
        m = taus <= 1.0 / eps + 1e-9
        vals.append((eps * np.trapezoid(sups[m] ** 4, taus[m])) ** 0.25)
    vals = np.array(vals)
    slope, res = fit_power(eps_list, vals)
    return vals, slope, res
