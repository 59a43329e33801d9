"""Epsilon sweeps, convergence and lifespan reports, CSV and SVG emission."""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from machlab.compressible import RECORD_COLUMNS, CompressibleState, SolverConfig, simulate
from machlab.config import RunConfig
from machlab.errors import ConfigurationError, RangeError
from machlab.funcspaces.classf import ClassF, from_selector, osgood_M
from machlab.incompressible import simulate_reference
from machlab.initial_data import ill_prepared_family
from machlab.spectral import Grid, VectorField, curl2d, leray_decompose, lp_norm

FLOAT_FORMAT = "%.10e"
MIN_FIT_POINTS = 4
MAX_RESIDUAL = 0.5

SUMMARY_COLUMNS = ("epsilon", "steps", "t_final", "blowup_time", "omega_err_l2", "pv_err_linf", "weak_div",
                   "V_eps", "W_eps", "div_l1_linf", "qv_l4_linf", "rho_eps", "energy_ratio")
CONVERGENCE_COLUMNS = ("epsilon", "t", "q", "omega_err_lq", "pv_err_linf", "pv_err_w1r", "r")
SLOPE_COLUMNS = ("law", "slope", "residual", "points", "status")
LIFESPAN_COLUMNS = ("epsilon", "measured", "window", "predicted_lower_bound", "statement")
FITTED_LAWS = ("omega_err_l2", "pv_err_linf", "weak_div", "div_l1_linf", "qv_l4_linf")


@dataclass
class EpsilonResult:
    epsilon: float
    rows: list
    steps: int
    blowup_time: float | None
    blowup_message: str
    t_final: float
    v_final: np.ndarray  # (2, n, n)
    c_final: np.ndarray


@dataclass
class SweepReport:
    config: RunConfig
    results: list = field(default_factory=list)  # EpsilonResult in decreasing epsilon
    reference_omega: np.ndarray | None = None
    reference_velocity: np.ndarray | None = None
    reference_t: float = 0.0

    @property
    def epsilons(self) -> list[float]:
        return [r.epsilon for r in self.results]

    @property
    def grid(self) -> Grid:
        return Grid(self.config.n, self.config.L)


def solver_config(cfg: RunConfig) -> SolverConfig:
    return SolverConfig(dt_safety=cfg.dt_safety, dt_max=cfg.dt_max, blowup_threshold=cfg.blowup_threshold,
                        s=cfg.s, p=cfg.p)


def initial_state(cfg: RunConfig, epsilon: float) -> CompressibleState:
    data = ill_prepared_family(cfg.recipe(epsilon))
    return CompressibleState(data.v, data.c, epsilon, cfg.gamma_bar)


def run_single(cfg: RunConfig, epsilon: float) -> EpsilonResult:
    """One compressible run; module-level so a process pool can pickle it."""
    rec = simulate(initial_state(cfg, epsilon), cfg.T, cfg.sample_stride, solver_config(cfg))
    fs = rec.final_state
    return EpsilonResult(epsilon, rec.rows, rec.steps, rec.blowup_time, rec.blowup_message, fs.t,
                         np.array(fs.v.values), np.array(fs.c.values))


def run_reference(cfg: RunConfig) -> tuple[np.ndarray, np.ndarray, float]:
    """Incompressible run from the curl of the epsilon-independent vortex part."""
    data = ill_prepared_family(replace(cfg.recipe(cfg.epsilons[0]), well_prepared=True))
    traj = simulate_reference(curl2d(data.v), cfg.T, sample_stride=10**9, dt_max=cfg.dt_max,
                              safety=cfg.dt_safety, ball_norms=False, keep_states=False)
    st = traj.final
    return np.array(st.omega.values), np.array(st.velocity().values), st.t


def run_sweep(cfg: RunConfig, threads: int | None = None) -> SweepReport:
    """Compressible runs for every epsilon (in parallel when threads > 1) plus one reference run.

    Blow-ups are recorded per epsilon and the sweep continues. Results are
    ordered by the configured epsilon list, so the report does not depend on
    scheduling.
    """
    cfg.validate()
    threads = threads or cfg.threads
    eps = list(cfg.epsilons)
    if threads > 1 and len(eps) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(eps))) as pool:
            futures = [pool.submit(run_single, cfg, e) for e in eps]
            ref = run_reference(cfg)
            results = [f.result() for f in futures]
    else:
        results = [run_single(cfg, e) for e in eps]
        ref = run_reference(cfg)
    return SweepReport(cfg, results, ref[0], ref[1], ref[2])


def _final(res: EpsilonResult, name: str) -> float:
    return float(res.rows[-1][RECORD_COLUMNS.index(name)])


def _pv_error(report: SweepReport, res: EpsilonResult):
    g = report.grid
    pv, _ = leray_decompose(VectorField.from_values(g, res.v_final[0], res.v_final[1]))
    return pv.values - report.reference_velocity


def summary_rows(report: SweepReport) -> list[tuple]:
    g = report.grid
    rows = []
    for res in report.results:
        finished = res.blowup_time is None
        w = curl2d(VectorField.from_values(g, res.v_final[0], res.v_final[1])).values
        om = lp_norm(w - report.reference_omega, g, 2) if finished else float("nan")
        pe = float(np.abs(_pv_error(report, res)).max()) if finished else float("nan")
        rows.append((res.epsilon, res.steps, res.t_final, float("nan") if finished else res.blowup_time, om, pe,
                     abs(_final(res, "weak_div")), _final(res, "V_eps"), _final(res, "W_eps"),
                     _final(res, "div_l1_linf"), _final(res, "qv_l4_linf"), _final(res, "rho_eps"),
                     _final(res, "energy_ratio")))
    return rows


@dataclass(frozen=True)
class SlopeFit:
    law: str
    slope: float
    residual: float
    points: int
    status: str  # ok, inconclusive, n/a


def fit_slope(law: str, x, y) -> SlopeFit:
    """Least-squares slope of log y against log x, with the >= 4 points and residual rules."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    keep = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
    x, y = x[keep], y[keep]
    if len(x) < MIN_FIT_POINTS:
        return SlopeFit(law, float("nan"), float("nan"), len(x), "n/a")
    lx, ly = np.log(x), np.log(y)
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = float(np.sqrt(np.mean((ly - A @ coef) ** 2)))
    return SlopeFit(law, float(coef[0]), res, len(x), "inconclusive" if res > MAX_RESIDUAL else "ok")


def fitted_slopes(report: SweepReport) -> list[SlopeFit]:
    rows = summary_rows(report)
    eps = [r[0] for r in rows]
    return [fit_slope(law, eps, [r[SUMMARY_COLUMNS.index(law)] for r in rows]) for law in FITTED_LAWS]


def w1r_norm(a: np.ndarray, grid: Grid, r: float) -> float:
    """||a||_{L^r} + ||grad a||_{L^r} summed over the components of a (2, n, n)."""
    tot = 0.0
    t = grid.tables
    for comp in a:
        h = np.fft.rfft2(comp)
        d1 = np.fft.irfft2(1j * t.k1d * h, s=(grid.n, grid.n))
        d2 = np.fft.irfft2(1j * t.k2d * h, s=(grid.n, grid.n))
        tot += lp_norm(comp, grid, r) + lp_norm(np.hypot(d1, d2), grid, r)
    return tot


def convergence_report(report: SweepReport, t: float, q: float, r: float | None = None) -> list[tuple]:
    """Per-epsilon ||omega_eps - omega||_{L^q}, ||Pv_eps - v||_{L^inf} and ||Pv_eps - v||_{W^{1,r}} at time t.

    Only the final time of the sweep is stored, so t must equal it.
    ``r`` defaults to the lower endpoint 2p/(2-p).
    """
    cfg = report.config
    if q < cfg.p:
        raise ConfigurationError(f"q={q} is below p={cfg.p}")
    r_min = 2 * cfg.p / (2 - cfg.p)
    r = r_min if r is None else r
    if r < r_min * (1 - 1e-12):
        raise ConfigurationError(f"r={r} is below the lower endpoint 2p/(2-p)={r_min}")
    shortest = min((res.t_final for res in report.results), default=0.0)
    if t > shortest + 1e-9:
        raise RangeError(f"t={t} is beyond the shortest trajectory (ends at {shortest})")
    if abs(t - report.reference_t) > 1e-9:
        raise RangeError(f"t={t} is not a stored report time (only t={report.reference_t})")
    g = report.grid
    rows = []
    for res in report.results:
        w = curl2d(VectorField.from_values(g, res.v_final[0], res.v_final[1])).values
        diff = _pv_error(report, res)
        rows.append((res.epsilon, t, q, lp_norm(w - report.reference_omega, g, q), float(np.abs(diff).max()),
                     w1r_norm(diff, g, r), r))
    return rows


@dataclass(frozen=True)
class LifespanRow:
    epsilon: float
    measured: str
    window: float
    predicted: float
    statement: str


def predicted_lifespan(F: ClassF, epsilon: float, alpha: float, C0: float, C: float = 1.0) -> float:
    """(1/C0) M((1 - alpha) ln ln 1/eps); zero when ln ln 1/eps <= 0."""
    F.require_class_f()
    x = (1.0 - alpha) * math.log(math.log(1.0 / epsilon)) if epsilon < math.exp(-1.0) else 0.0
    return osgood_M(F, C, max(x, 0.0)) / C0


def lifespan_probe(report: SweepReport, epsilons=None) -> list[LifespanRow]:
    """Measured blow-up times (or the clean window) next to the Osgood lower bound.

    Weights outside class F' have M bounded, so the bound no longer grows with
    1/eps; the row then states the epsilon-independent existence time instead.
    """
    cfg = report.config
    F = from_selector(cfg.F).verified()
    measured = {r.epsilon: r for r in report.results}
    eps_all = sorted(set(list(epsilons or []) + list(measured)), reverse=True)
    rows = []
    for e in eps_all:
        res = measured.get(e)
        if res is None:
            meas, window = "not simulated", float("nan")
        elif res.blowup_time is not None:
            meas, window = f"blow-up at t={res.blowup_time:.6g}", res.blowup_time
        else:
            meas, window = f"no blow-up within T={cfg.T:g}", cfg.T
        if F.is_class_F_prime:
            pred = predicted_lifespan(F, e, cfg.alpha, cfg.lifespan_C0, cfg.osgood_C)
            stmt = "Osgood lower bound (1/C0) M((1-alpha) ln ln 1/eps)"
        else:
            pred = float("nan")
            stmt = "weight not in F': existence on an epsilon-independent interval [0, T0]"
        rows.append(LifespanRow(e, meas, window, pred, stmt))
    return rows


# --- emission -----------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FORMAT % v if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    return str(v)


def write_csv(path: str, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _ensure_dir(out_dir: str):
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(f"cannot create output directory {out_dir}: {exc}") from exc
    if not os.access(out_dir, os.W_OK):
        raise ConfigurationError(f"output directory {out_dir} is not writable")


def plot_law(path: str, law: str, eps, values, fit: SlopeFit) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "machlab"
    fig, ax = plt.subplots(figsize=(5, 4))
    eps = np.asarray(eps, float)
    vals = np.asarray(values, float)
    ok = (eps > 0) & (vals > 0) & np.isfinite(vals)
    ax.loglog(eps[ok], vals[ok], "o", label=law)
    if fit.status != "n/a":
        lx = np.log(eps[ok])
        icpt = float(np.mean(np.log(vals[ok]) - fit.slope * lx))
        xs = np.array([eps[ok].min(), eps[ok].max()])
        ax.loglog(xs, np.exp(icpt) * xs**fit.slope, "-",
                  label=f"slope {fit.slope:.3f} (res {fit.residual:.2f}, {fit.status})")
    else:
        ax.set_title("slope n/a")
    ax.set_xlabel("epsilon")
    ax.set_ylabel(law)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def trajectory_rows(report: SweepReport) -> list[tuple]:
    return [(res.epsilon,) + tuple(row) for res in report.results for row in res.rows]


def emit_report(report: SweepReport, out_dir: str, formats=("csv", "svg")) -> list[str]:
    """Write the sweep tables (CSV) and one log-log plot per fitted law (SVG). Returns the paths."""
    _ensure_dir(out_dir)
    written = []
    if "csv" in formats:
        tables = {
            "summary.csv": (SUMMARY_COLUMNS, summary_rows(report) if report.results else []),
            "trajectories.csv": (("epsilon",) + RECORD_COLUMNS, trajectory_rows(report)),
            "slopes.csv": (SLOPE_COLUMNS, [(f.law, f.slope, f.residual, f.points, f.status)
                                           for f in fitted_slopes(report)] if report.results else []),
        }
        if report.results:
            # blown-up runs never reach the report time; their blow-up is in the summary
            finished = replace(report, results=[r for r in report.results if r.blowup_time is None])
            conv = []
            if finished.results:
                for q in report.config.q:
                    conv.extend(convergence_report(finished, report.reference_t, q))
            tables["convergence.csv"] = (CONVERGENCE_COLUMNS, conv)
            tables["lifespan.csv"] = (LIFESPAN_COLUMNS, [(r.epsilon, r.measured, r.window, r.predicted, r.statement)
                                                         for r in lifespan_probe(report)])
        else:
            tables["convergence.csv"] = (CONVERGENCE_COLUMNS, [])
            tables["lifespan.csv"] = (LIFESPAN_COLUMNS, [])
        for name, (cols, rows) in tables.items():
            path = os.path.join(out_dir, name)
            write_csv(path, cols, rows)
            written.append(path)
    if "svg" in formats and report.results:
        rows = summary_rows(report)
        eps = [r[0] for r in rows]
        for fit in fitted_slopes(report):
            vals = [r[SUMMARY_COLUMNS.index(fit.law)] for r in rows]
            path = os.path.join(out_dir, f"{fit.law}.svg")
            plot_law(path, fit.law, eps, vals, fit)
            written.append(path)
    return written


def write_resolved_config(cfg: RunConfig, out_dir: str) -> str:
    _ensure_dir(out_dir)
    path = os.path.join(out_dir, "resolved.cfg")
    with open(path, "w") as fh:
        fh.write(cfg.dumps())
    return path


__all__ = [
    "EpsilonResult",
    "SweepReport",
    "SlopeFit",
    "LifespanRow",
    "run_single",
    "run_reference",
    "run_sweep",
    "summary_rows",
    "fit_slope",
    "fitted_slopes",
    "convergence_report",
    "predicted_lifespan",
    "lifespan_probe",
    "emit_report",
    "write_csv",
    "write_resolved_config",
]
