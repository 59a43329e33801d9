"""Command line: machlab simulate|sweep|norms|flowmap|compare.

Exit codes: 0 success, 2 blow-up detected (reports still written), 1 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from machlab.errors import ConfigurationError, MachlabError

log = logging.getLogger("machlab")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BLOWUP = 2


def _set_threads(n: int):
    # limits BLAS pools; the FFTs used here are single threaded
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(n))


def cmd_simulate(cfg, out: str, incompressible: bool) -> int:
    from machlab.compressible import RECORD_COLUMNS, simulate
    from machlab.fieldio import write_field
    from machlab.harness import initial_state, solver_config, write_csv, write_resolved_config
    from machlab.incompressible import REFERENCE_COLUMNS, simulate_reference
    from machlab.funcspaces.classf import from_selector
    from machlab.spectral import curl2d

    write_resolved_config(cfg, out)
    state = initial_state(cfg, cfg.epsilon)
    write_field(os.path.join(out, "omega0.field"), curl2d(state.v), "omega0")
    if incompressible:
        from machlab.errors import BlowUpError
        from machlab.spectral import leray_decompose

        pv, _ = leray_decompose(state.v)
        try:
            traj = simulate_reference(curl2d(pv), cfg.T, cfg.sample_stride, dt_max=cfg.dt_max,
                                      safety=cfg.dt_safety, p=cfg.p, F=from_selector(cfg.F).verified(),
                                      keep_states=False)
        except BlowUpError as exc:
            log.error("blow-up: %s", exc)
            return EXIT_BLOWUP
        write_csv(os.path.join(out, cfg.out_csv), REFERENCE_COLUMNS, traj.rows)
        write_field(os.path.join(out, "omega_final.field"), traj.final.omega, "omega")
        return EXIT_OK
    rec = simulate(state, cfg.T, cfg.sample_stride, solver_config(cfg), store_history=cfg.store_history)
    write_csv(os.path.join(out, cfg.out_csv), RECORD_COLUMNS, rec.rows)
    fs = rec.final_state
    write_field(os.path.join(out, "v1_final.field"), fs.v.v1, "v1")
    write_field(os.path.join(out, "v2_final.field"), fs.v.v2, "v2")
    write_field(os.path.join(out, "c_final.field"), fs.c, "c")
    write_field(os.path.join(out, "omega_final.field"), curl2d(fs.v), "omega")
    if rec.history is not None:
        rec.history.save(os.path.join(out, "history.npz"))
    if rec.blowup_time is not None:
        log.error("blow-up at t=%.6g: %s", rec.blowup_time, rec.blowup_message)
        return EXIT_BLOWUP
    return EXIT_OK


def cmd_sweep(cfg, out: str) -> int:
    from machlab.harness import emit_report, run_sweep, write_resolved_config

    write_resolved_config(cfg, out)
    report = run_sweep(cfg)
    emit_report(report, out)
    if any(r.blowup_time is not None for r in report.results):
        return EXIT_BLOWUP
    return EXIT_OK


NORM_COLUMNS = ("field", "norm", "value", "sampler_hash")


def cmd_norms(cfg, out: str) -> int:
    from machlab.fieldio import read_field
    from machlab.funcspaces.balls import BallSampler, ball_statistics, bmo_f_from_stats, bmo_from_stats, lmo_f_from_stats
    from machlab.funcspaces.classf import from_selector
    from machlab.harness import write_csv, write_resolved_config
    from machlab.littlewood_paley import besov_norm
    from machlab.spectral import lp_norm, sobolev_norm

    if not cfg.field:
        raise ConfigurationError("norms needs field=PATH in the config")
    write_resolved_config(cfg, out)
    rows = []
    F = from_selector(cfg.F).verified()
    for path in [cfg.field] + ([cfg.field_b] if cfg.field_b else []):
        f, name = read_field(path)
        g = f.grid
        sampler = BallSampler.default(g)
        st = ball_statistics(f, sampler)
        h = sampler.digest()
        vals = (("mean", f.mean(), ""), ("l2", lp_norm(f.values, g, 2), ""), (f"l{cfg.p:g}", lp_norm(f.values, g, cfg.p), ""),
                ("linf", float(np.abs(f.values).max()), ""), ("bmo", bmo_from_stats(st), h),
                (f"bmo_f[{F.name}]", bmo_f_from_stats(st, F), h), (f"lmo_f[{F.name}]", lmo_f_from_stats(st, F), h),
                (f"besov[{cfg.s:g},inf,inf]", besov_norm(f, cfg.s, np.inf, np.inf), ""),
                (f"h[{cfg.s:g}]", sobolev_norm(f, cfg.s), ""))
        rows.extend((name, k, v, hh) for k, v, hh in vals)
    write_csv(os.path.join(out, "norms.csv"), NORM_COLUMNS, rows)
    return EXIT_OK


PARTICLE_COLUMNS = ("x1", "x2", "psi1", "psi2", "jacobian", "div_integral")
FLOW_COLUMNS = ("t", "beta", "div_l1_linf", "jacobian_fraction", "jacobian_min", "jacobian_max", "holder_ratio",
                "pairs", "inclusion_fraction", "vacuous")


def cmd_flowmap(cfg, out: str) -> int:
    from machlab.compressible import VelocityHistory
    from machlab.flow import integrate_flow, jacobian_check, regularity_check, seed_lattice
    from machlab.harness import write_csv, write_resolved_config

    if not cfg.history:
        raise ConfigurationError("flowmap needs history=PATH (written by simulate with store_history=true)")
    if not os.path.exists(cfg.history):
        raise ConfigurationError(f"history file not found: {cfg.history}")
    write_resolved_config(cfg, out)
    hist = VelocityHistory.load(cfg.history)
    fm = integrate_flow(hist, seed_lattice(hist.grid, cfg.particles))
    t_end = float(fm.times[-1])
    X = fm.positions[-1]
    J = fm.jacobian(t_end)
    S = fm.seeds
    prow = [(S[i, j, 0], S[i, j, 1], X[i, j, 0], X[i, j, 1], J[i, j], fm.div_integral[-1][i, j])
            for i in range(S.shape[0]) for j in range(S.shape[1])]
    write_csv(os.path.join(out, "particles.csv"), PARTICLE_COLUMNS, prow)
    stride = max(1, (len(fm.times) - 1) // 4)
    brow = []
    for t in list(fm.times[stride::stride]) if len(fm.times) > 1 else []:
        jr = jacobian_check(fm, float(t))
        rr = regularity_check(fm, float(t))
        brow.append((float(t), rr.beta, float(fm.div_l1_linf[fm.index_of(float(t))]), jr.fraction_inside,
                     jr.min_jacobian, jr.max_jacobian, rr.holder_ratio, rr.pairs_checked, rr.inclusion_fraction,
                     rr.vacuous))
    write_csv(os.path.join(out, "flow_bounds.csv"), FLOW_COLUMNS, brow)
    return EXIT_OK


COMPARE_COLUMNS = ("name_a", "name_b", "l2_diff", "linf_diff", "relative_l2")


def cmd_compare(cfg, out: str) -> int:
    from machlab.fieldio import read_field
    from machlab.harness import write_csv, write_resolved_config
    from machlab.spectral import lp_norm

    if not cfg.field or not cfg.field_b:
        raise ConfigurationError("compare needs field=PATH and field_b=PATH")
    a, na = read_field(cfg.field)
    b, nb = read_field(cfg.field_b)
    if a.grid != b.grid:
        raise ConfigurationError("compared fields live on different grids")
    write_resolved_config(cfg, out)
    d = a.values - b.values
    l2 = lp_norm(d, a.grid, 2)
    ref = lp_norm(b.values, b.grid, 2)
    write_csv(os.path.join(out, "compare.csv"), COMPARE_COLUMNS,
              [(na, nb, l2, float(np.abs(d).max()), l2 / ref if ref > 0 else float("nan"))])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="machlab", description="Low Mach number limit laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("simulate", "one compressible (or incompressible) run"),
                            ("sweep", "epsilon sweep with convergence and lifespan reports"),
                            ("norms", "function-space norms of a field file"),
                            ("flowmap", "particle flow map of a stored velocity history"),
                            ("compare", "difference norms of two field files")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="PATH", help="key=value configuration file")
        p.add_argument("--out", metavar="DIR", default="machlab_out", help="output directory")
        p.add_argument("--seed", type=int, metavar="N", help="overrides the config seed")
        p.add_argument("--threads", type=int, metavar="N", help="worker processes for sweeps")
        if name == "simulate":
            p.add_argument("--incompressible", action="store_true", help="run the vorticity reference solver")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    from machlab.config import load_config

    try:
        cfg = load_config(args.config, seed=args.seed, threads=args.threads)
        _set_threads(cfg.threads)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.out, args.incompressible)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.out)
        if args.command == "norms":
            return cmd_norms(cfg, args.out)
        if args.command == "flowmap":
            return cmd_flowmap(cfg, args.out)
        return cmd_compare(cfg, args.out)
    except ConfigurationError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except MachlabError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
