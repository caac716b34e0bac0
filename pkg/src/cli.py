# cli.py – batch entry point: verify, simulate, check-reduction
"""Command-line driver for identity campaigns, trajectories and reduction checks.
----------------------------------------------------------------
* python src/cli.py verify --config run.json --out results/
* python src/cli.py simulate --config run.json [--seed 7] [--xlsx]
* python src/cli.py check-reduction --config run.json
* simulate writes snapshots/state_NNNNN.json for every recorded state
* exit codes: 0 pass, 1 scientific failure, 2 usage or config error
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from axioms import SamplePlan, run_scalar_suite, run_suite
from config import EnvSettings, RunConfig
from dynamics import TrajectoryConfig, constraint_drift, integrate, rank1_drift
from errors import ConfigError, DimensionMismatch, LaxTopError, NotRankOne, SingularConfiguration
from lax import (
    RANK_ONE_TOL,
    PhaseState,
    build_L,
    build_M,
    eom_rhs,
    lax_residual,
    rank1_check,
    rank1_eom,
    rank1_state,
    random_state,
    residues,
    spin_rs_gauge,
    spin_rs_L,
    spin_rs_M,
    spin_rs_rhs,
    top_L,
    top_M,
    top_rhs,
)
from reports import load_state, save_state, trajectory_frame, write_csv, write_report, write_xlsx
from rmatrix import RESIDUE_TOL, provider_for
from tensorops import matnorm

logger = logging.getLogger("laxtops")

# ───────── constants ─────────
EXIT_OK     = 0
EXIT_FAIL   = 1
EXIT_CONFIG = 2

SNAPSHOT_DIR = "snapshots"


# ───────── helpers ─────────
def initial_state(cfg: RunConfig) -> PhaseState:
    """Seeded random or rank-one state, or a snapshot file checked against N and M."""
    ctx = cfg.context()
    if cfg.initial_mode == "random":
        return random_state(cfg.n, cfg.m, cfg.eta, cfg.seed, cfg.spin_scale, ctx=ctx)
    if cfg.initial_mode == "rank1":
        return rank1_state(cfg.n, cfg.m, cfg.eta, cfg.seed, cfg.spin_scale, ctx=ctx)
    try:
        state = load_state(cfg.initial_path)
    except FileNotFoundError as exc:
        raise ConfigError(f"initial state file not found: {cfg.initial_path}") from exc
    except (ValueError, DimensionMismatch) as exc:
        raise ConfigError(f"unreadable initial state {cfg.initial_path}: {exc}") from exc
    if (state.n, state.m) != (cfg.n, cfg.m):
        raise ConfigError(f"state file has N={state.n} M={state.m}, config says N={cfg.n} M={cfg.m}")
    return state


def _comparison(name: str, residual: float, tolerance: float) -> dict:
    row = {"check": name, "residual": float(residual), "tolerance": tolerance,
           "pass": bool(residual < tolerance)}
    level = logging.INFO if row["pass"] else logging.WARNING
    logger.log(level, "%-28s residual=%.3e %s", name, residual, "PASS" if row["pass"] else "FAIL")
    return row


def _out_dir(cfg: RunConfig) -> Path:
    path = Path(cfg.output)
    path.mkdir(parents=True, exist_ok=True)
    return path


# ───────── verify ─────────
def cmd_verify(cfg: RunConfig, env: EnvSettings | None = None, xlsx: bool = False) -> int:
    env = env or EnvSettings()
    out = _out_dir(cfg)
    ctx = cfg.context()
    plan = SamplePlan(seed=cfg.seed, count=cfg.samples,
                      tolerance=cfg.tolerances["identity"], threads=env.threads)
    logger.info("verify: regime=%s N=%d samples=%d threads=%d", ctx.regime.value, cfg.n, plan.count, plan.workers)

    provider = provider_for(ctx, cfg.n)
    reports = run_suite(provider, plan)
    if cfg.n > 1:
        reports.extend(run_scalar_suite(ctx, plan))
    calibration = getattr(provider, "calibration", None)

    passed = all(r.passed for r in reports)
    body = {"provider": provider.name, "passed": passed, "identities": reports}
    if calibration is not None:
        body["calibration"] = calibration
    write_report(out / "verify.json", "verify", cfg.to_dict(), body)
    if xlsx:
        tables = {"identities": [r.to_dict() for r in reports]}
        if calibration is not None:
            tables["calibration"] = calibration.rows
        write_xlsx(out / "verify.xlsx", tables)
    logger.info("verify: %d/%d identities pass", sum(r.passed for r in reports), len(reports))
    return EXIT_OK if passed else EXIT_FAIL


# ───────── simulate ─────────
def cmd_simulate(cfg: RunConfig, env: EnvSettings | None = None, xlsx: bool = False) -> int:
    out = _out_dir(cfg)
    ctx = cfg.context()
    state = initial_state(cfg)
    if cfg.rank1 and rank1_check(state) > RANK_ONE_TOL:
        raise NotRankOne(f"initial state has rank-one defect {rank1_check(state):.3e}")
    provider = provider_for(ctx, cfg.n)
    traj_cfg = TrajectoryConfig(cfg.dt, cfg.steps, cfg.z_samples, cfg.orders, cfg.record_every)
    save_state(out / "state_initial.json", state)

    try:
        traj, report = integrate(provider, state, traj_cfg)
    except SingularConfiguration as exc:
        logger.error("simulate: %s", exc)
        write_report(out / "conservation.json", "simulate", cfg.to_dict(), {
            "passed": False,
            "singular": {"time": exc.time, "pair": exc.pair, "detail": str(exc)},
        })
        return EXIT_FAIL

    tol = cfg.tolerances["conservation"]
    passed = report.max_relative < tol
    body = {
        "provider": provider.name,
        "passed": passed,
        "steps": cfg.steps,
        "dt": cfg.dt,
        "max_relative_drift": report.max_relative,
        "tolerance": tol,
        "constraint_drift": constraint_drift(traj),
        "conservation": report.rows(),
    }
    if cfg.rank1:
        body["rank1_drift"] = {"max_defect": rank1_drift(traj), "initial": traj.rank1[0],
                               "final": traj.rank1[-1]}

    frame = trajectory_frame(traj, traj_cfg.z_samples, traj_cfg.orders)
    write_csv(out / "trajectory.csv", frame)
    for idx, recorded in enumerate(traj.states):
        save_state(out / SNAPSHOT_DIR / f"state_{idx:05d}.json", recorded)
    save_state(out / "state_final.json", traj.states[-1])
    write_report(out / "conservation.json", "simulate", cfg.to_dict(), body)
    if xlsx:
        write_xlsx(out / "simulate.xlsx", {"conservation": report.rows(), "trajectory": frame})
    return EXIT_OK if passed else EXIT_FAIL


# ───────── check-reduction ─────────
def _spin_rs_rows(provider, state: PhaseState, z_samples, tol: float) -> list[dict]:
    ctx = provider.ctx
    d_m, d_s = spin_rs_gauge(ctx, state)
    l_worst = max(matnorm(build_L(provider, state, z).assemble() - spin_rs_L(ctx, state, z)) for z in z_samples)
    m_worst = max(matnorm(build_M(provider, state, z).assemble() - (spin_rs_M(ctx, state, z) + d_m))
                  for z in z_samples)
    _, ds = eom_rhs(provider, state)
    s_worst = matnorm(ds[:, :, 0, 0] - (spin_rs_rhs(ctx, state) + d_s))
    return [_comparison("spin_rs.L", l_worst, tol), _comparison("spin_rs.M", m_worst, tol),
            _comparison("spin_rs.eom", s_worst, tol)]


def _top_rows(provider, state: PhaseState, z_samples, tol: float) -> list[dict]:
    l_worst = max(matnorm(build_L(provider, state, z).assemble() - top_L(provider, state, z)) for z in z_samples)
    m_worst = max(matnorm(build_M(provider, state, z).assemble() - top_M(provider, state, z)) for z in z_samples)
    _, ds = eom_rhs(provider, state)
    s_worst = matnorm(ds[0, 0] - top_rhs(provider, state))
    return [_comparison("top.L", l_worst, tol), _comparison("top.M", m_worst, tol),
            _comparison("top.eom", s_worst, tol)]


def _rank1_rows(provider, state: PhaseState, tol: float) -> list[dict]:
    _, ds = eom_rhs(provider, state)
    _, ds_diag = rank1_eom(provider, state)
    general = np.stack([ds[i, i] for i in range(state.m)])
    qddot = np.trace(general, axis1=1, axis2=2)
    return [_comparison("rank1.eom", matnorm(ds_diag - general), tol),
            _comparison("rank1.qddot", matnorm(np.trace(ds_diag, axis1=1, axis2=2) - qddot), tol)]


def cmd_check_reduction(cfg: RunConfig, env: EnvSettings | None = None, xlsx: bool = False) -> int:
    out = _out_dir(cfg)
    ctx = cfg.context()
    state = initial_state(cfg)
    provider = provider_for(ctx, cfg.n)
    tol = cfg.tolerances["lax"]
    rows = []

    res_l, res_m = residues(provider, state)
    s_full = state.spin.assemble()
    rows.append(_comparison("residue.L", matnorm(res_l - s_full), RESIDUE_TOL))
    rows.append(_comparison("residue.M", matnorm(res_m + s_full), RESIDUE_TOL))
    rows.append(_comparison("lax_equation", max(lax_residual(provider, state, z) for z in cfg.z_samples), tol))

    if cfg.n == 1:
        rows.extend(_spin_rs_rows(provider, state, cfg.z_samples, tol))
    if cfg.m == 1:
        rows.extend(_top_rows(provider, state, cfg.z_samples, tol))
    if cfg.m > 1 and (cfg.rank1 or rank1_check(state) <= RANK_ONE_TOL):
        rows.extend(_rank1_rows(provider, state, tol))
    elif cfg.m > 1:
        logger.info("rank-one comparison skipped: state is not rank one")

    passed = all(row["pass"] for row in rows)
    write_report(out / "reduction.json", "check-reduction", cfg.to_dict(),
                 {"provider": provider.name, "passed": passed, "comparisons": rows})
    if xlsx:
        write_xlsx(out / "reduction.xlsx", {"comparisons": rows})
    return EXIT_OK if passed else EXIT_FAIL


COMMANDS = {
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "check-reduction": cmd_check_reduction,
}


# ───────── entry point ─────────
def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog="laxtops", description="Relativistic interacting tops: "
                                     "R-matrix identities, Lax dynamics and reductions.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--seed", type=int, default=None, help="seed (overrides config)")
        p.add_argument("--xlsx", action="store_true", help="also write an Excel summary")
        p.add_argument("--verbose", action="store_true", help="DEBUG logging")
    return parser.parse_args(argv)


def main(argv: Sequence[str] | None = None) -> int:
    args = parse_args(argv)
    env = EnvSettings()
    level = env.log_level if env.is_valid() else logging.INFO
    logging.basicConfig(level=logging.DEBUG if args.verbose else level,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    if not env.is_valid():
        logger.error("invalid environment: LAXTOP_THREADS=%r LAXTOP_LOG_LEVEL=%r", env.threads_raw, env.log_level)
        return EXIT_CONFIG

    try:
        cfg = RunConfig.from_json(args.config).with_overrides(seed=args.seed, output=args.out)
    except ConfigError as exc:
        logger.error("config: %s", exc)
        return EXIT_CONFIG

    handler = COMMANDS[args.command]
    try:
        return handler(cfg, env=env, xlsx=args.xlsx)
    except ConfigError as exc:
        logger.error("config: %s", exc)
        return EXIT_CONFIG
    except LaxTopError as exc:
        logger.error("%s failed: %s: %s", args.command, type(exc).__name__, exc)
        return EXIT_FAIL
    except Exception:
        logger.exception("%s: unexpected failure", args.command)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
