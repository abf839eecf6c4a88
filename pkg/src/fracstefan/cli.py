"""Command-line entry point and run orchestration.

    fracstefan run   --config run.yaml --out results/
    fracstefan audit --config run.yaml --seed 3
    fracstefan study --config run.yaml
    fracstefan limit --config run.yaml

Exit codes: 0 success, 1 audit failure, 2 solver failure, 3 config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .checks import (
    AuditReport,
    audit_extremum_principle,
    audit_flux_and_bounds,
    audit_front_hopf,
    audit_interior_max_sign,
    audit_mass_balance,
    audit_suite,
)
from .classical import classical_stefan_front
from .config import ConfigError, Mode, RunConfig, load_config
from .errors import SolverError, ValidationError
from .given_front import export_trajectory, initial_speed, solve_given_front
from .stefan import solve_stefan_marching, solve_stefan_picard
from .transform import FrontPath, ProblemSpec

log = logging.getLogger(__name__)

__all__ = ["run", "convergence_study", "classical_limit", "StudyRow", "main"]

EXIT_OK, EXIT_AUDIT, EXIT_SOLVER, EXIT_CONFIG = 0, 1, 2, 3


def _write_rows(path: Path, header, rows, config_hash: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])


def _given_front(spec: ProblemSpec, speed: float | None):
    if speed is None:
        speed = min(spec.M, max(initial_speed(spec), 0.0))
    front = FrontPath.linear(spec.b, speed, spec.times)
    return solve_given_front(spec, front)


def _solve(cfg: RunConfig, spec: ProblemSpec, target: str):
    if target == "given_front":
        return _given_front(spec, cfg.front_speed)
    if target == "stefan_picard":
        return solve_stefan_picard(spec, cfg.fixed_point)
    return solve_stefan_marching(spec)


def _trajectory_report(traj, stefan: bool) -> AuditReport:
    report = AuditReport(tolerances={"audit_tol": traj.spec.audit_tol})
    report.add(audit_extremum_principle(traj))
    report.add(audit_interior_max_sign(traj))
    if stefan:
        report.add(audit_flux_and_bounds(traj))
        report.add(audit_front_hopf(traj))
        report.add(audit_mass_balance(traj))
    return report


@dataclass(frozen=True)
class StudyRow:
    n_nodes: int
    n_steps: int
    dt: float
    quantity: str
    value: float
    error: float
    order: float


def _orders(values, hs):
    """Richardson orders from consecutive triples of levels."""
    out = [math.nan] * len(values)
    for i in range(2, len(values)):
        d1 = abs(values[i - 1] - values[i - 2])
        d2 = abs(values[i] - values[i - 1])
        ratio = hs[i - 1] / hs[i]
        if d1 > 0 and d2 > 0 and ratio > 1:
            out[i] = math.log(d1 / d2) / math.log(ratio)
    return out


def convergence_study(cfg: RunConfig, ladder=None, target: str | None = None) -> list[StudyRow]:
    """Rerun the configured solve on each ``(n_nodes, n_steps)`` level.

    Reports ``max u(., T)`` and ``s(T)`` per level, the error against the
    finest level and Richardson-estimated orders.
    """
    ladder = tuple(ladder or cfg.ladder)
    target = target or cfg.study_target
    if len(ladder) < 3:
        raise ValidationError("a convergence study needs at least 3 levels")
    results = []
    for n, m in ladder:
        spec = cfg.spec.replace(n_nodes=n, n_steps=m)
        traj = _solve(cfg, spec, target)
        results.append((n, m, spec.h, spec.dt, float(np.max(traj.values[-1])), float(traj.front.s_values[-1])))
    hs = [r[2] for r in results]
    rows = []
    for qi, name in ((4, "u_max_T"), (5, "s_T")):
        vals = [r[qi] for r in results]
        orders = _orders(vals, hs)
        for (n, m, _, dt, *_), v, o in zip(results, vals, orders):
            rows.append(StudyRow(n, m, dt, name, v, abs(v - vals[-1]), o))
    return rows


def classical_limit(cfg: RunConfig) -> dict:
    """Fractional marching against the classical finite-difference solver on ``s(T)``."""
    spec = cfg.spec
    frac = solve_stefan_marching(spec)
    _, s_cl = classical_stefan_front(spec.u0_values(), spec.b, spec.T, spec.n_nodes, spec.n_steps)
    s_frac = float(frac.front.s_values[-1])
    rel = abs(s_frac - s_cl[-1]) / abs(s_cl[-1])
    return {
        "n_nodes": spec.n_nodes,
        "dt": spec.dt,
        "alpha": spec.alpha,
        "s_T_fractional": s_frac,
        "s_T_classical": float(s_cl[-1]),
        "rel_diff": rel,
        "passed": rel <= cfg.limit_rtol,
        "trajectory": frac,
    }


def run(cfg: RunConfig, strict_audits: bool = False) -> int:
    """Execute ``cfg`` and write its artifacts under ``cfg.output_dir``."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    chash = cfg.config_hash
    note = f"config_hash={chash}"
    resolved = {k: v for k, v in cfg.raw.items() if k != "output_dir"}
    (out / "config.json").write_text(json.dumps(resolved, indent=2, sort_keys=True, default=str))
    mode = cfg.mode
    status = EXIT_OK

    if mode is Mode.CONVERGENCE_STUDY:
        rows = convergence_study(cfg)
        _write_rows(
            out / "convergence.csv",
            ["n", "n_steps", "dt", "quantity", "value", "error", "observed_order"],
            [(r.n_nodes, r.n_steps, r.dt, r.quantity, r.value, r.error, r.order) for r in rows],
            chash,
        )
        for r in rows:
            log.info("%s n=%d value=%.10g err=%.3e order=%.3f", r.quantity, r.n_nodes, r.value, r.error, r.order)
        return status

    if mode is Mode.CLASSICAL_LIMIT:
        res = classical_limit(cfg)
        export_trajectory(res.pop("trajectory"), out, note, cfg.snapshot_every)
        _write_rows(
            out / "convergence.csv",
            ["n", "dt", "alpha", "s_T_fractional", "s_T_classical", "rel_diff", "passed"],
            [[res[k] for k in ("n_nodes", "dt", "alpha", "s_T_fractional", "s_T_classical", "rel_diff")] + [int(res["passed"])]],
            chash,
        )
        return EXIT_OK if res["passed"] else EXIT_AUDIT

    if mode is Mode.AUDIT_SUITE:
        report, traj = audit_suite(
            cfg.spec, cfg.seed, solver=cfg.solver.removeprefix("stefan_"), inject=cfg.inject_violation
        )
        status = EXIT_OK if report.passed else EXIT_AUDIT
    else:
        target = {
            Mode.GIVEN_FRONT: "given_front",
            Mode.STEFAN_PICARD: "stefan_picard",
            Mode.STEFAN_MARCHING: "stefan_marching",
        }[mode]
        traj = _solve(cfg, cfg.spec, target)
        report = _trajectory_report(traj, stefan=mode is not Mode.GIVEN_FRONT)
        if strict_audits and not report.passed:
            status = EXIT_AUDIT
        if mode is Mode.STEFAN_PICARD:
            with open(out / "iteration.log", "w") as fh:
                for entry in traj.iterations:
                    # wall time stays out of the file so reruns are byte-identical
                    fh.write(json.dumps({k: v for k, v in entry.items() if k != "wall_time"}) + "\n")

    export_trajectory(traj, out, note, cfg.snapshot_every)
    payload = report.to_dict()
    payload["config_hash"] = chash
    payload["flags"] = list(traj.flags)
    (out / "audit.json").write_text(json.dumps(payload, indent=2, sort_keys=True))
    for name in report.failed:
        log.error("audit failed: %s", name)
    return status


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracstefan", description=__doc__.splitlines()[0] if __doc__ else None)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("run", "run the mode named in the config"),
        ("audit", "run the full audit suite"),
        ("study", "convergence study over the configured ladder"),
        ("limit", "compare alpha near 1 against the classical solver"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path, default=None, help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--strict-audits", action="store_true", help="exit 1 when any audit fails")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


COMMAND_MODES = {
    "audit": Mode.AUDIT_SUITE,
    "study": Mode.CONVERGENCE_STUDY,
    "limit": Mode.CLASSICAL_LIMIT,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config)
        cfg = cfg.with_overrides(
            mode=COMMAND_MODES.get(args.command),
            output_dir=str(args.out) if args.out else None,
            seed=args.seed,
        )
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        status = run(cfg, strict_audits=args.strict_audits)
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValidationError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    if status == EXIT_AUDIT:
        print("audit failure; see audit.json", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
