"""Command-line front end.

    simo-lqr linearize        [--config FILE] [--equilibrium 0,0,0,0]
    simo-lqr design           [--config FILE]
    simo-lqr simulate         [--config FILE] [--duration S] [--dt S] [--ts S] [--filter-n N]
    simo-lqr reproduce-paper  [--config FILE]

Every verb accepts ``--out DIR`` (default: ``$SIMO_LQR_OUT`` or
``./simo_lqr_out``). Exit status: 0 success, 1 reference mismatch
(``reproduce-paper`` only), 2 invalid input, 3 design failure, 4 divergence.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import export
from .config import ROBOT_PLANT, load_config, resolve_output_dir
from .errors import (
    ConfigurationError,
    ContractError,
    DesignError,
    DivergenceError,
    NumericalDomainError,
)
from .linearize import controllability, linearize
from .lqr import design
from .model import to_display
from .reference import format_table, model_checks, simulation_checks
from .sim import run_scenario, settling_metrics

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_INVALID = 2
EXIT_DESIGN = 3
EXIT_DIVERGED = 4

log = logging.getLogger("simo_lqr")


def _fmt(a) -> str:
    return np.array2string(np.asarray(a), precision=6, suppress_small=False, max_line_width=100)


def _csv_vector(text: str) -> list:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="project file (TOML)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--equilibrium", type=_csv_vector,
                        help="operating point in display units, e.g. 0,0,0,0")
    common.add_argument("--ts", type=float, dest="T_s", help="controller sample time [s]")
    common.add_argument("--duration", type=float, help="simulated time [s]")
    common.add_argument("--dt", type=float, help="integrator step [s]")
    common.add_argument("--filter-n", type=float, dest="filter_n",
                        help="derivative filter coefficient N")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="simo-lqr",
        description="Linearize, design LQR/PD stabilizers and simulate SIMO mechanical systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("linearize", parents=[common], help="linear model and controllability")
    sub.add_parser("design", parents=[common], help="LQR gains and the PD view")
    sub.add_parser("simulate", parents=[common], help="run the configured scenarios")
    sub.add_parser("reproduce-paper", parents=[common],
                   help="rebuild the published robot design and compare")
    return parser


def _linear_stage(cfg):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        model = linearize(cfg.plant, cfg.equilibrium, cfg.epsilon)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return model, controllability(model)


def _print_linear(cfg, model, report):
    print(f"plant: {cfg.plant.name} (n = {model.n}, q = {model.q})")
    print(f"x_e = {_fmt(model.x_e)}")
    if model.epsilon_applied:
        print(f"epsilon_applied = true, epsilon = {_fmt(model.epsilon)}")
    else:
        print("epsilon_applied = false")
    print(f"A =\n{_fmt(model.A)}")
    print(f"B = {_fmt(model.B.ravel())}")
    print(f"E =\n{_fmt(model.E)}")
    print(f"det(Mc) = {report.determinant:.6e}")
    print(f"rank(Mc) = {report.rank} of {model.n}")


def _require_controllable(model, report):
    if not report.controllable:
        raise DesignError(
            f"(A, B) is not controllable: rank(Mc) = {report.rank} < n = {model.n}", report=report
        )


def cmd_linearize(cfg, out: Path) -> int:
    model, report = _linear_stage(cfg)
    _print_linear(cfg, model, report)
    path = export.write_json(out / "linear_model.json", {
        "plant": cfg.plant.name,
        "model": model.to_dict(),
        "controllability": report.to_dict(),
    })
    print(f"wrote {path}")
    _require_controllable(model, report)
    return EXIT_OK


def _design_stage(cfg):
    for note in cfg.notes:
        print(note)
    model, report = _linear_stage(cfg)
    _require_controllable(model, report)
    gains, P, eig = design(model, cfg.weights)
    return model, gains, eig


def cmd_design(cfg, out: Path) -> int:
    model, gains, eig = _design_stage(cfg)
    print(f"K     = {_fmt(gains.K)}")
    print(f"K_p   = {_fmt(gains.K_p)}")
    print(f"K_d   = {_fmt(gains.K_d)}")
    print(f"K_ref = {_fmt(gains.K_ref)}")
    print(f"closed-loop eigenvalues = {_fmt(np.sort_complex(eig))}")
    payload = gains.to_dict()
    payload.update(
        plant=cfg.plant.name,
        Q=np.diag(cfg.weights.Q).tolist(),
        R=cfg.weights.R,
        weights_defaulted=cfg.weights_defaulted,
        eigenvalues_real=np.sort_complex(eig).real.tolist(),
        eigenvalues_imag=np.sort_complex(eig).imag.tolist(),
    )
    path = export.write_json(out / "gains.json", payload)
    print(f"wrote {path}")
    return EXIT_OK


def _summary_record(plant, scenario, traj, diverged_at=None) -> dict:
    metrics = settling_metrics(traj, units=plant.units)
    rec = {
        "scenario": scenario.name,
        "controller": scenario.controller,
        "status": "ok" if diverged_at is None else "diverged",
        "diverged_at_s": diverged_at,
        "max_abs_u": metrics["max_abs_u"],
        "saturation_fraction": metrics["saturation_fraction"],
    }
    for j in range(plant.q):
        rec[f"settling_x{j + 1}_s"] = None if diverged_at is not None else metrics[f"settling_x{j + 1}"]
    return rec


def _run_batch(plant, gains, scenarios, out: Path):
    records, runs = [], {}
    for scenario in scenarios:
        try:
            traj = run_scenario(plant, gains, scenario)
            rec = _summary_record(plant, scenario, traj)
        except DivergenceError as exc:
            print(f"error: {exc}", file=sys.stderr)
            traj = exc.trajectory
            rec = _summary_record(plant, scenario, traj, diverged_at=exc.time)
        runs[scenario.name] = traj
        export.write_trajectory_csv(out / f"{scenario.name}.csv", plant, traj)
        records.append(rec)
    export.write_summary_csv(out / "summary.csv", records)
    return records, runs


def _print_summary(records):
    header = ("scenario", "status", "settle x1 [s]", "settle x2 [s]", "max|u|", "sat. frac")
    rows = [header]
    for r in records:
        rows.append((
            r["scenario"], r["status"],
            "-" if r.get("settling_x1_s") is None else f"{r['settling_x1_s']:.3f}",
            "-" if r.get("settling_x2_s") is None else f"{r['settling_x2_s']:.3f}",
            f"{r['max_abs_u']:.4f}", f"{r['saturation_fraction']:.3f}",
        ))
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    for row in rows:
        print("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())


def cmd_simulate(cfg, out: Path) -> int:
    _, gains, _ = _design_stage(cfg)
    print(f"K = {_fmt(gains.K)}")
    records, _ = _run_batch(cfg.plant, gains, cfg.scenarios, out)
    _print_summary(records)
    print(f"wrote {len(records)} trajectories and summary.csv to {out}")
    return EXIT_DIVERGED if any(r["status"] != "ok" for r in records) else EXIT_OK


def cmd_reproduce(cfg, out: Path) -> int:
    if cfg.plant.name != ROBOT_PLANT:
        raise ConfigurationError("reproduce-paper needs the built-in balancing-robot plant")
    checks, model, gains = model_checks(cfg.robot_params)
    sim, runs = simulation_checks(gains, cfg.robot_params)
    checks += sim
    plant = cfg.plant
    for kind, traj in runs.items():
        export.write_trajectory_csv(out / f"{kind}.csv", plant, traj)
    x1 = to_display(plant, runs["sfr_continuous"].x[0])[0]
    print(f"initial tilt {x1:g} deg, convention {cfg.robot_params.convention!r}")
    print(format_table(checks))
    with open(out / "reproduction.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["check", "value", "expected", "result"])
        writer.writerows(c.row() for c in checks)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_MISMATCH


COMMANDS = {
    "linearize": cmd_linearize,
    "design": cmd_design,
    "simulate": cmd_simulate,
    "reproduce-paper": cmd_reproduce,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: getattr(args, k) for k in ("equilibrium", "T_s", "duration", "dt", "filter_n")}
    try:
        cfg = load_config(args.config, overrides)
        out = resolve_output_dir(args.out, cfg)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out)
    except (ConfigurationError, ContractError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (DesignError, NumericalDomainError) as exc:
        print(f"design error: {exc}", file=sys.stderr)
        return EXIT_DESIGN
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
