"""Published reference design of the balancing robot and a checker for it.

The numbers below are the linear model, controllability determinant and LQR
gain reported for the robot at the upright operating point, together with the
closed-loop claims about the 10 degree tilt experiments. ``run_checks``
rebuilds everything from the nonlinear model and compares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError
from .lqr import LqrWeights, care_residual, design
from .linearize import controllability, linearize
from .robot import RobotParams, robot_system
from .sim import ScenarioConfig, run_scenario, settling_metrics

A_LOWER = np.array([
    [1.4188, 5.7939e-7, -4.3319, 3274.4],
    [-0.1128, -6.6786e-12, 0.8586, -648.99],
])
B_REF = np.array([0.0, 0.0, -628.4856, 124.4993])
DET_MC = -1.4517e13
K_REF = np.array([-13.1881, -10.0, -9.3717, -45.1452])

REL_TOL = 1e-3
SMALL_ENTRY = 1e-6
SMALL_ABS_TOL = 1e-9
X0_DEG = 10.0


@dataclass
class Check:
    name: str
    value: object
    expected: str
    passed: bool

    def row(self) -> list:
        value = self.value
        if isinstance(value, float):
            value = f"{value:.6g}"
        return [self.name, str(value), self.expected, "PASS" if self.passed else "FAIL"]


def entry_close(actual: float, expected: float) -> bool:
    if abs(expected) < SMALL_ENTRY:
        return abs(actual - expected) <= SMALL_ABS_TOL
    return abs(actual - expected) <= REL_TOL * abs(expected)


def _describe(expected: float) -> str:
    if abs(expected) < SMALL_ENTRY:
        return f"{expected:.6g} +/- {SMALL_ABS_TOL:g}"
    return f"{expected:.6g} (rel {REL_TOL:g})"


def model_checks(params: RobotParams | None = None) -> tuple:
    """Checks on A, B, det(Mc), rank and K. Returns ``(checks, model, gains)``."""
    plant = robot_system(params)
    model = linearize(plant, np.zeros(4))
    checks = []
    for i in range(2):
        for j in range(4):
            a, e = float(model.A[i + 2, j]), float(A_LOWER[i, j])
            checks.append(Check(f"A[{i + 3},{j + 1}]", a, _describe(e), entry_close(a, e)))
    for i in (2, 3):
        b, e = float(model.B[i, 0]), float(B_REF[i])
        checks.append(Check(f"B[{i + 1}]", b, _describe(e), entry_close(b, e)))

    report = controllability(model)
    checks.append(Check("det(Mc)", report.determinant, _describe(DET_MC),
                        entry_close(report.determinant, DET_MC)))
    checks.append(Check("rank(Mc)", report.rank, "4", report.rank == 4))

    weights = LqrWeights.default(4)
    gains, P, eig = design(model, weights)
    for j in range(4):
        k, e = float(gains.K[j]), float(K_REF[j])
        checks.append(Check(f"K[{j + 1}]", k, _describe(e), entry_close(k, e)))
    res = care_residual(model.A, model.B, weights.Q, weights.R, P)
    checks.append(Check("CARE residual", res, "< 1e-9", res < 1e-9))
    checks.append(Check("max Re(eig(A - BK))", float(np.max(eig.real)), "< 0",
                        bool(np.max(eig.real) < 0)))
    return checks, model, gains


def simulation_checks(gains, params: RobotParams | None = None, trajectories: dict | None = None):
    """Closed-loop claims for the tilt experiments.

    ``trajectories`` may supply already computed runs keyed by controller kind
    (``sfr_continuous``, ``pd_continuous``, ``pd_discrete``, ``sfr_discrete``).
    """
    plant = robot_system(params)
    x0 = (math.radians(X0_DEG), 0.0, 0.0, 0.0)
    runs = dict(trajectories or {})
    checks = []
    for kind in ("sfr_continuous", "pd_continuous", "pd_discrete", "sfr_discrete"):
        if kind not in runs:
            try:
                runs[kind] = run_scenario(plant, gains, ScenarioConfig(kind, x0))
            except DivergenceError as exc:
                runs[kind] = exc.trajectory

    sfr, pd, dpd = runs["sfr_continuous"], runs["pd_continuous"], runs["pd_discrete"]
    late = sfr.t >= 20.0
    tilt = float(np.degrees(np.max(np.abs(sfr.x[late, 0])))) if np.any(late) else math.inf
    checks.append(Check("SFR max|x1| for t>=20 s [deg]", tilt, "< 0.1", tilt < 0.1))
    ulate = float(np.max(np.abs(sfr.u[late]))) if np.any(late) else math.inf
    checks.append(Check("SFR max|u| for t>=20 s [V]", ulate, "< 0.01", ulate < 0.01))
    same = len(pd) == len(sfr)
    du = float(np.max(np.abs(pd.u - sfr.u))) if same else math.inf
    checks.append(Check("continuous PD vs SFR max|du| [V]", du, "< 1e-9", du < 1e-9))

    complete = dpd.metadata.get("complete", True)
    checks.append(Check("discrete PD bounded", complete, "True", bool(complete)))
    final = float(abs(np.degrees(dpd.x[-1, 0])))
    checks.append(Check("discrete PD |x1(25 s)| [deg]", final, "< 0.5", complete and final < 0.5))
    n = min(len(dpd), len(pd))
    gap = float(np.max(np.abs(dpd.u[:n] - pd.u[:n])))
    checks.append(Check("discrete vs continuous max|du| [V]", gap, "> 0.1", gap > 0.1))

    for kind, traj in runs.items():
        metrics = settling_metrics(traj, units=plant.units)
        ts = metrics["settling_x1"]
        ok = traj.metadata.get("complete", True) and ts is not None and ts <= 20.0
        checks.append(Check(f"{kind} x1 settling [s]", ts, "<= 20", bool(ok)))
    return checks, runs


def run_checks(params: RobotParams | None = None):
    checks, model, gains = model_checks(params)
    sim, runs = simulation_checks(gains, params)
    return checks + sim, model, gains, runs


def format_table(checks) -> str:
    rows = [["check", "value", "expected", "result"]] + [c.row() for c in checks]
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    passed = sum(c.passed for c in checks)
    lines.append(f"{passed}/{len(checks)} checks passed")
    return "\n".join(lines)


__all__ = ["A_LOWER", "B_REF", "DET_MC", "K_REF", "Check", "run_checks", "format_table",
           "model_checks", "simulation_checks", "entry_close"]
