"""Fixed-step closed-loop simulation.

The plant is integrated with classical RK4 at step ``dt``. Continuous
controllers are evaluated once per integrator step and held over it; sampled
controllers are evaluated every ``T_s`` (an integer multiple of ``dt``) and
held in between (zero-order hold).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import trapezoid

from .control import (
    DEFAULT_FILTER_N,
    DEFAULT_SAMPLE_TIME,
    Controller,
    DiscretePdController,
    PdController,
    Saturation,
    SfrController,
)
from .errors import ConfigurationError, ContractError, DivergenceError
from .lqr import GainSet, LqrWeights
from .model import AffineSystem

CONTROLLER_KINDS = ("sfr_continuous", "pd_continuous", "pd_discrete", "sfr_discrete")
DIVERGENCE_LIMIT = 1e6
DEFAULT_DT = 1e-3
DEFAULT_DURATION = 25.0


@dataclass(frozen=True)
class ScenarioConfig:
    """One closed-loop experiment. ``x0`` and ``reference`` are in internal SI units."""

    controller: str
    x0: tuple
    duration: float = DEFAULT_DURATION
    dt: float = DEFAULT_DT
    T_s: float = DEFAULT_SAMPLE_TIME
    saturation: Optional[bool] = None  # None: on for sampled laws only
    u_limits: tuple = (-12.0, 12.0)
    filter_n: float = DEFAULT_FILTER_N
    reference: Optional[tuple] = None
    name: str = ""

    def __post_init__(self):
        if self.controller not in CONTROLLER_KINDS:
            raise ConfigurationError(
                f"unknown controller {self.controller!r}; expected one of {CONTROLLER_KINDS}"
            )
        for attr in ("duration", "dt"):
            value = getattr(self, attr)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigurationError(f"{attr} must be positive, got {value!r}")
        if self.sampled:
            if not (self.T_s > 0 and math.isfinite(self.T_s)):
                raise ConfigurationError(f"T_s must be positive, got {self.T_s!r}")
            ratio = self.T_s / self.dt
            if ratio < 1 - 1e-9 or abs(ratio - round(ratio)) > 1e-6:
                raise ConfigurationError(
                    f"T_s = {self.T_s} must be an integer multiple of dt = {self.dt}"
                )
        Saturation(*self.u_limits)
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))
        if self.reference is not None:
            object.__setattr__(self, "reference", tuple(float(v) for v in self.reference))
        if not self.name:
            object.__setattr__(self, "name", self.controller)

    @property
    def sampled(self) -> bool:
        return self.controller.endswith("_discrete")

    @property
    def saturates(self) -> bool:
        return self.sampled if self.saturation is None else bool(self.saturation)

    @property
    def hold_steps(self) -> int:
        return int(round(self.T_s / self.dt)) if self.sampled else 1


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    c_ref: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return self.t.size

    def truncated(self, length: int) -> "Trajectory":
        return Trajectory(
            self.t[:length], self.x[:length], self.u[:length], self.c_ref[:length],
            dict(self.metadata, complete=False),
        )


def rk4_step(dynamics: Callable, x: np.ndarray, u: float, dt: float) -> np.ndarray:
    """Classical Runge-Kutta step of ``xdot = dynamics(x, u)`` with ``u`` held."""
    if not dt > 0:
        raise ContractError(f"dt must be positive, got {dt}")
    k1 = dynamics(x, u)
    k2 = dynamics(x + 0.5 * dt * k1, u)
    k3 = dynamics(x + 0.5 * dt * k2, u)
    k4 = dynamics(x + dt * k3, u)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def make_controller(kind: str, gains: GainSet, scenario: ScenarioConfig) -> Controller:
    sat = Saturation(*scenario.u_limits) if scenario.saturates else None
    if kind == "sfr_continuous":
        return SfrController(gains, saturation=sat)
    if kind == "sfr_discrete":
        return SfrController(gains, sample_time=scenario.T_s, saturation=sat)
    if kind == "pd_continuous":
        return PdController(gains, saturation=sat)
    if kind == "pd_discrete":
        return DiscretePdController(gains, scenario.T_s, scenario.filter_n, sat)
    raise ConfigurationError(f"unknown controller {kind!r}")


def simulate(plant: AffineSystem, controller: Controller, scenario: ScenarioConfig) -> Trajectory:
    """Closed-loop run of ``plant`` under ``controller``.

    Raises :class:`DivergenceError` (carrying the partial trajectory) when a
    state becomes non-finite, exceeds ``1e6`` in magnitude, or an angular
    state leaves ``[-pi, pi]``.
    """
    n, q = plant.n, plant.q
    x = plant.check_state(scenario.x0).copy()
    c_ref = np.zeros(q) if scenario.reference is None else np.asarray(scenario.reference, float)
    if c_ref.shape != (q,):
        raise ContractError(f"reference must have length {q}")
    dt = scenario.dt
    steps = int(round(scenario.duration / dt))
    hold = 1
    if controller.sample_time is not None:
        hold = int(round(controller.sample_time / dt))
        if hold < 1 or abs(hold * dt - controller.sample_time) > 1e-9 * max(1.0, controller.sample_time):
            raise ConfigurationError(
                f"sample time {controller.sample_time} is not an integer multiple of dt = {dt}"
            )
    angular = [i for i, unit in enumerate(plant.units or ()) if unit == "deg"]

    dynamics = plant.vector_field
    if dynamics is None:
        drift, gfield = plant.drift, plant.input_field

        def dynamics(xs, u):
            return drift(xs) + gfield(xs) * u

    t = np.arange(steps + 1) * dt
    X = np.empty((steps + 1, n))
    U = np.empty(steps + 1)
    metadata = {
        "plant": plant.name,
        "controller": controller.kind,
        "scenario": scenario.name,
        "dt": dt,
        "T_s": controller.sample_time,
        "x0": list(scenario.x0),
        "saturation": list(scenario.u_limits) if scenario.saturates else None,
        "complete": True,
    }
    traj = Trajectory(t, X, U, np.tile(c_ref, (steps + 1, 1)), metadata)

    controller.reset()
    u = 0.0
    for i in range(steps + 1):
        if i % hold == 0:
            u = float(controller(x, c_ref))
        X[i] = x
        U[i] = u
        if i == steps:
            break
        x = rk4_step(dynamics, x, u, dt)
        bad = not np.all(np.isfinite(x)) or np.max(np.abs(x)) > DIVERGENCE_LIMIT
        if not bad and angular:
            bad = np.max(np.abs(x[angular])) > math.pi
        if bad:
            when = t[i + 1]
            raise DivergenceError(
                f"{scenario.name}: state diverged at t = {when:.4f} s (x = {x.tolist()})",
                trajectory=traj.truncated(i + 1),
                time=when,
            )
    return traj


def run_scenario(plant: AffineSystem, gains: GainSet, scenario: ScenarioConfig) -> Trajectory:
    return simulate(plant, make_controller(scenario.controller, gains, scenario), scenario)


def settling_time(t: np.ndarray, y: np.ndarray, band: float) -> Optional[float]:
    """Time after the last sample outside ``|y| <= band``; ``None`` if it never settles."""
    outside = np.flatnonzero(np.abs(y) > band)
    if outside.size == 0:
        return float(t[0])
    last = outside[-1]
    if last == t.size - 1:
        return None
    return float(t[last + 1])


def settling_metrics(traj: Trajectory, band_deg: float = 0.1, band_m: float = 1e-3,
                     units=None) -> dict:
    """Settling times of the outputs, peak control and saturation duty.

    Angular outputs (unit ``"deg"``) use ``band_deg`` in degrees, all other
    outputs use ``band_m``.
    """
    q = traj.c_ref.shape[1]
    report = {}
    for j in range(q):
        y = traj.x[:, j] - traj.c_ref[:, j]
        if units is not None and units[j] == "deg":
            band = math.radians(band_deg)
        else:
            band = band_m
        report[f"settling_x{j + 1}"] = settling_time(traj.t, y, band)
    report["max_abs_u"] = float(np.max(np.abs(traj.u))) if len(traj) else 0.0
    limits = traj.metadata.get("saturation")
    if limits and len(traj):
        at_limit = (traj.u <= limits[0]) | (traj.u >= limits[1])
        report["saturation_fraction"] = float(np.mean(at_limit))
    else:
        report["saturation_fraction"] = 0.0
    return report


def quadratic_cost(traj: Trajectory, weights: LqrWeights) -> float:
    """Trapezoidal integral of ``x'Qx + R u^2`` along the trajectory."""
    integrand = np.einsum("ij,jk,ik->i", traj.x, weights.Q, traj.x) + weights.R * traj.u**2
    return float(trapezoid(integrand, traj.t))
