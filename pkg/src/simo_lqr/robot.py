"""Two-wheeled balancing robot.

State ``x = (tilt [rad], position [m], tilt rate [rad/s], velocity [m/s])``,
input ``u`` is the DC motor voltage. The body equations are

    a1 * x3' - a3 * x4' = a6 + a4 u
    -a3 * x3' + a2 * x4' = a7 + a5 u

with ``a3 = -m_n l cos(x1)``; solving the 2x2 mass matrix gives the
accelerations.

Two trigonometric conventions are supported. ``"radians"`` takes sine and
cosine of the tilt as stored. ``"degrees"`` (the default) reads the stored
number as degrees inside the trig functions, using ``sin(x1 * pi / 180)``;
the state itself stays in radians. The reference gains for this robot are
reproduced only under ``"degrees"``, which is why it is the default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import ConfigurationError, ContractError, NumericalDomainError
from .model import AffineSystem

CONVENTIONS = ("degrees", "radians")
ROBOT_UNITS = ("deg", "m", "degps", "mps")


@dataclass(frozen=True)
class RobotParams:
    I_n: float = 0.0112  # body inertia [kg m^2]
    I_k: float = 3.9337e-5  # wheel inertia [kg m^2]
    m_n: float = 1.12  # body mass [kg]
    m_k: float = 0.125  # wheel mass [kg]
    l: float = 0.1  # distance to centre of gravity [m]
    R: float = 2.1428  # winding resistance [Ohm]
    r: float = 0.045  # wheel radius [m]
    k: float = 34.014  # gear ratio [-]
    k_e: float = 68.9655e-4  # electro-mechanical constant [V s]
    k_m: float = 14.8850e-2  # torque constant, stored as published [V s]
    g: float = 9.81
    convention: str = "degrees"

    def __post_init__(self):
        for f in fields(self):
            if f.name == "convention":
                continue
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
                raise ConfigurationError(f"robot parameter {f.name} must be positive, got {value!r}")
        if self.convention not in CONVENTIONS:
            raise ConfigurationError(
                f"unknown convention {self.convention!r}; expected one of {CONVENTIONS}"
            )
        a1 = self.I_n + self.m_n * self.l**2
        a2 = 2 * self.I_k / self.r**2 + 2 * self.m_k + self.m_n
        if a1 * a2 <= (self.m_n * self.l) ** 2:
            raise ConfigurationError("mass matrix is not positive definite for these parameters")

    @property
    def trig_scale(self) -> float:
        return math.pi / 180.0 if self.convention == "degrees" else 1.0

    def with_overrides(self, **overrides) -> "RobotParams":
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigurationError(f"unknown robot parameter(s): {sorted(unknown)}")
        return replace(self, **overrides)


def _check(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (4,):
        raise ContractError(f"robot state must have 4 entries, got shape {x.shape}")
    return x


def alphas(p: RobotParams, x) -> tuple:
    """Coefficients ``(a1, ..., a7)``; ``a6`` and ``a7`` exclude the input terms."""
    x1, _, x3, x4 = _check(x).tolist()
    s = p.trig_scale
    km_R = p.k_m / p.R
    a1 = p.I_n + p.m_n * p.l**2
    a2 = 2 * p.I_k / p.r**2 + 2 * p.m_k + p.m_n
    a3 = -p.m_n * p.l * math.cos(s * x1)
    a4 = -2 * km_R
    a5 = 2 * p.k * km_R / p.r
    a6 = (
        2 * x4 * p.k * p.k_e * km_R / p.r
        - 2 * x3 * p.k_e * km_R
        + p.m_n * p.g * p.l * math.sin(s * x1)
    )
    # centripetal term x3^2 sin(x1) of the body equations
    a7 = (
        2 * x3 * p.k * p.k_e * km_R / p.r
        - 2 * x4 * p.k**2 * p.k_e * km_R / p.r**2
        + p.m_n * p.l * x3**2 * math.sin(s * x1)
    )
    return a1, a2, a3, a4, a5, a6, a7


def _mass_determinant(a1, a2, a3):
    M = a1 * a2 - a3 * a3
    if abs(M) < 1e-12:
        raise NumericalDomainError(f"singular mass matrix (M = {M:.3e})")
    return M


def robot_drift(p: RobotParams, x) -> np.ndarray:
    x = _check(x)
    a1, a2, a3, _, _, a6, a7 = alphas(p, x)
    M = _mass_determinant(a1, a2, a3)
    return np.array([x[2], x[3], (a6 * a2 + a7 * a3) / M, (a6 * a3 + a7 * a1) / M])


def robot_input_field(p: RobotParams, x) -> np.ndarray:
    a1, a2, a3, a4, a5, _, _ = alphas(p, x)
    M = _mass_determinant(a1, a2, a3)
    return np.array([0.0, 0.0, (a4 * a2 + a5 * a3) / M, (a4 * a3 + a5 * a1) / M])


def robot_dynamics(p: RobotParams, x, u: float) -> np.ndarray:
    """``(x3, x4, (H3 + P3 u)/M, (H4 + P4 u)/M)``."""
    x = _check(x)
    a1, a2, a3, a4, a5, a6, a7 = alphas(p, x)
    M = _mass_determinant(a1, a2, a3)
    H3, H4 = a6 * a2 + a7 * a3, a6 * a3 + a7 * a1
    P3, P4 = a4 * a2 + a5 * a3, a4 * a3 + a5 * a1
    return np.array([x[2], x[3], (H3 + P3 * u) / M, (H4 + P4 * u) / M])


def robot_jacobian(p: RobotParams, x) -> np.ndarray:
    """Closed-form Jacobian of the drift field."""
    x = _check(x)
    x1, _, x3, _ = x
    s = p.trig_scale
    a1, a2, a3, _, _, a6, a7 = alphas(p, x)
    M = _mass_determinant(a1, a2, a3)
    km_R = p.k_m / p.R
    sin1, cos1 = math.sin(s * x1), math.cos(s * x1)

    da3 = p.m_n * p.l * s * sin1
    dM = -2 * a3 * da3
    # partials of a6, a7 with respect to (x1, x3, x4)
    da6 = (p.m_n * p.g * p.l * s * cos1, -2 * p.k_e * km_R, 2 * p.k * p.k_e * km_R / p.r)
    da7 = (
        p.m_n * p.l * x3**2 * s * cos1,
        2 * p.k * p.k_e * km_R / p.r + 2 * p.m_n * p.l * x3 * sin1,
        -2 * p.k**2 * p.k_e * km_R / p.r**2,
    )
    N3 = a6 * a2 + a7 * a3
    N4 = a6 * a3 + a7 * a1

    J = np.zeros((4, 4))
    J[0, 2] = 1.0
    J[1, 3] = 1.0
    J[2, 0] = (a2 * da6[0] + da3 * a7 + a3 * da7[0]) / M - N3 * dM / M**2
    J[3, 0] = (da3 * a6 + a3 * da6[0] + a1 * da7[0]) / M - N4 * dM / M**2
    for col, idx in ((2, 1), (3, 2)):
        J[2, col] = (a2 * da6[idx] + a3 * da7[idx]) / M
        J[3, col] = (a3 * da6[idx] + a1 * da7[idx]) / M
    return J


def robot_system(params: RobotParams | None = None) -> AffineSystem:
    """The balancing robot as an :class:`AffineSystem` (q = 2)."""
    p = params or RobotParams()
    return AffineSystem(
        q=2,
        drift=lambda x: robot_drift(p, x),
        input_field=lambda x: robot_input_field(p, x),
        jacobian=lambda x: robot_jacobian(p, x),
        vector_field=lambda x, u: robot_dynamics(p, x, u),
        name="balancing-robot",
        units=ROBOT_UNITS,
        input_unit="V",
    )
