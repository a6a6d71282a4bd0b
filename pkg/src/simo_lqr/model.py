"""Nonlinear control-affine SIMO systems.

A system is described by its drift field ``F`` and input field ``G`` so that
``xdot = F(x) + G(x) * u`` with scalar ``u``. Mechanical systems with ``q``
generalized coordinates use the state ordering ``x = [positions, velocities]``
so the first ``q`` rows are pure integrators.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ContractError, NumericalDomainError

Field = Callable[[np.ndarray], np.ndarray]

FD_RELATIVE_STEP = 1e-6


@dataclass(frozen=True)
class AffineSystem:
    """Control-affine system ``xdot = F(x) + G(x) u`` with ``n = 2q`` states.

    ``units`` are display labels used by exporters (``"deg"`` and ``"degps"``
    mark states stored internally in rad and rad/s).
    """

    q: int
    drift: Field
    input_field: Field
    jacobian: Optional[Field] = None
    name: str = "system"
    units: Optional[tuple] = None
    input_unit: str = ""
    mechanical: bool = True
    # optional fused (x, u) -> F(x) + G(x) u used by the simulator
    vector_field: Optional[Callable[[np.ndarray, float], np.ndarray]] = None

    def __post_init__(self):
        if not isinstance(self.q, (int, np.integer)) or self.q < 1:
            raise ContractError(f"q must be a positive integer, got {self.q!r}")
        if self.units is not None and len(self.units) != self.n:
            raise ContractError(f"expected {self.n} unit labels, got {len(self.units)}")

    @property
    def n(self) -> int:
        return 2 * self.q

    @property
    def output_matrix(self) -> np.ndarray:
        """``E = [I_q | 0_q]``: the controlled outputs are the positions."""
        return np.hstack([np.eye(self.q), np.zeros((self.q, self.q))])

    def check_state(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ContractError(f"{self.name}: state must have shape ({self.n},), got {x.shape}")
        return x

    @classmethod
    def from_mechanical(
        cls,
        q: int,
        acceleration: Field,
        input_gain: Field,
        acceleration_jacobian: Optional[Field] = None,
        **kwargs,
    ) -> "AffineSystem":
        """Build a system from its ``q`` acceleration rows.

        ``acceleration(x)`` and ``input_gain(x)`` return length-``q`` arrays;
        the integrator rows ``xdot_j = x_{q+j}`` are supplied here, so the
        integrator structure holds exactly by construction.
        """

        def drift(x):
            return np.concatenate([x[q:], np.asarray(acceleration(x), dtype=float)])

        def input_field(x):
            return np.concatenate([np.zeros(q), np.asarray(input_gain(x), dtype=float)])

        jacobian = None
        if acceleration_jacobian is not None:

            def jacobian(x):
                top = np.hstack([np.zeros((q, q)), np.eye(q)])
                return np.vstack([top, np.asarray(acceleration_jacobian(x), dtype=float)])

        return cls(q=q, drift=drift, input_field=input_field, jacobian=jacobian, **kwargs)

    @classmethod
    def linear(cls, A, B, **kwargs) -> "AffineSystem":
        """Wrap ``xdot = A x + B u`` (no structural assumptions are checked)."""
        A = np.array(A, dtype=float)
        B = np.array(B, dtype=float).reshape(-1)
        n = A.shape[0]
        if A.shape != (n, n) or B.shape != (n,) or n % 2:
            raise ContractError("linear system needs square A with even order and matching B")
        A.setflags(write=False)
        B.setflags(write=False)
        return cls(
            q=n // 2,
            drift=lambda x: A @ x,
            input_field=lambda x: B.copy(),
            jacobian=lambda x: A.copy(),
            mechanical=kwargs.pop("mechanical", False),
            **kwargs,
        )


def _finite(values: np.ndarray, what: str, x: np.ndarray) -> np.ndarray:
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise NumericalDomainError(
            f"{what} is not finite in row {int(bad[0]) + 1} at x = {x.tolist()}"
        )
    return values


def evaluate_dynamics(sys: AffineSystem, x, u: float) -> np.ndarray:
    """Return ``F(x) + G(x) * u``."""
    x = sys.check_state(x)
    u = float(u)
    if not np.isfinite(u):
        raise ContractError(f"control must be finite, got {u}")
    if sys.vector_field is not None:
        xdot = np.asarray(sys.vector_field(x, u), dtype=float)
    else:
        xdot = np.asarray(sys.drift(x), dtype=float) + np.asarray(sys.input_field(x), dtype=float) * u
    if xdot.shape != (sys.n,):
        raise ContractError(f"{sys.name}: dynamics returned shape {xdot.shape}")
    return _finite(xdot, "state derivative", x)


def numeric_jacobian(sys: AffineSystem, x) -> np.ndarray:
    """Central-difference Jacobian of the drift field; row ``i`` is grad F_i."""
    x = sys.check_state(x)
    n = sys.n
    J = np.empty((n, n))
    for i in range(n):
        h = FD_RELATIVE_STEP * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        fp = _finite(np.asarray(sys.drift(xp), dtype=float), "drift", xp)
        fm = _finite(np.asarray(sys.drift(xm), dtype=float), "drift", xm)
        # (xp - xm) differs from 2h by roundoff when |x_i| is large
        J[:, i] = (fp - fm) / (xp[i] - xm[i])
    return J


def drift_jacobian(sys: AffineSystem, x) -> np.ndarray:
    """Analytic Jacobian when the system provides one, else central differences."""
    x = sys.check_state(x)
    if sys.jacobian is None:
        return numeric_jacobian(sys, x)
    J = np.asarray(sys.jacobian(x), dtype=float)
    if J.shape != (sys.n, sys.n):
        raise ContractError(f"{sys.name}: Jacobian has shape {J.shape}")
    return _finite(J, "Jacobian", x)


def display_scale(sys: AffineSystem) -> np.ndarray:
    """Per-state factor from internal SI units to display units."""
    scale = np.ones(sys.n)
    for i, unit in enumerate(sys.units or ()):
        if unit in ("deg", "degps"):
            scale[i] = 180.0 / np.pi
    return scale


def to_display(sys: AffineSystem, x) -> np.ndarray:
    """Internal states (last axis) to display units, e.g. rad -> deg."""
    return np.asarray(x, dtype=float) * display_scale(sys)


def from_display(sys: AffineSystem, x) -> np.ndarray:
    return np.asarray(x, dtype=float) / display_scale(sys)
