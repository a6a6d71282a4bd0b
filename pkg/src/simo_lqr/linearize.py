"""Optimization-based linearization at an operating point and controllability.

For a drift field ``F`` and an operating point ``x_e`` (with ``u_e = 0``)
each row of ``A`` is the gradient of ``F_i`` plus a correction along ``x_e``
that makes the linear model exact at ``x_e`` without shifting coordinates:

    a_i = grad F_i(x_e) + (F_i(x_e) - x_e . grad F_i(x_e)) / (x_e . x_e) * x_e

and ``B = G(x_e)``. The formula is undefined at ``x_e = 0``, so a zero
operating point is first nudged by a small vector ``eps``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ContractError
from .model import AffineSystem, drift_jacobian

DEFAULT_EPSILON = 1e-4
EQUILIBRIUM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class LinearModel:
    A: np.ndarray
    B: np.ndarray
    E: np.ndarray
    x_e: np.ndarray
    u_e: float = 0.0
    epsilon_applied: bool = False
    epsilon: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def q(self) -> int:
        return self.E.shape[0]

    def to_dict(self) -> dict:
        return {
            "A": self.A.tolist(),
            "B": self.B.ravel().tolist(),
            "E": self.E.tolist(),
            "x_e": self.x_e.tolist(),
            "u_e": self.u_e,
            "epsilon_applied": self.epsilon_applied,
            "epsilon": None if self.epsilon is None else self.epsilon.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LinearModel":
        eps = data.get("epsilon")
        return cls(
            A=np.array(data["A"], dtype=float),
            B=np.array(data["B"], dtype=float).reshape(-1, 1),
            E=np.array(data["E"], dtype=float),
            x_e=np.array(data["x_e"], dtype=float),
            u_e=float(data.get("u_e", 0.0)),
            epsilon_applied=bool(data.get("epsilon_applied", False)),
            epsilon=None if eps is None else np.array(eps, dtype=float),
        )


@dataclass(frozen=True)
class ControllabilityReport:
    Mc: np.ndarray
    rank: int
    determinant: float
    singular_values: tuple
    controllable: bool

    def to_dict(self) -> dict:
        return {
            "Mc": self.Mc.tolist(),
            "rank": self.rank,
            "determinant": self.determinant,
            "singular_values": list(self.singular_values),
            "controllable": self.controllable,
        }


def correction_term(F_i: float, grad_i: np.ndarray, x_e: np.ndarray) -> np.ndarray:
    """The vector added to ``grad F_i`` so the row reproduces ``F_i(x_e)`` exactly."""
    return (F_i - x_e @ grad_i) / (x_e @ x_e) * x_e


def linearize(sys: AffineSystem, x_e, epsilon=None) -> LinearModel:
    """Linear model ``(A, B, E)`` of ``sys`` around ``x_e``.

    ``epsilon`` (scalar or vector, default ``1e-4`` in every coordinate) is
    added only when ``x_e`` has zero norm. For mechanical systems the first
    ``q`` rows of ``A`` and entries of ``B`` are emitted structurally as
    ``[0 | I]`` and ``0``.
    """
    x_e = sys.check_state(x_e).copy()
    n, q = sys.n, sys.q

    residual = np.max(np.abs(np.asarray(sys.drift(x_e), dtype=float)))
    if residual > EQUILIBRIUM_TOLERANCE:
        warnings.warn(
            f"x_e is not an equilibrium of {sys.name}: |F(x_e)|_inf = {residual:.3e}",
            RuntimeWarning,
            stacklevel=2,
        )

    applied = False
    eps_vec = None
    if not np.any(x_e):
        eps_vec = np.broadcast_to(
            np.asarray(DEFAULT_EPSILON if epsilon is None else epsilon, dtype=float), (n,)
        ).copy()
        x_e = x_e + eps_vec
        applied = True
    if not np.isfinite(x_e @ x_e) or x_e @ x_e == 0.0:
        raise ConfigurationError("operating point has zero norm even after the epsilon shift")

    F = np.asarray(sys.drift(x_e), dtype=float)
    G = np.asarray(sys.input_field(x_e), dtype=float)
    J = drift_jacobian(sys, x_e)

    A = np.empty((n, n))
    for i in range(n):
        A[i] = J[i] + correction_term(F[i], J[i], x_e)
    B = G.reshape(n, 1).copy()

    if sys.mechanical:
        A[:q] = 0.0
        A[:q, q:] = np.eye(q)
        B[:q] = 0.0

    for arr in (A, B, x_e):
        arr.setflags(write=False)
    return LinearModel(
        A=A,
        B=B,
        E=sys.output_matrix,
        x_e=x_e,
        u_e=0.0,
        epsilon_applied=applied,
        epsilon=eps_vec,
    )


def controllability_matrix(A, B) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    cols = [B]
    for _ in range(A.shape[0] - 1):
        cols.append(A @ cols[-1])
    return np.hstack(cols)


def controllability(model: LinearModel) -> ControllabilityReport:
    A, B = model.A, model.B
    n = A.shape[0]
    if A.shape != (n, n) or B.shape[0] != n:
        raise ContractError(f"incompatible shapes A {A.shape}, B {B.shape}")
    Mc = controllability_matrix(A, B)
    sv = np.linalg.svd(Mc, compute_uv=False)
    tol = sv[0] * max(Mc.shape) * np.finfo(float).eps if sv.size else 0.0
    rank = int(np.sum(sv > tol))
    det = float(np.linalg.det(Mc)) if Mc.shape[0] == Mc.shape[1] else float("nan")
    return ControllabilityReport(
        Mc=Mc,
        rank=rank,
        determinant=det,
        singular_values=tuple(float(s) for s in sv),
        controllable=rank == n,
    )
