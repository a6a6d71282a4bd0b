"""Continuous-time LQR design and the state-feedback to PD gain mapping.

``solve_care`` returns the stabilizing solution of

    A'P + PA - P B R^-1 B' P + Q = 0

via the stable invariant subspace of the Hamiltonian matrix (ordered real
Schur form). If the ordered decomposition fails, or its solution misses the
residual target, Newton-Kleinman iteration takes over, warm-started from the
Schur solution when it is stabilizing and otherwise from a gain that shifts
the non-stable open-loop eigenvalues into the left half-plane.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
from scipy import signal

from .errors import ContractError, DesignError
from .linearize import LinearModel, controllability_matrix

log = logging.getLogger(__name__)

MAX_ITERATIONS = 200
RESIDUAL_TARGET = 1e-10
RESIDUAL_ACCEPT = 1e-9

DEFAULT_Q = (100.0, 100.0, 1.0, 1.0)
DEFAULT_R = 1.0


@dataclass(frozen=True)
class LqrWeights:
    Q: np.ndarray
    R: float

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        if Q.ndim == 1:
            Q = np.diag(Q)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ContractError(f"Q must be square or a diagonal vector, got shape {Q.shape}")
        if np.any(Q != np.diag(np.diag(Q))):
            raise ContractError("Q must be diagonal")
        if np.any(np.diag(Q) < 0) or not np.all(np.isfinite(Q)):
            raise ContractError("Q diagonal entries must be finite and nonnegative")
        R = float(self.R)
        if not (R > 0 and np.isfinite(R)):
            raise ContractError(f"R must be positive, got {self.R!r}")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)

    @classmethod
    def default(cls, n: int = 4) -> "LqrWeights":
        if n == len(DEFAULT_Q):
            return cls(np.array(DEFAULT_Q), DEFAULT_R)
        return cls(np.ones(n), DEFAULT_R)


@dataclass(frozen=True)
class GainSet:
    """State feedback ``K = [K_p | K_d]`` and its PD/feedforward view."""

    K: np.ndarray

    def __post_init__(self):
        K = np.asarray(self.K, dtype=float).ravel()
        if K.size == 0 or K.size % 2:
            raise ContractError(f"K must have an even, nonzero length, got {K.size}")
        K.setflags(write=False)
        object.__setattr__(self, "K", K)

    @classmethod
    def from_pd(cls, K_p, K_d) -> "GainSet":
        K_p = np.asarray(K_p, dtype=float).ravel()
        K_d = np.asarray(K_d, dtype=float).ravel()
        if K_p.shape != K_d.shape:
            raise ContractError("K_p and K_d must have the same length")
        return cls(np.concatenate([K_p, K_d]))

    @property
    def q(self) -> int:
        return self.K.size // 2

    @property
    def K_p(self) -> np.ndarray:
        return self.K[: self.q]

    @property
    def K_d(self) -> np.ndarray:
        return self.K[self.q :]

    @property
    def K_ref(self) -> np.ndarray:
        return self.K_p

    def to_dict(self) -> dict:
        return {
            "K": self.K.tolist(),
            "K_p": self.K_p.tolist(),
            "K_d": self.K_d.tolist(),
            "K_ref": self.K_ref.tolist(),
        }


def care_residual(A, B, Q, R, P) -> float:
    """Frobenius norm of the Riccati residual scaled by ``max(1, |P|_F)``."""
    A, B, Q, P = (np.asarray(m, dtype=float) for m in (A, B, Q, P))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    res = A.T @ P + P @ A - P @ B @ np.linalg.solve(R, B.T @ P) + Q
    return float(np.linalg.norm(res) / max(1.0, np.linalg.norm(P)))


def _is_hurwitz(M) -> bool:
    return bool(np.max(np.linalg.eigvals(M).real) < 0)


def _schur_care(A, B, Q, R):
    n = A.shape[0]
    S = B @ np.linalg.solve(R, B.T)
    H = np.block([[A, -S], [-Q, -A.T]])
    # balance the Hamiltonian so the ordered Schur form is better conditioned
    Hb, T = la.matrix_balance(H, permute=False)
    _, Z, sdim = la.schur(Hb, output="real", sort="lhp")
    if sdim != n:
        raise la.LinAlgError(f"found {sdim} stable Hamiltonian eigenvalues, expected {n}")
    V = T @ Z[:, :n]
    P = np.linalg.solve(V[:n].T, V[n:].T).T
    return (P + P.T) / 2


def stabilizing_gain(A, B, margin: float = 1.0) -> np.ndarray:
    """A gain ``K0`` with ``A - B K0`` Hurwitz.

    Stable eigenvalues of ``A`` are kept; every eigenvalue with real part
    ``>= 0`` is shifted to ``-(Re + margin)``. The gain is obtained by pole
    placement.
    """
    lam = np.linalg.eigvals(A)
    target = np.where(lam.real < 0, lam, -(np.abs(lam.real) + margin) + 1j * lam.imag)
    # single-input placement needs distinct poles
    for i in range(target.size):
        while np.any(np.isclose(target[:i], target[i], rtol=1e-6, atol=1e-6)):
            target[i] -= 0.1 * margin
    return signal.place_poles(A, B, target).gain_matrix


def _newton_kleinman(A, B, Q, R, K0):
    Rinv_Bt = np.linalg.solve(R, B.T)
    K = np.array(K0, dtype=float)
    P = None
    for it in range(MAX_ITERATIONS):
        Acl = A - B @ K
        P = la.solve_continuous_lyapunov(Acl.T, -(Q + K.T @ R @ K))
        P = (P + P.T) / 2
        K = Rinv_Bt @ P
        res = care_residual(A, B, Q, R, P)
        if res < RESIDUAL_TARGET:
            log.debug("Newton-Kleinman converged in %d iterations", it + 1)
            return P, res
    return P, care_residual(A, B, Q, R, P)


def solve_care(A, B, weights: LqrWeights, method: str = "schur") -> np.ndarray:
    """Stabilizing solution ``P`` of the CARE.

    ``method`` is ``"schur"`` (Hamiltonian invariant subspace, with
    Newton-Kleinman refinement as fallback) or ``"newton"`` (Newton-Kleinman
    from the eigenvalue-shift gain only).
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    B = np.asarray(B, dtype=float).reshape(n, -1)
    Q = weights.Q
    R = np.atleast_2d(weights.R)
    if A.shape != (n, n) or Q.shape != (n, n):
        raise ContractError(f"shape mismatch: A {A.shape}, B {B.shape}, Q {Q.shape}")

    Mc = controllability_matrix(A, B)
    sv = np.linalg.svd(Mc, compute_uv=False)
    if np.sum(sv > sv[0] * n * np.finfo(float).eps) < n:
        raise DesignError("pair (A, B) is not controllable; no stabilizing LQR design")

    P = None
    if method == "schur":
        try:
            P = _schur_care(A, B, Q, R)
        except (la.LinAlgError, np.linalg.LinAlgError) as exc:
            log.info("ordered Schur solve failed (%s); using Newton-Kleinman", exc)
        else:
            K = np.linalg.solve(R, B.T @ P)
            if care_residual(A, B, Q, R, P) < RESIDUAL_TARGET and _is_hurwitz(A - B @ K):
                return P
            log.info("refining Schur solution with Newton-Kleinman")
    elif method != "newton":
        raise ContractError(f"unknown CARE method {method!r}")

    if P is not None and _is_hurwitz(A - B @ np.linalg.solve(R, B.T @ P)):
        K0 = np.linalg.solve(R, B.T @ P)
    else:
        K0 = stabilizing_gain(A, B)
        if not _is_hurwitz(A - B @ K0):
            raise DesignError("could not construct an initial stabilizing gain")
    P, res = _newton_kleinman(A, B, Q, R, K0)
    if not res < RESIDUAL_ACCEPT:
        raise DesignError(f"CARE solver did not converge (residual {res:.3e})", residual=res)
    return P


def lqr_gain(A, B, weights: LqrWeights, method: str = "schur") -> GainSet:
    """Optimal gain ``K = R^-1 B' P`` split into ``K_p`` (positions) and ``K_d``."""
    P = solve_care(A, B, weights, method=method)
    B = np.asarray(B, dtype=float).reshape(P.shape[0], -1)
    K = np.linalg.solve(np.atleast_2d(weights.R), B.T @ P)
    gains = GainSet(K.ravel())
    if not _is_hurwitz(np.asarray(A) - B @ gains.K[None, :]):
        raise DesignError("LQR closed loop is not Hurwitz")
    return gains


def design(model: LinearModel, weights: LqrWeights | None = None, method: str = "schur"):
    """Run :func:`lqr_gain` on a linear model; returns ``(gains, P, closed-loop eigenvalues)``."""
    weights = weights or LqrWeights.default(model.n)
    P = solve_care(model.A, model.B, weights, method=method)
    K = np.linalg.solve(np.atleast_2d(weights.R), model.B.T @ P)
    gains = GainSet(K.ravel())
    eig = np.linalg.eigvals(model.A - model.B @ gains.K[None, :])
    if not np.max(eig.real) < 0:
        raise DesignError("LQR closed loop is not Hurwitz")
    return gains, P, eig
