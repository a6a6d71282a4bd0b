"""Control laws: state feedback with feedforward, the equivalent PD bank, and
the sampled PD with filtered derivative and output saturation.

With constant references, ``e = c_ref - E x`` and ``de/dt = -E xdot`` equal
the velocity states, so

    K_p e + K_d de/dt = K_p c_ref - [K_p K_d] x

which is the state-feedback law with ``K = [K_p K_d]`` and ``K_ref = K_p``.

The controller classes at the bottom adapt these laws to the simulator:
``sample_time`` is ``None`` for laws evaluated at every integrator step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ConfigurationError, ContractError, NumericalDomainError
from .lqr import GainSet

DEFAULT_FILTER_N = 10.0
DEFAULT_SAMPLE_TIME = 0.1


@dataclass(frozen=True)
class Saturation:
    u_min: float = -12.0
    u_max: float = 12.0

    def __post_init__(self):
        if not self.u_min < self.u_max:
            raise ConfigurationError(f"saturation needs u_min < u_max, got {self.u_min}, {self.u_max}")


def saturate(u: float, sat: Saturation) -> float:
    return min(max(u, sat.u_min), sat.u_max)


def _vec(v, length: int, what: str) -> np.ndarray:
    v = np.asarray(v, dtype=float).ravel()
    if v.shape != (length,):
        raise ContractError(f"{what} must have length {length}, got {v.shape[0]}")
    return v


def control_sfr_ffr(x, c_ref, gains: GainSet) -> float:
    """``u = -K x + K_ref c_ref``."""
    x = _vec(x, gains.K.size, "state")
    c_ref = _vec(c_ref, gains.q, "reference")
    return float(-(gains.K @ x) + gains.K_ref @ c_ref)


def control_pd_continuous(e, e_dot, gains: GainSet) -> float:
    """``u = sum_j K_p_j e_j + K_d_j edot_j``."""
    e = _vec(e, gains.q, "error")
    e_dot = _vec(e_dot, gains.q, "error derivative")
    return float(gains.K_p @ e + gains.K_d @ e_dot)


def pd_error_signals(x, c_ref, q: int):
    """Error and its derivative for a constant reference: ``(c_ref - x[:q], -x[q:])``."""
    x = np.asarray(x, dtype=float)
    return np.asarray(c_ref, dtype=float) - x[:q], -x[q:]


@dataclass(frozen=True)
class DiscretePdState:
    """Memory of the sampled PD bank: filtered derivative and previous error."""

    gains: GainSet
    T_s: float = DEFAULT_SAMPLE_TIME
    filter_n: float = DEFAULT_FILTER_N
    saturation: Saturation = field(default_factory=Saturation)
    d_prev: Optional[np.ndarray] = None
    e_prev: Optional[np.ndarray] = None

    def __post_init__(self):
        if not (self.T_s > 0 and math.isfinite(self.T_s)):
            raise ConfigurationError(f"sample time must be positive, got {self.T_s}")
        if not (self.filter_n > 0 and math.isfinite(self.filter_n)):
            raise ConfigurationError(f"filter coefficient must be positive, got {self.filter_n}")
        q = self.gains.q
        for name in ("d_prev", "e_prev"):
            value = getattr(self, name)
            value = np.zeros(q) if value is None else _vec(value, q, name).copy()
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def beta(self) -> float:
        """Backward-Euler weight of the first-order derivative filter."""
        nt = self.filter_n * self.T_s
        return nt / (1.0 + nt)

    def reset(self) -> "DiscretePdState":
        return replace(self, d_prev=None, e_prev=None)


def step_discrete_pd(state: DiscretePdState, e_k):
    """One sample of the PD bank; returns ``(u, next_state)``.

    The raw difference quotient is low-pass filtered,
    ``d_k = (1 - beta) d_{k-1} + beta (e_k - e_{k-1}) / T_s``, and the output
    is clamped to the saturation limits.
    """
    e_k = _vec(e_k, state.gains.q, "error sample")
    if not np.all(np.isfinite(e_k)):
        raise NumericalDomainError(f"non-finite error sample {e_k.tolist()}")
    raw = (e_k - state.e_prev) / state.T_s
    d_k = (1.0 - state.beta) * state.d_prev + state.beta * raw
    u_raw = float(state.gains.K_p @ e_k + state.gains.K_d @ d_k)
    return saturate(u_raw, state.saturation), replace(state, d_prev=d_k, e_prev=e_k)


# -- simulator adapters -------------------------------------------------------


class Controller:
    kind = "controller"
    sample_time: Optional[float] = None

    def reset(self) -> None:
        pass

    def __call__(self, x: np.ndarray, c_ref: np.ndarray) -> float:
        raise NotImplementedError


class SfrController(Controller):
    """State feedback + feedforward; sampled with zero-order hold if ``sample_time`` is set."""

    def __init__(self, gains: GainSet, sample_time=None, saturation: Optional[Saturation] = None):
        self.gains = gains
        self.sample_time = sample_time
        self.saturation = saturation
        self.kind = "sfr_continuous" if sample_time is None else "sfr_discrete"

    def __call__(self, x, c_ref):
        u = control_sfr_ffr(x, c_ref, self.gains)
        return u if self.saturation is None else saturate(u, self.saturation)


class PdController(Controller):
    """Continuous PD bank using the exact error derivative ``-E xdot``."""

    kind = "pd_continuous"

    def __init__(self, gains: GainSet, saturation: Optional[Saturation] = None):
        self.gains = gains
        self.saturation = saturation

    def __call__(self, x, c_ref):
        e, e_dot = pd_error_signals(x, c_ref, self.gains.q)
        u = control_pd_continuous(e, e_dot, self.gains)
        return u if self.saturation is None else saturate(u, self.saturation)


class DiscretePdController(Controller):
    """Sampled PD bank; the filter memory is owned by this adapter."""

    kind = "pd_discrete"

    def __init__(self, gains: GainSet, sample_time=DEFAULT_SAMPLE_TIME,
                 filter_n=DEFAULT_FILTER_N, saturation: Optional[Saturation] = None):
        sat = saturation or Saturation(-math.inf, math.inf)
        self.initial = DiscretePdState(gains, sample_time, filter_n, sat)
        self.state = self.initial
        self.sample_time = sample_time

    def reset(self):
        self.state = self.initial.reset()

    def __call__(self, x, c_ref):
        e, _ = pd_error_signals(x, c_ref, self.state.gains.q)
        u, self.state = step_discrete_pd(self.state, e)
        return u
