"""Optimization-based linearization, LQR design and PD realization for
single-input mechanical systems, with a two-wheeled balancing robot built in."""

from .control import (
    DiscretePdController,
    DiscretePdState,
    PdController,
    Saturation,
    SfrController,
    control_pd_continuous,
    control_sfr_ffr,
    pd_error_signals,
    saturate,
    step_discrete_pd,
)
from .errors import (
    ConfigurationError,
    ContractError,
    DesignError,
    DivergenceError,
    NumericalDomainError,
    SimoLqrError,
)
from .linearize import (
    ControllabilityReport,
    LinearModel,
    controllability,
    controllability_matrix,
    linearize,
)
from .lqr import GainSet, LqrWeights, care_residual, design, lqr_gain, solve_care
from .model import AffineSystem, drift_jacobian, evaluate_dynamics, numeric_jacobian
from .robot import RobotParams, robot_drift, robot_dynamics, robot_input_field, robot_jacobian, robot_system
from .sim import ScenarioConfig, Trajectory, rk4_step, run_scenario, settling_metrics, simulate

__version__ = "0.1.0"
