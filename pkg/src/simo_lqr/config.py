"""Project configuration files (TOML) and plain-text system descriptions.

A project file looks like::

    [plant]
    kind = "balancing-robot"        # or "file"
    # file = "toy_system.toml"      # for kind = "file", relative to this file
    convention = "degrees"

    [plant.params]                  # robot parameter overrides
    m_n = 1.12

    [weights]
    Q = [100, 100, 1, 1]            # diagonal
    R = 1

    [linearize]
    equilibrium = [0, 0, 0, 0]      # display units (deg, m, deg/s, m/s)
    epsilon = 1e-4

    [simulation]                    # defaults for every scenario
    duration = 25.0
    dt = 0.001
    T_s = 0.1
    filter_n = 10.0

    [[scenarios]]
    name = "pd_discrete"
    controller = "pd_discrete"
    x0 = [10, 0, 0, 0]              # display units

    [output]
    dir = "results"

A system file describes a mechanical plant by its acceleration rows, written
as arithmetic in ``x1 .. xn`` and the usual math functions::

    [system]
    name = "pendulum"
    q = 1
    acceleration = ["-9.81 * sin(x1) - 0.1 * x2"]
    input_gain = ["1"]
"""

from __future__ import annotations

import ast
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigurationError
from .lqr import LqrWeights
from .model import AffineSystem, display_scale, from_display
from .robot import RobotParams, robot_system
from .sim import CONTROLLER_KINDS, DEFAULT_DT, DEFAULT_DURATION, ScenarioConfig

ROBOT_PLANT = "balancing-robot"
DEFAULT_OUTPUT_DIR = "simo_lqr_out"
OUTPUT_ENV = "SIMO_LQR_OUT"

_MATH_NAMES = {
    name: getattr(math, name)
    for name in (
        "sin", "cos", "tan", "asin", "acos", "atan", "atan2", "sinh", "cosh", "tanh",
        "exp", "log", "sqrt", "fabs", "pi", "e",
    )
}
_MATH_NAMES["abs"] = abs
_ALLOWED_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.Mod, ast.USub, ast.UAdd,
)


def compile_expression(text: str, n: int):
    """Compile ``text`` into ``f(x) -> float`` with ``x1 .. xn`` bound to ``x[0] .. x[n-1]``."""
    try:
        tree = ast.parse(str(text), mode="eval")
    except SyntaxError as exc:
        raise ConfigurationError(f"cannot parse expression {text!r}: {exc.msg}") from None
    state_names = {f"x{i + 1}" for i in range(n)}
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ConfigurationError(f"{text!r}: {type(node).__name__} is not allowed")
        if isinstance(node, ast.Name) and node.id not in state_names and node.id not in _MATH_NAMES:
            raise ConfigurationError(f"{text!r}: unknown name {node.id!r}")
        if isinstance(node, ast.Call) and not isinstance(node.func, ast.Name):
            raise ConfigurationError(f"{text!r}: only plain function calls are allowed")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ConfigurationError(f"{text!r}: only numeric constants are allowed")
    code = compile(tree, "<system>", "eval")

    def evaluate(x):
        scope = dict(_MATH_NAMES)
        scope.update((f"x{i + 1}", float(v)) for i, v in enumerate(x))
        return eval(code, {"__builtins__": {}}, scope)

    return evaluate


def _read_toml(path: Path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid TOML ({exc})") from None


def load_system_file(path) -> AffineSystem:
    """Build a mechanical :class:`AffineSystem` from a system description file."""
    path = Path(path)
    table = _read_toml(path).get("system")
    if not isinstance(table, dict):
        raise ConfigurationError(f"{path}: missing [system] table")
    q = table.get("q")
    if not isinstance(q, int) or q < 1:
        raise ConfigurationError(f"{path}: q must be a positive integer")
    n = 2 * q
    rows = {}
    for key in ("acceleration", "input_gain"):
        exprs = table.get(key)
        if not isinstance(exprs, list) or len(exprs) != q:
            raise ConfigurationError(f"{path}: {key} must be a list of {q} expressions")
        rows[key] = [compile_expression(e, n) for e in exprs]
    units = table.get("units")
    if units is not None and len(units) != n:
        raise ConfigurationError(f"{path}: units must list {n} labels")
    acc, gain = rows["acceleration"], rows["input_gain"]
    return AffineSystem.from_mechanical(
        q,
        lambda x: np.array([f(x) for f in acc], dtype=float),
        lambda x: np.array([f(x) for f in gain], dtype=float),
        name=str(table.get("name", path.stem)),
        units=tuple(units) if units else None,
        input_unit=str(table.get("input_unit", "")),
    )


@dataclass
class ProjectConfig:
    plant: AffineSystem
    weights: LqrWeights
    weights_defaulted: bool
    equilibrium: np.ndarray
    epsilon: Optional[float]
    scenarios: list
    output_dir: Optional[str] = None
    robot_params: Optional[RobotParams] = None
    source: Optional[Path] = None
    notes: list = field(default_factory=list)


def _float_list(value, length, what):
    if not isinstance(value, list) or len(value) != length:
        raise ConfigurationError(f"{what} must be a list of {length} numbers")
    try:
        out = np.array([float(v) for v in value])
    except (TypeError, ValueError):
        raise ConfigurationError(f"{what} must contain numbers") from None
    if not np.all(np.isfinite(out)):
        raise ConfigurationError(f"{what} must be finite")
    return out


def default_scenarios(plant: AffineSystem, settings: dict) -> list:
    x0 = np.zeros(plant.n)
    x0[0] = 10.0 if plant.name == ROBOT_PLANT else 0.1
    return [dict(settings, name=kind, controller=kind, x0=x0.tolist()) for kind in CONTROLLER_KINDS]


def build_scenario(plant: AffineSystem, entry: dict) -> ScenarioConfig:
    known = {"name", "controller", "x0", "reference", "duration", "dt", "T_s", "filter_n",
             "saturation", "u_limits"}
    unknown = set(entry) - known
    if unknown:
        raise ConfigurationError(f"unknown scenario key(s): {sorted(unknown)}")
    if "controller" not in entry:
        raise ConfigurationError("scenario needs a controller")
    x0 = from_display(plant, _float_list(entry.get("x0"), plant.n, "x0"))
    reference = entry.get("reference")
    if reference is not None:
        reference = _float_list(reference, plant.q, "reference") / display_scale(plant)[: plant.q]
    kwargs = {k: entry[k] for k in ("duration", "dt", "T_s", "filter_n", "saturation") if k in entry}
    for k in ("duration", "dt", "T_s", "filter_n"):
        if k in kwargs:
            try:
                kwargs[k] = float(kwargs[k])
            except (TypeError, ValueError):
                raise ConfigurationError(f"{k} must be a number") from None
    if "u_limits" in entry:
        kwargs["u_limits"] = tuple(_float_list(entry["u_limits"], 2, "u_limits"))
    return ScenarioConfig(
        controller=entry["controller"],
        x0=tuple(x0),
        reference=None if reference is None else tuple(reference),
        name=str(entry.get("name", "")),
        **kwargs,
    )


def load_config(path=None, overrides: Optional[dict] = None) -> ProjectConfig:
    """Read a project file (or defaults when ``path`` is None) and apply CLI overrides.

    ``overrides`` may hold ``equilibrium`` (display units), ``duration``,
    ``dt``, ``T_s`` and ``filter_n``; the latter four apply to every scenario.
    """
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    data = {}
    base = Path.cwd()
    if path is not None:
        path = Path(path)
        data = _read_toml(path)
        base = path.parent

    plant_cfg = data.get("plant", {})
    kind = plant_cfg.get("kind", ROBOT_PLANT)
    params = None
    if kind == ROBOT_PLANT:
        overrides_p = dict(plant_cfg.get("params", {}))
        if "convention" in plant_cfg:
            overrides_p["convention"] = plant_cfg["convention"]
        params = RobotParams().with_overrides(**overrides_p)
        plant = robot_system(params)
    elif kind == "file":
        if "file" not in plant_cfg:
            raise ConfigurationError("plant.kind = 'file' needs plant.file")
        plant = load_system_file(base / plant_cfg["file"])
    else:
        raise ConfigurationError(f"unknown plant kind {kind!r}")

    notes = []
    w = data.get("weights")
    if w is None:
        weights = LqrWeights.default(plant.n)
        defaulted = True
        notes.append(
            f"no [weights] given; using Q = diag({', '.join(f'{v:g}' for v in np.diag(weights.Q))}),"
            f" R = {weights.R:g}"
        )
    else:
        if "Q" not in w or "R" not in w:
            raise ConfigurationError("[weights] needs both Q and R")
        weights = LqrWeights(_float_list(w["Q"], plant.n, "weights.Q"), w["R"])
        defaulted = False

    lin = data.get("linearize", {})
    eq = overrides.get("equilibrium", lin.get("equilibrium", [0.0] * plant.n))
    equilibrium = from_display(plant, _float_list(list(eq), plant.n, "equilibrium"))
    epsilon = lin.get("epsilon")

    settings = dict(data.get("simulation", {}))
    for key in ("duration", "dt", "T_s", "filter_n"):
        if key in overrides:
            settings[key] = overrides[key]
    entries = data.get("scenarios")
    if entries is None:
        entries = default_scenarios(plant, settings)
    else:
        entries = [dict(settings, **e) for e in entries]
        for key in ("duration", "dt", "T_s", "filter_n"):
            if key in overrides:
                for e in entries:
                    e[key] = overrides[key]
    scenarios = [build_scenario(plant, e) for e in entries]
    names = [s.name for s in scenarios]
    if len(set(names)) != len(names):
        raise ConfigurationError(f"scenario names must be unique, got {names}")

    out = data.get("output", {}).get("dir")
    if out is not None:
        out = str(base / out)
    return ProjectConfig(
        plant=plant,
        weights=weights,
        weights_defaulted=defaulted,
        equilibrium=equilibrium,
        epsilon=epsilon,
        scenarios=scenarios,
        output_dir=out,
        robot_params=params,
        source=path,
        notes=notes,
    )


def resolve_output_dir(cli_value: Optional[str], config: ProjectConfig) -> Path:
    """``--out`` wins, then the config file, then ``$SIMO_LQR_OUT``, then a local default."""
    for candidate in (cli_value, config.output_dir, os.environ.get(OUTPUT_ENV)):
        if candidate:
            return Path(candidate)
    return Path(DEFAULT_OUTPUT_DIR)


__all__ = [
    "DEFAULT_DT",
    "DEFAULT_DURATION",
    "ProjectConfig",
    "compile_expression",
    "load_config",
    "load_system_file",
    "resolve_output_dir",
]
