"""File output: trajectory CSVs, the settling summary and JSON records.

Floats are written with ``repr`` so files round-trip exactly and identical
runs produce byte-identical output.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .linearize import LinearModel
from .model import AffineSystem, display_scale
from .sim import Trajectory

SUMMARY_FIELDS = (
    "scenario", "controller", "status", "diverged_at_s",
    "settling_x1_s", "settling_x2_s", "max_abs_u", "saturation_fraction",
)


def _label(prefix: str, unit: str) -> str:
    return f"{prefix}_{unit}" if unit else prefix


def trajectory_header(plant: AffineSystem) -> list:
    units = plant.units or ("",) * plant.n
    header = ["t"]
    header += [_label(f"x{i + 1}", units[i]) for i in range(plant.n)]
    header.append(_label("u", plant.input_unit))
    header += [_label(f"cref{j + 1}", units[j]) for j in range(plant.q)]
    return header


def trajectory_rows(plant: AffineSystem, traj: Trajectory):
    scale = display_scale(plant)
    X = traj.x * scale
    C = traj.c_ref * scale[: plant.q]
    for i in range(len(traj)):
        yield [repr(float(traj.t[i]))] + [repr(float(v)) for v in X[i]] + \
            [repr(float(traj.u[i]))] + [repr(float(v)) for v in C[i]]


def write_trajectory_csv(path, plant: AffineSystem, traj: Trajectory) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(trajectory_header(plant))
        writer.writerows(trajectory_rows(plant, traj))
    return path


def read_trajectory_csv(path):
    """Header and float matrix of a trajectory CSV."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_summary_csv(path, records: list) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_FIELDS)
        for rec in records:
            writer.writerow([_cell(rec.get(k)) for k in SUMMARY_FIELDS])
    return path


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def read_linear_model(path) -> LinearModel:
    data = json.loads(Path(path).read_text())
    return LinearModel.from_dict(data["model"] if "model" in data else data)
