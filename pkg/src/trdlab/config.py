"""JSON experiment configuration: schema, validation with field paths,
and construction of the model objects (system, grid, initial data,
stepper settings) an experiment run needs.

Schema (all keys at the top level):

    {
      "system":  {"m": 3, "alpha": [1, 1, 1], "d": [1.0, 1.0, 0.0]},
      "grid":    {"lengths": [1.0], "cells": [128]},
      "initial": [  // one entry per species, evaluated on cell centers
        {"kind": "constant", "value": 2.0},
        {"kind": "cosine", "base": 1.0, "amplitude": 0.2, "modes": [1]},
        {"kind": "expression", "formula": "1.0 + 0.3*cos(pi*x)"}
      ],
      "stepper": {"dt": 0.02, "splitting": "lie", ...},
      "n_values": [1, 10, 100, "inf"],
      "t_final": 50.0,
      "p_values": [4.0],
      "seed": 0
    }

Expression initial data is evaluated with the coordinate arrays (x, and
y in 2D) plus a small math namespace; smoothness of the profile is the
author's responsibility.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields as dc_fields

import numpy as np

from .errors import ConfigError
from .fields import FieldSet
from .grid import Grid
from .model import TriangularSystem
from .stepper import StepperConfig

__all__ = ["ExperimentConfig", "parse_config", "load_config", "build_initial"]

_EXPR_NAMESPACE = {
    "pi": math.pi,
    "e": math.e,
    "cos": np.cos,
    "sin": np.sin,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "minimum": np.minimum,
    "maximum": np.maximum,
}


@dataclass(frozen=True)
class ExperimentConfig:
    system: TriangularSystem
    grid: Grid
    initial: tuple[dict, ...]  # validated per-species specs
    stepper: StepperConfig
    n_values: tuple[float, ...]  # math.inf encodes the limit system
    t_final: float
    p_values: tuple[float, ...] = (4.0,)
    seed: int = 0
    label: str = "run"


def _require(data: dict, key: str, path: str):
    if key not in data:
        raise ConfigError(f"{path}.{key}", "missing required field")
    return data[key]


def _parse_n(value, path: str) -> float:
    if isinstance(value, str):
        if value.lower() in ("inf", "+inf", "infinity"):
            return math.inf
        raise ConfigError(path, f"unrecognized n value {value!r}")
    n = float(value)
    if n <= 0:
        raise ConfigError(path, "n must be positive")
    return n


def _parse_system(data, path: str) -> TriangularSystem:
    if not isinstance(data, dict):
        raise ConfigError(path, "expected an object")
    m = _require(data, "m", path)
    alpha = _require(data, "alpha", path)
    d = _require(data, "d", path)
    try:
        return TriangularSystem(m=int(m), alpha=tuple(float(a) for a in alpha), d=tuple(float(v) for v in d))
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from exc


def _parse_grid(data, path: str) -> Grid:
    if not isinstance(data, dict):
        raise ConfigError(path, "expected an object")
    lengths = _require(data, "lengths", path)
    cells = _require(data, "cells", path)
    try:
        return Grid(lengths=tuple(float(v) for v in lengths), cells=tuple(int(v) for v in cells))
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from exc


def _validate_initial_spec(spec, path: str) -> dict:
    if not isinstance(spec, dict):
        raise ConfigError(path, "expected an object")
    kind = _require(spec, "kind", path)
    if kind == "constant":
        value = float(_require(spec, "value", path))
        if value < 0:
            raise ConfigError(f"{path}.value", "initial data must be nonnegative")
        return {"kind": kind, "value": value}
    if kind == "cosine":
        base = float(_require(spec, "base", path))
        amplitude = float(spec.get("amplitude", 0.0))
        modes = tuple(int(k) for k in spec.get("modes", (1,)))
        if any(k < 0 for k in modes):
            raise ConfigError(f"{path}.modes", "mode indices must be nonnegative")
        if base - abs(amplitude) < 0:
            raise ConfigError(path, "cosine profile dips below zero (base < |amplitude|)")
        return {"kind": kind, "base": base, "amplitude": amplitude, "modes": modes}
    if kind == "expression":
        formula = _require(spec, "formula", path)
        if not isinstance(formula, str):
            raise ConfigError(f"{path}.formula", "expected a string")
        return {"kind": kind, "formula": formula}
    raise ConfigError(f"{path}.kind", f"unknown initial-data kind {kind!r}")


def parse_config(data: dict, label: str = "run") -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("$", "top level must be an object")
    known = {f.name for f in dc_fields(ExperimentConfig)} | {"system", "grid", "initial", "stepper"}
    for key in data:
        if key not in known:
            raise ConfigError(f"$.{key}", "unknown field")
    system = _parse_system(_require(data, "system", "$"), "$.system")
    grid = _parse_grid(_require(data, "grid", "$"), "$.grid")

    raw_initial = _require(data, "initial", "$")
    if not isinstance(raw_initial, list) or len(raw_initial) != system.m:
        raise ConfigError("$.initial", f"expected a list of {system.m} per-species specs")
    initial = tuple(
        _validate_initial_spec(spec, f"$.initial[{i}]") for i, spec in enumerate(raw_initial)
    )

    stepper_raw = _require(data, "stepper", "$")
    if not isinstance(stepper_raw, dict):
        raise ConfigError("$.stepper", "expected an object")
    try:
        stepper = StepperConfig(**stepper_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError("$.stepper", str(exc)) from exc

    raw_n = _require(data, "n_values", "$")
    if not isinstance(raw_n, list) or not raw_n:
        raise ConfigError("$.n_values", "expected a nonempty list")
    n_values = tuple(_parse_n(v, f"$.n_values[{i}]") for i, v in enumerate(raw_n))

    t_final = float(_require(data, "t_final", "$"))
    if t_final < 0:
        raise ConfigError("$.t_final", "t_final must be nonnegative")

    p_values = tuple(float(p) for p in data.get("p_values", (4.0,)))
    if any(p < 1 for p in p_values):
        raise ConfigError("$.p_values", "Lebesgue exponents must be >= 1")

    return ExperimentConfig(
        system=system,
        grid=grid,
        initial=initial,
        stepper=stepper,
        n_values=n_values,
        t_final=t_final,
        p_values=p_values,
        seed=int(data.get("seed", 0)),
        label=str(data.get("label", label)),
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError("$", f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON: {exc}") from exc
    return parse_config(data)


def _evaluate_species(spec: dict, grid: Grid) -> np.ndarray:
    if spec["kind"] == "constant":
        return np.full(grid.shape, spec["value"])
    if spec["kind"] == "cosine":
        out = np.full(grid.shape, spec["base"])
        profile = np.ones(grid.shape)
        for axis, L in enumerate(grid.lengths):
            k = spec["modes"][axis] if axis < len(spec["modes"]) else 0
            shape = [1] * len(grid.lengths)
            shape[axis] = -1
            profile = profile * np.cos(k * math.pi * grid.axis_centers(axis) / L).reshape(shape)
        return out + spec["amplitude"] * profile
    # expression table, evaluated on cell centers
    names = dict(_EXPR_NAMESPACE)
    coords = grid.centers()
    names["x"] = coords[0]
    if len(coords) > 1:
        names["y"] = coords[1]
    try:
        values = eval(spec["formula"], {"__builtins__": {}}, names)  # noqa: S307 - sandboxed namespace
    except Exception as exc:
        raise ConfigError("$.initial", f"expression failed to evaluate: {exc}") from exc
    return np.broadcast_to(np.asarray(values, dtype=float), grid.shape).copy()


def build_initial(config: ExperimentConfig) -> FieldSet:
    values = np.stack([_evaluate_species(spec, config.grid) for spec in config.initial])
    if values.min() < 0:
        raise ConfigError("$.initial", f"initial data dips below zero (min {values.min():g})")
    return FieldSet(config.system, config.grid, values)
