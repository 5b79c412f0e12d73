"""Experiment orchestration: single scenarios across the n list,
convergence-in-n studies, and mesh/timestep self-convergence studies,
with CSV/JSON artifact emission.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, build_initial
from .diagnostics import DiagnosticsRecord, entropy_balance_check
from .fields import FieldSet
from .kinetics import RegularizedRates
from .stepper import StepperConfig, diffusion_substep, run

__all__ = [
    "run_single",
    "run_scenario",
    "study_n",
    "study_mesh",
    "mesh_order_study",
    "dt_order_study",
]

SUMMARY_SCHEMA_VERSION = 1


def _n_label(n: float) -> str:
    return "inf" if math.isinf(n) else f"{n:g}"


def run_single(config: ExperimentConfig, n: float, snapshots: list | None = None):
    """One stepper run at regularization level n; optionally collects
    (time, values) snapshots at the record cadence."""
    initial = build_initial(config)
    rates = RegularizedRates(config.system, n)
    observers = ()
    if snapshots is not None:
        observers = (lambda state, rec: snapshots.append((state.time, state.fields.values.copy())),)
    return run(
        initial,
        config.stepper,
        rates,
        config.t_final,
        observers=observers,
        p_values=config.p_values,
    )


def _write_csv(path: Path, records: list[DiagnosticsRecord], m: int, p_values):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DiagnosticsRecord.csv_header(m, p_values))
        for rec in records:
            writer.writerow([repr(v) for v in rec.csv_row()])


def _entropy_tolerance(config: ExperimentConfig) -> float:
    dt = config.stepper.dt
    h2 = sum(h * h for h in config.grid.h)
    return config.stepper.entropy_tolerance_factor * (dt * dt + h2)


def _per_run_summary(config: ExperimentConfig, result) -> dict:
    records = result.records
    balance = entropy_balance_check(records, _entropy_tolerance(config))
    final = records[-1] if records else None
    return {
        "final_time": result.final_state.time,
        "steps": result.final_state.step_count,
        "entropy_initial": result.tracker.e0,
        "entropy_final": final.entropy if final else result.tracker.e0,
        "entropy_balance": balance,
        "equilibrium_residual": result.equilibrium_residual,
        "min_value": min((r.min_value for r in records), default=0.0),
        "max_pair_mass_drift_rel": max((r.pair_mass_drift_rel for r in records), default=0.0),
        "max_degenerate_pair_dev": max((r.degenerate_pair_dev for r in records), default=0.0),
        "max_a2_sum_dev": max((r.a2_sum_dev for r in records), default=0.0),
        "mass_total_final": final.mass_total if final else None,
        "m2_bound": result.tracker.m2,
        "m2_exceeded": any(r.m2_flag for r in records),
        "clamp_count": result.clamp_count,
        "clamp_worst": result.clamp_worst,
        "final_sup": final.sup.tolist() if final else None,
        "final_l1": final.l1.tolist() if final else None,
    }


def run_scenario(config: ExperimentConfig, out_dir, threads: int = 1) -> dict:
    """Execute the scenario once per n value; writes diagnostics_<n>.csv
    per run and a summary.json.  Raises InvariantBreach (from the
    stepper) if any hard invariant fails."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def one(n):
        return n, run_single(config, n)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, config.n_values))
    else:
        results = [one(n) for n in config.n_values]

    summary = {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "label": config.label,
        "system": {"m": config.system.m, "alpha": list(config.system.alpha), "d": list(config.system.d)},
        "grid": {"lengths": list(config.grid.lengths), "cells": list(config.grid.cells)},
        "t_final": config.t_final,
        "runs": {},
    }
    all_ok = True
    for n, result in results:
        label = _n_label(n)
        _write_csv(out / f"diagnostics_{label}.csv", result.records, config.system.m, config.p_values)
        per = _per_run_summary(config, result)
        summary["runs"][label] = per
        all_ok = all_ok and per["entropy_balance"]["ok"]
    summary["ok"] = all_ok
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    return summary


def study_n(config: ExperimentConfig, out_dir, threads: int = 1) -> dict:
    """Convergence-in-n study: identical scenarios per n, sup-over-
    space-time differences between consecutive n runs and against the
    limit system, plus the final-time gap to the limit run."""
    if len(config.n_values) < 2:
        raise ValueError("study-n needs at least two n values")
    n_values = sorted(config.n_values)
    if not math.isinf(n_values[-1]):
        n_values = n_values + [math.inf]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def one(n):
        snaps: list = []
        result = run_single(config, n, snapshots=snaps)
        return n, result, snaps

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(one, n_values))
    else:
        runs = [one(n) for n in n_values]

    snaps_by_n = {n: snaps for n, _, snaps in runs}

    def spacetime_gap(na, nb):
        sa, sb = snaps_by_n[na], snaps_by_n[nb]
        assert len(sa) == len(sb)
        return max(float(np.abs(va - vb).max()) for (_, va), (_, vb) in zip(sa, sb))

    limit = n_values[-1]
    consecutive = [
        {
            "n_low": _n_label(na),
            "n_high": _n_label(nb),
            "sup_diff": spacetime_gap(na, nb),
        }
        for na, nb in zip(n_values[:-1], n_values[1:])
    ]
    gaps_to_limit = {
        _n_label(n): spacetime_gap(n, limit) for n in n_values[:-1]
    }
    diffs = [c["sup_diff"] for c in consecutive]
    monotone = all(b <= a * (1.0 + 1e-12) for a, b in zip(diffs[:-1], diffs[1:]))
    final_gap = float(
        np.abs(snaps_by_n[n_values[-2]][-1][1] - snaps_by_n[limit][-1][1]).max()
    )
    table = {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "label": config.label,
        "n_values": [_n_label(n) for n in n_values],
        "consecutive_sup_diffs": consecutive,
        "gaps_to_limit": gaps_to_limit,
        "final_gap": final_gap,
        "monotone_decreasing": monotone,
        "ok": monotone,
    }
    for n, result, _ in runs:
        _write_csv(out / f"diagnostics_{_n_label(n)}.csv", result.records, config.system.m, config.p_values)
    with open(out / "summary.json", "w") as fh:
        json.dump(table, fh, indent=2)
    return table


def _restrict(values: np.ndarray, factor: int = 2) -> np.ndarray:
    """Cell-average restriction of a fine cell-centered array onto the
    coarse mesh (second-order accurate for smooth fields)."""
    out = values
    for axis in range(1, values.ndim):  # axis 0 is the species index
        n = out.shape[axis]
        new_shape = out.shape[:axis] + (n // factor, factor) + out.shape[axis + 1 :]
        out = out.reshape(new_shape).mean(axis=axis + 1)
    return out


def _final_fields(config: ExperimentConfig, pure_diffusion: bool) -> np.ndarray:
    if not pure_diffusion:
        return run_single(config, config.n_values[-1]).final_state.fields.values
    initial = build_initial(config)
    n_steps = max(1, round(config.t_final / config.stepper.dt))
    dt = config.t_final / n_steps
    state = initial
    for _ in range(n_steps):
        state = diffusion_substep(state, dt)
    return state.values


def mesh_order_study(config: ExperimentConfig, levels: int = 3, pure_diffusion: bool = False) -> dict:
    """Self-convergence order in h: run at cells, 2*cells, 4*cells, ...
    compare successive solutions at the final time after restriction."""
    if levels < 3:
        raise ValueError("need at least 3 mesh levels")
    finals = []
    for level in range(levels):
        cells = tuple(c * 2**level for c in config.grid.cells)
        cfg = ExperimentConfig(
            system=config.system,
            grid=type(config.grid)(lengths=config.grid.lengths, cells=cells),
            initial=config.initial,
            stepper=config.stepper,
            n_values=config.n_values,
            t_final=config.t_final,
            p_values=config.p_values,
            seed=config.seed,
            label=config.label,
        )
        finals.append(_final_fields(cfg, pure_diffusion))
    errors = [
        float(np.abs(_restrict(fine) - coarse).max())
        for coarse, fine in zip(finals[:-1], finals[1:])
    ]
    orders = [
        math.log2(e0 / e1) if e1 > 0 else math.inf for e0, e1 in zip(errors[:-1], errors[1:])
    ]
    return {"errors": errors, "orders": orders, "levels": levels}


def dt_order_study(config: ExperimentConfig, splitting: str | None = None, levels: int = 3) -> dict:
    """Self-convergence order in dt at a fixed mesh: run at dt, dt/2,
    dt/4, ... and compare final-time fields."""
    if levels < 3:
        raise ValueError("need at least 3 timestep levels")
    finals = []
    for level in range(levels):
        stepper = StepperConfig(
            **{
                **config.stepper.__dict__,
                "dt": config.stepper.dt / 2**level,
                **({"splitting": splitting} if splitting else {}),
            }
        )
        cfg = ExperimentConfig(
            system=config.system,
            grid=config.grid,
            initial=config.initial,
            stepper=stepper,
            n_values=config.n_values,
            t_final=config.t_final,
            p_values=config.p_values,
            seed=config.seed,
            label=config.label,
        )
        finals.append(run_single(cfg, cfg.n_values[-1]).final_state.fields.values)
    errors = [
        float(np.abs(a - b).max()) for a, b in zip(finals[:-1], finals[1:])
    ]
    orders = [
        math.log2(e0 / e1) if e1 > 0 else math.inf for e0, e1 in zip(errors[:-1], errors[1:])
    ]
    return {
        "errors": errors,
        "orders": orders,
        "splitting": splitting or config.stepper.splitting,
        "dt_base": config.stepper.dt,
    }


def study_mesh(config: ExperimentConfig, out_dir, levels: int = 3) -> dict:
    """Mesh and timestep self-convergence report: spatial order on the
    scenario itself, temporal orders for both splittings."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spatial = mesh_order_study(config, levels=levels)
    lie = dt_order_study(config, splitting="lie", levels=levels)
    strang = dt_order_study(config, splitting="strang", levels=levels)
    table = {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "label": config.label,
        "spatial": spatial,
        "dt_lie": lie,
        "dt_strang": strang,
    }
    with open(out / "summary.json", "w") as fh:
        json.dump(table, fh, indent=2)
    return table
