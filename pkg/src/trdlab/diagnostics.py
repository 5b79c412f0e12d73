"""Run monitors: entropy, dissipation, norms, masses, invariant residuals,
and the report-style empirical estimate checks.

Constants that the underlying theory leaves non-constructive (duality and
integrability constants) are fitted from the run and reported; only their
stability is a testable statement, so those checks never hard-fail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import FieldSet
from .grid import gradient_energy
from .kinetics import RegularizedRates, entropy_kernel
from .model import DegeneracyClassification, classify

__all__ = [
    "DiagnosticsRecord",
    "DiagnosticsTracker",
    "entropy",
    "dissipation",
    "entropy_balance_check",
    "lp_norms",
    "duality_report",
    "l1_product_estimate_check",
]

_LOG_FLOOR = 1e-30  # keeps reported dissipation finite at vacuum states


def entropy(fields: FieldSet) -> float:
    """E = integral of sum_i alpha_i (a_i (ln a_i - 1) + 1) >= 0."""
    alpha = np.asarray(fields.system.alpha)
    kern = entropy_kernel(fields.values)
    weighted = np.tensordot(alpha, kern, axes=(0, 0))
    return float(weighted.sum() * fields.grid.cell_measure)


def dissipation(fields: FieldSet, rates: RegularizedRates) -> tuple[float, float, float]:
    """Returns (total, gradient_part, reaction_part).

    Gradient part: sum_i alpha_i d_i * 4 |grad sqrt(a_i)|^2 (the
    vacuum-safe form of |grad a_i|^2 / a_i).  Reaction part:
    (y - x) ln(y/x) / phi^n per cell with x = prod a_j^alpha_j, y = a_m;
    log arguments are floored at 1e-30 so vacuum states report a finite
    (conservatively truncated) value.
    """
    system = fields.system
    grad_part = 0.0
    for i in range(1, system.m + 1):
        w = system.alpha[i - 1] * system.d[i - 1]
        if w > 0.0:
            grad_part += w * gradient_energy(fields.species(i), weighted=True)
    x = np.asarray(rates.reactant_product(fields.values))
    y = fields.values[-1]
    phi = np.asarray(rates.phi(fields.values))
    term = (y - x) * np.log(np.maximum(y, _LOG_FLOOR) / np.maximum(x, _LOG_FLOOR)) / phi
    reaction_part = float(term.sum() * fields.grid.cell_measure)
    return grad_part + reaction_part, grad_part, reaction_part


def lp_norms(fields: FieldSet, exponents) -> dict[float, np.ndarray]:
    """Per-species spatial L^p norms; p may include math.inf."""
    out = {}
    meas = fields.grid.cell_measure
    flat = fields.values.reshape(fields.system.m, -1)
    for p in exponents:
        if math.isinf(p):
            out[p] = np.abs(flat).max(axis=1)
        else:
            if p < 1:
                raise ValueError("Lebesgue exponent must be >= 1")
            out[p] = (np.abs(flat) ** p * meas).sum(axis=1) ** (1.0 / p)
    return out


def m2_bound(system, e0: float, domain_measure: float) -> float:
    """M2 = max(alpha) e^2 |Omega| + (max alpha / min alpha) E(0); zero
    exponents are excluded from the min (weight-0 species carry no
    entropy)."""
    alphas = [a for a in system.alpha]
    pos = [a for a in alphas if a > 0]
    return max(alphas) * math.e**2 * domain_measure + (max(alphas) / min(pos)) * e0


@dataclass
class DiagnosticsRecord:
    time: float
    entropy: float
    dissipation: float
    dissipation_gradient: float
    dissipation_reaction: float
    diss_integral: float  # right-endpoint accumulation of D dt over steps
    min_value: float
    l1: np.ndarray  # per species
    l2: np.ndarray
    lp: dict[float, np.ndarray]
    sup: np.ndarray
    st_lp: dict[float, np.ndarray]  # (integral_0^t ||a||_p^p)^{1/p}
    pair_mass: np.ndarray  # integral of a_i + a_m, i < m
    pair_mass_drift_rel: float
    degenerate_pair_dev: float
    a2_sum_dev: float
    l1_product: np.ndarray  # running integral of a_i^2 + a_i a_m over Omega_t
    mass_total: float
    m2: float
    m2_flag: bool
    e0: float

    def csv_row(self) -> list[float]:
        row = [
            self.time,
            self.entropy,
            self.dissipation,
            self.diss_integral,
            self.min_value,
        ]
        m = len(self.l1)
        for i in range(m):
            row.extend([self.l1[i], self.l2[i]])
            for p in sorted(self.lp):
                row.append(self.lp[p][i])
            row.append(self.sup[i])
            for p in sorted(self.st_lp):
                row.append(self.st_lp[p][i])
        row.extend(self.pair_mass.tolist())
        row.extend(self.l1_product.tolist())
        row.extend(
            [
                self.pair_mass_drift_rel,
                self.degenerate_pair_dev,
                self.a2_sum_dev,
                self.mass_total,
                self.m2,
                float(self.m2_flag),
                self.e0,
            ]
        )
        return row

    @staticmethod
    def csv_header(m: int, p_values) -> list[str]:
        cols = ["time", "entropy", "dissipation", "diss_integral", "min_value"]
        for i in range(1, m + 1):
            cols.extend([f"l1_{i}", f"l2_{i}"])
            for p in sorted(p_values):
                cols.append(f"l{p:g}_{i}")
            cols.append(f"sup_{i}")
            for p in sorted(p_values):
                cols.append(f"stl{p:g}_{i}")
        cols.extend([f"pairmass_{i}" for i in range(1, m)])
        cols.extend([f"l1prod_{i}" for i in range(1, m)])
        cols.extend(
            [
                "pair_mass_drift_rel",
                "degenerate_pair_dev",
                "a2_sum_dev",
                "mass_total",
                "m2_bound",
                "m2_flag",
                "e0",
            ]
        )
        return cols


class DiagnosticsTracker:
    """Accumulates space-time norms and invariant references over a run
    and produces one DiagnosticsRecord per observation."""

    def __init__(self, rates: RegularizedRates, initial: FieldSet, p_values=(4.0,)):
        self.rates = rates
        self.system = rates.system
        self.p_values = tuple(p_values)
        self.classification: DegeneracyClassification = classify(self.system)
        self.e0 = entropy(initial)
        self.m2 = m2_bound(self.system, self.e0, initial.grid.measure)
        m = self.system.m
        meas = initial.grid.cell_measure
        self.pair_mass0 = np.array(
            [
                (initial.values[i] + initial.values[m - 1]).sum() * meas
                for i in range(m - 1)
            ]
        )
        lam1_react = sorted(self.classification.lambda1 - {m})
        self._deg_pairs = [
            (i, j, initial.values[i - 1] - initial.values[j - 1])
            for i, j in zip(lam1_react, lam1_react[1:])
        ]
        self._a2_sums = (
            [(i, initial.values[i - 1] + initial.values[m - 1]) for i in lam1_react]
            if m in self.classification.lambda1
            else []
        )
        self._st_accum = {p: np.zeros(m) for p in self.p_values}
        self._l1prod_accum = np.zeros(m - 1)
        self._last_time = 0.0

    def accumulate(self, fields: FieldSet, dt: float):
        """Advance the space-time integrals by one step of length dt
        (right-endpoint rule on the post-step state)."""
        meas = fields.grid.cell_measure
        flat = fields.values.reshape(self.system.m, -1)
        for p in self.p_values:
            self._st_accum[p] += (np.abs(flat) ** p * meas).sum(axis=1) * dt
        am = fields.values[-1]
        for i in range(self.system.m - 1):
            ai = fields.values[i]
            self._l1prod_accum[i] += (ai * ai + ai * am).sum() * meas * dt

    def observe(self, time: float, fields: FieldSet, diss_integral: float) -> DiagnosticsRecord:
        m = self.system.m
        meas = fields.grid.cell_measure
        norms = lp_norms(fields, (1.0, 2.0) + self.p_values + (math.inf,))
        d_tot, d_grad, d_reac = dissipation(fields, self.rates)
        pair_mass = np.array(
            [(fields.values[i] + fields.values[m - 1]).sum() * meas for i in range(m - 1)]
        )
        with np.errstate(divide="ignore", invalid="ignore"):
            drift = np.abs(pair_mass - self.pair_mass0) / np.maximum(
                np.abs(self.pair_mass0), 1e-300
            )
        deg_dev = max(
            (
                float(np.abs(fields.values[i - 1] - fields.values[j - 1] - off).max())
                for i, j, off in self._deg_pairs
            ),
            default=0.0,
        )
        a2_dev = max(
            (
                float(np.abs(fields.values[i - 1] + fields.values[m - 1] - ref).max())
                for i, ref in self._a2_sums
            ),
            default=0.0,
        )
        mass_total = float(fields.values.sum() * meas)
        return DiagnosticsRecord(
            time=time,
            entropy=entropy(fields),
            dissipation=d_tot,
            dissipation_gradient=d_grad,
            dissipation_reaction=d_reac,
            diss_integral=diss_integral,
            min_value=fields.min_value(),
            l1=norms[1.0],
            l2=norms[2.0],
            lp={p: norms[p] for p in self.p_values},
            sup=norms[math.inf],
            st_lp={p: self._st_accum[p] ** (1.0 / p) for p in self.p_values},
            pair_mass=pair_mass,
            pair_mass_drift_rel=float(drift.max()) if m > 1 else 0.0,
            degenerate_pair_dev=deg_dev,
            a2_sum_dev=a2_dev,
            l1_product=self._l1prod_accum.copy(),
            mass_total=mass_total,
            m2=self.m2,
            m2_flag=mass_total > self.m2 * (1.0 + 1e-9),
            e0=self.e0,
        )


def entropy_balance_check(records, tol: float) -> dict:
    """Verify E(t_k) + sum_{steps<=k} D dt <= E(0)(1 + tol) for all k,
    and that E is nonincreasing within the same tolerance.  The
    dissipation sum is the run's right-endpoint accumulation, the
    conservative discrete analogue for a decaying dissipation (the
    left-endpoint sum over-counts when the initial state has a vacuum
    species, where the pointwise dissipation diverges)."""
    if not records:
        return {"ok": True, "max_violation": 0.0, "tol": tol}
    e0 = records[0].e0
    worst = -math.inf
    worst_mono = -math.inf
    prev_e = e0
    for rec in records:
        worst = max(worst, rec.entropy + rec.diss_integral - e0 * (1.0 + tol))
        worst_mono = max(worst_mono, rec.entropy - prev_e - tol * abs(e0) - 1e-12)
        prev_e = rec.entropy
    return {
        "ok": worst <= 0.0 and worst_mono <= 0.0,
        "max_violation": max(worst, worst_mono),
        "tol": tol,
        "e0": e0,
    }


def duality_report(records, pair: tuple[int, int], p: float) -> dict:
    """Empirical smallest C with ||a_m||_{L^p(Omega_t)} <= C (1 + ||a_i||)
    over the run; the theoretical constant is non-constructive, so only
    the fitted value is reported."""
    i, m = pair
    best = 0.0
    for rec in records:
        if p not in rec.st_lp:
            raise ValueError(f"records do not track space-time L^{p}")
        num = rec.st_lp[p][m - 1]
        den = 1.0 + rec.st_lp[p][i - 1]
        best = max(best, float(num / den))
    return {"pair": pair, "p": p, "fitted_C": best, "n_records": len(records)}


def l1_product_estimate_check(records, i: int, rel_tol: float = 0.05) -> dict:
    """Fit integral_{Omega_T}(a_i^2 + a_i a_m) = c0 + c1 T over the run's
    checkpoints and report the relative fit residual; flags super-linear
    growth in T."""
    ts = np.array([rec.time for rec in records])
    vs = np.array([rec.l1_product[i - 1] for rec in records])
    if len(ts) < 3:
        return {"ok": True, "residual_rel": 0.0, "c0": 0.0, "c1": 0.0}
    A = np.vstack([np.ones_like(ts), ts]).T
    (c0, c1), *_ = np.linalg.lstsq(A, vs, rcond=None)
    fit = c0 + c1 * ts
    scale = max(abs(c0) + abs(c1) * ts.max(), 1e-300)
    residual = float(np.abs(vs - fit).max() / scale)
    return {
        "ok": residual <= rel_tol,
        "residual_rel": residual,
        "c0": float(c0),
        "c1": float(c1),
        "species": i,
    }
