"""Entropy, dissipation, norms, masses, and the report-style estimates."""

import math

import numpy as np
import pytest

from trdlab.diagnostics import (
    DiagnosticsTracker,
    dissipation,
    duality_report,
    entropy,
    entropy_balance_check,
    l1_product_estimate_check,
    lp_norms,
    m2_bound,
)
from trdlab.fields import FieldSet
from trdlab.grid import Grid
from trdlab.kinetics import RegularizedRates
from trdlab.model import TriangularSystem
from trdlab.stepper import StepperConfig, run

SYS3 = TriangularSystem(m=3, alpha=(1.0, 1.0, 1.0), d=(1.0, 1.0, 0.0))
LIMIT3 = RegularizedRates(SYS3, math.inf)
GRID = Grid((1.0,), (32,))


class TestEntropy:
    def test_vanishes_at_the_all_ones_state(self):
        fs = FieldSet.constant(SYS3, GRID, (1.0, 1.0, 1.0))
        assert entropy(fs) == pytest.approx(0.0, abs=1e-14)

    def test_unit_kernel_at_e(self):
        # kernel(e) = 1 per species, weights alpha = (1,1,1), |Omega| = 1
        fs = FieldSet.constant(SYS3, GRID, (math.e, math.e, math.e))
        assert entropy(fs) == pytest.approx(3.0)

    def test_vacuum_state_value(self):
        # kernel(0) = 1: E = sum(alpha) |Omega|
        fs = FieldSet.constant(SYS3, GRID, (0.0, 0.0, 0.0))
        assert entropy(fs) == pytest.approx(3.0)

    def test_weights_scale_with_alpha(self):
        system = TriangularSystem(m=3, alpha=(2.0, 3.0, 1.0), d=(1.0, 1.0, 1.0))
        fs = FieldSet.constant(system, GRID, (0.0, 0.0, 0.0))
        assert entropy(fs) == pytest.approx(6.0)

    def test_nonnegative_on_random_states(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            vals = rng.uniform(0.0, 5.0, size=(3, 32))
            assert entropy(FieldSet(SYS3, GRID, vals)) >= 0.0


class TestDissipation:
    def test_equilibrium_state_dissipates_nothing(self):
        fs = FieldSet.constant(SYS3, GRID, (2.0, 3.0, 6.0))
        total, grad, reac = dissipation(fs, LIMIT3)
        assert total == pytest.approx(0.0, abs=1e-12)
        assert grad == 0.0

    def test_reaction_term_positive_off_equilibrium(self):
        fs = FieldSet.constant(SYS3, GRID, (2.0, 2.0, 1.0))
        total, grad, reac = dissipation(fs, LIMIT3)
        # x = 4, y = 1: (y - x) ln(y/x) = 3 ln 4 > 0
        assert reac == pytest.approx(3.0 * math.log(4.0))
        assert grad == 0.0

    def test_gradient_term_positive_for_nonuniform_diffusers(self):
        x = GRID.axis_centers(0)
        vals = np.stack([1.0 + 0.5 * np.cos(math.pi * x), np.ones(32), np.ones(32)])
        total, grad, reac = dissipation(FieldSet(SYS3, GRID, vals), LIMIT3)
        assert grad > 0.0

    def test_finite_at_vacuum(self):
        fs = FieldSet.constant(SYS3, GRID, (2.0, 2.0, 0.0))
        total, grad, reac = dissipation(fs, LIMIT3)
        assert math.isfinite(total)
        assert reac > 0.0

    def test_regularization_scales_the_reaction_term(self):
        fs = FieldSet.constant(SYS3, GRID, (2.0, 2.0, 1.0))
        _, _, reac_limit = dissipation(fs, LIMIT3)
        _, _, reac_reg = dissipation(fs, RegularizedRates(SYS3, 1.0))
        phi = 1.0 + 5.0**5.0  # (2+2+1)^(Q+2)
        assert reac_reg == pytest.approx(reac_limit / phi)


class TestNorms:
    def test_constant_field_norms(self):
        fs = FieldSet.constant(SYS3, GRID, (2.0, 3.0, 4.0))
        norms = lp_norms(fs, (1.0, 2.0, math.inf))
        np.testing.assert_allclose(norms[1.0], [2.0, 3.0, 4.0])
        np.testing.assert_allclose(norms[2.0], [2.0, 3.0, 4.0])
        np.testing.assert_allclose(norms[math.inf], [2.0, 3.0, 4.0])

    def test_holder_ordering_on_probability_domain(self):
        rng = np.random.default_rng(8)
        vals = rng.uniform(0.0, 3.0, size=(3, 32))
        norms = lp_norms(FieldSet(SYS3, GRID, vals), (1.0, 2.0, 4.0, math.inf))
        for i in range(3):
            assert norms[1.0][i] <= norms[2.0][i] + 1e-12
            assert norms[2.0][i] <= norms[4.0][i] + 1e-12
            assert norms[4.0][i] <= norms[math.inf][i] + 1e-12

    def test_rejects_sub_lebesgue_exponent(self):
        fs = FieldSet.constant(SYS3, GRID, (1.0, 1.0, 1.0))
        with pytest.raises(ValueError):
            lp_norms(fs, (0.5,))


class TestM2Bound:
    def test_formula(self):
        system = TriangularSystem(m=3, alpha=(2.0, 1.0, 1.0), d=(1.0, 1.0, 1.0))
        val = m2_bound(system, e0=3.0, domain_measure=1.0)
        assert val == pytest.approx(2.0 * math.e**2 + 2.0 * 3.0)

    def test_l1_norms_stay_below_bound_on_a_run(self):
        x = GRID.axis_centers(0)
        vals = np.stack(
            [1.0 + 0.5 * np.cos(math.pi * x), 1.0 - 0.5 * np.cos(math.pi * x), 0.3 + 0 * x]
        )
        result = run(FieldSet(SYS3, GRID, vals), StepperConfig(dt=0.02), LIMIT3, t_final=3.0)
        assert not any(r.m2_flag for r in result.records)
        for rec in result.records:
            assert rec.l1.max() <= rec.m2


class TestTrackerAndBalance:
    def _run(self, t_final=3.0):
        x = GRID.axis_centers(0)
        vals = np.stack(
            [1.0 + 0.4 * np.cos(math.pi * x), 1.2 + 0 * x, 0.4 - 0.2 * np.cos(math.pi * x)]
        )
        return run(
            FieldSet(SYS3, GRID, vals),
            StepperConfig(dt=0.01, record_every=20),
            LIMIT3,
            t_final=t_final,
            p_values=(4.0,),
        )

    def test_entropy_balance_holds(self):
        result = self._run()
        report = entropy_balance_check(result.records, tol=1e-3)
        assert report["ok"], report

    def test_spacetime_norms_monotone_in_time(self):
        result = self._run()
        series = [r.st_lp[4.0] for r in result.records]
        for a, b in zip(series[:-1], series[1:]):
            assert np.all(b >= a - 1e-12)

    def test_dissipation_never_negative_along_run(self):
        result = self._run()
        assert min(r.dissipation for r in result.records) >= -1e-12

    def test_duality_report_fits_a_finite_constant(self):
        result = self._run()
        report = duality_report(result.records, pair=(1, 3), p=4.0)
        assert math.isfinite(report["fitted_C"])
        assert report["fitted_C"] >= 0.0

    def test_l1_product_growth_is_affine(self):
        # near equilibrium the running space-time integral of
        # a_i^2 + a_i a_m grows linearly in T
        result = self._run(t_final=6.0)
        tail = result.records[len(result.records) // 2 :]
        report = l1_product_estimate_check(tail, i=1, rel_tol=0.05)
        assert report["ok"], report

    def test_balance_check_detects_violations(self):
        result = self._run()
        rec = result.records[-1]
        rec.entropy = result.records[0].e0 * 2.0 + 1.0  # corrupt
        report = entropy_balance_check(result.records, tol=1e-3)
        assert not report["ok"]
