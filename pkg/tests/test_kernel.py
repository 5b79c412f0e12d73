"""Neumann heat kernel series, Gaussian bound, and smoothing probes."""

import math

import numpy as np
import pytest

from trdlab.kernel import (
    KernelSpec,
    gaussian_bound_fit,
    heat_kernel_eval,
    kernel_tail_bound,
    mass_conservation_check,
    semigroup_check,
    smoothing_probe,
    smoothing_threshold,
)

SPEC = KernelSpec(d=1.0, lengths=(1.0,), truncation=200)


class TestKernelSeries:
    def test_long_time_limit_is_uniform(self):
        val = heat_kernel_eval(SPEC, 50.0, 0.3, 0.8)
        assert val == pytest.approx(1.0, abs=1e-12)  # 1/L with L = 1

    def test_symmetry_in_x_and_y(self):
        for t in (0.01, 0.1, 1.0):
            a = heat_kernel_eval(SPEC, t, 0.2, 0.7)
            b = heat_kernel_eval(SPEC, t, 0.7, 0.2)
            assert a == pytest.approx(b, abs=1e-14)

    def test_rejects_nonpositive_time(self):
        with pytest.raises(ValueError):
            heat_kernel_eval(SPEC, 0.0, 0.1, 0.2)

    def test_positive_at_moderate_times(self):
        xs = np.linspace(0.0, 1.0, 21)
        vals = heat_kernel_eval(SPEC, 0.01, xs[:, None], xs[None, :])
        assert vals.min() > 0.0

    def test_tail_bound_decreases_in_time(self):
        bounds = [kernel_tail_bound(SPEC, t) for t in (1e-4, 1e-3, 1e-2)]
        assert bounds[0] > bounds[1] > bounds[2]
        assert bounds[0] < 1e-10  # K = 200 resolves t = 1e-4 easily

    def test_2d_product_structure(self):
        spec2 = KernelSpec(d=1.0, lengths=(1.0, 2.0), truncation=80)
        t = 0.05
        v2 = heat_kernel_eval(spec2, t, (0.3, 0.4), (0.6, 1.1))
        v1a = heat_kernel_eval(KernelSpec(1.0, (1.0,), 80), t, 0.3, 0.6)
        v1b = heat_kernel_eval(KernelSpec(1.0, (2.0,), 80), t, 0.4, 1.1)
        assert v2 == pytest.approx(float(v1a) * float(v1b))

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            KernelSpec(d=0.0)
        with pytest.raises(ValueError):
            KernelSpec(d=1.0, truncation=0)
        with pytest.raises(ValueError):
            KernelSpec(d=1.0, lengths=(-1.0,))


class TestConservationAndSemigroup:
    def test_mass_conserved_at_sampled_times(self):
        out = mass_conservation_check(
            SPEC,
            t_values=np.array([1e-4, 1e-3, 1e-2, 1e-1]),
            x_values=np.array([0.0, 0.25, 0.5, 1.0]),
        )
        assert out["max_defect"] <= 1e-8

    def test_semigroup_composition(self):
        out = semigroup_check(SPEC, t=0.01, s=0.02)
        assert out["max_defect"] <= 1e-6


class TestGaussianBound:
    def test_fit_is_finite_and_stable(self):
        fit = gaussian_bound_fit(SPEC)
        assert fit["passed"], fit
        assert math.isfinite(fit["C_H"])
        assert fit["rel_change"] <= 0.2

    def test_fitted_constant_dominates_free_space(self):
        # at x = y the kernel behaves like (4 pi d t)^{-1/2} plus image
        # corrections, so C_H can never undercut that factor
        fit = gaussian_bound_fit(SPEC)
        assert fit["C_H"] >= fit["free_space_floor"]

    def test_kernel_nonnegative_over_fit_samples(self):
        fit = gaussian_bound_fit(SPEC)
        assert fit["min_kernel_value"] >= -1e-10

    def test_rejects_kappa_too_large(self):
        with pytest.raises(ValueError):
            gaussian_bound_fit(SPEC, kappa=0.3)  # 1/(4d) = 0.25


class TestSmoothing:
    @pytest.mark.parametrize(
        "p, N, expected",
        [
            (1.0, 1, 3.0),  # 3p/(3-2p) at p=1, N=1
            (1.0, 2, 2.0),
            (2.0, 1, math.inf),  # p > (N+2)/2
            (2.0, 2, math.inf),  # boundary case p = (N+2)/2
            (1.5, 2, 6.0),
        ],
    )
    def test_threshold_formula(self, p, N, expected):
        assert smoothing_threshold(p, N) == expected

    def test_constant_source_closed_form(self):
        # theta == 1 keeps only the constant mode: psi(t) = t exactly for
        # the backward-Euler march, so the sup ratio is t_final
        from trdlab.grid import Grid
        from trdlab.kernel import _solve_sourced_heat

        grid = Grid((1.0,), (32,))
        traj = _solve_sourced_heat(grid, 1.0, np.ones(grid.shape), dt=0.01, n_steps=50)
        np.testing.assert_allclose(traj[-1], 0.5, atol=1e-10)

    def test_probe_ratios_stable_below_threshold(self):
        report = smoothing_probe(SPEC, p=2.0, s=4.0, dimension=1, trials=4, cells=32)
        assert report["passed"], report
        assert report["s"] < report["threshold"]

    def test_sup_norm_probe_above_spacetime_threshold(self):
        # N = 1: p = 2 > 3/2, so even s = inf stays bounded
        report = smoothing_probe(SPEC, p=2.0, s=math.inf, dimension=1, trials=4, cells=32)
        assert report["passed"], report
