"""Integrating-factor map, Picard iteration, and the factorial envelope."""

import math

import numpy as np
import pytest

from trdlab.errors import InvariantBreach
from trdlab.picard import (
    PicardBoundConstants,
    PointwiseInputs,
    canonical_scenario,
    constants_for,
    convergence_envelope_check,
    integrating_factor_eval,
    ode_oracle,
    picard_iterate,
    picard_iterate_mp,
)


def linear_inputs(a_j0=0.3, n_points=2001, T=1.0):
    """delta2 * delta3 == 1 and a_m == 1: the ODE is a' = 1 - a with
    closed form a(t) = 1 + (a_0 - 1) e^{-t}."""
    t = np.linspace(0.0, T, n_points)
    return PointwiseInputs(
        times=t,
        a_j0=a_j0,
        alpha_j=1.0,
        offsets=(),
        offset_alphas=(),
        driver_am=np.ones_like(t),
        delta1=np.ones_like(t),
        delta3=np.ones_like(t),
    )


class TestPointwiseInputs:
    def test_rejects_nonuniform_mesh(self):
        t = np.array([0.0, 0.1, 0.3])
        with pytest.raises(ValueError):
            PointwiseInputs(t, 0.1, 1.0, (), (), np.ones(3), np.ones(3), np.ones(3))

    def test_rejects_negative_initial_data(self):
        t = np.linspace(0, 1, 5)
        with pytest.raises(ValueError):
            PointwiseInputs(t, -0.1, 1.0, (), (), np.ones(5), np.ones(5), np.ones(5))
        with pytest.raises(ValueError):
            PointwiseInputs(t, 0.1, 1.0, (-0.5,), (1.0,), np.ones(5), np.ones(5), np.ones(5))

    def test_rejects_mesh_mismatch(self):
        t = np.linspace(0, 1, 5)
        with pytest.raises(ValueError):
            PointwiseInputs(t, 0.1, 1.0, (), (), np.ones(4), np.ones(5), np.ones(5))

    def test_delta2_offsets_and_exponents(self):
        t = np.linspace(0, 1, 3)
        inp = PointwiseInputs(t, 0.2, 2.0, (0.5,), (1.5,), np.ones(3), np.ones(3), np.ones(3))
        r = 0.3
        assert inp.delta2(r) == pytest.approx(r ** 1.0 * (0.5 + r) ** 1.5)


class TestIntegratingFactor:
    def test_no_dynamics_keeps_the_constant(self):
        t = np.linspace(0, 1, 101)
        zeros = np.zeros_like(t)
        inp = PointwiseInputs(t, 0.7, 1.0, (), (), zeros, zeros + 1.0, zeros)
        out = integrating_factor_eval(inp, np.full_like(t, 0.7))
        np.testing.assert_allclose(out, 0.7, atol=1e-14)

    def test_linear_problem_closed_form(self):
        inp = linear_inputs(a_j0=0.3)
        exact = 1.0 + (0.3 - 1.0) * np.exp(-inp.times)
        # the map applied to the exact solution reproduces it (fixed point)
        out = integrating_factor_eval(inp, exact)
        np.testing.assert_allclose(out, exact, atol=1e-7)

    def test_converged_iterate_satisfies_the_ode(self):
        inp = linear_inputs(n_points=4001)
        limit = picard_iterate(inp, p_max=30)[-1]
        t = inp.times
        lhs = np.gradient(limit, t)
        rhs = inp.driver_am - inp.delta2(limit) * limit * inp.delta3
        # drop the endpoints (one-sided differences)
        assert np.abs(lhs[2:-2] - rhs[2:-2]).max() < 1e-6


class TestPicardIteration:
    def test_fixed_point_input_keeps_iterates_identical(self):
        # equilibrium drivers: a_j0 = a_m / (delta2 * delta3) = 1
        t = np.linspace(0, 1, 201)
        inp = PointwiseInputs(t, 1.0, 1.0, (), (), np.ones_like(t), np.ones_like(t), np.ones_like(t))
        iters = picard_iterate(inp, p_max=4)
        # identical up to the trapezoidal quadrature defect of the map
        for traj in iters[1:]:
            np.testing.assert_allclose(traj, iters[0], atol=1e-5)

    def test_iterates_nonnegative(self):
        inp, constants, _ = canonical_scenario(n_points=801)
        for traj in picard_iterate(inp, p_max=8, bound=constants.C4):
            assert traj.min() >= 0.0

    def test_successive_differences_decay_factorially(self):
        inp, constants, _ = canonical_scenario(n_points=2001)
        iters = picard_iterate(inp, p_max=8)
        diffs = [np.abs(b - a).max() for a, b in zip(iters[:-1], iters[1:])]
        # each difference should shrink at least geometrically with the
        # growing factorial denominator
        for a, b in zip(diffs[:-1], diffs[1:]):
            assert b < 0.5 * a

    def test_bound_breach_raises(self):
        inp = linear_inputs()
        with pytest.raises(InvariantBreach):
            picard_iterate(inp, p_max=3, bound=0.5)  # limit approaches 1 > 0.5

    def test_final_iterate_matches_adaptive_oracle(self):
        inp, constants, fns = canonical_scenario(n_points=4001)
        last = picard_iterate(inp, p_max=25, bound=constants.C4)[-1]
        oracle = ode_oracle(inp, am_fn=fns["am"], delta1_fn=fns["delta1"], delta3_fn=fns["delta3"])
        assert np.abs(last - oracle).max() < 1e-6


class TestEnvelope:
    def test_p0_bound_exceeds_the_trajectory_diameter(self):
        inp, constants, _ = canonical_scenario(n_points=801)
        iters = picard_iterate(inp, p_max=3)
        rep = convergence_envelope_check(iters[:1], constants, iters[-1])
        assert rep["per_p"][0]["envelope"] >= 2.0 * constants.T * constants.C4

    def test_linear_problem_envelope_holds(self):
        inp = linear_inputs(n_points=1001)
        constants = constants_for(inp, c_tilde=1.0)
        iters = picard_iterate(inp, p_max=10)
        rep = convergence_envelope_check(iters, constants, iters[-1])
        checked = [r for r in rep["per_p"] if r["envelope"] > 1e-13]
        assert all(r["ok"] for r in checked)

    def test_canonical_envelope_in_arbitrary_precision(self):
        inp, constants, _ = canonical_scenario(n_points=301)
        assert constants.C5 * constants.T <= 2.0
        iters = picard_iterate_mp(inp, p_max=40, dps=80)
        rep = convergence_envelope_check(iters[:16], constants, iters[-1], safety=1.1)
        assert rep["passed"], rep
        # the errors really are sub-float64 past p ~ 12
        assert rep["per_p"][15]["error"] < 1e-25

    def test_constants_require_positive_values(self):
        with pytest.raises(ValueError):
            PicardBoundConstants(C4=0.0, C5=1.0, T=1.0)


class TestCanonicalScenario:
    def test_constants_frozen(self):
        _, constants, _ = canonical_scenario()
        assert constants.C4 == pytest.approx(0.5)
        assert constants.C5 == pytest.approx(0.3)
        assert constants.T == 1.0

    def test_drivers_bounded_by_ctilde(self):
        inp, _, _ = canonical_scenario()
        assert inp.driver_am.max() <= 0.3
        assert inp.delta3.max() <= 0.3
