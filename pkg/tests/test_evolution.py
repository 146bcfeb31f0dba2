import numpy as np
from scipy.linalg import expm

from conftest import random_detailed_balance_system, three_state_system

from ggflow import Measure, ce_residual, make_dissipation, make_entropy
from ggflow.evolution import (
    l1_contraction_check,
    sampled_one_sided_lipschitz,
    solve_forward,
    stationarity_report,
)
from ggflow.functionals import energy, energy_dissipation_report
from ggflow.potentials import continuous_field

COSH = make_dissipation("cosh")
BOLTZ = make_entropy("boltzmann")


def forward_generator(system):
    """Dense matrix A with rho' = A rho (the master-equation generator)."""
    K = system.kappa
    return K.T - np.diag(K.sum(axis=1))


class TestSolveForward:
    def test_constant_density_is_fixed(self):
        sys3 = three_state_system()
        curve = solve_forward(sys3, COSH, BOLTZ, np.full(3, 1.7), T=1.0, dt=0.05)
        np.testing.assert_allclose(curve.densities, 1.7, atol=1e-13)
        for f in curve.fluxes:
            np.testing.assert_allclose(f.j, 0.0, atol=1e-13)

    def test_linear_flow_matches_matrix_exponential(self):
        sysr = random_detailed_balance_system(6, seed=42)
        rng = np.random.default_rng(1)
        u0 = rng.uniform(0.3, 2.0, size=6)
        curve = solve_forward(sysr, COSH, BOLTZ, u0, T=1.0, rtol=1e-8, atol=1e-12)
        rho_T = expm(forward_generator(sysr)) @ (u0 * sysr.pi)
        err = np.abs(curve.densities[-1] - rho_T / sysr.pi).max()
        assert err < 1e-6

    def test_mass_conservation_and_bounds_nonlinear(self):
        # q-homogeneous field v^q - u^q with q = 1/2
        sys3 = three_state_system()
        spec = make_dissipation("cosh", q=0.5)
        u0 = np.array([1.8, 0.4, 0.8])
        curve = solve_forward(sys3, spec, BOLTZ, u0, T=2.0, dt=0.01)
        masses = curve.masses
        assert np.abs(masses - masses[0]).max() <= 1e-10 * masses[0]
        assert curve.densities.min() >= u0.min() - 1e-9
        assert curve.densities.max() <= u0.max() + 1e-9

    def test_field_sum_telescopes(self):
        # sum_ij F(u_i,u_j) theta_ij = 0: skew field against symmetric theta
        sys3 = three_state_system()
        f = continuous_field(COSH, BOLTZ)
        rng = np.random.default_rng(2)
        for _ in range(10):
            u = rng.uniform(0.05, 3.0, size=3)
            vals = np.asarray(f(u[:, None], u[None, :])) * sys3.theta
            assert abs(vals.sum()) < 1e-12

    def test_trajectory_passes_continuity_check(self):
        sys3 = three_state_system()
        u0 = np.array([1.6, 0.7, 0.7])
        curve = solve_forward(sys3, COSH, BOLTZ, u0, T=1.0, dt=1e-3)
        rep = ce_residual(sys3, curve.times, curve.states, curve.fluxes)
        assert rep.residual <= 1e-6
        assert rep.tv_bound_ok

    def test_solver_fluxes_are_skew_symmetric(self):
        sys3 = three_state_system()
        curve = solve_forward(sys3, COSH, BOLTZ, [1.6, 0.7, 0.7], T=0.5, dt=0.05)
        for f in curve.fluxes:
            np.testing.assert_allclose(f.j, -f.j.T, atol=1e-15)

    def test_corrupted_flux_fails_continuity_check(self):
        from ggflow import Flux

        sys3 = three_state_system()
        u0 = np.array([1.6, 0.7, 0.7])
        curve = solve_forward(sys3, COSH, BOLTZ, u0, T=1.0, dt=1e-3)
        doubled = [Flux.from_matrix(2.0 * f.j) for f in curve.fluxes]
        rep = ce_residual(sys3, curve.times, curve.states, doubled)
        assert rep.residual > 1e-3

    def test_adaptive_grid_runs(self):
        sys3 = three_state_system()
        curve = solve_forward(sys3, COSH, BOLTZ, [2.0, 0.5, 0.5], T=1.0, rtol=1e-7)
        assert curve.meta["steps"] > 0
        assert curve.masses.std() < 1e-12

    def test_antidissipative_field_underflows_step_size(self):
        import pytest

        from ggflow import StepSizeUnderflow

        sys3 = three_state_system()
        reversed_field = lambda u, v: np.asarray(u) - np.asarray(v)
        with pytest.raises(StepSizeUnderflow):
            solve_forward(
                sys3, COSH, BOLTZ, [1.0, 0.0, 1.0], T=1.0, dt=0.1,
                field=reversed_field,
            )

    def test_non_finite_field_detected(self):
        import pytest

        from ggflow import NonFiniteField

        sys3 = three_state_system()
        bad = lambda u, v: np.full(np.broadcast(np.asarray(u), np.asarray(v)).shape,
                                   np.nan)
        with pytest.raises(NonFiniteField):
            solve_forward(sys3, COSH, BOLTZ, [1.0, 1.0, 1.0], T=0.1, dt=0.1,
                          field=bad)


class TestEnergyDissipation:
    def test_solution_deficit_small_and_second_order(self):
        sys3 = three_state_system()
        u0 = np.array([1.9, 0.5, 0.6])
        deficits = []
        for dt in (2e-3, 1e-3):
            c = solve_forward(sys3, COSH, BOLTZ, u0, T=1.0, dt=dt)
            rep = energy_dissipation_report(
                COSH, BOLTZ, sys3, c.times, c.states, c.fluxes
            )
            # nonnegative up to quadrature error
            assert rep.deficit >= -1e-10
            deficits.append(abs(rep.deficit))
        e0 = energy(BOLTZ, sys3, Measure.from_u(sys3, u0))
        assert deficits[1] <= 1e-4 * e0
        assert 2.5 <= deficits[0] / deficits[1] <= 6.0

    def test_scaled_flux_is_not_a_solution(self):
        # strict convexity of the dissipation makes the Fenchel gap of a
        # 1.5x flux strictly positive, far beyond the solution tolerance
        from ggflow import Flux

        sys3 = three_state_system()
        u0 = np.array([1.9, 0.5, 0.6])
        c = solve_forward(sys3, COSH, BOLTZ, u0, T=1.0, dt=1e-3)
        scaled = [Flux.from_matrix(1.5 * f.j) for f in c.fluxes]
        rep = energy_dissipation_report(
            COSH, BOLTZ, sys3, c.times, c.states, scaled, ce_tol=None
        )
        e0 = energy(BOLTZ, sys3, Measure.from_u(sys3, u0))
        assert rep.deficit > 10.0 * (1e-4 * e0)


class TestStructuralGuarantees:
    def test_contraction_identical_data(self):
        sys3 = three_state_system()
        out = l1_contraction_check(
            sys3, COSH, BOLTZ, [1.0, 1.5, 0.5], [1.0, 1.5, 0.5], T=0.5
        )
        assert out["ratio"] == 0.0

    def test_contraction_ratio_linear(self):
        sys3 = three_state_system()
        rng = np.random.default_rng(3)
        u0 = rng.uniform(0.3, 2.0, size=3)
        v0 = u0 + 1e-3 * rng.uniform(0.5, 1.0, size=3)
        out = l1_contraction_check(sys3, COSH, BOLTZ, u0, v0, T=1.0)
        assert out["ratio"] <= 1.01

    def test_order_preservation_linear(self):
        sys3 = three_state_system()
        rng = np.random.default_rng(4)
        for _ in range(5):
            u0 = rng.uniform(0.2, 1.5, size=3)
            v0 = u0 + rng.uniform(0.0, 0.5, size=3)
            cu = solve_forward(sys3, COSH, BOLTZ, u0, T=1.0, dt=0.01)
            cv = solve_forward(sys3, COSH, BOLTZ, v0, T=1.0, dt=0.01)
            assert np.all(cu.densities <= cv.densities + 1e-9)

    def test_one_sided_lipschitz_of_linear_field_is_zero(self):
        f = continuous_field(COSH, BOLTZ)
        assert sampled_one_sided_lipschitz(f, 0.1, 3.0) == 0.0


class TestStationarity:
    def test_multiple_of_pi(self):
        sys3 = three_state_system()
        curve = solve_forward(sys3, COSH, BOLTZ, np.full(3, 2.0), T=1.0, dt=0.05)
        rep = stationarity_report(sys3, COSH, BOLTZ, curve)
        assert rep["fisher_final"] == 0.0
        assert rep["tv_distance_to_c_pi"] < 1e-12
        assert rep["energy_monotone"]

    def test_linear_flow_equilibrates(self):
        sys3 = three_state_system()
        curve = solve_forward(sys3, COSH, BOLTZ, [2.4, 0.3, 0.3], T=20.0, rtol=1e-9)
        rep = stationarity_report(sys3, COSH, BOLTZ, curve)
        assert rep["tv_distance_to_c_pi"] <= 1e-6
        assert rep["energy_monotone"]

    def test_partial_entropy_keeps_indicators_stationary(self):
        # with phi = gamma*(s log s - s + 1), gamma=1/2, indicator densities
        # are fixed points with zero Fisher information
        sys3 = three_state_system()
        half = make_entropy("boltzmann", scale=0.5)
        u0 = np.array([1.0, 0.0, 1.0])
        curve = solve_forward(sys3, COSH, half, u0, T=1.0, dt=0.01)
        np.testing.assert_allclose(curve.densities[-1], u0, atol=1e-12)
        rep = stationarity_report(sys3, COSH, half, curve)
        assert rep["fisher_final"] == 0.0
        assert rep["tv_distance_to_c_pi"] > 0.1
