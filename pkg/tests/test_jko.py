import numpy as np
from scipy.optimize import minimize_scalar

from conftest import three_state_system, two_state_system

from ggflow import Measure, make_dissipation, make_entropy
from ggflow.functionals import energy, fisher_information
from ggflow.jko import generalized_slope_estimate, mm_solve, mm_step, moreau_yosida

COSH = make_dissipation("cosh")
UNIT = make_dissipation("constant_alpha")
BOLTZ = make_entropy("boltzmann")
QUAD_ENT = make_entropy("quadratic")


class TestMMStep:
    def test_global_minimum_is_fixed_point(self):
        sys3 = three_state_system()
        m = Measure.from_u(sys3, np.full(3, 1.0))
        nxt, diag = mm_step(sys3, COSH, BOLTZ, 0.3, m)
        np.testing.assert_allclose(nxt.u, 1.0, atol=1e-5)
        assert abs(diag["w_value"]) <= 1e-6

    def test_quadratic_structure_matches_scalar_proximal_map(self):
        # alpha = 1, psi = s^2/2, phi = s^2/2 on the symmetric two-state
        # system: the step reduces to minimizing m^2/(2 theta tau) + E along
        # the mass-transfer line
        sys2 = two_state_system()
        tau = 0.5
        theta_bar = sys2.theta[0, 1]
        rho_prev = Measure.from_rho(sys2, [0.8, 0.2])

        def scalar_objective(m):
            rho = np.array([0.8 - m, 0.2 + m])
            e = float(np.sum(QUAD_ENT.phi(rho / sys2.pi) * sys2.pi))
            return m * m / (2.0 * theta_bar * tau) + e

        oracle = minimize_scalar(
            scalar_objective, bounds=(-0.2, 0.8), method="bounded",
            options={"xatol": 1e-12},
        )
        m_star = float(oracle.x)
        nxt, diag = mm_step(sys2, UNIT, QUAD_ENT, tau, rho_prev)
        np.testing.assert_allclose(
            nxt.rho, [0.8 - m_star, 0.2 + m_star], atol=1e-4
        )
        assert abs(diag["objective"] - scalar_objective(m_star)) < 1e-5

    def test_energy_strictly_decreases_off_equilibrium(self):
        sys3 = three_state_system()
        rho0 = Measure.from_u(sys3, np.array([2.2, 0.5, 0.3]))
        nxt, diag = mm_step(sys3, COSH, BOLTZ, 0.2, rho0)
        assert diag["energy"] < energy(BOLTZ, sys3, rho0)


class TestMMRun:
    def test_stationary_start_is_constant(self):
        sys3 = three_state_system()
        run = mm_solve(sys3, COSH, BOLTZ, Measure.from_u(sys3, np.full(3, 2.0)),
                       T=0.6, tau=0.2)
        for m in run.steps:
            np.testing.assert_allclose(m.u, 2.0, atol=1e-5)

    def test_energies_nonincreasing_and_edi(self):
        sys3 = three_state_system()
        rho0 = Measure.from_u(sys3, np.array([2.0, 0.7, 0.3]))
        run = mm_solve(sys3, COSH, BOLTZ, rho0, T=0.8, tau=0.2)
        assert np.all(np.diff(run.energies) <= 1e-8)
        assert run.discrete_energy_inequality_slack(inner_tol=1e-6) == 0.0
        # per-step optimality against staying put
        for k, diag in enumerate(run.diagnostics):
            assert (
                diag["w_value"] + run.energies[k + 1]
                <= run.energies[k] + 1e-6
            )

    def test_interpolants(self):
        sys3 = three_state_system()
        rho0 = Measure.from_u(sys3, np.array([2.0, 0.7, 0.3]))
        run = mm_solve(sys3, COSH, BOLTZ, rho0, T=0.4, tau=0.2)
        np.testing.assert_array_equal(run.interpolant(0.0, "right").u, run.steps[0].u)
        np.testing.assert_array_equal(run.interpolant(0.1, "left").u, run.steps[1].u)
        np.testing.assert_array_equal(run.interpolant(0.1, "right").u, run.steps[0].u)
        np.testing.assert_array_equal(run.interpolant(0.4, "left").u, run.steps[2].u)

    def test_variational_interpolant_between_steps(self):
        from ggflow.jko import variational_interpolant

        sys3 = three_state_system()
        rho0 = Measure.from_u(sys3, np.array([2.0, 0.7, 0.3]))
        run = mm_solve(sys3, COSH, BOLTZ, rho0, T=0.4, tau=0.2)
        mid = variational_interpolant(sys3, COSH, BOLTZ, run, 0.1)
        # a partial step dissipates less than the full one but is not idle
        e_mid = energy(BOLTZ, sys3, mid)
        assert run.energies[1] - 1e-8 <= e_mid <= run.energies[0] + 1e-8
        np.testing.assert_array_equal(
            variational_interpolant(sys3, COSH, BOLTZ, run, 0.2).u, run.steps[1].u
        )
        np.testing.assert_array_equal(
            variational_interpolant(sys3, COSH, BOLTZ, run, 0.0).u, run.steps[0].u
        )

    def test_inner_discretization_sensitivity(self):
        # the endpoint of one step is stable in the inner grid M
        sys3 = three_state_system()
        rho0 = Measure.from_u(sys3, np.array([2.0, 0.7, 0.3]))
        ends = {}
        for M in (4, 8, 16):
            nxt, _ = mm_step(sys3, COSH, BOLTZ, 0.2, rho0, M=M)
            ends[M] = nxt.u
        assert np.abs(ends[8] - ends[4]).max() < 5e-4
        assert np.abs(ends[16] - ends[8]).max() < 2e-4


class TestMoreauYosida:
    def test_minimum_at_equilibrium(self):
        sys3 = three_state_system()
        m = Measure.from_u(sys3, np.full(3, 1.0))
        for r in (0.5, 0.1):
            val, _ = moreau_yosida(sys3, COSH, BOLTZ, r, m)
            assert abs(val) <= 1e-7

    def test_monotone_in_r_and_bounded_by_energy(self):
        sys3 = three_state_system()
        rho = Measure.from_u(sys3, np.array([1.8, 0.8, 0.4]))
        e0 = energy(BOLTZ, sys3, rho)
        vals = {r: moreau_yosida(sys3, COSH, BOLTZ, r, rho)[0]
                for r in (0.4, 0.2, 0.1)}
        assert vals[0.4] <= vals[0.2] + 1e-7 <= vals[0.1] + 2e-7
        assert vals[0.1] <= e0 + 1e-10

    def test_converges_to_energy_as_r_vanishes(self):
        sys2 = two_state_system()
        rho = Measure.from_u(sys2, np.array([1.6, 0.4]))
        e0 = energy(BOLTZ, sys2, rho)
        vals = [moreau_yosida(sys2, COSH, BOLTZ, r, rho)[0]
                for r in (0.1, 0.01, 0.001)]
        assert vals[0] <= vals[1] <= vals[2] <= e0 + 1e-10
        assert e0 - vals[2] <= 0.05 * e0


class TestGeneralizedSlope:
    def test_zero_at_equilibrium(self):
        sys2 = two_state_system()
        m = Measure.from_u(sys2, np.full(2, 1.0))
        out = generalized_slope_estimate(sys2, COSH, BOLTZ, m, [1e-2])
        assert abs(out["estimate"]) <= 1e-5

    def test_lower_bounds_fisher_information(self):
        sys2 = two_state_system()
        rho = Measure.from_u(sys2, np.array([4.0, 1.0]))
        fisher = fisher_information(COSH, BOLTZ, sys2, rho)
        assert abs(fisher - 1.0) < 1e-12
        out = generalized_slope_estimate(sys2, COSH, BOLTZ, rho, [1e-3])
        assert out["estimate"] >= 0.95 * fisher

    def test_lower_bound_with_boundary_mass(self):
        # on the boundary only the lower Fisher integrand is certified:
        # slope estimate >= (1/2) sum D^-(u_i,u_j) theta_ij - tol
        from ggflow.functionals import fisher_integrands

        sys3 = three_state_system()
        rho = Measure.from_u(sys3, np.array([0.0, 1.8, 1.2]))
        ii, jj = np.nonzero(sys3.edge_mask)
        tri = fisher_integrands(COSH, BOLTZ, rho.u[ii], rho.u[jj])
        dminus = 0.5 * float((tri.lower * sys3.theta[ii, jj]).sum())
        out = generalized_slope_estimate(sys3, COSH, BOLTZ, rho, [1e-3])
        assert out["estimate"] >= dminus - 1e-6

    def test_quotients_increase_as_r_decreases(self):
        sys2 = two_state_system()
        rho = Measure.from_u(sys2, np.array([2.5, 0.5]))
        out = generalized_slope_estimate(
            sys2, COSH, BOLTZ, rho, [0.1, 0.01, 0.001]
        )
        q = [out["per_r"][r] for r in (0.1, 0.01, 0.001)]
        assert q[0] <= q[1] + 1e-6 <= q[2] + 2e-6
