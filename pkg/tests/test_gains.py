import numpy as np
import pytest

from pagkit import (
    Branch,
    Composition,
    InvalidBoundError,
    NonlinearSystem,
    RhoVector,
    Sharpness,
    StateSpace,
    Structure,
    classical_ag_slope,
    composition_rho,
    linear_pag,
    linear_pag_conservative,
    mu_slope,
    nonlinear_pag_general,
    nonlinear_pag_special,
    quad_resolve,
    sharpness_compare,
    subsystem_pags,
)
from pagkit.errors import StructureMismatchError

from conftest import random_stable_siso

LAG_GAMMA_AC_T2 = 0.4621172  # (1-e^-1)/(1+e^-1), piecewise-exact integral


class TestClassicalAgSlope:
    def test_lag_is_one(self, lag):
        assert abs(classical_ag_slope(lag, "B") - 1.0) < 1e-6

    def test_dominated_diagonal(self):
        sys = StateSpace(A=np.diag([-1.0, -2.0]), B=np.eye(2), C=np.eye(2))
        assert abs(classical_ag_slope(sys, "B") - 1.0) < 1e-6


class TestLinearPag:
    def test_lag_at_two(self, lag):
        lp = linear_pag(lag, "B", 2.0)
        assert lp.gamma_dc == 1.0
        assert abs(lp.gamma_ac - LAG_GAMMA_AC_T2) < 1e-3
        assert lp.certified

    def test_long_period_approaches_ag_slope(self, lag):
        lp = linear_pag(lag, "B", 20.0)
        assert abs(lp.gamma_ac - 1.0) < 0.01

    def test_zero_output_map(self):
        sys = StateSpace(A=[[-1.0]], B=[[1.0]], C=[[0.0]])
        lp = linear_pag(sys, "B", 2.0)
        assert lp.gamma_dc == 0.0 and lp.gamma_ac == 0.0

    def test_two_output_sup_dominates_axis_directions(self):
        rng = np.random.default_rng(9)
        sys = StateSpace(A=[[-1.0, 0.5], [-0.5, -1.0]],
                         B=rng.standard_normal((2, 1)), C=np.eye(2))
        T, N = 2.0, 512
        lp = linear_pag(sys, "B", T, N)
        from pagkit.gains import _direction_mad
        from pagkit.linops import periodic_impulse_closed
        Hc = periodic_impulse_closed(sys, "B", T, N)
        for v in (np.array([1.0, 0.0]), np.array([0.0, 1.0]),
                  np.array([1.0, 1.0]) / np.sqrt(2)):
            assert lp.gamma_ac >= T * _direction_mad(Hc, v, T) - 1e-9

    def test_three_output_multistart_flagged(self):
        rng = np.random.default_rng(10)
        sys = StateSpace(A=-np.eye(3) + 0.2 * rng.standard_normal((3, 3)),
                         B=rng.standard_normal((3, 1)), C=np.eye(3))
        lp = linear_pag(sys, "B", 1.0, 128)
        assert not lp.certified
        assert lp.gamma_ac > 0


class TestLinearPagConservative:
    def test_lag_telescopes_to_dc(self, lag):
        # positive kernel: the integral telescopes to G(0) = 1
        assert abs(linear_pag_conservative(lag, "B", 2.0) - 1.0) < 1e-6

    def test_dominates_exact(self, lag):
        rng = np.random.default_rng(11)
        systems = [lag] + [random_stable_siso(rng) for _ in range(5)]
        for sys in systems:
            for T in (0.5, 2.0, 8.0):
                exact = linear_pag(sys, "B", T, 1024).gamma_ac
                cons = linear_pag_conservative(sys, "B", T, 1024)
                assert cons >= exact - 1e-9 * max(1.0, cons)

    def test_zero_output_map(self):
        sys = StateSpace(A=[[-1.0]], B=[[1.0]], C=[[0.0]])
        assert linear_pag_conservative(sys, "B", 2.0) == 0.0


class TestSubsystemPags:
    def test_equal_channels_when_b_equals_f(self):
        sys = StateSpace(A=[[-1.0, 0.3], [0.0, -2.0]], B=[[1.0], [0.5]],
                         C=[[1.0, 0.0]], F=[[1.0], [0.5]])
        pags = subsystem_pags(sys, 1.0, 256)
        assert pags.u_to_x.gamma_ac == pags.f_to_x.gamma_ac
        assert pags.u_to_y.gamma_ac == pags.f_to_y.gamma_ac
        assert pags.u_to_x.gamma_dc == pags.f_to_x.gamma_dc

    def test_identity_output_merges_channels(self):
        sys = StateSpace(A=[[-1.0, 0.3], [0.0, -2.0]], B=[[1.0], [0.5]],
                         C=np.eye(2))
        pags = subsystem_pags(sys, 1.0, 256)
        assert pags.u_to_x.gamma_ac == pags.u_to_y.gamma_ac
        assert pags.u_to_x.gamma_dc == pags.u_to_y.gamma_dc


class TestQuadResolve:
    def test_linear_limit(self):
        xi, br = quad_resolve(0.0, 0.3, 1.0)
        assert xi == 0.3 and br is Branch.ROOT

    def test_root_branch_value(self):
        xi, br = quad_resolve(0.01, 0.1, 1.0)
        assert br is Branch.ROOT
        assert abs(xi - (1 - np.sqrt(0.996)) / 0.02) < 1e-12
        assert abs(xi - 0.100100) < 1e-6

    def test_saturated_branch(self):
        xi, br = quad_resolve(0.5, 0.125, 20.0)
        assert xi == 20.0 and br is Branch.SATURATED

    def test_infinite_cap(self):
        xi, br = quad_resolve(0.0, 0.3, np.inf)
        assert xi == 0.3 and br is Branch.ROOT
        xi, br = quad_resolve(0.2, 0.3, np.inf)
        assert np.isinf(xi) and br is Branch.SATURATED

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            quad_resolve(-0.1, 0.0, 1.0)
        with pytest.raises(ValueError):
            quad_resolve(0.0, -0.1, 1.0)
        with pytest.raises(ValueError):
            quad_resolve(0.0, 0.0, 0.0)

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(12)
        xs = np.linspace(0.0, 1.0, 20001)
        for _ in range(50):
            a = float(rng.uniform(0.0, 2.0))
            c = float(rng.uniform(0.0, 1.5))
            cap = float(rng.uniform(0.1, 5.0))
            grid = xs * cap
            feas = a * grid * grid - grid + c >= 0.0
            want = grid[feas].max()
            got, _ = quad_resolve(a, c, cap)
            assert abs(got - want) <= cap / 20000 + 1e-12


def _simple_nsys(M_f=0.0, M_g=0.0, structure=Structure.GENERAL):
    sys = StateSpace(A=[[-1.0, 0.4], [-0.4, -1.5]], B=[[1.0], [0.2]],
                     C=[[1.0, 0.3]], F=[[0.3], [1.0]])
    name = "none" if (M_f == 0 and M_g == 0) else "pll"
    if name == "pll":
        # reuse the registered lurie nonlinearity purely for its constants;
        # the bound formulas only consume M_f / M_g and the linear channels
        return NonlinearSystem(sys, nonlinearity="pll", M_f=M_f,
                               M_g=(0.0 if structure is Structure.OUTPUT_LURIE else M_g),
                               structure=structure)
    return NonlinearSystem(sys, structure=structure)


class TestNonlinearPagGeneral:
    def test_linear_limit_equals_linear_channel(self):
        nsys = _simple_nsys()
        T, N = 1.0, 512
        rho = RhoVector(0.3, 0.7)
        res = nonlinear_pag_general(nsys, T, N, b=5.0, rho_u=rho)
        pags = subsystem_pags(nsys.linear, T, N)
        assert res.eta_dc == pags.u_to_y.gamma_dc * rho.dc
        assert res.eta_ac == pags.u_to_y.gamma_ac * rho.ac
        assert res.branch_dc is Branch.ROOT and res.branch_ac is Branch.ROOT

    def test_zero_input(self):
        res = nonlinear_pag_general(_simple_nsys(0.05), 1.0, 256, b=1.0,
                                    rho_u=RhoVector(0.0, 0.0))
        assert res.eta_dc == 0.0 and res.eta_ac == 0.0
        assert res.xi_dc == 0.0 and res.xi_ac == 0.0

    def test_invalid_bound(self):
        with pytest.raises(InvalidBoundError):
            nonlinear_pag_general(_simple_nsys(0.05), 1.0, 256, b=0.0,
                                  rho_u=RhoVector(0.1, 0.0))

    def test_monotone_in_rho(self):
        nsys = _simple_nsys(M_f=0.2)
        T, N, b = 1.0, 256, 2.0
        grid = np.linspace(0.0, 0.4, 4)
        vals = {}
        for dc in grid:
            for ac in grid:
                r = nonlinear_pag_general(nsys, T, N, b, RhoVector(dc, ac))
                vals[(dc, ac)] = (r.eta_dc, r.eta_ac)
        for i, dc in enumerate(grid):
            for j, ac in enumerate(grid):
                if i + 1 < len(grid):
                    hi = vals[(grid[i + 1], ac)]
                    assert vals[(dc, ac)][0] <= hi[0] + 1e-12
                    assert vals[(dc, ac)][1] <= hi[1] + 1e-12
                if j + 1 < len(grid):
                    hi = vals[(dc, grid[j + 1])]
                    assert vals[(dc, ac)][0] <= hi[0] + 1e-12
                    assert vals[(dc, ac)][1] <= hi[1] + 1e-12

    def test_rejects_input_beyond_umax(self):
        nsys = NonlinearSystem(_simple_nsys().linear, u_max=0.5)
        with pytest.raises(ValueError):
            nonlinear_pag_general(nsys, 1.0, 256, b=1.0, rho_u=RhoVector(0.3, 0.3))


class TestNonlinearPagSpecial:
    def test_linear_limit(self):
        nsys = _simple_nsys(structure=Structure.OUTPUT_LURIE)
        T, N = 1.0, 512
        rho = RhoVector(0.2, 0.5)
        res = nonlinear_pag_special(nsys, T, N, b=5.0, rho_u=rho)
        lp = linear_pag(nsys.linear, "B", T, N)
        assert res.eta_dc == lp.gamma_dc * rho.dc
        assert res.eta_ac == lp.gamma_ac * rho.ac

    def test_zero_input(self):
        nsys = _simple_nsys(structure=Structure.OUTPUT_LURIE)
        res = nonlinear_pag_special(nsys, 1.0, 256, b=1.0, rho_u=RhoVector(0.0, 0.0))
        assert res.eta_dc == 0.0 and res.eta_ac == 0.0

    def test_structure_mismatch(self):
        with pytest.raises(StructureMismatchError):
            nonlinear_pag_special(_simple_nsys(), 1.0, 256, b=1.0,
                                  rho_u=RhoVector(0.1, 0.1))

    def test_caps_respected(self):
        nsys = _simple_nsys(M_f=5.0, structure=Structure.OUTPUT_LURIE)
        b = 0.01
        res = nonlinear_pag_special(nsys, 1.0, 256, b=b, rho_u=RhoVector(0.2, 0.2))
        assert res.eta_dc <= b + 1e-15
        assert res.eta_ac <= 2 * b + 1e-15


class TestMuSlope:
    def test_diagonal_identities(self):
        gamma_dc, gamma_ac = 2.0, 0.5

        def pag(rho):
            return np.array([gamma_dc * rho.dc, gamma_ac * rho.ac])

        lv = 0.1
        assert abs(mu_slope(pag, lv, Composition.PURE_DC) - gamma_dc) < 1e-12
        assert abs(mu_slope(pag, lv, Composition.PURE_AC) - gamma_ac) < 1e-12
        assert abs(mu_slope(pag, lv, Composition.SPLIT) - (gamma_dc + gamma_ac) / 2) < 1e-12

    def test_result_object(self):
        res = nonlinear_pag_special(_simple_nsys(structure=Structure.OUTPUT_LURIE),
                                    1.0, 256, b=5.0, rho_u=composition_rho(0.1, Composition.SPLIT))
        want = (res.eta_dc + res.eta_ac) / 0.1
        assert mu_slope(res, 0.1, Composition.SPLIT) == want

    def test_rejects_zero_level(self):
        with pytest.raises(ValueError):
            mu_slope(lambda rho: np.zeros(2), 0.0, Composition.SPLIT)


class TestSharpnessCompare:
    def test_linear_exact_never_worse(self, lag):
        slope = classical_ag_slope(lag, "B")
        for T in (0.5, 2.0, 10.0):
            lp = linear_pag(lag, "B", T, 1024)
            for comp in Composition:
                rho = composition_rho(0.2, comp)
                verdict, pag, ag = sharpness_compare(lp.apply(rho), slope * rho.one_norm)
                assert verdict in (Sharpness.PAG_SHARPER, Sharpness.TIE)

    def test_zero_is_tie(self):
        verdict, pag, ag = sharpness_compare(np.zeros(2), 0.0)
        assert verdict is Sharpness.TIE and pag == 0.0 and ag == 0.0


class TestGainOrderings:
    """Ordering properties on a small random ensemble (full set in acceptance)."""

    def test_three_gain_comparison(self):
        from pagkit import frequency_response, dc_transfer
        rng = np.random.default_rng(21)
        for _ in range(8):
            sys = random_stable_siso(rng)
            slope = classical_ag_slope(sys, "B")
            tau = 1.0 / abs(np.max(np.linalg.eigvals(sys.A).real))
            for mult in (0.1, 1.0, 10.0):
                T = mult * tau
                lp = linear_pag(sys, "B", T, 2048)
                _, fr = frequency_response(sys, "B", 2 * np.pi / T)
                assert lp.gamma_dc == np.linalg.norm(dc_transfer(sys, "B"), 2)
                assert fr <= lp.gamma_ac + 1e-6 * slope
                assert lp.gamma_ac <= slope + 1e-6 * slope

    def test_integer_period_monotonicity(self):
        # multiples of T are evaluated at matched absolute resolution (k*N)
        rng = np.random.default_rng(22)
        for _ in range(6):
            sys = random_stable_siso(rng)
            tau = 1.0 / abs(np.max(np.linalg.eigvals(sys.A).real))
            base = linear_pag(sys, "B", tau, 2048).gamma_ac
            for k in (2, 3, 4):
                higher = linear_pag(sys, "B", k * tau, 2048 * k).gamma_ac
                assert base <= higher + 1e-6 * higher
