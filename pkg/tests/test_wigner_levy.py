import inspect
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from levyrmt import stable, wigner_levy as wl
from levyrmt.errors import ConvergenceError, ExtrapolationError, ParameterDomainError

from conftest import running_params


class TestClosedForms:
    def test_lambda_scale_linear_in_range(self):
        assert wl.lambda_scale(1.5, 3.0) == pytest.approx(3.0 * wl.lambda_scale(1.5, 1.0))
        assert wl.lambda_scale(1.5) > 0

    def test_rho_zero_cauchy_entries(self):
        # Gamma(3)/pi * (Gamma(3/2)**2 / Gamma(2)) = (2/pi)(pi/4)
        assert wl.rho_zero(1.0) == pytest.approx(0.5, abs=1e-14)

    def test_rho_zero_gaussian_limit(self):
        # semicircle of variance 2: peak 1/(pi sqrt 2)
        assert wl.rho_zero(2.0) == pytest.approx(1 / (math.pi * math.sqrt(2)), abs=1e-14)

    def test_tail_value(self):
        assert wl.density_tail(100.0, 1.0) == pytest.approx(1 / (math.pi * 1e4))

    @pytest.mark.parametrize("a", [0.7, 1.25, 1.8])
    def test_tail_equals_entry_tail(self, a):
        p = stable.StableParams(a, 0.0, 1.7)
        assert wl.density_tail(40.0, a, 1.7) == pytest.approx(stable.tail_asymptote(40.0, p), rel=1e-13)

    def test_tail_mass_scaling(self):
        a = 1.3
        m1 = integrate.quad(lambda x: wl.density_tail(x, a), 10, np.inf)[0]
        m2 = integrate.quad(lambda x: wl.density_tail(x, a), 20, np.inf)[0]
        assert m1 / m2 == pytest.approx(2**a, rel=1e-8)


class TestSolverContract:
    def test_no_beta_argument(self):
        params = inspect.signature(wl.solve_running_params).parameters
        assert "beta" not in params and "range_" not in params

    @pytest.mark.parametrize("a", [0.0, 2.0, 2.5, -1.0])
    def test_domain(self, a):
        with pytest.raises(ParameterDomainError):
            wl.solve_running_params(a)

    def test_non_convergence(self):
        with pytest.raises(ConvergenceError) as ei:
            wl.solve_running_params(1.5, wl.GridConfig(n_nodes=51), tol=1e-14, max_iter=2)
        assert len(ei.value.residuals) >= 1

    def test_alpha_le_one_flag(self):
        rp, _ = running_params(1.0)
        assert "symmetric-only" in rp.validity
        with pytest.warns(UserWarning):
            wl.solve_running_params(0.9, wl.GridConfig(n_nodes=41), tol=1e-3)

    def test_grid_symmetric(self):
        x = wl.GridConfig().nodes()
        np.testing.assert_array_equal(x, -x[::-1])
        assert np.all(np.diff(x) > 0)


@pytest.fixture(scope="module")
def rp15():
    return running_params(1.5)[0]


class TestSolution:
    def test_symmetry(self, rp15):
        np.testing.assert_allclose(rp15.beta_hat, -rp15.beta_hat[::-1], atol=1e-6)
        np.testing.assert_allclose(rp15.r_hat, rp15.r_hat[::-1], rtol=1e-12)

    def test_bounds_and_residual(self, rp15):
        assert np.all(rp15.r_hat > 0) and np.all(np.isfinite(rp15.r_hat))
        assert np.all(np.abs(rp15.beta_hat) <= 1)
        assert rp15.residual < 1e-6

    @pytest.mark.parametrize("a", [1.5, 1.95])
    def test_residual_history_non_increasing(self, a):
        rp, _ = running_params(a)
        h = np.asarray(rp.residual_history)
        assert np.all(np.diff(h[5:]) <= 0)
        assert h[-1] == rp.residual

    def test_density_even_nonnegative(self, rp15):
        lam = np.linspace(0.0, 30.0, 61)
        d = wl.density(lam, 1.5, 1.0, rp15)
        np.testing.assert_allclose(d, wl.density(-lam, 1.5, 1.0, rp15), rtol=1e-10)
        assert np.all(d >= 0)

    def test_range_scaling(self, rp15):
        lam = np.array([0.0, 0.7, 3.0])
        np.testing.assert_allclose(
            wl.density(lam, 1.5, 2.0, rp15), wl.density(lam / 2.0, 1.5, 1.0, rp15) / 2.0, rtol=1e-12
        )

    def test_extrapolation_guard(self, rp15):
        far = 2 * rp15.x_max * wl.lambda_scale(1.5)
        with pytest.raises(ExtrapolationError):
            wl.density(far, 1.5, 1.0, rp15, tail_mode=False)
        assert wl.density(far, 1.5, 1.0, rp15) == pytest.approx(wl.density_tail(far, 1.5))

    def test_wrong_alpha(self, rp15):
        with pytest.raises(ParameterDomainError):
            wl.density(0.0, 1.25, 1.0, rp15)

    @pytest.mark.parametrize("a", [1.5, 1.95])
    def test_normalization(self, a):
        rp, _ = running_params(a)
        assert wl.normalization_check(rp, a) == pytest.approx(1.0, abs=1e-3)

    def test_grid_refinement(self, rp15):
        coarse = wl.solve_running_params(1.5, wl.GridConfig(n_nodes=401))
        assert abs(wl.density(0.0, 1.5, 1.0, coarse) - wl.density(0.0, 1.5, 1.0, rp15)) < 1e-3

    def test_json_round_trip(self, rp15):
        back = wl.RunningParams.from_json(rp15.to_json())
        np.testing.assert_array_equal(back.r_hat, rp15.r_hat)
        lam = np.array([0.3, 4.0])
        np.testing.assert_array_equal(wl.density(lam, 1.5, 1.0, back), wl.density(lam, 1.5, 1.0, rp15))

    @given(st.floats(-500.0, 500.0))
    @settings(max_examples=60, deadline=None)
    def test_running_bounds(self, rp15, x):
        r, b = rp15.running(np.array([x]))
        assert r[0] > 0 and abs(b[0]) <= 1

    def test_tail_handoff_ratio(self):
        rp, _ = running_params(1.25)
        for lam in (50.0, -50.0):
            ratio = wl.density(lam, 1.25, 1.0, rp) / wl.density_tail(lam, 1.25)
            assert 0.95 <= ratio <= 1.05
