import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aggfrag import rates as R


class TestPowerLaws:
    def test_linear_breakage(self):
        fam = R.power_law_rates(alpha=1.0, theta=0.0, m=0.0)
        i = np.arange(1, 10)
        np.testing.assert_array_equal(fam.beta(i), i.astype(float))

    def test_constant_tau(self):
        fam = R.power_law_rates(alpha=1.0, theta=0.0, m=0.0, tau_coeff=3.0)
        np.testing.assert_array_equal(fam.tau(np.arange(1, 5)), [3.0] * 4)

    def test_unit_lipschitz_increment(self):
        fam = R.power_law_rates(alpha=1.0, theta=0.0, m=0.0)
        i = np.arange(1, 100)
        incr = np.abs(np.diff(fam.beta(np.arange(1, 101))))
        assert np.all(incr <= fam.K * i ** 0.0 + 1e-14)

    def test_theta_range_enforced(self):
        with pytest.raises(ValueError, match="theta"):
            R.power_law_rates(alpha=1.0, theta=1.5, m=0.0)

    def test_masel_shift(self):
        fam = R.masel_rates(beta_coeff=0.5, tau0=1.0, mu0=0.0)
        np.testing.assert_allclose(fam.beta(np.array([1, 2, 5])), [0.0, 0.5, 2.0])
        # the embedded law still tends to the linear limit
        assert fam.continuum("beta")(np.array([2.0]))[0] == pytest.approx(1.0)

    def test_tables(self):
        fam = R.table_rates(beta_table=[0.0, 1.0, 2.0], tau_table=[1.0, 1.0, 1.0],
                            mu_table=[0.5, 0.5, 0.5], alpha=1.0, theta=0.0, m=0.0, K=2.0)
        assert fam.beta(np.array([3]))[0] == 2.0
        with pytest.raises(ValueError):
            fam.beta(np.array([4]))
        with pytest.raises(ValueError, match="no continuum law"):
            fam.continuum("beta")


class TestRescaledCoefficient:
    def test_power_law_exact_on_grid(self):
        fam = R.power_law_rates(alpha=2.0, theta=0.0, m=0.0)
        eps = 0.25
        for i in (1, 3, 7):
            x = i * eps
            assert R.rescaled_coefficient(fam, "beta", eps, x) == pytest.approx(
                x ** 2, rel=1e-14)

    def test_constant_tau_everywhere(self):
        fam = R.power_law_rates(alpha=1.0, theta=0.0, m=0.0, tau_coeff=2.0)
        xs = np.linspace(0.3, 5.0, 64)
        np.testing.assert_allclose(R.rescaled_coefficient(fam, "tau", 0.1, xs), 2.0)

    def test_restriction_below_minimal_size(self):
        fam = R.power_law_rates(alpha=1.0, theta=0.0, m=0.0)
        assert R.rescaled_coefficient(fam, "beta", 0.5, 0.9, n0=2) == 0.0
        assert R.rescaled_coefficient(fam, "beta", 0.5, 1.1, n0=2) > 0.0

    def test_sup_error_decreases(self):
        # uniform convergence of the embedded law to the power law
        fam = R.power_law_rates(alpha=1.0, theta=0.0, m=1.0)
        xs = np.linspace(0.0, 8.0, 4001)
        sups = []
        for k in range(2, 9):
            eps = 2.0 ** -k
            vals = R.rescaled_coefficient(fam, "mu", eps, xs)
            sups.append(np.max(np.abs(vals - xs)))
        assert all(b <= a for a, b in zip(sups, sups[1:]))

    def test_positive_exponent_vanishes_at_zero(self):
        fam = R.power_law_rates(alpha=1.0, theta=0.5, m=0.0)
        sups = []
        xs = np.linspace(0.0, 3.0, 2001)
        for k in range(2, 9):
            eps = 2.0 ** -k
            vals = R.rescaled_coefficient(fam, "tau", eps, xs)
            sups.append(np.max(np.abs(vals - xs ** 0.5)))
        assert all(b <= a + 1e-15 for a, b in zip(sups, sups[1:]))
        assert R.rescaled_coefficient(fam, "tau", 0.01, 0.0) == 0.0


class TestVerifyHypotheses:
    def test_power_laws_pass(self):
        fam = R.power_law_rates(alpha=1.0, theta=0.5, m=0.0, K=2.0)
        rep = R.verify_hypotheses(fam, 500)
        assert rep.passed
        assert rep.minimal_K <= 2.0

    def test_oscillation_fails_lipschitz(self):
        i = np.arange(1, 201, dtype=float)
        beta = i * (1.0 + (-1.0) ** i)
        fam = R.table_rates(beta_table=beta, tau_table=np.ones(200),
                            mu_table=np.ones(200), alpha=1.0, theta=0.0, m=0.0, K=2.0)
        rep = R.verify_hypotheses(fam, 200)
        assert not rep.passed
        assert rep.lipschitz_K["beta"] > 100

    def test_sqrt_tau_minimal_constant(self):
        fam = R.power_law_rates(alpha=0.0, theta=0.5, m=0.0, K=2.0)
        rep = R.verify_hypotheses(fam, 1000)
        assert rep.growth_K["tau"] == pytest.approx(1.0, abs=1e-12)
        assert abs(rep.minimal_K - 1.0) <= 0.05


class TestEmbeddingWeight:
    def test_floor_example(self):
        assert R.embedding_weight(0.5, 1.3) == pytest.approx(1.0)

    def test_exact_on_grid(self):
        assert R.embedding_weight(0.25, 1.25) == 1.25

    def test_grid_scan_bound(self):
        xs = np.linspace(0.0, 10.0, 100001)
        err = np.abs(R.embedding_weight(0.125, xs) - xs)
        assert err.max() <= 0.125

    @settings(max_examples=50, deadline=None)
    @given(x=st.floats(0.0, 100.0), k=st.integers(1, 12))
    def test_error_bound_property(self, x, k):
        eps = 2.0 ** -k
        assert abs(R.embedding_weight(eps, x) - x) <= eps


class TestScalingConfig:
    def test_default_minimal_size(self):
        assert R.ScalingConfig(eps=0.1).n0 == 2
        assert R.ScalingConfig(eps=0.3, x0=1.0).n0 == 3

    def test_limit_toward_x0(self):
        x0 = 0.7
        gaps = [abs(R.ScalingConfig(eps=2.0 ** -k, x0=x0).n0 * 2.0 ** -k - x0)
                for k in range(2, 10)]
        assert all(g <= 2.0 ** -k for g, k in zip(gaps, range(2, 10)))

    def test_prefactor_regimes(self):
        fam = R.power_law_rates(alpha=1.5, theta=0.5, m=1.0)
        std = R.ScalingConfig(eps=0.25).prefactors(fam)
        assert std["b"] == pytest.approx(0.25 ** 1.5)
        assert std["d"] == pytest.approx(0.25)
        assert std["nu"] == pytest.approx(0.25 ** -0.5)
        assert std["s"] == pytest.approx(0.0625)
        alt = R.ScalingConfig(eps=0.25, regime="boundary_breakage").prefactors(fam)
        assert alt["b"] == pytest.approx(0.25 ** 0.5)

    def test_sigma_rules(self):
        fam = R.power_law_rates(alpha=1.0, theta=0.0, m=0.0)
        assert R.ScalingConfig(eps=0.5).sigma_for(fam) == pytest.approx(0.5)
        with pytest.raises(ValueError, match="sigma"):
            R.ScalingConfig(eps=0.5, sigma=0.0).sigma_for(fam)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            R.ScalingConfig(eps=0.0)
        with pytest.raises(ValueError):
            R.ScalingConfig(eps=0.5, regime="bogus")
        with pytest.raises(ValueError):
            R.ScalingConfig(eps=0.5, n0_fixed=1)


class TestInitialData:
    def test_moment_budget(self):
        u0 = np.array([1.0, 2.0, 0.5])
        init = R.InitialData(v0=0.5, u0=u0, n0=2, eps=0.5)
        i = np.array([2.0, 3.0, 4.0])
        assert init.rho0() == pytest.approx(0.5 + 0.25 * float(i @ u0))
        assert init.m0() == pytest.approx(0.5 * u0.sum())
        assert init.moment(1.5) == pytest.approx(0.5 * float(((i * 0.5) ** 1.5) @ u0))

    def test_nonnegativity(self):
        with pytest.raises(ValueError):
            R.InitialData(v0=-1.0, u0=np.ones(3), n0=2)
        with pytest.raises(ValueError):
            R.InitialData(v0=1.0, u0=np.array([1.0, -0.1]), n0=2)
