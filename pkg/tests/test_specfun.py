"""Special-function kernel tests: gamma family, noncentral chi-squared
series, Marcum-Q bridge."""

import math

import numpy as np
import pytest

from thzrx import specfun
from thzrx.specfun import (
    ChiSquaredParams,
    SpecfunConvergenceError,
    SpecfunDomainError,
    central_chisq_cdf,
    marcum_q,
    noncentral_chisq_cdf,
    regularized_lower_gamma,
)


def erf_series(z: float, terms: int = 60) -> float:
    """Maclaurin series of erf, independent of scipy's gamma machinery."""
    acc = 0.0
    for n in range(terms):
        acc += (-1) ** n * z ** (2 * n + 1) / (math.factorial(n) * (2 * n + 1))
    return 2.0 / math.sqrt(math.pi) * acc


class TestRegularizedLowerGamma:
    def test_limit_is_one(self):
        assert regularized_lower_gamma(1.0, 700.0) == pytest.approx(1.0, abs=1e-12)

    def test_zero_argument(self):
        assert regularized_lower_gamma(2.5, 0.0) == 0.0

    def test_exponential_special_case(self):
        assert regularized_lower_gamma(1.0, 1.0) == pytest.approx(1 - math.exp(-1), abs=1e-12)

    def test_monotone_in_x(self):
        xs = np.linspace(0, 30, 200)
        vals = [regularized_lower_gamma(3.7, x) for x in xs]
        assert np.all(np.diff(vals) >= 0)

    @pytest.mark.parametrize("s,x", [(0.0, 1.0), (-1.0, 1.0), (1.0, -0.5), (np.nan, 1.0)])
    def test_domain_errors(self, s, x):
        with pytest.raises(SpecfunDomainError):
            regularized_lower_gamma(s, x)


class TestCentralChiSquared:
    def test_at_zero(self):
        assert central_chisq_cdf(0.0, 4.0) == 0.0

    def test_two_dof_exponential(self):
        assert central_chisq_cdf(3.0, 2.0) == pytest.approx(1 - math.exp(-1.5), abs=1e-12)

    def test_one_dof_against_erf_series(self):
        # chi^2_1 CDF at 1 equals 2*Phi(1) - 1 = erf(1/sqrt(2))
        oracle = erf_series(1.0 / math.sqrt(2.0))
        assert central_chisq_cdf(1.0, 1.0) == pytest.approx(oracle, abs=1e-10)
        assert central_chisq_cdf(1.0, 1.0) == pytest.approx(0.6826895, abs=1e-7)

    def test_equals_gamma_convention(self):
        # F_Y(x, l) = P(l/2, x/2): the argument-order fix under test
        for x, l in [(0.3, 1.0), (4.2, 5.0), (11.0, 2.5)]:
            assert central_chisq_cdf(x, l) == regularized_lower_gamma(l / 2, x / 2)


class TestNoncentralChiSquared:
    def test_zero_noncentrality_collapses(self):
        for x, m in [(1.0, 3.0), (7.5, 10.0)]:
            assert noncentral_chisq_cdf(x, ChiSquaredParams(m, 0.0)) == central_chisq_cdf(x, m)

    def test_at_zero(self):
        assert noncentral_chisq_cdf(0.0, ChiSquaredParams(3, 2.5)) == 0.0

    def test_monte_carlo_oracle(self):
        # sum of (Z_i + mu_i)^2 with m=2, sum mu_i^2 = 1
        rng = np.random.default_rng(20240811)
        n = 10**6
        mu = np.array([1.0, 0.0])
        draws = ((rng.standard_normal((n, 2)) + mu) ** 2).sum(axis=1)
        empirical = np.mean(draws <= 2.0)
        se = math.sqrt(empirical * (1 - empirical) / n)
        analytic = noncentral_chisq_cdf(2.0, ChiSquaredParams(2, 1.0))
        assert abs(analytic - empirical) <= 3 * se

    def test_monotone_in_x_and_lambda(self):
        xs = np.linspace(0.0, 100.0, 60)
        vals = [noncentral_chisq_cdf(x, ChiSquaredParams(8, 12.0)) for x in xs]
        assert np.all(np.diff(vals) >= -1e-15)
        assert 0.0 <= min(vals) and max(vals) <= 1.0
        lams = np.linspace(0.0, 200.0, 50)
        vals = [noncentral_chisq_cdf(30.0, ChiSquaredParams(8, l)) for l in lams]
        # stochastic dominance: CDF decreases as the noncentrality grows
        assert np.all(np.diff(vals) <= 1e-15)

    def test_convergence_error_on_tiny_budget(self):
        with pytest.raises(SpecfunConvergenceError):
            noncentral_chisq_cdf(50.0, ChiSquaredParams(40, 400.0), max_terms=8)

    def test_invalid_params(self):
        with pytest.raises(SpecfunDomainError):
            ChiSquaredParams(0.0, 1.0)
        with pytest.raises(SpecfunDomainError):
            ChiSquaredParams(2.0, -1.0)
        with pytest.raises(SpecfunDomainError):
            noncentral_chisq_cdf(-1.0, ChiSquaredParams(2.0, 1.0))


class TestMarcumQ:
    def test_b_zero_gives_one(self):
        for order in (0.5, 1.0, 7.5):
            assert marcum_q(order, 1.3, 0.0) == 1.0

    def test_q1_zero_a_closed_form(self):
        assert marcum_q(1.0, 0.0, 2.0) == pytest.approx(math.exp(-2.0), abs=1e-12)

    def test_half_integer_order_bridge(self):
        val = marcum_q(1.5, 1.0, 1.0)
        ref = 1.0 - noncentral_chisq_cdf(1.0, ChiSquaredParams(3, 1.0))
        assert val == pytest.approx(ref, abs=1e-10)

    def test_monotonicity(self):
        bs = np.linspace(0.0, 6.0, 40)
        vals = [marcum_q(2.0, 1.5, b) for b in bs]
        assert np.all(np.diff(vals) <= 1e-15)
        avals = [marcum_q(2.0, a, 2.0) for a in np.linspace(0.0, 6.0, 40)]
        assert np.all(np.diff(avals) >= -1e-15)

    def test_domain_errors(self):
        with pytest.raises(SpecfunDomainError):
            marcum_q(0.0, 1.0, 1.0)
        with pytest.raises(SpecfunDomainError):
            marcum_q(1.0, -1.0, 1.0)


class TestBridgeIdentity:
    def test_identity_on_grid(self):
        # Q_{m/2}(sqrt(lam), sqrt(x)) + F_X(x, m, lam) = 1
        worst = 0.0
        for m in (1, 2, 4, 8, 16, 32, 64):
            for lam in (0.0, 0.5, 2.0, 20.0, 100.0, 200.0):
                for x in (0.01, 1.0, 10.0, 40.0, 100.0):
                    q = marcum_q(m / 2.0, math.sqrt(lam), math.sqrt(x))
                    f = noncentral_chisq_cdf(x, ChiSquaredParams(m, lam))
                    worst = max(worst, abs(q + f - 1.0))
        assert worst <= 1e-10

    def test_ks_against_sampling(self):
        # empirical CDF of sum_n (Z_n + mu_n)^2 vs the series, 1e6 draws
        rng = np.random.default_rng(7)
        m, lam, n = 6, 9.0, 10**6
        mu = np.zeros(m)
        mu[0] = math.sqrt(lam)
        draws = np.sort(((rng.standard_normal((n, m)) + mu) ** 2).sum(axis=1))
        probe = draws[:: n // 2000]
        cdf = np.array(
            [noncentral_chisq_cdf(x, ChiSquaredParams(m, lam)) for x in probe]
        )
        emp = np.searchsorted(draws, probe, side="right") / n
        ks = np.max(np.abs(cdf - emp))
        assert ks < 1.63 / math.sqrt(n)  # 1% critical value
