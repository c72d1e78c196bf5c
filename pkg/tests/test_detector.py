"""Mode-detection tests: statistic, analytic error probabilities,
Monte-Carlo agreement and Pareto points for the published configuration."""

import numpy as np
import pytest

from thzrx import specfun
from thzrx.detector import (
    DetectorConfig,
    DetectorError,
    Mode,
    NoCrossingError,
    WindowLengthError,
    decide,
    error_sweep,
    mc_error_rates,
    noncentrality,
    pareto_point,
    sigma2_from_snr_db,
    type1_error,
    type2_error,
)
from thzrx.detector import test_statistic as energy_statistic  # noqa: E501  (pytest would collect the spec name)
from thzrx.waveform import (
    GaussianPulseParams,
    RaisedCosineParams,
    SlotConfig,
    modulate_cbm,
    modulate_pbm,
)

SLOTS = SlotConfig(1e-12, 40, 3, carrier_hz=5e12)
PULSE = GaussianPulseParams(1.0, 0.5e-12, 20e-15)
RC = RaisedCosineParams(1e-12, 0.8)
N_WINDOW = SLOTS.observation_samples  # 120 samples over the 3-slot interval


def published_waveforms(symbols=(-1, 1, -1)):
    s0 = modulate_pbm(PULSE, SLOTS, [1, 1, 1])
    s1 = modulate_cbm(RC, SLOTS, list(symbols))
    return s0, s1


def config(eta=0.1, sigma2=0.1):
    return DetectorConfig(N_WINDOW, eta, sigma2)


class TestStatistic:
    def test_zero_window(self):
        assert energy_statistic(np.zeros(N_WINDOW), config()) == 0.0

    def test_constant_window(self):
        sigma2 = 0.25
        cfg = config(sigma2=sigma2)
        window = np.full(N_WINDOW, np.sqrt(sigma2))
        assert energy_statistic(window, cfg) == pytest.approx(sigma2, rel=1e-12)

    def test_against_mean_of_squares_oracle(self):
        rng = np.random.default_rng(11)
        window = rng.standard_normal(N_WINDOW)
        oracle = sum(v * v for v in window) / len(window)
        assert energy_statistic(window, config()) == pytest.approx(oracle, abs=1e-12)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(12)
        window = rng.standard_normal(N_WINDOW)
        shuffled = rng.permutation(window)
        cfg = config()
        assert energy_statistic(window, cfg) == pytest.approx(
            energy_statistic(shuffled, cfg), rel=1e-12
        )

    def test_window_length_guard(self):
        with pytest.raises(WindowLengthError):
            energy_statistic(np.zeros(N_WINDOW - 1), config())


class TestDecide:
    def test_below_threshold(self):
        assert decide(0.0, config(eta=0.1)) is Mode.PBM

    def test_tie_goes_to_pbm(self):
        assert decide(0.1, config(eta=0.1)) is Mode.PBM

    def test_above_threshold(self):
        assert decide(0.2, config(eta=0.1)) is Mode.CBM


class TestNoncentrality:
    def test_zero_signal(self):
        assert noncentrality(np.zeros(16), 0.5) == 0.0

    def test_constant_signal(self):
        sigma2 = 0.3
        s = np.full(40, np.sqrt(sigma2))
        assert noncentrality(s, sigma2) == pytest.approx(40.0, rel=1e-12)

    def test_published_config_ordering(self):
        s0, s1 = published_waveforms()
        sigma2 = 0.1
        assert noncentrality(s0, sigma2) < noncentrality(s1, sigma2)


class TestErrorProbabilities:
    def test_eta_zero_extremes(self):
        cfg = DetectorConfig(N_WINDOW, 0.0, 0.1)
        assert type1_error(cfg, 3.0) == pytest.approx(1.0)
        assert type2_error(cfg, 3.0) == pytest.approx(0.0)

    def test_eta_large_extremes(self):
        cfg = DetectorConfig(N_WINDOW, 1e6, 0.1)
        assert type1_error(cfg, 3.0) == pytest.approx(0.0, abs=1e-12)
        assert type2_error(cfg, 3.0) == pytest.approx(1.0, abs=1e-12)

    def test_equal_lambdas_sum_to_one(self):
        lam = 7.3
        for eta in (0.01, 0.1, 0.5):
            cfg = config(eta=eta)
            assert type1_error(cfg, lam) + type2_error(cfg, lam) == pytest.approx(
                1.0, abs=1e-12
            )

    def test_decreasing_in_eta(self):
        etas = np.linspace(0.01, 0.5, 30)
        pe1 = [type1_error(config(eta=e), 5.0) for e in etas]
        pe2 = [type2_error(config(eta=e), 25.0) for e in etas]
        assert np.all(np.diff(pe1) <= 1e-15)
        assert np.all(np.diff(pe2) >= -1e-15)

    def test_complement_identity_vs_series(self):
        cfg = config(eta=0.07, sigma2=0.21)
        lam = 11.0
        f = specfun.noncentral_chisq_cdf(
            cfg.normalized_threshold, specfun.ChiSquaredParams(cfg.dof, lam)
        )
        assert type1_error(cfg, lam) + f == pytest.approx(1.0, abs=1e-10)

    def test_monte_carlo_agreement_published_signals(self):
        s0, s1 = published_waveforms()
        trials = 10**5
        cfg = DetectorConfig(N_WINDOW, 0.1, sigma2_from_snr_db(5.0, "figure"))
        lam0 = s0.energy()
        lam1 = s1.energy()
        pe1_mc, pe2_mc = mc_error_rates(s0, s1, cfg, trials, seed=123)
        for analytic, mc in [
            (type1_error(cfg, lam0), pe1_mc),
            (type2_error(cfg, lam1), pe2_mc),
        ]:
            se = np.sqrt(max(analytic * (1 - analytic), 1e-9) / trials)
            assert abs(analytic - mc) <= 3 * se

    def test_baseband_mode_doubles_dof(self):
        cfg = DetectorConfig(40, 0.1, 0.1, complex_baseband=True)
        assert cfg.dof == 80


class TestErrorSweep:
    def test_monotone_columns_in_eta(self):
        s0, s1 = published_waveforms()
        rows = error_sweep(
            s0, s1, config(sigma2=0.09), "eta", np.linspace(0.02, 0.4, 12)
        )
        pe1 = [r.pe1_analytic for r in rows]
        pe2 = [r.pe2_analytic for r in rows]
        assert np.all(np.diff(pe1) <= 1e-15)
        assert np.all(np.diff(pe2) >= -1e-15)

    def test_published_crossing_eta_005(self):
        s0, s1 = published_waveforms((-1, 1, -1))
        snr, pe = pareto_point(s0, s1, config(eta=0.05), "snr", (0.0, 12.0))
        assert snr == pytest.approx(6.8, abs=0.5)
        assert pe == pytest.approx(0.2, abs=0.05)

    def test_published_eta_opt_at_523db(self):
        s0, s1 = published_waveforms((1, 1, 1))
        cfg = DetectorConfig(N_WINDOW, 0.1, sigma2_from_snr_db(5.23, "figure"))
        eta_opt, pe = pareto_point(s0, s1, cfg, "eta", (1e-3, 1.0))
        assert eta_opt == pytest.approx(0.11, abs=0.03)

    def test_empty_and_invalid_grid(self):
        s0, s1 = published_waveforms()
        with pytest.raises(DetectorError):
            error_sweep(s0, s1, config(), "eta", [])
        with pytest.raises(DetectorError):
            error_sweep(s0, s1, config(), "eta", [0.2, 0.1])

    def test_mc_columns_deterministic(self):
        s0, s1 = published_waveforms()
        rows_a = error_sweep(
            s0, s1, config(eta=0.1), "snr", [3.0, 5.0], mc_trials=2000, seed=7
        )
        rows_b = error_sweep(
            s0, s1, config(eta=0.1), "snr", [3.0, 5.0], mc_trials=2000, seed=7
        )
        assert rows_a == rows_b


class TestParetoPoint:
    def test_equal_lambdas_cross_at_half(self):
        # identical clean signals: P_e1 + P_e2 = 1, crossing at 0.5
        rng = np.random.default_rng(5)
        s = rng.standard_normal(N_WINDOW) * 0.15
        value, pe = pareto_point(s, s, config(eta=0.1), "snr", (0.0, 12.0))
        assert pe == pytest.approx(0.5, abs=1e-6)

    def test_published_eta_02_crossing(self):
        s0, s1 = published_waveforms((-1, 1, -1))
        snr, _ = pareto_point(s0, s1, config(eta=0.2), "snr", (0.0, 12.0))
        assert snr == pytest.approx(3.9, abs=0.5)

    def test_sequence_ordering_of_crossing_pe(self):
        s0, s1m = published_waveforms((-1, 1, -1))
        _, s1p = published_waveforms((1, 1, 1))
        _, pe_mixed = pareto_point(s0, s1m, config(eta=0.1), "snr", (0.0, 12.0))
        _, pe_same = pareto_point(s0, s1p, config(eta=0.1), "snr", (0.0, 12.0))
        assert pe_same < pe_mixed

    def test_no_crossing_error(self):
        s0, s1 = published_waveforms()
        with pytest.raises(NoCrossingError):
            pareto_point(s0, s1, config(eta=0.05), "snr", (0.0, 1.0))


class TestSnrConventions:
    def test_figure_convention(self):
        assert sigma2_from_snr_db(5.0, "figure") == pytest.approx(10 ** (-1.0))

    def test_power_convention(self):
        assert sigma2_from_snr_db(10.0, "power") == pytest.approx(0.1)

    def test_unknown_convention(self):
        with pytest.raises(DetectorError):
            sigma2_from_snr_db(1.0, "amplitude")
