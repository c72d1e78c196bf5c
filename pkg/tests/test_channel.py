"""Channel model tests: absorption, spreading, response synthesis,
impulse realization and convolution."""

import numpy as np
import pytest

from thzrx.channel import (
    C_LIGHT,
    AbsorptionRangeError,
    AbsorptionTable,
    ChannelDomainError,
    ChannelModel,
    GasLine,
    GasMixture,
    absorption_coefficient,
    convolve,
    frequency_response,
    impulse_response,
    molecular_absorption,
    spreading_loss,
)
from thzrx.signals import SampledSignal, SampleGridError


def make_model(**kw):
    defaults = dict(
        distance_m=1e-3,
        antenna_design_frequency_hz=1.6e12,
        nfft=1024,
        sample_period=25e-15,
    )
    defaults.update(kw)
    return ChannelModel(**defaults)


class TestAbsorption:
    def test_empty_gas_list_gives_zero(self):
        k = absorption_coefficient([], 1.0, 273.15, np.array([1e12, 5e12]))
        assert np.all(k == 0.0)
        assert np.all(molecular_absorption(np.array([1e12]), 1e-3, k[:1]) == 1.0)

    def test_reference_conditions_prefactor(self):
        gas = GasLine(1.0, np.array([0.0, 1e13]), np.array([1.0, 1.0]))
        k = absorption_coefficient([gas], 1.0, 273.15, 5e12)
        assert k == pytest.approx(1.0, rel=1e-12)

    def test_single_gas_hand_value(self):
        gas = GasLine(2e25, np.array([0.0, 1e13]), np.array([5e-27, 5e-27]))
        k = absorption_coefficient([gas], 1.0, 273.15, 2e12)
        assert k == pytest.approx(0.1, rel=1e-12)

    def test_table_interpolation_and_span_error(self):
        table = AbsorptionTable(np.array([1e12, 2e12]), np.array([1.0, 3.0]))
        assert table.lookup(1.5e12) == pytest.approx(2.0)
        with pytest.raises(AbsorptionRangeError):
            table.lookup(3e12)

    def test_table_validation(self):
        with pytest.raises(ChannelDomainError):
            AbsorptionTable(np.array([2e12, 1e12]), np.array([1.0, 1.0]))
        with pytest.raises(ChannelDomainError):
            AbsorptionTable(np.array([1e12]), np.array([-1.0]))

    def test_csv_round_trip(self, tmp_path):
        path = tmp_path / "abs.csv"
        path.write_text("freq_hz,k_per_m\n0.0,0.0\n1e13,2.5\n")
        table = AbsorptionTable.from_csv(path)
        assert table.lookup(5e12) == pytest.approx(1.25)

    def test_mixture_scaling(self):
        gas = GasLine(1e25, np.array([0.0, 1e13]), np.array([1e-26, 1e-26]))
        mix = GasMixture((gas,), pressure_atm=2.0, temperature_k=2 * 273.15)
        k = absorption_coefficient(mix, mix.pressure_atm, mix.temperature_k, 1e12)
        assert k == pytest.approx(0.1 * 2.0 * 0.5, rel=1e-12)


class TestSpreadingLoss:
    def test_magnitude_at_zero_frequency(self):
        g = spreading_loss(0.0, 1e-3)
        assert np.angle(g) == 0.0
        assert abs(g) == pytest.approx(1.0 / np.sqrt(4 * np.pi * 1e-6), rel=1e-12)
        assert abs(g) == pytest.approx(282.095, rel=1e-4)

    def test_doubling_distance_halves_magnitude(self):
        for d in (1e-4, 1e-3, 2.5e-3):
            assert abs(spreading_loss(1e12, 2 * d)) == pytest.approx(
                abs(spreading_loss(1e12, d)) / 2, rel=1e-12
            )

    def test_phase_definition(self):
        d = C_LIGHT / (2 * np.pi * 1e12)
        assert np.angle(spreading_loss(1e12, d)) == pytest.approx(-1.0, rel=1e-9)

    def test_magnitude_frequency_independent(self):
        mags = np.abs(spreading_loss(np.linspace(0, 1e13, 11), 1e-3))
        assert np.ptp(mags) < 1e-12 * mags[0]

    def test_domain_error(self):
        with pytest.raises(ChannelDomainError):
            spreading_loss(1e12, 0.0)


class TestMolecularAbsorption:
    def test_zero_coefficient(self):
        assert molecular_absorption(1e12, 1e-3, 0.0) == 1.0

    def test_hand_value(self):
        assert molecular_absorption(1e12, 1e-3, 0.1) == pytest.approx(
            np.exp(-5e-5), rel=1e-12
        )

    def test_monotone_in_k_and_d(self):
        ks = np.linspace(0, 1e4, 50)
        gains = molecular_absorption(1e12, 1e-3, ks)
        assert np.all(np.diff(gains) < 0)
        assert np.all((gains > 0) & (gains <= 1))
        for d1, d2 in [(1e-4, 2e-4), (1e-3, 5e-3)]:
            assert molecular_absorption(1e12, d2, 100.0) < molecular_absorption(
                1e12, d1, 100.0
            )


class TestFrequencyResponse:
    def test_flat_magnitude_without_absorption(self):
        model = make_model(antenna_factor=1.0)
        gains = frequency_response(model)
        # Nyquist bin excluded: realizability forces it real, shrinking it
        mags = np.abs(gains[:-1])
        assert np.ptp(mags) < 1e-12 * mags[0]

    def test_multiplicative_magnitude(self):
        table = AbsorptionTable(np.array([0.0, 2.5e13]), np.array([0.0, 4e4]))
        model = make_model(absorption=table)
        f = model.frequencies_hz
        k = absorption_coefficient(table, 1.0, 273.15, f)
        expected = (
            model.antenna_magnitude
            * np.abs(spreading_loss(f, model.distance_m))
            * molecular_absorption(f, model.distance_m, k)
        )
        assert np.allclose(np.abs(frequency_response(model)), expected, rtol=1e-12)

    def test_group_delay_peak_near_d_over_c(self):
        model = make_model()
        h = impulse_response(model)
        peak_t = h.times[np.argmax(np.abs(h.samples))]
        assert peak_t == pytest.approx(model.distance_m / C_LIGHT, abs=h.sample_period)


class TestImpulseResponse:
    def test_identity_channel_is_delta(self):
        model = make_model()
        gains = np.ones(model.nfft // 2 + 1, dtype=complex)
        h = np.fft.irfft(gains, model.nfft)
        assert h[0] == pytest.approx(1.0, rel=1e-12)
        assert np.max(np.abs(h[1:])) < 1e-12

    def test_pure_delay_is_shifted_delta(self):
        model = make_model()
        tau = 8 * model.sample_period
        gains = np.exp(-2j * np.pi * model.frequencies_hz * tau)
        h = np.fft.irfft(gains, model.nfft)
        assert h[8] == pytest.approx(1.0, rel=1e-9)
        h[8] = 0.0
        assert np.max(np.abs(h)) < 1e-9

    def test_impulse_response_is_real(self):
        h = impulse_response(make_model())
        assert not np.iscomplexobj(h.samples)

    def test_round_trip_and_parseval(self):
        table = AbsorptionTable(np.array([0.0, 2.5e13]), np.array([0.0, 2e4]))
        model = make_model(absorption=table)
        gains = frequency_response(model)
        h = impulse_response(model)
        back = np.fft.rfft(h.samples, model.nfft)
        assert np.allclose(back, gains, rtol=1e-9, atol=1e-12 * np.abs(gains).max())
        # Parseval: sum |h|^2 = mean of |H|^2 over the full (two-sided) grid
        full = np.fft.fft(h.samples)
        assert np.sum(np.abs(h.samples) ** 2) == pytest.approx(
            np.mean(np.abs(full) ** 2), rel=1e-9
        )

    def test_spread_channel_widens_pulse(self):
        # frequency-selective absorption spreads a short pulse in time
        f_knots = np.linspace(0.0, 2.5e13, 60)
        k_knots = 4e4 * (f_knots / 2.5e13) ** 2 + 1.5e4 * np.exp(
            -(((f_knots - 6e12) / 8e11) ** 2)
        )
        model = make_model(absorption=AbsorptionTable(f_knots, k_knots))
        h = impulse_response(model)
        t = np.arange(256) * model.sample_period
        pulse = SampledSignal(np.exp(-(((t - 8e-13) / 42.5e-15) ** 2) / 2), model.sample_period)
        received = convolve(pulse, h)

        def support_width(sig):
            e = np.abs(sig.samples) ** 2
            above = np.nonzero(e > 1e-6 * e.max())[0]
            return (above[-1] - above[0]) * sig.sample_period

        assert support_width(received) > support_width(pulse)

    def test_bad_grid_rejected(self):
        with pytest.raises(ChannelDomainError):
            make_model(nfft=1000)


class TestConvolve:
    def test_identity(self):
        rng = np.random.default_rng(0)
        x = SampledSignal(rng.standard_normal(32), 1e-12)
        delta = SampledSignal(np.array([1.0]), 1e-12)
        out = convolve(x, delta)
        assert np.allclose(out.samples, x.samples)

    def test_commutes(self):
        rng = np.random.default_rng(1)
        a = SampledSignal(rng.standard_normal(17), 1e-12)
        b = SampledSignal(rng.standard_normal(9), 1e-12)
        assert np.allclose(
            convolve(a, b).samples, convolve(b, a).samples, rtol=1e-12, atol=1e-14
        )

    def test_against_direct_sum_oracle(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal(40)
        h = rng.standard_normal(12)
        direct = np.array(
            [
                sum(
                    x[m] * h[n - m]
                    for m in range(len(x))
                    if 0 <= n - m < len(h)
                )
                for n in range(len(x) + len(h) - 1)
            ]
        )
        out = convolve(SampledSignal(x, 1e-12), SampledSignal(h, 1e-12))
        assert len(out) == len(x) + len(h) - 1
        assert np.sum(out.samples**2) == pytest.approx(np.sum(direct**2), rel=1e-10)

    def test_t0_adds_and_period_mismatch(self):
        a = SampledSignal(np.ones(4), 1e-12, t0=2e-12)
        b = SampledSignal(np.ones(2), 1e-12, t0=3e-12)
        assert convolve(a, b).t0 == pytest.approx(5e-12)
        with pytest.raises(SampleGridError):
            convolve(a, SampledSignal(np.ones(2), 2e-12))
