"""Transmit waveforms: Gaussian pulses (PBM), raised-cosine carrier
modulation (CBM), constellation alphabets, and seeded AWGN.

Pulse-based modulation places one Gaussian pulse per active slot; carrier
modulation shapes one symbol per slot with a raised-cosine pulse and
mixes it onto a real carrier.  Slot k covers [k*T, (k+1)*T) and both
pulse families are centred mid-slot by default (the centre is a free
parameter of the Gaussian pulse).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .signals import SampledSignal

__all__ = [
    "GaussianPulseParams",
    "RaisedCosineParams",
    "SlotConfig",
    "Constellation",
    "WaveformError",
    "AliasingError",
    "gaussian_pulse",
    "raised_cosine",
    "modulate_pbm",
    "modulate_cbm",
    "constellation",
    "add_awgn",
    "SCHEMES",
]

# Width of the guard band around the removable raised-cosine singularity.
_RC_SINGULARITY_TOL = 1e-8


class WaveformError(ValueError):
    """Invalid waveform parameters or inconsistent slot configuration."""


class AliasingError(WaveformError):
    """Carrier frequency is not representable on the sample grid."""


@dataclass(frozen=True)
class GaussianPulseParams:
    """Gaussian pulse a*exp(-(t-b)^2 / (2 c^2)).

    ``amplitude`` is an independent parameter: the normalized preset
    1/sqrt(2*pi*c^2) makes the pulse integrate to one, while simulation
    setups often pin it to 1 instead.
    """

    amplitude: float
    center: float
    spread: float

    def __post_init__(self):
        if self.amplitude <= 0:
            raise WaveformError("amplitude must be > 0")
        if self.spread <= 0:
            raise WaveformError("spread must be > 0")

    @classmethod
    def normalized(cls, center: float, spread: float) -> "GaussianPulseParams":
        """Unit-area preset a = 1/sqrt(2*pi*spread^2)."""
        return cls(1.0 / np.sqrt(2.0 * np.pi * spread**2), center, spread)


@dataclass(frozen=True)
class RaisedCosineParams:
    """Raised-cosine pulse with symbol period T and roll-off alpha in [0, 1)."""

    symbol_period: float
    alpha: float

    def __post_init__(self):
        if self.symbol_period <= 0:
            raise WaveformError("symbol_period must be > 0")
        if not (0.0 <= self.alpha < 1.0):
            raise WaveformError("alpha must lie in [0, 1)")


@dataclass(frozen=True)
class SlotConfig:
    """Slotted transmission: beta slots of T seconds, N samples per slot."""

    slot_period: float
    samples_per_slot: int
    slots: int
    carrier_hz: float = 0.0
    carrier_phase: float = 0.0

    def __post_init__(self):
        if self.slot_period <= 0:
            raise WaveformError("slot_period must be > 0")
        if self.samples_per_slot < 1:
            raise WaveformError("samples_per_slot must be >= 1")
        if self.slots < 1:
            raise WaveformError("slots must be >= 1")
        if self.carrier_hz < 0:
            raise WaveformError("carrier_hz must be >= 0")

    @property
    def sample_period(self) -> float:
        return self.slot_period / self.samples_per_slot

    @property
    def observation_samples(self) -> int:
        """Samples in the observation interval beta*T."""
        return self.samples_per_slot * self.slots

    def time_grid(self) -> np.ndarray:
        return np.arange(self.observation_samples) * self.sample_period

    def slot_centers(self) -> np.ndarray:
        return (np.arange(self.slots) + 0.5) * self.slot_period


@dataclass(frozen=True)
class Constellation:
    """Named symbol alphabet with unit average energy."""

    scheme: str
    points: np.ndarray
    dimension: int

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        object.__setattr__(self, "points", pts)
        if self.dimension not in (1, 2):
            raise WaveformError("constellation dimension must be 1 or 2")

    @property
    def order(self) -> int:
        return len(self.points)

    def points_real(self) -> np.ndarray:
        """Points as (M, d) real coordinates."""
        if self.dimension == 1:
            return self.points.real[:, None]
        return np.column_stack([self.points.real, self.points.imag])


SCHEMES = ("BPSK", "QPSK", "8-PSK", "16-PSK", "16-QAM")

_ALIASES = {
    "bpsk": "BPSK",
    "qpsk": "QPSK",
    "4qam": "QPSK",
    "4-qam": "QPSK",
    "8psk": "8-PSK",
    "8-psk": "8-PSK",
    "16psk": "16-PSK",
    "16-psk": "16-PSK",
    "16qam": "16-QAM",
    "16-qam": "16-QAM",
}


def canonical_scheme(name: str) -> str:
    key = name.strip().lower().replace("_", "-")
    key = _ALIASES.get(key, _ALIASES.get(key.replace("-", ""), None))
    if key is None:
        raise WaveformError(f"unknown modulation scheme {name!r}")
    return key


def constellation(scheme: str) -> Constellation:
    """Unit-average-energy constellation for a named scheme.

    BPSK is the one-dimensional alphabet {-1, +1}; the PSK rings live on
    the unit circle (QPSK offset by pi/4) and 16-QAM is the {+-1, +-3}
    grid scaled by 1/sqrt(10).
    """
    name = canonical_scheme(scheme)
    if name == "BPSK":
        return Constellation(name, np.array([-1.0 + 0j, 1.0 + 0j]), dimension=1)
    if name == "QPSK":
        pts = np.exp(1j * (2.0 * np.pi * np.arange(4) / 4 + np.pi / 4))
        return Constellation(name, pts, dimension=2)
    if name == "8-PSK":
        pts = np.exp(1j * 2.0 * np.pi * np.arange(8) / 8)
        return Constellation(name, pts, dimension=2)
    if name == "16-PSK":
        pts = np.exp(1j * 2.0 * np.pi * np.arange(16) / 16)
        return Constellation(name, pts, dimension=2)
    re, im = np.meshgrid([-3.0, -1.0, 1.0, 3.0], [-3.0, -1.0, 1.0, 3.0])
    pts = (re + 1j * im).ravel() / np.sqrt(10.0)
    return Constellation(name, pts, dimension=2)


def _uniform_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) < 2:
        raise WaveformError("time grid must be 1-D with at least two samples")
    steps = np.diff(t)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise WaveformError("time grid must be uniform")
    return t


def gaussian_pulse(params: GaussianPulseParams, t_grid) -> SampledSignal:
    """Samples of a*exp(-(t-b)^2/(2 c^2)) on a uniform grid."""
    t = _uniform_grid(t_grid)
    x = params.amplitude * np.exp(-((t - params.center) ** 2) / (2.0 * params.spread**2))
    return SampledSignal(x, t[1] - t[0], t0=t[0])


def raised_cosine_value(params: RaisedCosineParams, tau) -> np.ndarray:
    """Raised-cosine pulse q(tau) = sinc(tau/T) cos(pi a tau/T)/(1-(2a tau/T)^2).

    Normalized-sinc convention, so q(0) = 1 and q(kT) = 0 for nonzero
    integers k.  At the removable singularities tau = +-T/(2 alpha) the
    l'Hopital limit (pi/4)*sinc(1/(2 alpha)) is substituted.
    """
    x = np.asarray(tau, dtype=float) / params.symbol_period
    alpha = params.alpha
    den = 1.0 - (2.0 * alpha * x) ** 2
    out = np.empty_like(x)
    singular = np.abs(den) < _RC_SINGULARITY_TOL
    regular = ~singular
    out[regular] = np.sinc(x[regular]) * np.cos(np.pi * alpha * x[regular]) / den[regular]
    if np.any(singular):
        # cos/den -> pi/4 at x = +-1/(2 alpha)
        limit = (np.pi / 4.0) * np.sinc(1.0 / (2.0 * alpha))
        out[singular] = limit
    return out


def raised_cosine(params: RaisedCosineParams, t_grid) -> SampledSignal:
    t = _uniform_grid(t_grid)
    return SampledSignal(raised_cosine_value(params, t), t[1] - t[0], t0=t[0])


def modulate_pbm(
    pulse: GaussianPulseParams, slots: SlotConfig, bits
) -> SampledSignal:
    """On-off keyed Gaussian pulse train: one pulse per slot where bit = 1.

    The pulse centre parameter is interpreted relative to the slot start,
    so slot k carries a pulse at k*T + pulse.center.
    """
    bits = np.asarray(bits)
    if len(bits) != slots.slots:
        raise WaveformError(f"expected {slots.slots} bits, got {len(bits)}")
    if np.any((bits != 0) & (bits != 1)):
        raise WaveformError("bits must be 0/1")
    if pulse.spread > slots.slot_period / 10.0:
        warnings.warn(
            "pulse spread exceeds 10% of the slot period; PBM/CBM energy "
            "separation degrades at high duty cycle",
            stacklevel=2,
        )
    t = slots.time_grid()
    x = np.zeros_like(t)
    for k, bit in enumerate(bits):
        if bit:
            center = k * slots.slot_period + pulse.center
            x += pulse.amplitude * np.exp(-((t - center) ** 2) / (2.0 * pulse.spread**2))
    return SampledSignal(x, slots.sample_period, t0=0.0)


def modulate_cbm(
    rc: RaisedCosineParams, slots: SlotConfig, symbols
) -> SampledSignal:
    """Raised-cosine shaped symbols on a real carrier.

    The envelope sum_k b[k] q(t - t_k) uses slot-centre pulse positions
    t_k = (k + 1/2) T; complex symbols produce the real passband signal
    Re{env(t) * exp(j(2 pi f_c t + phi))}.
    """
    symbols = np.asarray(symbols, dtype=complex)
    if len(symbols) != slots.slots:
        raise WaveformError(f"expected {slots.slots} symbols, got {len(symbols)}")
    if not np.isclose(rc.symbol_period, slots.slot_period, rtol=1e-12):
        raise WaveformError("raised-cosine symbol period must equal the slot period")
    nyquist = 1.0 / (2.0 * slots.sample_period)
    if slots.carrier_hz >= nyquist:
        raise AliasingError(
            f"carrier {slots.carrier_hz:g} Hz >= Nyquist {nyquist:g} Hz for this grid"
        )
    t = slots.time_grid()
    env = np.zeros(len(t), dtype=complex)
    for k, b in enumerate(symbols):
        if b != 0:
            env += b * raised_cosine_value(rc, t - slots.slot_centers()[k])
    carrier = np.exp(1j * (2.0 * np.pi * slots.carrier_hz * t + slots.carrier_phase))
    x = np.real(env * carrier)
    return SampledSignal(x, slots.sample_period, t0=0.0)


def add_awgn(signal: SampledSignal, sigma: float, seed) -> SampledSignal:
    """Add i.i.d. zero-mean Gaussian noise with std ``sigma`` per component.

    Complex signals receive independent noise on the real and imaginary
    parts.  The draw is fully determined by ``seed``.
    """
    if sigma < 0:
        raise WaveformError("sigma must be >= 0")
    if sigma == 0:
        return signal
    rng = np.random.default_rng(seed)
    if signal.is_complex():
        noise = sigma * (
            rng.standard_normal(len(signal)) + 1j * rng.standard_normal(len(signal))
        )
    else:
        noise = sigma * rng.standard_normal(len(signal))
    return SampledSignal(signal.samples + noise, signal.sample_period, signal.t0)
