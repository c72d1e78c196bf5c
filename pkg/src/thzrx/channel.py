"""THz channel: spreading loss, table-driven molecular absorption, antenna
factor, and conversion between frequency response and impulse response.

The composite response over a uniform DFT grid is

    H(f) = A * H_spread(f, d) * H_abs(f, d),

with A the flat point-dipole antenna magnitude lambda0/sqrt(4*pi)
(lambda0 = c/f0), H_spread = exp(-j*2*pi*f*d/c)/sqrt(4*pi*d^2) and
H_abs = exp(-k(f)*d/2).  The absorption coefficient k(f) is either
interpolated from a measured table or assembled from per-gas
cross-section records; line-by-line radiative transfer is out of scope.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .signals import SampledSignal, convolve

__all__ = [
    "C_LIGHT",
    "T_STP",
    "P_REF",
    "AbsorptionTable",
    "GasLine",
    "GasMixture",
    "ChannelModel",
    "ChannelDomainError",
    "AbsorptionRangeError",
    "absorption_coefficient",
    "spreading_loss",
    "molecular_absorption",
    "frequency_response",
    "impulse_response",
    "convolve",
]

# The paper prints c = 3.8e8 m/s; that is a typo and the physical value is
# used everywhere (see module docs / README).
C_LIGHT = 2.998e8
T_STP = 273.15  # K, temperature at standard pressure
P_REF = 1.0     # atm, reference pressure


class ChannelDomainError(ValueError):
    """Invalid channel parameter (non-positive distance, bad grid, ...)."""


class AbsorptionRangeError(ChannelDomainError):
    """Requested frequency lies outside the tabulated absorption span."""


@dataclass(frozen=True)
class AbsorptionTable:
    """Tabulated medium absorption coefficient k(f).

    ``frequencies_hz`` must be strictly increasing and ``k_per_m``
    non-negative.  ``pressure_atm``/``temperature_k`` record the conditions
    the table was generated at (metadata; lookups interpolate the table
    as-is).
    """

    frequencies_hz: np.ndarray
    k_per_m: np.ndarray
    pressure_atm: float = 1.0
    temperature_k: float = T_STP

    def __post_init__(self):
        f = np.asarray(self.frequencies_hz, dtype=float)
        k = np.asarray(self.k_per_m, dtype=float)
        if f.size == 0:
            raise ChannelDomainError("absorption table is empty")
        if f.shape != k.shape or f.ndim != 1:
            raise ChannelDomainError("frequency and k columns must be 1-D and equal length")
        if np.any(np.diff(f) <= 0):
            raise ChannelDomainError("absorption table frequencies must be strictly increasing")
        if np.any(k < 0) or not np.all(np.isfinite(k)):
            raise ChannelDomainError("absorption coefficients must be finite and >= 0")
        object.__setattr__(self, "frequencies_hz", f)
        object.__setattr__(self, "k_per_m", k)

    @classmethod
    def from_csv(cls, path, pressure_atm: float = 1.0, temperature_k: float = T_STP):
        """Load a ``freq_hz,k_per_m`` CSV table."""
        freqs, ks = [], []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or {"freq_hz", "k_per_m"} - set(reader.fieldnames):
                raise ChannelDomainError(
                    f"absorption CSV {path} must have header 'freq_hz,k_per_m'"
                )
            for row in reader:
                freqs.append(float(row["freq_hz"]))
                ks.append(float(row["k_per_m"]))
        return cls(np.array(freqs), np.array(ks), pressure_atm, temperature_k)

    def lookup(self, f) -> np.ndarray:
        """Linear interpolation; hard error outside the tabulated span."""
        f = np.asarray(f, dtype=float)
        lo, hi = self.frequencies_hz[0], self.frequencies_hz[-1]
        if np.any(f < lo) or np.any(f > hi):
            raise AbsorptionRangeError(
                f"frequency outside absorption table span [{lo:g}, {hi:g}] Hz"
            )
        return np.interp(f, self.frequencies_hz, self.k_per_m)


@dataclass(frozen=True)
class GasLine:
    """Cross-section samples of one gas: number density Q and sigma(f)."""

    molecules_per_m3: float
    frequencies_hz: np.ndarray
    cross_section_m2: np.ndarray

    def __post_init__(self):
        if self.molecules_per_m3 < 0:
            raise ChannelDomainError("molecules_per_m3 must be >= 0")
        f = np.asarray(self.frequencies_hz, dtype=float)
        s = np.asarray(self.cross_section_m2, dtype=float)
        if f.size == 0 or f.shape != s.shape:
            raise ChannelDomainError("gas line table must be non-empty and aligned")
        if np.any(np.diff(f) <= 0):
            raise ChannelDomainError("gas line frequencies must be strictly increasing")
        if np.any(s < 0):
            raise ChannelDomainError("cross-sections must be >= 0")
        object.__setattr__(self, "frequencies_hz", f)
        object.__setattr__(self, "cross_section_m2", s)

    @classmethod
    def from_csv(cls, path, molecules_per_m3: float):
        """Load a ``freq_hz,cross_section_m2`` CSV table."""
        freqs, sigmas = [], []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            need = {"freq_hz", "cross_section_m2"}
            if reader.fieldnames is None or need - set(reader.fieldnames):
                raise ChannelDomainError(
                    f"gas-line CSV {path} must have header 'freq_hz,cross_section_m2'"
                )
            for row in reader:
                freqs.append(float(row["freq_hz"]))
                sigmas.append(float(row["cross_section_m2"]))
        return cls(molecules_per_m3, np.array(freqs), np.array(sigmas))

    def lookup(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        lo, hi = self.frequencies_hz[0], self.frequencies_hz[-1]
        if np.any(f < lo) or np.any(f > hi):
            raise AbsorptionRangeError(
                f"frequency outside gas cross-section span [{lo:g}, {hi:g}] Hz"
            )
        return np.interp(f, self.frequencies_hz, self.cross_section_m2)


@dataclass(frozen=True)
class GasMixture:
    """A set of gas lines evaluated at a common pressure and temperature."""

    gases: tuple[GasLine, ...]
    pressure_atm: float = 1.0
    temperature_k: float = T_STP

    def __post_init__(self):
        object.__setattr__(self, "gases", tuple(self.gases))
        if self.pressure_atm <= 0 or self.temperature_k <= 0:
            raise ChannelDomainError("pressure and temperature must be positive")


def absorption_coefficient(source, pressure_atm: float, temperature_k: float, f) -> np.ndarray:
    """Medium absorption coefficient k(f) in 1/m.

    For gas-line input the scaling (p/p0)*(T_stp/T) * sum_i Q_i sigma_i(f)
    is applied; for a precomputed table the tabulated values are
    interpolated directly.  ``source`` may be an AbsorptionTable, a
    sequence of GasLine records (possibly empty, giving k = 0), or None
    for an absorption-free medium.
    """
    if pressure_atm <= 0 or temperature_k <= 0:
        raise ChannelDomainError("pressure and temperature must be positive")
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ChannelDomainError("frequency must be >= 0")
    if source is None:
        return np.zeros_like(f)
    if isinstance(source, AbsorptionTable):
        return source.lookup(f)
    if isinstance(source, GasMixture):
        source = source.gases
    if isinstance(source, Sequence) or isinstance(source, tuple):
        prefactor = (pressure_atm / P_REF) * (T_STP / temperature_k)
        k = np.zeros_like(f)
        for gas in source:
            k = k + gas.molecules_per_m3 * gas.lookup(f)
        return prefactor * k
    raise ChannelDomainError(f"unsupported absorption source {type(source)!r}")


def spreading_loss(f, d: float) -> np.ndarray:
    """Spherical spreading gain exp(-j*2*pi*f*d/c) / sqrt(4*pi*d^2).

    Magnitude is frequency independent; the phase is the free-space
    propagation delay d/c.
    """
    if d <= 0:
        raise ChannelDomainError(f"distance must be > 0, got {d}")
    f = np.asarray(f, dtype=float)
    mag = 1.0 / np.sqrt(4.0 * np.pi * d * d)
    return mag * np.exp(-2j * np.pi * f * d / C_LIGHT)


def molecular_absorption(f, d: float, k) -> np.ndarray:
    """Molecular absorption amplitude gain exp(-k(f)*d/2), in (0, 1]."""
    if d <= 0:
        raise ChannelDomainError(f"distance must be > 0, got {d}")
    k = np.asarray(k, dtype=float)
    if np.any(k < 0):
        raise ChannelDomainError("absorption coefficient must be >= 0")
    return np.exp(-k * d / 2.0)


@dataclass(frozen=True)
class ChannelModel:
    """Composite THz channel over a uniform DFT grid.

    ``nfft`` samples at ``sample_period`` seconds define the time grid;
    the frequency response lives on the matching one-sided rFFT bins, so
    the realized impulse response is real by construction.
    """

    distance_m: float
    antenna_design_frequency_hz: float
    nfft: int
    sample_period: float
    absorption: AbsorptionTable | GasMixture | None = None
    pressure_atm: float = 1.0
    temperature_k: float = T_STP
    # None -> flat point-dipole magnitude lambda0/sqrt(4*pi); a number
    # overrides it (1.0 removes the antennas from the cascade).
    antenna_factor: float | None = None

    def __post_init__(self):
        if self.distance_m <= 0:
            raise ChannelDomainError("distance must be > 0")
        if self.antenna_design_frequency_hz <= 0:
            raise ChannelDomainError("antenna design frequency must be > 0")
        if self.sample_period <= 0:
            raise ChannelDomainError("sample_period must be > 0")
        n = self.nfft
        if n < 2 or (n & (n - 1)) != 0:
            raise ChannelDomainError(f"nfft must be a power of two >= 2, got {n}")

    @property
    def frequencies_hz(self) -> np.ndarray:
        """One-sided rFFT bin frequencies of the grid."""
        return np.fft.rfftfreq(self.nfft, d=self.sample_period)

    @property
    def antenna_magnitude(self) -> float:
        if self.antenna_factor is not None:
            return float(self.antenna_factor)
        lambda0 = C_LIGHT / self.antenna_design_frequency_hz
        return lambda0 / np.sqrt(4.0 * np.pi)


def frequency_response(model: ChannelModel) -> np.ndarray:
    """Complex channel gains H(f) on the model's one-sided frequency grid.

    The DC and Nyquist bins are forced real (their Hermitian-symmetric
    extension demands it), which is the on-grid realizability condition
    for a real impulse response.
    """
    f = model.frequencies_hz
    k = absorption_coefficient(model.absorption, model.pressure_atm, model.temperature_k, f)
    h_spread = spreading_loss(f, model.distance_m)
    h_abs = molecular_absorption(f, model.distance_m, k)
    gains = model.antenna_magnitude * h_spread * h_abs
    gains[0] = gains[0].real
    gains[-1] = gains[-1].real
    return gains


def impulse_response(model: ChannelModel) -> SampledSignal:
    """Real impulse response via the inverse rFFT of the one-sided gains.

    The one-sided grid implies the Hermitian-symmetric extension, so the
    output is exactly real.
    """
    gains = frequency_response(model)
    if len(gains) != model.nfft // 2 + 1:
        raise ChannelDomainError("frequency grid inconsistent with nfft")
    h = np.fft.irfft(gains, n=model.nfft)
    return SampledSignal(h, model.sample_period, t0=0.0)
