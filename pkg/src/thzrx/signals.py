"""Uniformly sampled signals and linear convolution.

The sampled-signal container is shared by the waveform generators, the
channel model and the receiver chain; everything downstream assumes a
uniform grid t[n] = t0 + n*sample_period.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

__all__ = ["SampledSignal", "convolve"]


class SampleGridError(ValueError):
    """Sample periods or grid lengths are inconsistent."""


@dataclass(frozen=True)
class SampledSignal:
    """Real or complex waveform sampled at a fixed period.

    Attributes
    ----------
    samples : ndarray
        Sample values; real or complex, finite.
    sample_period : float
        Spacing T_s between samples in seconds, > 0.
    t0 : float
        Time of the first sample in seconds.
    """

    samples: np.ndarray
    sample_period: float
    t0: float = 0.0

    def __post_init__(self):
        samples = np.asarray(self.samples)
        if samples.ndim != 1:
            raise SampleGridError("samples must be one-dimensional")
        if not np.all(np.isfinite(samples)):
            raise SampleGridError("samples must be finite")
        if not (self.sample_period > 0 and np.isfinite(self.sample_period)):
            raise SampleGridError("sample_period must be positive and finite")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def times(self) -> np.ndarray:
        """Sample times t0 + n*T_s."""
        return self.t0 + self.sample_period * np.arange(len(self.samples))

    @property
    def duration(self) -> float:
        return self.sample_period * len(self.samples)

    def energy(self) -> float:
        """Sum of squared magnitudes (discrete energy, no T_s weight)."""
        return float(np.sum(np.abs(self.samples) ** 2))

    def is_complex(self) -> bool:
        return np.iscomplexobj(self.samples)

    def write_csv(self, path) -> None:
        """Export as ``t_s,value`` (complex values as ``t_s,re,im``)."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            if self.is_complex():
                writer.writerow(["t_s", "re", "im"])
                for t, v in zip(self.times, self.samples):
                    writer.writerow([repr(float(t)), repr(float(v.real)), repr(float(v.imag))])
            else:
                writer.writerow(["t_s", "value"])
                for t, v in zip(self.times, self.samples):
                    writer.writerow([repr(float(t)), repr(float(v))])


def convolve(signal: SampledSignal, h: SampledSignal) -> SampledSignal:
    """Linear convolution of two equally sampled signals.

    Output length is ``len(signal) + len(h) - 1`` and the time origins add,
    matching continuous-time convolution of the underlying pulse trains up
    to a factor T_s (not applied; discrete convention used throughout).
    """
    if not np.isclose(signal.sample_period, h.sample_period, rtol=1e-12, atol=0.0):
        raise SampleGridError(
            f"sample-period mismatch: {signal.sample_period} vs {h.sample_period}"
        )
    out = np.convolve(signal.samples, h.samples)
    return SampledSignal(out, signal.sample_period, signal.t0 + h.t0)
