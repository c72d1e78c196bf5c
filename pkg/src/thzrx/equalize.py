"""Training-based least-squares CIR estimation and frequency-domain
deconvolution.

The symbol-rate model is r[k] = sum_l h[l] b[k-l] + w[k]; stacking the
training span gives r = B h + w with B the banded Toeplitz matrix of
training symbols, and the least-squares tap estimate is the solution of
that system by orthogonal factorization (numerically equivalent to the
normal-equation form (B^H B)^{-1} B^H r).  Deconvolution divides the
received spectrum by the estimated channel spectrum, optionally guarded
against deep spectral notches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from .signals import SampledSignal

__all__ = [
    "TrainingBlock",
    "CirEstimate",
    "EqualizeError",
    "RankConditionError",
    "IllConditionedError",
    "SingularSpectrumError",
    "build_convolution_matrix",
    "ls_estimate",
    "deconvolve",
]

DEFAULT_CONDITION_CAP = 1e10
# |H| bins below this fraction of the peak count as spectral nulls when
# plain (epsilon = 0) division is requested.
_NULL_REL_TOL = 1e-12


class EqualizeError(ValueError):
    """Invalid estimation/deconvolution input."""


class RankConditionError(EqualizeError):
    """Training span too short for the requested tap count (k_m - k_1 < 2L)."""


class IllConditionedError(EqualizeError):
    """Training matrix condition number exceeds the configured cap."""


class SingularSpectrumError(ZeroDivisionError):
    """Plain spectral division hit a (near-)zero channel bin."""


@dataclass(frozen=True)
class TrainingBlock:
    """Known symbols b[k_1 .. k_m] used to probe the channel."""

    symbols: np.ndarray
    k1: int = 0

    def __post_init__(self):
        symbols = np.asarray(self.symbols)
        if symbols.ndim != 1 or len(symbols) < 1:
            raise EqualizeError("training symbols must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(symbols)):
            raise EqualizeError("training symbols must be finite")
        object.__setattr__(self, "symbols", symbols)

    @property
    def km(self) -> int:
        return self.k1 + len(self.symbols) - 1

    def check_rank_condition(self, taps_minus_one: int) -> None:
        if self.km - self.k1 < 2 * taps_minus_one:
            raise RankConditionError(
                f"training span k_m-k_1 = {self.km - self.k1} violates the "
                f"rank condition >= 2L = {2 * taps_minus_one}"
            )


@dataclass(frozen=True)
class CirEstimate:
    """L+1 complex channel taps, optionally with the LS error variances."""

    taps: np.ndarray
    covariance_scale: np.ndarray | None = None

    def __post_init__(self):
        taps = np.asarray(self.taps)
        if taps.ndim != 1 or len(taps) < 1:
            raise EqualizeError("taps must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(taps)):
            raise EqualizeError("taps must be finite")
        object.__setattr__(self, "taps", taps)

    @property
    def order(self) -> int:
        """L, the tap count minus one."""
        return len(self.taps) - 1

    def write_csv(self, path) -> None:
        """Export as ``tap_index,re,im``."""
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["tap_index", "re", "im"])
            for i, tap in enumerate(self.taps):
                writer.writerow([i, repr(float(np.real(tap))), repr(float(np.imag(tap)))])


def build_convolution_matrix(training: TrainingBlock, taps_minus_one: int) -> np.ndarray:
    """Banded Toeplitz matrix B with row j = b[k1+L+j], ..., b[k1+j].

    Shape is (k_m - k_1 - L + 1) x (L + 1); B @ h reproduces the
    steady-state part of the linear convolution of the training symbols
    with an (L+1)-tap channel.
    """
    if taps_minus_one < 0:
        raise EqualizeError("tap order L must be >= 0")
    training.check_rank_condition(taps_minus_one)
    b = training.symbols
    L = taps_minus_one
    return toeplitz(b[L:], b[L::-1])


def ls_estimate(
    received,
    training: TrainingBlock,
    taps_minus_one: int,
    *,
    sigma2: float | None = None,
    condition_cap: float = DEFAULT_CONDITION_CAP,
) -> CirEstimate:
    """Least-squares CIR estimate from a received training window.

    ``received`` must hold the window r[k1+L .. km] aligned with the
    training block.  Solved through an orthogonal factorization; the
    noiseless case recovers the channel exactly.  When ``sigma2`` is
    given, the diagonal of sigma^2 (B^H B)^{-1} is attached as the
    estimator's per-tap error variance.
    """
    if isinstance(received, SampledSignal):
        received = received.samples
    r = np.asarray(received)
    B = build_convolution_matrix(training, taps_minus_one)
    if len(r) != B.shape[0]:
        raise EqualizeError(
            f"received window has {len(r)} samples, expected {B.shape[0]} "
            "(training span minus tap order)"
        )
    cond = np.linalg.cond(B)
    if not np.isfinite(cond) or cond > condition_cap:
        raise IllConditionedError(
            f"training matrix condition number {cond:.3g} exceeds cap {condition_cap:.3g}"
        )
    taps, *_ = np.linalg.lstsq(B, r, rcond=None)
    cov = None
    if sigma2 is not None:
        if sigma2 < 0:
            raise EqualizeError("sigma2 must be >= 0")
        gram_inv = np.linalg.inv(B.conj().T @ B)
        cov = sigma2 * np.real(np.diag(gram_inv))
    return CirEstimate(taps, cov)


def deconvolve(
    r: SampledSignal,
    h_hat: CirEstimate,
    epsilon: float = 1e-8,
) -> SampledSignal:
    """Remove the channel by frequency-domain division.

    With ``epsilon`` > 0 the division is guarded,
    R(f) * conj(H)/( |H|^2 + eps * max|H|^2 ), which keeps deep spectral
    notches finite; ``epsilon = 0`` reproduces plain division and raises
    on (near-)zero bins.  Output length equals the input length.
    """
    if epsilon < 0:
        raise EqualizeError("epsilon must be >= 0")
    n = len(r)
    spectrum = np.fft.fft(r.samples, n)
    response = np.fft.fft(h_hat.taps, n)
    power = np.abs(response) ** 2
    peak = power.max()
    if peak == 0.0:
        raise SingularSpectrumError("estimated channel spectrum is identically zero")
    if epsilon == 0.0:
        if np.any(power < (_NULL_REL_TOL**2) * peak):
            raise SingularSpectrumError(
                "channel spectrum has a null; use epsilon > 0 for guarded division"
            )
        out = spectrum / response
    else:
        out = spectrum * np.conj(response) / (power + epsilon * peak)
    x = np.fft.ifft(out)
    if not (r.is_complex() or np.iscomplexobj(h_hat.taps)):
        x = np.real(x)
    return SampledSignal(x, r.sample_period, r.t0)
