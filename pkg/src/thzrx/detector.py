"""Modulation-mode detection: energy test statistic, closed-form type-I/II
error probabilities, Monte-Carlo estimation and Pareto-point search.

The decision statistic over an N-sample window is T = (1/N) sum r[n]^2,
compared against the threshold eta.  Under hypothesis i the normalized
energy sum is noncentral chi-squared with noncentrality
lambda_i = sum (s_i[n]/sigma)^2, giving

    P_e1 = Q_{dof/2}( sqrt(lambda_0), sqrt(N*eta/sigma^2) )
    P_e2 = 1 - Q_{dof/2}( sqrt(lambda_1), sqrt(N*eta/sigma^2) )

with dof = N for real passband windows and 2N in the complex-baseband
variant.

Two sweep conventions are exposed because the published operating points
are only reachable under one of them (see README):

* ``snr_convention``: "figure" maps an SNR axis value to
  sigma^2 = 10**(-dB/5) (the published figures' axis); "power" is the
  textbook sigma^2 = 10**(-dB/10).
* ``signal_scaling``: "noise-matched" scales the transmit amplitude with
  sigma so the noncentralities stay fixed over the sweep (the published
  model); "fixed" keeps the physical amplitude constant.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from . import specfun
from .signals import SampledSignal

__all__ = [
    "DetectorConfig",
    "Mode",
    "TestOutcome",
    "NoncentralityPair",
    "DetectorError",
    "WindowLengthError",
    "NoCrossingError",
    "SweepRow",
    "test_statistic",
    "decide",
    "noncentrality",
    "type1_error",
    "type2_error",
    "error_sweep",
    "pareto_point",
    "mc_error_rates",
    "sigma2_from_snr_db",
]


class DetectorError(ValueError):
    """Invalid detector configuration or input."""


class WindowLengthError(DetectorError):
    """Decision window does not match the configured sample count."""


class NoCrossingError(RuntimeError):
    """The error-probability curves do not intersect on the given range."""


class Mode(enum.Enum):
    """Binary hypothesis labels: H0 is pulse-based, H1 carrier-based."""

    PBM = "H0"
    CBM = "H1"


@dataclass(frozen=True)
class DetectorConfig:
    """Samples per decision window, threshold and noise PSD.

    ``complex_baseband`` switches to the 2N-degrees-of-freedom variant
    where the window holds complex samples.
    """

    window_samples: int
    eta: float
    sigma2: float
    complex_baseband: bool = False

    def __post_init__(self):
        if self.window_samples < 1:
            raise DetectorError("window_samples must be >= 1")
        if self.eta < 0:
            raise DetectorError("eta must be >= 0")
        if self.sigma2 <= 0:
            raise DetectorError("sigma2 must be > 0")

    @property
    def dof(self) -> int:
        return 2 * self.window_samples if self.complex_baseband else self.window_samples

    @property
    def normalized_threshold(self) -> float:
        """eta' = N*eta/sigma^2, the threshold on the normalized energy."""
        return self.window_samples * self.eta / self.sigma2


@dataclass(frozen=True)
class TestOutcome:
    statistic: float
    decision: Mode


@dataclass(frozen=True)
class NoncentralityPair:
    """Noncentralities of the two hypotheses; PBM below CBM by construction."""

    lambda0: float
    lambda1: float

    def __post_init__(self):
        if self.lambda0 < 0 or self.lambda1 < 0:
            raise DetectorError("noncentralities must be >= 0")


def _window_array(window, config: DetectorConfig) -> np.ndarray:
    if isinstance(window, SampledSignal):
        window = window.samples
    window = np.asarray(window)
    if len(window) != config.window_samples:
        raise WindowLengthError(
            f"window has {len(window)} samples, expected {config.window_samples}"
        )
    return window


def test_statistic(window, config: DetectorConfig) -> float:
    """Per-window statistic T = (1/N) * sum |r[n]|^2."""
    r = _window_array(window, config)
    return float(np.sum(np.abs(r) ** 2) / config.window_samples)


def decide(statistic: float, config: DetectorConfig) -> Mode:
    """CBM iff the statistic exceeds eta; the tie goes to PBM."""
    return Mode.CBM if statistic > config.eta else Mode.PBM


def detect(window, config: DetectorConfig) -> TestOutcome:
    stat = test_statistic(window, config)
    return TestOutcome(stat, decide(stat, config))


def noncentrality(clean_signal, sigma2: float) -> float:
    """lambda = sum (|s[n]|/sigma)^2 for a clean (noiseless) window."""
    if sigma2 <= 0:
        raise DetectorError("sigma2 must be > 0")
    if isinstance(clean_signal, SampledSignal):
        clean_signal = clean_signal.samples
    s = np.asarray(clean_signal)
    return float(np.sum(np.abs(s) ** 2) / sigma2)


def type1_error(config: DetectorConfig, lambda0: float) -> float:
    """P(declare CBM | PBM) = Q_{dof/2}(sqrt(lambda0), sqrt(eta'))."""
    if lambda0 < 0:
        raise DetectorError("lambda0 must be >= 0")
    return specfun.marcum_q(
        config.dof / 2.0, np.sqrt(lambda0), np.sqrt(config.normalized_threshold)
    )


def type2_error(config: DetectorConfig, lambda1: float) -> float:
    """P(declare PBM | CBM) = 1 - Q_{dof/2}(sqrt(lambda1), sqrt(eta'))."""
    if lambda1 < 0:
        raise DetectorError("lambda1 must be >= 0")
    return 1.0 - specfun.marcum_q(
        config.dof / 2.0, np.sqrt(lambda1), np.sqrt(config.normalized_threshold)
    )


def sigma2_from_snr_db(snr_db: float, convention: str = "figure") -> float:
    """Noise PSD for an SNR-axis value under the chosen dB convention."""
    if convention == "figure":
        return 10.0 ** (-snr_db / 5.0)
    if convention == "power":
        return 10.0 ** (-snr_db / 10.0)
    raise DetectorError(f"unknown snr convention {convention!r}")


def _signal_energies(s0, s1) -> tuple[float, float, np.ndarray, np.ndarray]:
    a0 = s0.samples if isinstance(s0, SampledSignal) else np.asarray(s0)
    a1 = s1.samples if isinstance(s1, SampledSignal) else np.asarray(s1)
    return (
        float(np.sum(np.abs(a0) ** 2)),
        float(np.sum(np.abs(a1) ** 2)),
        np.asarray(a0, dtype=float),
        np.asarray(a1, dtype=float),
    )


def _lambdas(e0: float, e1: float, sigma2: float, signal_scaling: str) -> tuple[float, float]:
    if signal_scaling == "noise-matched":
        return e0, e1
    if signal_scaling == "fixed":
        return e0 / sigma2, e1 / sigma2
    raise DetectorError(f"unknown signal scaling {signal_scaling!r}")


def mc_error_rates(
    s0,
    s1,
    config: DetectorConfig,
    trials: int,
    seed,
    signal_scaling: str = "noise-matched",
) -> tuple[float, float]:
    """Empirical (P_e1, P_e2) over seeded Monte-Carlo windows.

    Noise-matched scaling simulates r~ = s + unit noise and thresholds the
    normalized energy at N*eta/sigma^2, which is the same event as the
    physical fixed-amplitude simulation with s scaled by sigma.
    """
    if trials < 1:
        raise DetectorError("trials must be >= 1")
    _, _, a0, a1 = _signal_energies(s0, s1)
    if len(a0) != config.window_samples or len(a1) != config.window_samples:
        raise WindowLengthError("clean signals must span the decision window")
    rng = np.random.default_rng(seed)
    sigma = np.sqrt(config.sigma2)
    threshold = config.normalized_threshold
    scale = 1.0 if signal_scaling == "noise-matched" else 1.0 / sigma
    if signal_scaling not in ("noise-matched", "fixed"):
        raise DetectorError(f"unknown signal scaling {signal_scaling!r}")
    # Normalized-domain simulation: r~ = s*scale + w, w ~ N(0, 1).
    w0 = rng.standard_normal((trials, config.window_samples))
    a = np.sum((a0 * scale + w0) ** 2, axis=1)
    pe1 = float(np.mean(a > threshold))
    w1 = rng.standard_normal((trials, config.window_samples))
    a = np.sum((a1 * scale + w1) ** 2, axis=1)
    pe2 = float(np.mean(a <= threshold))
    return pe1, pe2


@dataclass(frozen=True)
class SweepRow:
    sweep_value: float
    pe1_analytic: float
    pe2_analytic: float
    pe1_mc: float | None
    pe2_mc: float | None
    trials: int


def _analytic_pair(
    e0: float,
    e1: float,
    config: DetectorConfig,
    signal_scaling: str,
) -> tuple[float, float]:
    lam0, lam1 = _lambdas(e0, e1, config.sigma2, signal_scaling)
    return type1_error(config, lam0), type2_error(config, lam1)


def error_sweep(
    s0,
    s1,
    config: DetectorConfig,
    sweep: str,
    grid,
    *,
    snr_convention: str = "figure",
    signal_scaling: str = "noise-matched",
    mc_trials: int = 0,
    seed=None,
) -> list[SweepRow]:
    """Analytic (and optionally Monte-Carlo) error curves over a grid.

    ``sweep`` is "snr" (grid in dB, noise PSD from the convention) or
    "eta" (grid of thresholds at the config's sigma2).  Each cell's
    Monte-Carlo run uses an independently derived seed, so the table is
    identical regardless of evaluation order.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise DetectorError("sweep grid must be non-empty")
    if np.any(np.diff(grid) <= 0):
        raise DetectorError("sweep grid must be strictly increasing")
    e0, e1, *_ = _signal_energies(s0, s1)
    rows = []
    for idx, value in enumerate(grid):
        if sweep == "snr":
            cell = replace(config, sigma2=sigma2_from_snr_db(value, snr_convention))
        elif sweep == "eta":
            cell = replace(config, eta=float(value))
        else:
            raise DetectorError(f"unknown sweep variable {sweep!r}")
        pe1, pe2 = _analytic_pair(e0, e1, cell, signal_scaling)
        pe1_mc = pe2_mc = None
        if mc_trials > 0:
            cell_seed = np.random.SeedSequence([_seed_entropy(seed), idx])
            pe1_mc, pe2_mc = mc_error_rates(
                s0, s1, cell, mc_trials, cell_seed, signal_scaling
            )
        rows.append(SweepRow(float(value), pe1, pe2, pe1_mc, pe2_mc, mc_trials))
    return rows


def _seed_entropy(seed) -> int:
    if seed is None:
        return 0
    return int(seed)


def pareto_point(
    s0,
    s1,
    config: DetectorConfig,
    sweep: str,
    bracket: tuple[float, float],
    *,
    snr_convention: str = "figure",
    signal_scaling: str = "noise-matched",
    tol: float = 1e-4,
) -> tuple[float, float]:
    """Locate the crossing P_e1 = P_e2 of the analytic curves by bisection.

    Returns the swept-variable value and the common error probability at
    the crossing; raises NoCrossingError when the difference does not
    change sign over the bracket.
    """
    e0, e1, *_ = _signal_energies(s0, s1)

    def gap(value: float) -> float:
        if sweep == "snr":
            cell = replace(config, sigma2=sigma2_from_snr_db(value, snr_convention))
        elif sweep == "eta":
            cell = replace(config, eta=float(value))
        else:
            raise DetectorError(f"unknown sweep variable {sweep!r}")
        pe1, pe2 = _analytic_pair(e0, e1, cell, signal_scaling)
        return pe1 - pe2

    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise DetectorError("bracket must satisfy lo < hi")
    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo == 0.0:
        hi = lo
    elif g_hi == 0.0:
        lo = hi
    elif g_lo * g_hi > 0:
        raise NoCrossingError(
            f"P_e1 - P_e2 does not change sign on [{bracket[0]}, {bracket[1]}]"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        g_mid = gap(mid)
        if g_mid == 0.0:
            lo = hi = mid
            break
        if g_lo * g_mid < 0:
            hi = mid
        else:
            lo, g_lo = mid, g_mid
    value = 0.5 * (lo + hi)
    if sweep == "snr":
        cell = replace(config, sigma2=sigma2_from_snr_db(value, snr_convention))
    else:
        cell = replace(config, eta=value)
    pe1, pe2 = _analytic_pair(e0, e1, cell, signal_scaling)
    return value, 0.5 * (pe1 + pe2)
