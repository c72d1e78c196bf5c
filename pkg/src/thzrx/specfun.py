"""Gamma-family special functions, noncentral chi-squared CDF, Marcum-Q.

All closed-form detector error probabilities rest on this kernel.  The
noncentral chi-squared CDF is evaluated as a Poisson mixture of central
chi-squared CDFs,

    F_X(x, m, lam) = sum_j  Pois(j; lam/2) * F_Y(x, m + 2j),

summed outward from the mode of the Poisson weights in log-space so that
large noncentralities neither underflow e^(-lam/2) nor waste terms.  The
generalized Marcum-Q function is defined through the complementary-CDF
identity Q_{m/2}(sqrt(lam), sqrt(x)) = 1 - F_X(x, m, lam), which is the
only way the detector layer consumes it.

Argument convention: the regularized lower incomplete gamma function is
exposed as P(s, x) = gamma(s, x) / Gamma(s) with the *order first*, fixed
so that the central chi-squared CDF is F_Y(x, l) = P(l/2, x/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sp

__all__ = [
    "ChiSquaredParams",
    "SpecfunDomainError",
    "SpecfunConvergenceError",
    "regularized_lower_gamma",
    "central_chisq_cdf",
    "noncentral_chisq_cdf",
    "marcum_q",
]

# Poisson tail mass left unaccumulated before the series is cut off.
DEFAULT_TAIL_TOL = 1e-14
# Hard cap on series terms; reaching it is a numerical failure, not a result.
DEFAULT_MAX_TERMS = 200_000


class SpecfunDomainError(ValueError):
    """Argument outside the function's domain (negative, NaN, ...)."""


class SpecfunConvergenceError(RuntimeError):
    """Series term budget exhausted before the tail bound was met."""


@dataclass(frozen=True)
class ChiSquaredParams:
    """Degrees of freedom and noncentrality of a chi-squared law."""

    dof: float
    noncentrality: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.dof) and self.dof > 0):
            raise SpecfunDomainError(f"dof must be positive and finite, got {self.dof}")
        if not (np.isfinite(self.noncentrality) and self.noncentrality >= 0):
            raise SpecfunDomainError(
                f"noncentrality must be non-negative and finite, got {self.noncentrality}"
            )


def _check_scalar(name: str, value: float, minimum: float, strict: bool) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise SpecfunDomainError(f"{name} must be finite, got {value}")
    if (value <= minimum) if strict else (value < minimum):
        op = ">" if strict else ">="
        raise SpecfunDomainError(f"{name} must be {op} {minimum}, got {value}")
    return value


def regularized_lower_gamma(s: float, x: float) -> float:
    """Regularized lower incomplete gamma P(s, x) = gamma(s, x)/Gamma(s).

    Monotone non-decreasing in x, tending to 1; this is the CDF of a
    Gamma(s, 1) variable.
    """
    s = _check_scalar("s", s, 0.0, strict=True)
    x = _check_scalar("x", x, 0.0, strict=False)
    return float(sp.gammainc(s, x))


def central_chisq_cdf(x: float, l: float) -> float:
    """CDF of a central chi-squared variable with ``l`` degrees of freedom."""
    l = _check_scalar("l", l, 0.0, strict=True)
    x = _check_scalar("x", x, 0.0, strict=False)
    return float(sp.gammainc(l / 2.0, x / 2.0))


def _poisson_mixture_cdf(
    x: float,
    dof: float,
    lam: float,
    tail_tol: float,
    max_terms: int,
) -> float:
    """Poisson-weighted sum of central CDFs, expanded outward from the mode.

    Both directions stop once a geometric majorant of the unvisited
    Poisson mass drops below ``tail_tol``; every central CDF factor lies
    in [0, 1], so that mass bounds the neglected contribution.  The
    frontier weight ratios (j/half going down, half/(j+1) going up) shrink
    monotonically away from the mode, which makes the geometric bound
    valid.
    """
    half = lam / 2.0
    log_half = math.log(half)
    j_mode = int(half)
    block = 64
    x = np.asarray(x, dtype=float)

    def log_weight(j) -> np.ndarray:
        j = np.asarray(j, dtype=float)
        return -half + j * log_half - sp.gammaln(j + 1.0)

    def partial(j_lo: int, j_hi: int) -> np.ndarray:
        j = np.arange(j_lo, j_hi + 1, dtype=float)
        w = np.exp(log_weight(j))
        # (nx, nterms) @ (nterms,): truncation bounds are x-independent,
        # so one term range serves the whole array
        return sp.gammainc(dof / 2.0 + j, x[..., None] / 2.0) @ w

    total = partial(max(j_mode - block + 1, 0), j_mode + block)
    terms_used = 2 * block
    lo = max(j_mode - block + 1, 0)
    hi = j_mode + block
    while lo > 0 and terms_used < max_terms:
        # lower tail below lo: w(lo-1) = w(lo) * lo/half, ratios shrink further
        frontier = math.exp(float(log_weight(lo - 1.0)))
        ratio = (lo - 1.0) / half
        if ratio < 1.0 and frontier / (1.0 - ratio) < tail_tol / 2.0:
            break
        new_lo = max(lo - block, 0)
        total += partial(new_lo, lo - 1)
        terms_used += lo - new_lo
        lo = new_lo
    while terms_used < max_terms:
        # upper tail above hi: w(hi+1) = w(hi) * half/(hi+1), ratios shrink
        frontier = math.exp(float(log_weight(hi + 1.0)))
        ratio = half / (hi + 2.0)
        if ratio < 1.0 and frontier / (1.0 - ratio) < tail_tol / 2.0:
            return np.minimum(np.maximum(total, 0.0), 1.0)
        total += partial(hi + 1, hi + block)
        terms_used += block
        hi += block
    raise SpecfunConvergenceError(
        f"noncentral chi-squared series did not converge within {max_terms} terms "
        f"(dof={dof}, lam={lam})"
    )


def noncentral_chisq_cdf(
    x,
    params: ChiSquaredParams,
    *,
    tail_tol: float = DEFAULT_TAIL_TOL,
    max_terms: int = DEFAULT_MAX_TERMS,
):
    """CDF of the noncentral chi-squared law at ``x`` (scalar or array).

    Collapses to the central CDF when the noncentrality is zero.  The
    result is clamped to [0, 1].
    """
    if not isinstance(params, ChiSquaredParams):
        params = ChiSquaredParams(*params)
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise SpecfunDomainError("x must be finite and >= 0")
    if params.noncentrality == 0.0:
        out = sp.gammainc(params.dof / 2.0, arr / 2.0)
    else:
        out = _poisson_mixture_cdf(
            arr, params.dof, params.noncentrality, tail_tol, max_terms
        )
        out = np.where(arr == 0.0, 0.0, out)
    return float(out) if scalar else out


def marcum_q(
    order: float,
    a: float,
    b,
    *,
    tail_tol: float = DEFAULT_TAIL_TOL,
    max_terms: int = DEFAULT_MAX_TERMS,
):
    """Generalized Marcum-Q function Q_order(a, b); b may be an array.

    Evaluated through the identity
    Q_{m/2}(sqrt(lam), sqrt(x)) = 1 - F_X(x, m, lam), so detector code and
    the chi-squared series share a single numerical kernel.  Non-increasing
    in ``b`` and non-decreasing in ``a``.
    """
    order = _check_scalar("order", order, 0.0, strict=True)
    a = _check_scalar("a", a, 0.0, strict=False)
    b = np.asarray(b, dtype=float)
    if np.any(b < 0) or not np.all(np.isfinite(b)):
        raise SpecfunDomainError("b must be finite and >= 0")
    params = ChiSquaredParams(dof=2.0 * order, noncentrality=a * a)
    cdf = noncentral_chisq_cdf(b * b, params, tail_tol=tail_tol, max_terms=max_terms)
    return 1.0 - cdf
