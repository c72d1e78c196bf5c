"""GMM representation, EM fitting, Gaussian approximation, KL divergences
and template-matching modulation classification.

The EM iteration follows the standard four updates (responsibilities,
weights, means, covariances around the updated means) with an absolute
log-likelihood convergence threshold; the engine runs on stacked batches
of datasets so Monte-Carlo sweeps share one code path with single fits.

Divergences come in two layers:

* ``kld_gaussian`` / ``symmetric_kld`` operate on single-Gaussian
  summaries (the closed form with trace, determinant and Mahalanobis
  terms) and ``gaussian_approx`` produces the moment-matched summary of a
  mixture.
* ``mixture_kld`` / ``mixture_symmetric_kld`` score whole mixtures with
  the variational approximation built from the same Gaussian-KLD kernel;
  for one-component mixtures they reduce exactly to the summary forms.
  Classification uses the mixture-level score: equal-energy constellations
  share their first two moments, so summary-level divergence provably
  cannot separate them (see README notes).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .waveform import Constellation, canonical_scheme, constellation

__all__ = [
    "Gmm",
    "GaussianSummary",
    "EmConfig",
    "EmTrace",
    "TemplateDatabase",
    "ClassificationResult",
    "PccCell",
    "PccSweepResult",
    "ClassifyError",
    "SingularCovarianceError",
    "EmFailureError",
    "gmm_pdf",
    "em_fit",
    "gaussian_approx",
    "kld_gaussian",
    "symmetric_kld",
    "mixture_kld",
    "mixture_symmetric_kld",
    "embed_1d_in_2d",
    "classify",
    "pcc_sweep",
    "sample_symbols",
]

DEFAULT_SCHEMES = ("BPSK", "QPSK", "8-PSK", "16-QAM")


class ClassifyError(ValueError):
    """Invalid model, data or configuration."""


class SingularCovarianceError(ClassifyError):
    """Covariance matrix is not symmetric positive definite."""


class EmFailureError(RuntimeError):
    """EM could not produce a usable fit."""


# ---------------------------------------------------------------------------
# model types
# ---------------------------------------------------------------------------


def _as_cov_stack(cov, Q: int, d: int) -> np.ndarray:
    cov = np.asarray(cov, dtype=float)
    if cov.shape == (Q,) and d == 1:
        cov = cov[:, None, None]
    if cov.shape != (Q, d, d):
        raise ClassifyError(f"covariances must have shape ({Q},{d},{d}), got {cov.shape}")
    return cov


def _det_spd(cov: np.ndarray) -> np.ndarray:
    """Determinants of stacked (..., d, d) SPD matrices for d in {1, 2}."""
    d = cov.shape[-1]
    if d == 1:
        return cov[..., 0, 0]
    return cov[..., 0, 0] * cov[..., 1, 1] - cov[..., 0, 1] * cov[..., 1, 0]


def _check_spd(cov: np.ndarray, what: str) -> None:
    d = cov.shape[-1]
    if not np.allclose(cov, np.swapaxes(cov, -1, -2), rtol=1e-8, atol=0.0):
        raise SingularCovarianceError(f"{what} covariance is not symmetric")
    if np.any(cov[..., range(d), range(d)] <= 0) or np.any(_det_spd(cov) <= 0):
        raise SingularCovarianceError(f"{what} covariance is not positive definite")


@dataclass(frozen=True)
class Gmm:
    """Gaussian mixture over R^d with d in {1, 2}."""

    dimension: int
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ClassifyError("dimension must be 1 or 2")
        w = np.asarray(self.weights, dtype=float)
        mu = np.asarray(self.means, dtype=float)
        if mu.ndim == 1:
            mu = mu[:, None]
        Q = len(w)
        if mu.shape != (Q, self.dimension):
            raise ClassifyError(f"means must have shape ({Q},{self.dimension})")
        cov = _as_cov_stack(self.covariances, Q, self.dimension)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ClassifyError("weights must be non-negative and sum to 1")
        _check_spd(cov, "component")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "covariances", cov)

    @property
    def components(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class GaussianSummary:
    """Single-Gaussian (mean, covariance) summary."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.asarray(self.covariance, dtype=float)
        if cov.ndim == 0:
            cov = cov[None, None]
        if cov.shape != (len(mu), len(mu)):
            raise ClassifyError("covariance shape must match the mean dimension")
        _check_spd(cov, "summary")
        object.__setattr__(self, "mean", mu)
        object.__setattr__(self, "covariance", cov)

    @property
    def dimension(self) -> int:
        return len(self.mean)


@dataclass(frozen=True)
class EmConfig:
    """EM controls: iteration cap, absolute delta-loglik threshold, floor.

    ``covariance_floor_scale`` multiplies the per-dataset sample variance
    to give the diagonal loading that keeps degenerate clusters SPD.
    """

    max_iterations: int = 200
    epsilon: float = 1e-4
    covariance_floor_scale: float = 1e-8
    seed: int | None = None

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ClassifyError("max_iterations must be >= 1")
        if self.epsilon <= 0:
            raise ClassifyError("epsilon must be > 0")
        if self.covariance_floor_scale <= 0:
            raise ClassifyError("covariance_floor_scale must be > 0")


@dataclass(frozen=True)
class EmTrace:
    """Per-iteration log-likelihood plus convergence metadata."""

    loglik: np.ndarray
    iterations: int
    converged: bool
    rescues: int


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------


def _prep_points(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None] if d == 1 else x[None, :]
    if x.ndim != 2 or x.shape[1] != d:
        raise ClassifyError(f"points must have dimension {d}")
    return x


def gmm_pdf(model: Gmm, x):
    """Mixture density sum_q pi_q N(x; mu_q, Sigma_q).

    A single point (scalar for d=1, length-d vector for d=2) gives a
    float; an (n, d) array gives the n densities.
    """
    arr = np.asarray(x, dtype=float)
    single = (model.dimension == 1 and arr.ndim == 0) or (
        model.dimension == 2 and arr.ndim == 1
    )
    pts = _prep_points(arr[None] if arr.ndim == 0 else arr, model.dimension)
    logp = _log_component_densities(
        pts[None, :, :], model.weights[None], model.means[None], model.covariances[None]
    )[0]
    dens = np.exp(_logsumexp_last(logp))
    return float(dens[0]) if single else dens


def _logsumexp_last(a: np.ndarray) -> np.ndarray:
    m = np.max(a, axis=-1, keepdims=True)
    return m[..., 0] + np.log(np.sum(np.exp(a - m), axis=-1))


def _inv_stack(cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(det, inverse) of stacked (..., d, d) matrices, d in {1, 2}."""
    d = cov.shape[-1]
    det = _det_spd(cov)
    inv = np.empty_like(cov)
    if d == 1:
        inv[..., 0, 0] = 1.0 / cov[..., 0, 0]
    else:
        inv[..., 0, 0] = cov[..., 1, 1] / det
        inv[..., 1, 1] = cov[..., 0, 0] / det
        inv[..., 0, 1] = -cov[..., 0, 1] / det
        inv[..., 1, 0] = -cov[..., 1, 0] / det
    return det, inv


def _log_component_densities(x, weights, means, covs) -> np.ndarray:
    """log(pi_q phi_q(x_m)) for stacked datasets.

    Shapes: x (B,M,d), weights (B,Q), means (B,Q,d), covs (B,Q,d,d) ->
    (B,M,Q).  Evaluated through a feature-coefficient matmul so the hot
    loop is a single BLAS call per iteration.
    """
    B, M, d = x.shape
    det, inv = _inv_stack(covs)
    if d == 1:
        m = means[..., 0]
        a = inv[..., 0, 0]
        quad = a[:, None, :] * (x[..., 0][:, :, None] - m[:, None, :]) ** 2
    else:
        x0 = x[..., 0]
        x1 = x[..., 1]
        feats = np.stack(
            [x0 * x0, x0 * x1, x1 * x1, x0, x1, np.ones_like(x0)], axis=-1
        )  # (B,M,6)
        a = inv[..., 0, 0]
        b = inv[..., 0, 1]
        e = inv[..., 1, 1]
        m0 = means[..., 0]
        m1 = means[..., 1]
        c0 = a * m0 + b * m1
        c1 = b * m0 + e * m1
        coeff = np.stack([a, 2 * b, e, -2 * c0, -2 * c1, m0 * c0 + m1 * c1], axis=1)
        quad = feats @ coeff  # (B,M,Q)
    logw = np.where(weights > 0, np.log(np.maximum(weights, 1e-300)), -np.inf)
    return logw[:, None, :] - 0.5 * (
        quad + np.log(det)[:, None, :] + d * math.log(2 * math.pi)
    )


# ---------------------------------------------------------------------------
# EM core (batched over independent datasets)
# ---------------------------------------------------------------------------

# Responsibility mass below this fraction of a uniform share marks a
# component as empty and triggers the farthest-point rescue.
_EMPTY_FRACTION = 1e-9


def _em_core(
    x: np.ndarray,
    weights: np.ndarray,
    means: np.ndarray,
    covs: np.ndarray,
    config: EmConfig,
):
    """Run EM on B independent datasets simultaneously.

    Converged datasets freeze (their parameters stop updating), so every
    trial's result is identical to a solo run.  Returns updated
    parameters, per-trial iteration counts, the log-likelihood history
    (B, n_evals) and per-trial rescue counts.
    """
    B, M, d = x.shape
    Q = weights.shape[1]
    weights = weights.copy()
    means = means.copy()
    covs = covs.copy()
    svar = np.maximum(x.var(axis=1).mean(axis=1), 1e-300)
    floor = config.covariance_floor_scale * svar
    prev = np.full(B, np.inf)
    active = np.ones(B, dtype=bool)
    iters = np.zeros(B, dtype=int)
    rescues = np.zeros(B, dtype=int)
    history: list[np.ndarray] = []
    eye = np.eye(d)
    for _ in range(config.max_iterations + 1):
        logp = _log_component_densities(x, weights, means, covs)
        ll_point = _logsumexp_last(logp)
        loglik = ll_point.sum(axis=1)
        history.append(loglik)
        newly_done = active & (np.abs(loglik - prev) < config.epsilon)
        active &= ~newly_done
        prev = loglik
        if not active.any() or np.all(iters[active] >= config.max_iterations):
            break
        resp = np.exp(logp - ll_point[..., None])
        nk = resp.sum(axis=1)
        dead = active[:, None] & (nk < _EMPTY_FRACTION * M / Q)
        if dead.any():
            # reseed empty components at the point farthest from every mean
            sq = (
                (x[:, :, None, :] - means[:, None, :, :]) ** 2
            ).sum(-1)
            far = sq.min(axis=2).argmax(axis=1)
            for bi in np.unique(np.nonzero(dead)[0]):
                for qi in np.nonzero(dead[bi])[0]:
                    means[bi, qi] = x[bi, far[bi]]
                    covs[bi, qi] = eye * svar[bi]
                weights[bi] = np.full(Q, 1.0 / Q)
                rescues[bi] += 1
                prev[bi] = np.inf
            continue
        upd = active & (iters < config.max_iterations)
        new_w = nk / M
        respT = np.swapaxes(resp, 1, 2)  # (B,Q,M)
        new_mu = (respT @ x) / nk[..., None]
        if d == 1:
            m2 = (respT @ (x[..., 0] ** 2)[..., None])[..., 0] / nk
            var = m2 - new_mu[..., 0] ** 2 + floor[:, None]
            new_cov = var[..., None, None]
        else:
            x0 = x[..., 0]
            x1 = x[..., 1]
            moments = respT @ np.stack([x0 * x0, x0 * x1, x1 * x1], axis=-1)
            moments = moments / nk[..., None]
            m0 = new_mu[..., 0]
            m1 = new_mu[..., 1]
            new_cov = np.empty((B, Q, 2, 2))
            new_cov[..., 0, 0] = moments[..., 0] - m0 * m0 + floor[:, None]
            new_cov[..., 0, 1] = moments[..., 1] - m0 * m1
            new_cov[..., 1, 0] = new_cov[..., 0, 1]
            new_cov[..., 1, 1] = moments[..., 2] - m1 * m1 + floor[:, None]
        weights[upd] = new_w[upd]
        means[upd] = new_mu[upd]
        covs[upd] = new_cov[upd]
        iters[upd] += 1
    converged = ~active
    return weights, means, covs, iters, np.stack(history, axis=1), rescues, converged


def _default_init(x: np.ndarray, Q: int, rng: np.random.Generator):
    """Equal weights, means at random distinct data points, isotropic
    covariance sample_variance/Q."""
    B, M, d = x.shape
    idx = np.stack([rng.choice(M, size=Q, replace=False) for _ in range(B)])
    means = np.take_along_axis(x, idx[..., None], axis=1)
    svar = np.maximum(x.var(axis=1).mean(axis=1), 1e-300)
    covs = np.einsum("b,ij->bij", svar / Q, np.eye(d))[:, None, :, :].repeat(Q, axis=1)
    weights = np.full((B, Q), 1.0 / Q)
    return weights, means, covs


def em_fit(
    data,
    Q: int,
    config: EmConfig | None = None,
    *,
    init_weights=None,
    init_means=None,
    init_covariances=None,
) -> tuple[Gmm, EmTrace]:
    """Fit a Q-component GMM to data by EM.

    ``data`` is (M,) for d = 1 or (M, 2); explicit initial parameters
    override the default seeding (equal weights, means at seeded random
    data points, isotropic covariance = sample variance / Q).
    """
    config = config or EmConfig()
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[1] not in (1, 2):
        raise ClassifyError("data must be (M,) or (M, d) with d in {1, 2}")
    if not np.all(np.isfinite(x)):
        raise ClassifyError("data must be finite")
    M, d = x.shape
    if Q < 1 or M < Q:
        raise ClassifyError(f"need at least Q={Q} samples, got {M}")
    xb = x[None]
    if init_means is None:
        rng = np.random.default_rng(config.seed)
        weights, means, covs = _default_init(xb, Q, rng)
    else:
        means = np.asarray(init_means, dtype=float)
        if means.ndim == 1:
            means = means[:, None]
        if means.shape != (Q, d):
            raise ClassifyError(f"init_means must have shape ({Q},{d})")
        means = means[None]
        if init_weights is None:
            weights = np.full((1, Q), 1.0 / Q)
        else:
            weights = np.asarray(init_weights, dtype=float)[None]
        if init_covariances is None:
            svar = max(float(x.var(axis=0).mean()), 1e-300)
            covs = (svar / Q) * np.eye(d)[None, None].repeat(Q, axis=1)
        else:
            covs = _as_cov_stack(np.asarray(init_covariances, dtype=float), Q, d)[None]
    w, mu, cov, iters, hist, rescues, converged = _em_core(
        xb, weights, means, covs, config
    )
    model = Gmm(d, w[0], mu[0], cov[0])
    trace = EmTrace(
        loglik=hist[0],
        iterations=int(iters[0]),
        converged=bool(converged[0]),
        rescues=int(rescues[0]),
    )
    return model, trace


# ---------------------------------------------------------------------------
# Gaussian approximation and divergences
# ---------------------------------------------------------------------------


def gaussian_approx(model: Gmm) -> GaussianSummary:
    """Moment-matched single Gaussian: mixture mean and total covariance."""
    mu = model.weights @ model.means
    centered = model.means - mu
    cov = np.einsum("q,qij->ij", model.weights, model.covariances)
    cov = cov + np.einsum("q,qi,qj->ij", model.weights, centered, centered)
    return GaussianSummary(mu, cov)


def kld_gaussian(p: GaussianSummary, q: GaussianSummary) -> float:
    """D(p || q) between Gaussians: 0.5*[ln(|Sq|/|Sp|) + Tr(Sq^-1 Sp)
    + (mu_p-mu_q)^T Sq^-1 (mu_p-mu_q) - d]."""
    if p.dimension != q.dimension:
        raise ClassifyError("summaries must share a dimension")
    det_p = float(_det_spd(p.covariance))
    det_q, inv_q = _inv_stack(q.covariance[None])
    det_q = float(det_q[0])
    inv_q = inv_q[0]
    dmu = p.mean - q.mean
    out = 0.5 * (
        math.log(det_q / det_p)
        + float(np.trace(inv_q @ p.covariance))
        + float(dmu @ inv_q @ dmu)
        - p.dimension
    )
    return max(out, 0.0) if abs(out) < 1e-12 else out


def symmetric_kld(p: GaussianSummary, q: GaussianSummary) -> float:
    """0.5 * (D(p||q) + D(q||p))."""
    return 0.5 * (kld_gaussian(p, q) + kld_gaussian(q, p))


def _pairwise_kld(muA, covA, muB, covB) -> np.ndarray:
    """D(A_a || B_b) for stacked component sets -> (B, A, Bq)."""
    d = muA.shape[-1]
    detA, _ = _inv_stack(covA)
    detB, invB = _inv_stack(covB)
    if d == 1:
        ia = invB[..., 0, 0]
        tr = covA[..., 0, 0][:, :, None] * ia[:, None, :]
        dm = muA[..., 0][:, :, None] - muB[..., 0][:, None, :]
        quad = dm * dm * ia[:, None, :]
    else:
        ia = invB[..., 0, 0]
        ib = invB[..., 0, 1]
        ie = invB[..., 1, 1]
        A00 = covA[..., 0, 0]
        A01 = covA[..., 0, 1]
        A11 = covA[..., 1, 1]
        tr = (
            ia[:, None, :] * A00[:, :, None]
            + 2.0 * ib[:, None, :] * A01[:, :, None]
            + ie[:, None, :] * A11[:, :, None]
        )
        d0 = muA[..., 0][:, :, None] - muB[..., 0][:, None, :]
        d1 = muA[..., 1][:, :, None] - muB[..., 1][:, None, :]
        quad = (
            ia[:, None, :] * d0 * d0
            + 2.0 * ib[:, None, :] * d0 * d1
            + ie[:, None, :] * d1 * d1
        )
    return 0.5 * (
        np.log(detB)[:, None, :] - np.log(detA)[:, :, None] + tr + quad - d
    )


def _mixture_kld_batch(wf, mf, cf, wg, mg, cg) -> np.ndarray:
    """Variational mixture D(f || g) for stacked models -> (B,)."""
    logwf = np.where(wf > 0, np.log(np.maximum(wf, 1e-300)), -np.inf)
    logwg = np.where(wg > 0, np.log(np.maximum(wg, 1e-300)), -np.inf)
    dff = _pairwise_kld(mf, cf, mf, cf)
    dfg = _pairwise_kld(mf, cf, mg, cg)
    num = _logsumexp_last(logwf[:, None, :] - dff)
    den = _logsumexp_last(logwg[:, None, :] - dfg)
    return np.einsum("bq,bq->b", wf, num - den)


def mixture_kld(f: Gmm, g: Gmm) -> float:
    """Variational approximation of D(f || g) between mixtures.

    Uses the Gaussian-KLD kernel between all component pairs; exact for
    single Gaussians (reduces to ``kld_gaussian`` of the components) and
    zero for identical mixtures.
    """
    if f.dimension != g.dimension:
        raise ClassifyError("mixtures must share a dimension; embed first")
    return float(
        _mixture_kld_batch(
            f.weights[None], f.means[None], f.covariances[None],
            g.weights[None], g.means[None], g.covariances[None],
        )[0]
    )


def mixture_symmetric_kld(f: Gmm, g: Gmm) -> float:
    """0.5 * (D(f||g) + D(g||f)) at the mixture level."""
    return 0.5 * (mixture_kld(f, g) + mixture_kld(g, f))


def embed_1d_in_2d(model: Gmm, imag_variance: float) -> Gmm:
    """Lift a d=1 mixture onto the real axis of R^2.

    The imaginary axis receives the given (floor) variance so the
    embedded covariances stay positive definite.
    """
    if model.dimension != 1:
        raise ClassifyError("only d=1 mixtures can be embedded")
    if imag_variance <= 0:
        raise ClassifyError("imag_variance must be > 0")
    Q = model.components
    means = np.column_stack([model.means[:, 0], np.zeros(Q)])
    covs = np.zeros((Q, 2, 2))
    covs[:, 0, 0] = model.covariances[:, 0, 0]
    covs[:, 1, 1] = imag_variance
    return Gmm(2, model.weights, means, covs)


# ---------------------------------------------------------------------------
# template database and classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TemplateDatabase:
    """Ordered (scheme, template GMM) pairs the classifier scores against."""

    schemes: tuple[str, ...]
    templates: tuple[Gmm, ...]

    def __post_init__(self):
        if len(self.schemes) == 0 or len(self.schemes) != len(self.templates):
            raise ClassifyError("database must pair every scheme with a template")
        if len(set(self.schemes)) != len(self.schemes):
            raise ClassifyError("database schemes must be distinct")

    def __iter__(self):
        return iter(zip(self.schemes, self.templates))

    def __len__(self) -> int:
        return len(self.schemes)

    @classmethod
    def standard(
        cls,
        noise_variance: float,
        schemes=DEFAULT_SCHEMES,
        *,
        variance_floor: float = 1e-9,
    ) -> "TemplateDatabase":
        """Unit-energy constellation templates at a common noise level.

        Component variance is the per-dimension share of the complex
        noise variance (sigma^2/2 on each axis, and sigma^2/2 for the
        d=1 BPSK real projection), floored to stay positive definite.
        """
        if noise_variance < 0:
            raise ClassifyError("noise_variance must be >= 0")
        per_dim = max(noise_variance / 2.0, variance_floor)
        names = []
        templates = []
        for scheme in schemes:
            const = constellation(scheme)
            names.append(const.scheme)
            templates.append(template_from_constellation(const, per_dim))
        return cls(tuple(names), tuple(templates))

    @classmethod
    def from_file(cls, path, noise_variance: float, *, variance_floor: float = 1e-9):
        """Parse a structured text database: ``[SCHEME]`` sections, one
        ``re im`` constellation point per line."""
        sections: dict[str, list[complex]] = {}
        current = None
        with open(path) as fh:
            for raw in fh:
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if line.startswith("[") and line.endswith("]"):
                    current = canonical_scheme(line[1:-1])
                    sections[current] = []
                    continue
                if current is None:
                    raise ClassifyError(f"{path}: point before any [SCHEME] header")
                parts = line.split()
                if len(parts) != 2:
                    raise ClassifyError(f"{path}: expected 're im', got {line!r}")
                sections[current].append(float(parts[0]) + 1j * float(parts[1]))
        if not sections:
            raise ClassifyError(f"{path}: no templates found")
        per_dim = max(noise_variance / 2.0, variance_floor)
        names, templates = [], []
        for scheme, pts in sections.items():
            dimension = 1 if scheme == "BPSK" else 2
            const = Constellation(scheme, np.array(pts), dimension)
            names.append(scheme)
            templates.append(template_from_constellation(const, per_dim))
        return cls(tuple(names), tuple(templates))


def template_from_constellation(const: Constellation, per_dim_variance: float) -> Gmm:
    """Equal-weight GMM with one isotropic component per constellation point."""
    pts = const.points_real()
    Q, d = pts.shape
    covs = np.broadcast_to(np.eye(d) * per_dim_variance, (Q, d, d)).copy()
    return Gmm(d, np.full(Q, 1.0 / Q), pts, covs)


@dataclass(frozen=True)
class ClassificationResult:
    declared: str
    schemes: tuple[str, ...]
    divergences: np.ndarray

    def divergence_for(self, scheme: str) -> float:
        return float(self.divergences[self.schemes.index(canonical_scheme(scheme))])


def _complex_batch(samples) -> np.ndarray:
    x = np.asarray(samples)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ClassifyError("samples must be a 1-D or (batch, n) complex array")
    return x.astype(complex)


def _fit_hypothesis_batch(
    xc: np.ndarray, template: Gmm, config: EmConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Template-seeded EM fit of every trial in the batch under one
    hypothesis; returns stacked (weights, means, covariances)."""
    B = xc.shape[0]
    d = template.dimension
    if d == 1:
        x = xc.real[..., None]
    else:
        x = np.stack([xc.real, xc.imag], axis=-1)
    Q = template.components
    rms = np.sqrt(np.maximum(np.mean(np.sum(x**2, axis=-1), axis=1), 1e-300))
    template_rms = math.sqrt(float(np.mean(np.sum(template.means**2, axis=-1))))
    scale = rms / template_rms if template_rms > 0 else np.ones(B)
    means = np.einsum("b,qd->bqd", scale, template.means)
    svar = np.maximum(x.var(axis=1).mean(axis=1), 1e-300)
    covs = np.einsum("b,ij->bij", svar / Q, np.eye(d))[:, None].repeat(Q, axis=1)
    weights = np.full((B, Q), 1.0 / Q)
    w, mu, cov, _, _, _, _ = _em_core(x, weights, means, covs, config)
    return w, mu, cov


def _classify_batch(
    xc: np.ndarray, db: TemplateDatabase, config: EmConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Declared scheme index and the per-template symmetric mixture KLD
    for every trial in the batch."""
    B = xc.shape[0]
    divergences = np.empty((B, len(db)))
    for j, (_, template) in enumerate(db):
        w, mu, cov = _fit_hypothesis_batch(xc, template, config)
        tw = np.broadcast_to(template.weights, (B,) + template.weights.shape)
        tm = np.broadcast_to(template.means, (B,) + template.means.shape)
        tc = np.broadcast_to(template.covariances, (B,) + template.covariances.shape)
        fwd = _mixture_kld_batch(w, mu, cov, tw, tm, tc)
        rev = _mixture_kld_batch(tw, tm, tc, w, mu, cov)
        divergences[:, j] = 0.5 * (fwd + rev)
    return np.argmin(divergences, axis=1), divergences


def classify(
    samples,
    db: TemplateDatabase,
    em_config: EmConfig | None = None,
) -> ClassificationResult:
    """Declare the template scheme with the smallest symmetric mixture KLD.

    For each hypothesis the samples are re-fit with that template's
    component count (EM seeded at the template's points scaled by the
    sample RMS), then scored against the template; ties resolve to the
    first database entry.
    """
    config = em_config or EmConfig()
    xc = _complex_batch(samples)
    q_max = max(t.components for _, t in db)
    if xc.shape[1] < q_max:
        raise ClassifyError(
            f"need at least {q_max} samples for the largest hypothesis, got {xc.shape[1]}"
        )
    idx, div = _classify_batch(xc, db, config)
    return ClassificationResult(db.schemes[int(idx[0])], db.schemes, div[0])


# ---------------------------------------------------------------------------
# Monte-Carlo classification sweep
# ---------------------------------------------------------------------------


def sample_symbols(const: Constellation, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform i.i.d. draw of n constellation symbols."""
    return const.points[rng.integers(0, const.order, size=n)]


@dataclass(frozen=True)
class PccCell:
    scheme: str
    snr_db: float
    pcc: float
    stderr: float
    trials: int
    declared: tuple[str, ...] = field(repr=False, default=())
    divergences: np.ndarray | None = field(repr=False, default=None)


@dataclass(frozen=True)
class PccSweepResult:
    schemes: tuple[str, ...]
    snr_grid_db: tuple[float, ...]
    cells: tuple[PccCell, ...]

    def pcc(self, scheme: str, snr_db: float) -> float:
        scheme = canonical_scheme(scheme)
        for cell in self.cells:
            if cell.scheme == scheme and cell.snr_db == snr_db:
                return cell.pcc
        raise KeyError((scheme, snr_db))


# Sweep-tuned EM controls: template seeding converges fast, and the
# divergence only needs coarse cluster structure.
SWEEP_EM_CONFIG = EmConfig(max_iterations=40, epsilon=2e-2)
DEFAULT_SAMPLES_PER_TRIAL = 384


def _pcc_cell(
    scheme: str,
    snr_db: float,
    trials: int,
    samples_per_trial: int,
    db: TemplateDatabase | None,
    em_config: EmConfig,
    seed_entropy: tuple,
    chunk: int = 500,
) -> PccCell:
    sigma2 = 10.0 ** (-snr_db / 10.0)
    cell_db = db or TemplateDatabase.standard(sigma2)
    const = constellation(scheme)
    rng = np.random.default_rng(np.random.SeedSequence(list(seed_entropy)))
    symbols = sample_symbols(const, trials * samples_per_trial, rng).reshape(
        trials, samples_per_trial
    )
    noise = math.sqrt(sigma2 / 2.0) * (
        rng.standard_normal(symbols.shape) + 1j * rng.standard_normal(symbols.shape)
    )
    xc = symbols + noise
    declared = np.empty(trials, dtype=int)
    div = np.empty((trials, len(cell_db)))
    for start in range(0, trials, chunk):
        stop = min(start + chunk, trials)
        declared[start:stop], div[start:stop] = _classify_batch(
            xc[start:stop], cell_db, em_config
        )
    target = cell_db.schemes.index(canonical_scheme(scheme))
    hits = declared == target
    pcc = float(np.mean(hits))
    stderr = math.sqrt(max(pcc * (1.0 - pcc), 1e-12) / trials)
    return PccCell(
        canonical_scheme(scheme),
        float(snr_db),
        pcc,
        stderr,
        trials,
        tuple(cell_db.schemes[i] for i in declared),
        div,
    )


def pcc_sweep(
    schemes,
    snr_grid_db,
    trials: int,
    *,
    samples_per_trial: int = DEFAULT_SAMPLES_PER_TRIAL,
    em_config: EmConfig | None = None,
    db: TemplateDatabase | None = None,
    seed: int = 0,
    threads: int = 1,
) -> PccSweepResult:
    """Monte-Carlo probability of correct classification over an SNR grid.

    Each (scheme, SNR) cell runs with an independently derived seed and
    noise-matched templates (sigma^2 = 10**(-dB/10) of complex noise per
    symbol), so results do not depend on execution order or thread count.
    """
    if trials < 1:
        raise ClassifyError("trials must be >= 1")
    schemes = tuple(canonical_scheme(s) for s in schemes)
    grid = tuple(float(v) for v in snr_grid_db)
    config = em_config or SWEEP_EM_CONFIG
    jobs = []
    for si, scheme in enumerate(schemes):
        for gi, snr_db in enumerate(grid):
            jobs.append((scheme, snr_db, (seed, si, gi)))

    def run(job):
        scheme, snr_db, entropy = job
        return _pcc_cell(
            scheme, snr_db, trials, samples_per_trial, db, config, entropy
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cells = list(pool.map(run, jobs))
    else:
        cells = [run(job) for job in jobs]
    return PccSweepResult(schemes, grid, tuple(cells))
