"""Kernel density estimation over achieved goals.

Densities live in z-scored goal space. Duplicate fitted points are collapsed
into weighted mixture components, which keeps discrete goal spaces cheap to
query without changing the estimate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln, logsumexp

SIGMA_MIN = 1e-6
FIT_SAMPLE_CAP = 10_000
KL_MAX = 50.0

_PAIR_BUDGET = 1 << 21  # query x fitted pairs evaluated per chunk


class Kernel(str, enum.Enum):
    GAUSSIAN = "gaussian"
    EXPONENTIAL = "exponential"


class FitError(ValueError):
    pass


class ShapeError(ValueError):
    pass


class DomainError(ValueError):
    pass


class EstimateError(ValueError):
    pass


def _as_2d(points) -> np.ndarray:
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ShapeError(f"expected a list of goal vectors, got shape {arr.shape}")
    return arr


def _log_kernel_norm(kernel: Kernel, bandwidth: float, dim: int) -> float:
    """Log of the integral of the unnormalized kernel over R^dim."""
    if kernel is Kernel.GAUSSIAN:
        return 0.5 * dim * math.log(2.0 * math.pi) + dim * math.log(bandwidth)
    # exp(-r/h): h^d * surface(S^{d-1}) * Gamma(d)
    log_surface = math.log(2.0) + 0.5 * dim * math.log(math.pi) - gammaln(dim / 2.0)
    return dim * math.log(bandwidth) + log_surface + gammaln(dim)


@dataclass(frozen=True)
class DensityModel:
    """A fitted KDE. Immutable once built, so it can be shared between readers."""

    bandwidth: float
    kernel: Kernel
    norm_mean: np.ndarray
    norm_std: np.ndarray
    fitted_points: np.ndarray  # unique normalized points
    log_weights: np.ndarray  # log(multiplicity / num_fitted)
    num_fitted: int

    @property
    def dim(self) -> int:
        return self.norm_mean.shape[0]

    def normalize(self, points) -> np.ndarray:
        arr = _as_2d(points)
        if arr.shape[1] != self.dim:
            raise ShapeError(f"query dimension {arr.shape[1]} != model dimension {self.dim}")
        return (arr - self.norm_mean) / self.norm_std

    def log_density_normalized(self, z: np.ndarray) -> np.ndarray:
        """Log-density of already z-scored query points (shape [n, dim])."""
        if not np.all(np.isfinite(z)):
            raise DomainError("non-finite query point")
        h = self.bandwidth
        log_norm = _log_kernel_norm(self.kernel, h, self.dim)
        out = np.empty(z.shape[0])
        chunk = max(1, _PAIR_BUDGET // max(1, len(self.fitted_points)))
        for lo in range(0, z.shape[0], chunk):
            diff = z[lo:lo + chunk, None, :] - self.fitted_points[None, :, :]
            sq = np.einsum("ijk,ijk->ij", diff, diff)
            if self.kernel is Kernel.GAUSSIAN:
                log_k = -0.5 * sq / (h * h)
            else:
                log_k = -np.sqrt(sq) / h
            out[lo:lo + chunk] = logsumexp(log_k + self.log_weights[None, :], axis=1)
        return out - log_norm


def fit_kde(
    samples,
    bandwidth: float = 0.1,
    kernel: Kernel | str = Kernel.GAUSSIAN,
    rng: np.random.Generator | None = None,
    sample_cap: int = FIT_SAMPLE_CAP,
    normalize: bool = True,
    counts=None,
) -> DensityModel:
    """Fit a KDE to z-scored samples.

    ``counts`` optionally gives an integer multiplicity per sample row, so a
    large buffer over a small goal set can be passed as its distinct points.
    Above ``sample_cap`` total samples, a uniform with-replacement subsample of
    size ``sample_cap`` is fitted. ``normalize=False`` keeps the identity
    normalization, for callers that pass pre-normalized data.
    """
    kernel = Kernel(kernel)
    if bandwidth <= 0:
        raise FitError("bandwidth must be positive")
    try:
        arr = np.asarray(samples, dtype=np.float64)
    except ValueError as exc:  # ragged input
        raise ShapeError("all goal vectors must share one dimension") from exc
    if arr.size == 0:
        raise FitError("cannot fit a density model to an empty sample set")
    arr = _as_2d(arr)
    if not np.all(np.isfinite(arr)):
        raise DomainError("non-finite sample")
    if counts is None:
        counts = np.ones(arr.shape[0], dtype=np.int64)
    else:
        counts = np.asarray(counts, dtype=np.int64)
        if counts.shape != (arr.shape[0],) or np.any(counts < 0):
            raise ShapeError("counts must give one nonnegative multiplicity per sample")
        keep = counts > 0
        arr, counts = arr[keep], counts[keep]
        if arr.shape[0] == 0:
            raise FitError("cannot fit a density model to an empty sample set")
    total = int(counts.sum())

    dim = arr.shape[1]
    if normalize:
        w = counts / total
        mean = w @ arr
        std = np.maximum(np.sqrt(w @ (arr - mean) ** 2), SIGMA_MIN)
    else:
        mean = np.zeros(dim)
        std = np.ones(dim)

    if total > sample_cap:
        if rng is None:
            rng = np.random.default_rng(0)
        counts = rng.multinomial(sample_cap, counts / total)
        keep = counts > 0
        arr, counts = arr[keep], counts[keep]
    z = (arr - mean) / std
    uniq, inverse = np.unique(z, axis=0, return_inverse=True)
    merged = np.bincount(inverse.ravel(), weights=counts, minlength=uniq.shape[0])
    n = float(merged.sum())
    return DensityModel(
        bandwidth=float(bandwidth),
        kernel=kernel,
        norm_mean=mean,
        norm_std=std,
        fitted_points=uniq,
        log_weights=np.log(merged) - np.log(n),
        num_fitted=int(round(n)),
    )


def log_density(model: DensityModel, points) -> np.ndarray | float:
    """Log-density (nats, normalized space) at one goal vector or an array of them."""
    arr = np.asarray(points, dtype=np.float64)
    single = arr.ndim == 0 or (arr.ndim == 1 and arr.size == model.dim)
    if single:
        arr = arr.reshape(1, model.dim)
    if not np.all(np.isfinite(arr)):
        raise DomainError("non-finite query point")
    out = model.log_density_normalized(model.normalize(arr))
    return float(out[0]) if single else out


def estimate_entropy(model: DensityModel, eval_samples) -> float:
    """Monte-Carlo plug-in entropy: minus the mean log-density of the samples."""
    arr = np.asarray(eval_samples, dtype=np.float64)
    if arr.size == 0:
        raise EstimateError("entropy estimate needs at least one evaluation sample")
    arr = _as_2d(arr)
    uniq, counts = np.unique(arr, axis=0, return_counts=True)
    logp = model.log_density_normalized(model.normalize(uniq))
    return float(-np.dot(counts, logp) / counts.sum())


def resubstitution_entropy(model: DensityModel) -> float:
    """Entropy estimate using the model's own fitted sample as the evaluation set."""
    logp = model.log_density_normalized(model.fitted_points)
    return float(-np.dot(np.exp(model.log_weights), logp))


def estimate_kl(
    ag_model: DensityModel,
    desired_sampler: Callable[[int], np.ndarray],
    desired_log_density: Callable[[np.ndarray], np.ndarray],
    n_samples: int,
) -> float:
    """Clamped Monte-Carlo estimate of KL(p_dg || p_ag) in [0, KL_MAX]."""
    goals = _as_2d(desired_sampler(n_samples))
    log_dg = np.asarray(desired_log_density(goals), dtype=np.float64)
    log_ag = ag_model.log_density_normalized(ag_model.normalize(goals))
    kl = float(np.mean(log_dg - log_ag))
    if not math.isfinite(kl):
        return KL_MAX
    return min(max(kl, 0.0), KL_MAX)
