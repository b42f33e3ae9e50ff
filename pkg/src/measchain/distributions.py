"""Stochastic primitives for measurement-error synthesis.

Covers Gaussian and lognormal mixture sampling, analytic mixture moments,
Monte Carlo Kullback-Leibler divergence against a reference Gaussian, the
random-search procedure that designs a mixture to match a target Gaussian's
total moments within a similarity bound, and the exponential sampler used
for GPS recovery times.

All samplers are pure functions of ``(params, n, rng)``: callers own the
``numpy.random.Generator`` and identical generator state yields identical
output, so concurrent use only requires one generator per caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# Candidates whose computed closing component would be degenerate are
# redrawn: weight below this floor, or a closing mean further than this
# many target sigmas from the target mean.
_MIN_CLOSING_WEIGHT = 1e-12
_MAX_CLOSING_MEAN_SIGMAS = 10.0

_FIT_BATCH = 4096


class FitBudgetExhausted(RuntimeError):
    """Random search ran out of iterations before finding a feasible mixture.

    Carries the best candidate seen and its diagnostics so callers can
    report how close the search got.
    """

    def __init__(self, message, best_params, std_rel_error, kld):
        super().__init__(message)
        self.best_params = best_params
        self.std_rel_error = std_rel_error
        self.kld = kld


def _as_vector(values, name):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"{name} must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def _check_weights(weights):
    if np.any(weights < 0.0):
        raise ValueError("weights must be non-negative")
    total = float(np.sum(weights))
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"weights must sum to 1 within 1e-12 (got {total!r})")


@dataclass(frozen=True)
class GmmParams:
    """Weights, means, and standard deviations of a Gaussian mixture."""

    weights: np.ndarray
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _as_vector(self.weights, "weights"))
        object.__setattr__(self, "means", _as_vector(self.means, "means"))
        object.__setattr__(self, "stds", _as_vector(self.stds, "stds"))
        if not (self.weights.size == self.means.size == self.stds.size):
            raise ValueError("weights, means, stds must have identical length")
        _check_weights(self.weights)
        if np.any(self.stds <= 0.0):
            raise ValueError("stds must be strictly positive")

    @property
    def n_components(self) -> int:
        return self.weights.size

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
        }

    @classmethod
    def from_dict(cls, data) -> "GmmParams":
        return cls(data["weights"], data["means"], data["stds"])


@dataclass(frozen=True)
class LmmParams:
    """Weights and log-space parameters of a lognormal mixture."""

    weights: np.ndarray
    log_means: np.ndarray
    log_stds: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _as_vector(self.weights, "weights"))
        object.__setattr__(self, "log_means", _as_vector(self.log_means, "log_means"))
        object.__setattr__(self, "log_stds", _as_vector(self.log_stds, "log_stds"))
        if not (self.weights.size == self.log_means.size == self.log_stds.size):
            raise ValueError("weights, log_means, log_stds must have identical length")
        _check_weights(self.weights)
        if np.any(self.log_stds <= 0.0):
            raise ValueError("log_stds must be strictly positive")

    @property
    def n_components(self) -> int:
        return self.weights.size

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "log_means": self.log_means.tolist(),
            "log_stds": self.log_stds.tolist(),
        }

    @classmethod
    def from_dict(cls, data) -> "LmmParams":
        return cls(data["weights"], data["log_means"], data["log_stds"])


@dataclass(frozen=True)
class FitTarget:
    """Target moments, similarity bound, and budget for the mixture search."""

    k_components: int
    total_std: float
    total_mean: float = 0.0
    similarity_threshold: float = 0.05
    sample_count: int = 100_000
    max_iterations: int = 200_000

    def __post_init__(self):
        if self.k_components < 1:
            raise ValueError("k_components must be >= 1")
        if not self.total_std > 0.0:
            raise ValueError("total_std must be positive")
        if not self.similarity_threshold > 0.0:
            raise ValueError("similarity_threshold must be positive")
        if self.sample_count < 1000:
            raise ValueError("sample_count must be >= 1000")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


def gmm_total_moments(params: GmmParams) -> tuple[float, float]:
    """Total mean and total standard deviation of the mixture.

    mean = sum(q_i mu_i); var = sum(q_i (sigma_i^2 + mu_i^2)) - mean^2.
    """
    total_mean = float(np.dot(params.weights, params.means))
    second = float(np.dot(params.weights, params.stds**2 + params.means**2))
    total_var = max(second - total_mean**2, 0.0)
    return total_mean, math.sqrt(total_var)


def _select_components(weights, n, rng):
    cum = np.cumsum(weights)
    cum[-1] = max(cum[-1], 1.0)  # guard against cumulative rounding below 1
    return np.searchsorted(cum, rng.random(n), side="right")


def sample_gmm(params: GmmParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` samples: component selection per weights, Gaussian per component."""
    if n < 1:
        raise ValueError("n must be >= 1")
    comp = _select_components(params.weights, n, rng)
    return rng.normal(params.means[comp], params.stds[comp])


def sample_lmm(params: LmmParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` positive samples from the lognormal mixture (seconds)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    comp = _select_components(params.weights, n, rng)
    return rng.lognormal(params.log_means[comp], params.log_stds[comp])


def sample_exponential(rate: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` exponential variates with the given rate (per second)."""
    if not rate > 0.0:
        raise ValueError("rate must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    return rng.exponential(1.0 / rate, n)


def gmm_logpdf(x, params: GmmParams) -> np.ndarray:
    """Log density of the mixture at ``x`` (stable log-sum-exp over components)."""
    x = np.asarray(x, dtype=np.float64)
    z = (x[..., None] - params.means) / params.stds
    comp = -0.5 * z * z - np.log(params.stds) - _LOG_SQRT_2PI
    return logsumexp(comp, axis=-1, b=params.weights)


def gaussian_logpdf(x, mean: float, std: float) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    z = (x - mean) / std
    return -0.5 * z * z - math.log(std) - _LOG_SQRT_2PI


def kld_gmm_vs_gaussian(
    gmm: GmmParams,
    ref_mean: float,
    ref_std: float,
    n_mc: int,
    rng: np.random.Generator,
) -> float:
    """Monte Carlo KLD (nats) between the mixture and a reference Gaussian.

    Estimates E_p[log p - log q] with samples drawn from the mixture; the
    estimate is clamped at zero since sampling noise can dip slightly below.
    """
    if not ref_std > 0.0:
        raise ValueError("ref_std must be positive")
    if n_mc < 1:
        raise ValueError("n_mc must be >= 1")
    x = sample_gmm(gmm, n_mc, rng)
    est = float(np.mean(gmm_logpdf(x, gmm) - gaussian_logpdf(x, ref_mean, ref_std)))
    return max(est, 0.0)


def fit_gmm_random_search(target: FitTarget, rng: np.random.Generator) -> GmmParams:
    """Random search for a mixture matching the target Gaussian's moments.

    Per-candidate procedure: weights and means of K-1 components are drawn
    freely (weights uniform, rejecting draws that leave no probability for
    the closing component; means uniform within +/-3 total stds of the
    target mean), the K-th weight closes the simplex and the K-th mean is
    solved so the total mean hits the target exactly; all K stds are drawn
    log-uniformly in [total_std/10, 3*total_std].  A candidate is feasible
    when its total std is within 1% of the target and its Monte Carlo KLD
    against the target Gaussian is within the similarity threshold; the
    first feasible candidate is returned.

    K=1 is forced to the target Gaussian itself.  Raises
    :class:`FitBudgetExhausted` when ``max_iterations`` candidates have been
    drawn without a feasible one.
    """
    k = target.k_components
    mu_t = target.total_mean
    sigma_t = target.total_std
    if k == 1:
        return GmmParams([1.0], [mu_t], [sigma_t])

    log_lo = math.log(sigma_t / 10.0)
    log_hi = math.log(3.0 * sigma_t)
    best = None  # (key, params, std_rel_err, kld)

    drawn = 0
    while drawn < target.max_iterations:
        batch = min(_FIT_BATCH, target.max_iterations - drawn)
        drawn += batch

        w_free = rng.uniform(0.0, 1.0, (batch, k - 1))
        mu_free = rng.uniform(mu_t - 3.0 * sigma_t, mu_t + 3.0 * sigma_t, (batch, k - 1))
        stds = np.exp(rng.uniform(log_lo, log_hi, (batch, k)))

        w_close = 1.0 - w_free.sum(axis=1)
        ok = w_close >= _MIN_CLOSING_WEIGHT
        safe_w = np.where(ok, w_close, 1.0)
        mu_close = (mu_t - (w_free * mu_free).sum(axis=1)) / safe_w
        ok &= np.abs(mu_close - mu_t) <= _MAX_CLOSING_MEAN_SIGMAS * sigma_t

        weights = np.concatenate([w_free, w_close[:, None]], axis=1)
        means = np.concatenate([mu_free, mu_close[:, None]], axis=1)
        total_mean = (weights * means).sum(axis=1)
        total_var = (weights * (stds**2 + means**2)).sum(axis=1) - total_mean**2
        total_std = np.sqrt(np.maximum(total_var, 0.0))
        std_rel_err = np.abs(total_std - sigma_t) / sigma_t
        moment_ok = ok & (std_rel_err <= 0.01)

        for idx in np.flatnonzero(ok):
            rel = float(std_rel_err[idx])
            if not moment_ok[idx]:
                if best is None or (best[0] is None and rel < best[2]):
                    best = (None, GmmParams(weights[idx], means[idx], stds[idx]), rel, None)
                continue
            candidate = GmmParams(weights[idx], means[idx], stds[idx])
            kld = kld_gmm_vs_gaussian(candidate, mu_t, sigma_t, target.sample_count, rng)
            if kld <= target.similarity_threshold:
                return candidate
            if best is None or best[0] is None or kld < best[0]:
                best = (kld, candidate, rel, kld)

    if best is None:
        raise FitBudgetExhausted(
            f"no valid candidate in {target.max_iterations} draws",
            None,
            math.inf,
            math.inf,
        )
    _, params, rel, kld = best
    if kld is None:
        kld = kld_gmm_vs_gaussian(params, mu_t, sigma_t, target.sample_count, rng)
    raise FitBudgetExhausted(
        f"search budget of {target.max_iterations} exhausted "
        f"(best: std error {rel:.2%}, KLD {kld:.4g})",
        params,
        rel,
        kld,
    )
