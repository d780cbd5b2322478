"""Shared data model and log-domain numerics used by every estimator.

All densities are handled as log-densities, all sums of probability mass
as log-sum-exp reductions.  Points are plain float64 numpy arrays: a
single point has shape ``(dim,)``, a batch of points ``(n, dim)``.
Density callables follow numpy broadcasting and accept either form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "DegenerateSampleError",
    "Box",
    "NormalizedDensity",
    "ModelSpec",
    "WeightedSample",
    "EvidenceEstimate",
    "parameter_point",
    "log_sum_exp",
    "effective_sample_size",
    "evidence_from_weights",
]

SAMPLE_SOURCES = ("posterior-mcmc", "prior", "proposal", "nested")


class DegenerateSampleError(RuntimeError):
    """Raised when a sample carries no usable weight mass."""


def parameter_point(coords, dim: int | None = None) -> np.ndarray:
    """Validate one parameter point and return it as a read-only array.

    Parameters
    ----------
    coords : array_like
        Coordinates of the point, one-dimensional.
    dim : int, optional
        Expected dimension.  When given, a length mismatch is an error.

    Returns
    -------
    ndarray
        Read-only float64 array of shape ``(dim,)`` with finite entries.
    """
    arr = np.array(coords, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"parameter point must be one-dimensional, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"parameter point has length {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("parameter point coordinates must all be finite")
    arr.setflags(write=False)
    return arr


def log_sum_exp(values) -> float:
    """Return ``log(sum(exp(values)))`` without overflow.

    Accepts -inf entries (zero mass); returns -inf when every entry is
    -inf.  An empty input is an error.
    """
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("log_sum_exp of an empty collection")
    m = float(np.max(arr))
    if m == -np.inf:
        return -np.inf
    return m + float(np.log(np.sum(np.exp(arr - m))))


def effective_sample_size(log_weights) -> float:
    """Effective sample size ``(sum w)^2 / sum w^2`` from log weights.

    Computed entirely in the log domain, so it is invariant under a
    common rescaling of the weights.  All-zero weights are an error.
    """
    lw = np.asarray(log_weights, dtype=float)
    if lw.size == 0:
        raise ValueError("effective_sample_size of an empty collection")
    if np.any(np.isnan(lw)) or np.any(lw == np.inf):
        raise ValueError("log weights must be real or -inf")
    if np.all(lw == -np.inf):
        raise DegenerateSampleError("all weights are zero")
    return float(np.exp(2.0 * log_sum_exp(lw) - log_sum_exp(2.0 * lw)))


@dataclass(frozen=True)
class Box:
    """Axis-aligned box support with uniform sampling and density."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float)
        hi = np.array(self.upper, dtype=float)
        if lo.ndim != 1 or hi.shape != lo.shape:
            raise ValueError("box bounds must be matching one-dimensional arrays")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box bounds must be finite")
        if not np.all(hi > lo):
            raise ValueError("box must have positive width in every coordinate")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def log_volume(self) -> float:
        return float(np.sum(np.log(self.upper - self.lower)))

    def contains(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return np.all((pts >= self.lower) & (pts <= self.upper), axis=-1)

    def sample(self, rng, n: int) -> np.ndarray:
        rng = np.random.default_rng(rng)
        return rng.uniform(self.lower, self.upper, size=(n, self.dim))

    def uniform_log_density(self, points):
        """Log density of the uniform distribution on the box."""
        inside = self.contains(points)
        out = np.where(inside, -self.log_volume, -np.inf)
        return float(out) if np.ndim(out) == 0 else out

    def as_density(self) -> "NormalizedDensity":
        return NormalizedDensity(log_density=self.uniform_log_density, sample=self.sample)


@dataclass(frozen=True)
class NormalizedDensity:
    """A normalized density: log-density callable plus a seeded sampler.

    ``log_density(points)`` follows the usual broadcasting convention;
    ``sample(rng, n)`` returns an ``(n, dim)`` array.
    """

    log_density: Callable
    sample: Callable


@dataclass(frozen=True)
class ModelSpec:
    """A target for evidence estimation: prior, likelihood, and support.

    ``log_prior`` and ``log_likelihood`` map points to log densities and
    may return -inf outside the support.  ``prior_sampler(rng, n)`` draws
    from the prior when one is available; ``prior_normalized`` records
    whether the prior integrates to one (evidence values are only
    comparable across models when it does).
    """

    dim: int
    log_prior: Callable
    log_likelihood: Callable
    prior_sampler: Callable | None = None
    support: Box | None = None
    prior_normalized: bool = False

    def log_target(self, points):
        """log(prior x likelihood), the unnormalized posterior density."""
        return self.log_prior(points) + self.log_likelihood(points)


@dataclass(frozen=True)
class WeightedSample:
    """Draws with log weights and a tag recording how they were produced."""

    points: np.ndarray
    log_weights: np.ndarray
    source: str = "proposal"

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        lw = np.array(self.log_weights, dtype=float)
        if pts.ndim != 2:
            raise ValueError(f"points must be a 2-d array, got shape {pts.shape}")
        if lw.shape != (pts.shape[0],):
            raise ValueError("log_weights must be one per point")
        if pts.shape[0] == 0:
            raise ValueError("sample must contain at least one point")
        if not np.all(np.isfinite(pts)):
            raise ValueError("sample points must be finite")
        if np.any(np.isnan(lw)) or np.any(lw == np.inf):
            raise ValueError("log weights must be real or -inf")
        if self.source not in SAMPLE_SOURCES:
            raise ValueError(f"unknown sample source {self.source!r}; expected one of {SAMPLE_SOURCES}")
        pts.setflags(write=False)
        lw.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "log_weights", lw)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class EvidenceEstimate:
    """An evidence value on the log scale with linear-scale error bar.

    ``std_error`` is the delta-method standard error of the evidence on
    the linear scale; ``ess`` is the effective sample size behind the
    estimate and never exceeds ``n_draws``.
    """

    log_evidence: float
    std_error: float
    ess: float
    n_draws: int

    def __post_init__(self):
        if self.n_draws < 1:
            raise ValueError("n_draws must be positive")
        if np.isnan(self.std_error) or self.std_error < 0:
            raise ValueError("std_error must be nonnegative")
        if not self.ess > 0:
            raise ValueError("ess must be positive")
        # ESS is computed in floating point; forgive rounding at the top end.
        if self.ess > self.n_draws * (1.0 + 1e-9):
            raise ValueError(f"ess {self.ess} exceeds n_draws {self.n_draws}")
        if self.ess > self.n_draws:
            object.__setattr__(self, "ess", float(self.n_draws))

    @property
    def evidence(self) -> float:
        """The estimate on the linear scale."""
        return float(np.exp(self.log_evidence))


def evidence_from_weights(sample: WeightedSample) -> EvidenceEstimate:
    """Average importance weights into an evidence estimate.

    The log evidence is ``log_sum_exp(log_weights) - log(n)``; the
    standard error is the sample standard deviation of the linear
    weights over sqrt(n), evaluated with a common shift so that no
    intermediate overflows.  A single draw gets an infinite standard
    error; all-zero weights are degenerate.
    """
    lw = sample.log_weights
    ess = effective_sample_size(lw)  # raises DegenerateSampleError on zero mass
    n = sample.n
    m = float(np.max(lw))
    shifted = np.exp(lw - m)
    log_evidence = m + float(np.log(np.mean(shifted)))
    if n == 1:
        std_error = np.inf
    else:
        sd = float(np.std(shifted, ddof=1))
        std_error = 0.0 if sd == 0.0 else float(np.exp(m + np.log(sd) - 0.5 * np.log(n)))
    return EvidenceEstimate(log_evidence=log_evidence, std_error=std_error, ess=ess, n_draws=n)
