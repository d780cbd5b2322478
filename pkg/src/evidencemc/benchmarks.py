"""Benchmark targets with independently computed reference evidence.

Two targets are provided:

* a conjugate normal toy model: ``n`` observations summarized by their
  mean and variance, unknown mean and variance parameters, and the
  scale-invariant prior ``1 / sigma_sq``.  The evidence has a closed
  form, cross-checked here by adaptive quadrature.
* a twisted bivariate normal ("banana") density integrated against a
  flat prior over a compact square.  The reference evidence is a
  deterministic midpoint-rule grid sum, cross-checked by adaptive
  quadrature.

Reference values never come from the estimators under test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .core import Box, ModelSpec

__all__ = [
    "ReferenceMismatchError",
    "ReferenceEvidence",
    "GaussianToyData",
    "gaussian_toy_log_posterior_unnorm",
    "gaussian_toy_log_evidence",
    "gaussian_toy_model",
    "gaussian_toy_reference_evidence",
    "gaussian_toy_box_model",
    "gaussian_toy_box_reference_evidence",
    "BananaParams",
    "banana_log_density",
    "banana_model",
    "banana_reference_evidence",
    "banana_reference_moments",
]

LOG_2PI = math.log(2.0 * math.pi)


class ReferenceMismatchError(RuntimeError):
    """Two independent reference computations disagree beyond tolerance."""


@dataclass(frozen=True)
class ReferenceEvidence:
    """A reference evidence value with provenance.

    ``value`` is on the linear scale; ``check_value`` is the
    independently computed cross-check that ``value`` was validated
    against (None when no cross-check was requested).
    """

    value: float
    method: str
    resolution: str
    check_value: float | None = None

    @property
    def log_value(self) -> float:
        return math.log(self.value)


# ---------------------------------------------------------------------------
# Gaussian toy model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianToyData:
    """Sufficient statistics of the toy data set.

    ``s2`` uses the biased normalization: ``sum((x_i - xbar)^2) = n * s2``.
    """

    n: int
    xbar: float
    s2: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least two observations")
        if not self.s2 > 0:
            raise ValueError("s2 must be positive")


def gaussian_toy_log_posterior_unnorm(points, data: GaussianToyData):
    """Unnormalized log posterior of (mean, variance) under the 1/variance prior.

    Parameters are ``theta`` (mean) and ``sigma_sq`` (variance), in that
    order.  Returns -inf wherever ``sigma_sq <= 0``.
    """
    pts = np.asarray(points, dtype=float)
    theta = pts[..., 0]
    sigma_sq = pts[..., 1]
    ok = sigma_sq > 0
    safe = np.where(ok, sigma_sq, 1.0)
    quad = (data.n * data.s2 + data.n * (data.xbar - theta) ** 2) / (2.0 * safe)
    val = -0.5 * data.n * (LOG_2PI + np.log(safe)) - quad - np.log(safe)
    out = np.where(ok, val, -np.inf)
    return float(out) if out.ndim == 0 else out


def gaussian_toy_model(data: GaussianToyData) -> ModelSpec:
    """The toy target as a ModelSpec with its improper 1/variance prior.

    The prior is not normalizable, so there is no prior sampler and
    ``prior_normalized`` is False; estimators that only need the product
    prior x likelihood (MCMC-based ones) can use this directly.
    """

    def log_prior(points):
        pts = np.asarray(points, dtype=float)
        sigma_sq = pts[..., 1]
        ok = sigma_sq > 0
        out = np.where(ok, -np.log(np.where(ok, sigma_sq, 1.0)), -np.inf)
        return float(out) if out.ndim == 0 else out

    def log_lik(points):
        pts = np.asarray(points, dtype=float)
        theta = pts[..., 0]
        sigma_sq = pts[..., 1]
        ok = sigma_sq > 0
        safe = np.where(ok, sigma_sq, 1.0)
        quad = (data.n * data.s2 + data.n * (data.xbar - theta) ** 2) / (2.0 * safe)
        val = -0.5 * data.n * (LOG_2PI + np.log(safe)) - quad
        out = np.where(ok, val, -np.inf)
        return float(out) if out.ndim == 0 else out

    return ModelSpec(dim=2, log_prior=log_prior, log_likelihood=log_lik)


def gaussian_toy_log_evidence(data: GaussianToyData) -> float:
    """Closed-form log evidence of the toy model.

    Integrating the mean analytically leaves a gamma integral in the
    inverse variance:

        Z = (2 pi)^(-(n-1)/2) n^(-1/2) Gamma((n-1)/2) (n s2 / 2)^(-(n-1)/2)
    """
    half = 0.5 * (data.n - 1)
    return (
        -half * LOG_2PI
        - 0.5 * math.log(data.n)
        + gammaln(half)
        - half * math.log(0.5 * data.n * data.s2)
    )


def _toy_quadrature_ratio(data: GaussianToyData, epsrel: float = 1e-9) -> float:
    """Quadrature of the toy integrand divided by the closed form.

    The integrand is shifted by the closed-form log evidence purely for
    numerical conditioning; the returned ratio is an independent check
    of that closed form and equals 1 when the two agree.
    """
    shift = gaussian_toy_log_evidence(data)

    def integrand(sigma_sq, theta):
        return math.exp(
            gaussian_toy_log_posterior_unnorm((theta, sigma_sq), data) - shift
        )

    # Ranges chosen so the excluded posterior mass is far below epsrel:
    # the variance marginal is inverse-gamma, the mean marginal a t.
    scale = math.sqrt(data.s2)
    ratio, _ = integrate.dblquad(
        integrand,
        data.xbar - 50.0 * scale,
        data.xbar + 50.0 * scale,
        lambda _: data.s2 / 50.0,
        lambda _: 300.0 * data.s2,
        epsabs=0.0,
        epsrel=epsrel,
    )
    return ratio


def gaussian_toy_reference_evidence(
    data: GaussianToyData, rel_tol: float = 1e-4, check: bool = True
) -> ReferenceEvidence:
    """Closed-form toy evidence, optionally cross-checked by quadrature.

    Raises ReferenceMismatchError when the adaptive 2-d quadrature
    disagrees with the closed form by more than ``rel_tol`` relative.
    """
    value = math.exp(gaussian_toy_log_evidence(data))
    check_value = None
    if check:
        ratio = _toy_quadrature_ratio(data)
        check_value = value * ratio
        if abs(ratio - 1.0) > rel_tol:
            raise ReferenceMismatchError(
                f"toy quadrature/analytic ratio {ratio!r} deviates from 1 "
                f"beyond rel_tol={rel_tol}"
            )
    return ReferenceEvidence(value=value, method="analytic", resolution="closed-form", check_value=check_value)


DEFAULT_TOY_BOX = ((-3.0, 3.0), (0.05, 15.0))


def gaussian_toy_box_model(
    data: GaussianToyData, bounds=DEFAULT_TOY_BOX
) -> ModelSpec:
    """The toy target restated with a proper uniform prior on a box.

    The original unnormalized posterior (including its 1/sigma_sq
    factor) becomes the "likelihood", integrated against a normalized
    uniform prior over ``bounds``.  This variant exists for estimators
    that must draw from a proper prior; its evidence differs from the
    scale-invariant-prior evidence by the box normalization and the
    small mass outside the box.
    """
    (t_lo, t_hi), (v_lo, v_hi) = bounds
    if v_lo <= 0:
        raise ValueError("variance bounds must be positive")
    box = Box(np.array([t_lo, v_lo]), np.array([t_hi, v_hi]))

    def log_lik(points):
        return gaussian_toy_log_posterior_unnorm(points, data)

    return ModelSpec(
        dim=2,
        log_prior=box.uniform_log_density,
        log_likelihood=log_lik,
        prior_sampler=box.sample,
        support=box,
        prior_normalized=True,
    )


def gaussian_toy_box_reference_evidence(
    data: GaussianToyData,
    bounds=DEFAULT_TOY_BOX,
    cells_per_axis: int = 1000,
    rel_tol: float = 1e-3,
    check: bool = True,
) -> ReferenceEvidence:
    """Reference evidence of the box-restated toy target.

    Primary value by adaptive quadrature over the box (shift-conditioned),
    cross-checked against a midpoint-rule grid when ``check`` is set.
    """
    (t_lo, t_hi), (v_lo, v_hi) = bounds
    box = Box(np.array([t_lo, v_lo]), np.array([t_hi, v_hi]))
    shift = gaussian_toy_log_evidence(data)

    def integrand(sigma_sq, theta):
        return math.exp(gaussian_toy_log_posterior_unnorm((theta, sigma_sq), data) - shift)

    ratio, _ = integrate.dblquad(
        integrand, t_lo, t_hi, lambda _: v_lo, lambda _: v_hi, epsabs=0.0, epsrel=1e-9
    )
    value = math.exp(shift - box.log_volume) * ratio
    check_value = None
    if check:
        grid_log = _midpoint_grid_log_integral(
            lambda pts: gaussian_toy_log_posterior_unnorm(pts, data),
            box,
            cells_per_axis,
        )
        check_value = math.exp(grid_log - box.log_volume)
        if abs(check_value / value - 1.0) > rel_tol:
            raise ReferenceMismatchError(
                f"toy-box grid {check_value!r} vs quadrature {value!r} "
                f"disagree beyond rel_tol={rel_tol}"
            )
    return ReferenceEvidence(
        value=value,
        method="adaptive-quadrature",
        resolution=f"epsrel=1e-9; grid check {cells_per_axis}x{cells_per_axis}",
        check_value=check_value,
    )


# ---------------------------------------------------------------------------
# Twisted-normal ("banana") benchmark
# ---------------------------------------------------------------------------

def _default_banana_box() -> Box:
    return Box(np.array([-40.0, -40.0]), np.array([40.0, 40.0]))


@dataclass(frozen=True)
class BananaParams:
    """Twist strength, first-axis variance, and flat-prior support."""

    beta: float = 0.03
    sigma1_sq: float = 100.0
    box: Box = field(default_factory=_default_banana_box)

    def __post_init__(self):
        if not self.sigma1_sq > 0:
            raise ValueError("sigma1_sq must be positive")
        if self.box.dim != 2:
            raise ValueError("banana support must be two-dimensional")


def banana_log_density(points, params: BananaParams = BananaParams()):
    """Log density of the twisted bivariate normal.

    The density at (t1, t2) is the N(0, diag(sigma1_sq, 1)) density
    evaluated at the twisted coordinates (t1, t2 + beta * (t1^2 - sigma1_sq)),
    which bends the second coordinate along a parabola in the first.
    """
    pts = np.asarray(points, dtype=float)
    t1 = pts[..., 0]
    t2 = pts[..., 1] + params.beta * (t1 ** 2 - params.sigma1_sq)
    out = (
        -LOG_2PI
        - 0.5 * np.log(params.sigma1_sq)
        - 0.5 * (t1 ** 2 / params.sigma1_sq + t2 ** 2)
    )
    return float(out) if np.ndim(out) == 0 else out


def banana_model(params: BananaParams = BananaParams()) -> ModelSpec:
    """Twisted normal likelihood under a normalized flat prior on the box."""
    box = params.box

    def log_lik(points):
        return banana_log_density(points, params)

    return ModelSpec(
        dim=2,
        log_prior=box.uniform_log_density,
        log_likelihood=log_lik,
        prior_sampler=box.sample,
        support=box,
        prior_normalized=True,
    )


def _grid_axes(box: Box, cells_per_axis: int):
    h = (box.upper - box.lower) / cells_per_axis
    centers = [
        box.lower[k] + (np.arange(cells_per_axis) + 0.5) * h[k] for k in range(box.dim)
    ]
    return centers, h


def _midpoint_grid_log_integral(log_density, box: Box, cells_per_axis: int) -> float:
    """Midpoint-rule log integral of exp(log_density) over a 2-d box.

    Cell sums use numpy's fixed-order pairwise summation, so the result
    is bit-reproducible for a given resolution.
    """
    (c1, c2), h = _grid_axes(box, cells_per_axis)
    t1, t2 = np.meshgrid(c1, c2, indexing="ij")
    pts = np.stack([t1, t2], axis=-1)
    logv = log_density(pts)
    m = float(np.max(logv))
    total = float(np.sum(np.exp(logv - m)))
    return m + math.log(total) + math.log(h[0]) + math.log(h[1])


def _banana_quadrature(params: BananaParams, epsrel: float = 1e-9) -> float:
    """Adaptive-quadrature integral of the banana density over its box.

    The inner integral over the second coordinate is handed breakpoints
    at the ridge so the adaptive rule cannot step over the narrow bump.
    """
    lo1, lo2 = params.box.lower
    hi1, hi2 = params.box.upper

    def inner(t1):
        center = -params.beta * (t1 ** 2 - params.sigma1_sq)
        pts = sorted(
            {min(max(c, lo2), hi2) for c in (center - 5.0, center, center + 5.0)}
        )
        val, _ = integrate.quad(
            lambda t2: math.exp(banana_log_density((t1, t2), params)),
            lo2,
            hi2,
            points=pts,
            epsabs=0.0,
            epsrel=epsrel,
            limit=200,
        )
        return val

    val, _ = integrate.quad(inner, lo1, hi1, epsabs=0.0, epsrel=1e-8, limit=400)
    return val


def banana_reference_evidence(
    params: BananaParams = BananaParams(),
    cells_per_axis: int = 1000,
    rel_tol: float = 1e-3,
    check: bool = True,
) -> ReferenceEvidence:
    """Grid reference evidence of the banana target under its flat prior.

    The primary value is the deterministic midpoint-rule sum at
    ``cells_per_axis`` cells per axis; adaptive quadrature provides the
    independent cross-check, and disagreement beyond ``rel_tol``
    relative raises ReferenceMismatchError.
    """
    if cells_per_axis < 2:
        raise ValueError("cells_per_axis must be at least 2")
    box = params.box
    grid_log = _midpoint_grid_log_integral(
        lambda pts: banana_log_density(pts, params), box, cells_per_axis
    )
    value = math.exp(grid_log - box.log_volume)
    check_value = None
    if check:
        check_value = _banana_quadrature(params) * math.exp(-box.log_volume)
        if abs(check_value / value - 1.0) > rel_tol:
            raise ReferenceMismatchError(
                f"banana grid {value!r} vs quadrature {check_value!r} "
                f"disagree beyond rel_tol={rel_tol}"
            )
    return ReferenceEvidence(
        value=value,
        method="grid",
        resolution=f"{cells_per_axis}x{cells_per_axis} midpoint cells",
        check_value=check_value,
    )


def banana_reference_moments(
    params: BananaParams = BananaParams(), cells_per_axis: int = 1000
) -> tuple[float, float]:
    """Posterior means of both coordinates by the same midpoint grid."""
    if cells_per_axis < 2:
        raise ValueError("cells_per_axis must be at least 2")
    box = params.box
    (c1, c2), h = _grid_axes(box, cells_per_axis)
    t1, t2 = np.meshgrid(c1, c2, indexing="ij")
    pts = np.stack([t1, t2], axis=-1)
    logv = banana_log_density(pts, params)
    w = np.exp(logv - np.max(logv))
    total = float(np.sum(w))
    return float(np.sum(w * t1) / total), float(np.sum(w * t2) / total)
