"""Ratio and evidence estimators built on weighted samples and chains.

The bridge estimators target the ratio of two unnormalized densities'
normalizing constants; when the second density is normalized the ratio
is the first density's evidence.  All heavy lifting happens in the log
domain, with shifts that cancel exactly in the reported ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .core import (
    DegenerateSampleError,
    EvidenceEstimate,
    NormalizedDensity,
    WeightedSample,
    effective_sample_size,
    log_sum_exp,
)
from .samplers import LabeledChain

__all__ = [
    "InvalidProposalError",
    "BridgeConvergenceError",
    "HpdEllipse",
    "BridgeConfig",
    "RatioEstimate",
    "IterativeBridgeResult",
    "hpd_ellipse",
    "harmonic_mean_evidence",
    "importance_bayes_factor",
    "bridge_geometric",
    "bridge_single_proposal",
    "bridge_general_alpha",
    "bridge_iterative_optimal",
    "mixture_bridge_evidence",
]

BRIDGE_ALPHA_MODES = (
    "geometric-single-sample",
    "single-proposal",
    "general-alpha",
    "iterative-optimal",
)


class InvalidProposalError(RuntimeError):
    """A proposal assigned zero density to one of its own draws."""


class BridgeConvergenceError(RuntimeError):
    """Iterative bridge failed to converge; carries the iteration trace."""

    def __init__(self, message: str, trace):
        super().__init__(message)
        self.trace = tuple(trace)


# ---------------------------------------------------------------------------
# Highest-posterior-density ellipse
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HpdEllipse:
    """Ellipsoidal region ``(x - center)' shape^-1 (x - center) <= 1``.

    Doubles as the uniform density on that region: ``log_density`` is
    ``-log_volume`` inside and -inf outside, and ``sample`` draws
    uniformly from the interior, so an instance can be used anywhere a
    NormalizedDensity is expected.
    """

    center: np.ndarray
    shape: np.ndarray

    def __post_init__(self):
        c = np.array(self.center, dtype=float)
        s = np.array(self.shape, dtype=float)
        if c.ndim != 1 or s.shape != (c.shape[0], c.shape[0]):
            raise ValueError("center must be (dim,), shape (dim, dim)")
        try:
            chol = np.linalg.cholesky(s)
        except np.linalg.LinAlgError as exc:
            raise ValueError("ellipse shape matrix must be positive definite") from exc
        c.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "shape", s)
        object.__setattr__(self, "_chol", chol)
        object.__setattr__(self, "_inv", np.linalg.inv(s))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def log_volume(self) -> float:
        d = self.dim
        log_unit_ball = 0.5 * d * math.log(math.pi) - gammaln(0.5 * d + 1.0)
        return log_unit_ball + float(np.sum(np.log(np.diag(self._chol))))

    def mahalanobis_sq(self, points):
        diff = np.asarray(points, dtype=float) - self.center
        return np.einsum("...i,ij,...j->...", diff, self._inv, diff)

    def contains(self, points):
        return self.mahalanobis_sq(points) <= 1.0

    def log_density(self, points):
        """Uniform log density on the ellipse interior."""
        out = np.where(self.contains(points), -self.log_volume, -np.inf)
        return float(out) if np.ndim(out) == 0 else out

    def sample(self, rng, n: int) -> np.ndarray:
        """Uniform draws from the interior."""
        rng = np.random.default_rng(rng)
        z = rng.standard_normal((n, self.dim))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        r = rng.random(n) ** (1.0 / self.dim)
        return self.center + (z * r[:, None]) @ self._chol.T


def hpd_ellipse(sample: WeightedSample, log_target: Callable, level: float = 0.10) -> HpdEllipse:
    """Fit an ellipse around the highest-density fraction of a sample.

    The fraction ``level`` of points with the largest ``log_target``
    values is retained; the ellipse takes their mean and covariance,
    scaled by the smallest factor that puts every retained point inside.
    For a well-mixed posterior sample the result approximates the
    ``level`` highest-posterior-density region.

    Parameters
    ----------
    sample : WeightedSample
        Posterior draws; needs at least ``10 * dim`` points.
    log_target : callable
        Unnormalized log posterior used to rank the points.
    level : float
        Mass fraction in (0, 1); default keeps the top 10%.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie strictly between 0 and 1")
    pts = sample.points
    n, dim = pts.shape
    if n < 10 * dim:
        raise ValueError(f"need at least {10 * dim} points to fit an ellipse, got {n}")
    k = int(round(level * n))
    if k < dim + 1:
        raise ValueError(f"level {level} retains only {k} of {n} points; need {dim + 1}")
    values = np.asarray(log_target(pts), dtype=float)
    order = np.argsort(values, kind="stable")[::-1]
    retained = pts[order[:k]]
    center = retained.mean(axis=0)
    cov = np.cov(retained, rowvar=False, ddof=1)
    try:
        inv = np.linalg.inv(cov)
    except np.linalg.LinAlgError as exc:
        raise ValueError("retained points have singular covariance") from exc
    diff = retained - center
    m2 = np.einsum("ni,ij,nj->n", diff, inv, diff)
    scale = float(np.max(m2))
    if not scale > 0:
        raise ValueError("retained points are all identical")
    return HpdEllipse(center=center, shape=cov * scale)


# ---------------------------------------------------------------------------
# Harmonic mean with a light-tailed auxiliary density
# ---------------------------------------------------------------------------

def harmonic_mean_evidence(
    posterior_sample: WeightedSample, phi, log_prior_times_lik: Callable
) -> EvidenceEstimate:
    """Harmonic-mean evidence stabilized by an auxiliary density.

    Averages ``phi(theta) / (prior(theta) * lik(theta))`` over posterior
    draws; the population mean of that ratio is ``1 / evidence`` for any
    normalized ``phi``, and choosing ``phi`` with tails inside the
    posterior's (for example a small HPD-ellipse uniform) keeps the
    variance finite.  The standard error comes from the delta method on
    the reciprocal; the ESS of the ratio terms is reported so heavy
    right tails are visible.
    """
    pts = posterior_sample.points
    lp = np.asarray(log_prior_times_lik(pts), dtype=float)
    if np.any(lp == -np.inf) or np.any(np.isnan(lp)):
        raise ValueError("posterior sample contains points with zero target density")
    lphi = np.asarray(phi.log_density(pts), dtype=float)
    lr = lphi - lp
    if np.all(lr == -np.inf):
        raise DegenerateSampleError("phi vanishes on the whole posterior sample")
    n = posterior_sample.n
    m = float(np.max(lr))
    t = np.exp(lr - m)
    log_h = m + math.log(float(np.mean(t)))
    sd = float(np.std(t, ddof=1)) if n > 1 else math.inf
    if sd == 0.0:
        std_error = 0.0
    elif math.isinf(sd):
        std_error = math.inf
    else:
        # se(1/h) = se(h) / h^2, assembled in logs to dodge under/overflow
        std_error = math.exp(m + math.log(sd) - 0.5 * math.log(n) - 2.0 * log_h)
    return EvidenceEstimate(
        log_evidence=-log_h,
        std_error=std_error,
        ess=effective_sample_size(lr),
        n_draws=n,
    )


# ---------------------------------------------------------------------------
# Importance-sampling Bayes factor
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RatioEstimate:
    """A ratio of normalizing constants with a delta-method error bar."""

    value: float
    log_value: float
    std_error: float
    n1: int
    n2: int
    num_den_covariance: float | None = None


def _log_mean_and_spread(lw: np.ndarray):
    """Log-mean plus shifted linear terms for variance work."""
    m = float(np.max(lw))
    if m == -np.inf:
        raise DegenerateSampleError("all weights are zero")
    t = np.exp(lw - m)
    return m + math.log(float(np.mean(t))), t


def importance_bayes_factor(
    model1, model2, proposal1, proposal2, n1: int, n2: int, seed=None
) -> RatioEstimate:
    """Bayes factor from two independent self-normalized-free IS estimates.

    Each model's evidence is estimated by averaging
    ``prior * lik / proposal`` over draws from its own proposal; the
    Bayes factor is the ratio of the two averages.  Both streams are
    seeded identically, so a fully symmetric configuration returns
    exactly 1; with different models this common-random-number coupling
    is harmless.

    The standard error treats the two averages as independent and is
    unreliable (reported as nan) when either side has a single draw.
    """
    if n1 < 1 or n2 < 1:
        raise ValueError("sample sizes must be positive")

    def one_side(model, proposal, n):
        rng = np.random.default_rng(seed)
        pts = proposal.sample(rng, n)
        lq = np.asarray(proposal.log_density(pts), dtype=float)
        if np.any(lq == -np.inf):
            raise InvalidProposalError("proposal density is zero at one of its own draws")
        lw = np.asarray(model.log_prior(pts) + model.log_likelihood(pts), dtype=float) - lq
        log_mean, t = _log_mean_and_spread(lw)
        rel_var = float(np.var(t, ddof=1)) / float(np.mean(t)) ** 2 / n if n > 1 else math.nan
        return log_mean, rel_var

    log_num, rv1 = one_side(model1, proposal1, n1)
    log_den, rv2 = one_side(model2, proposal2, n2)
    log_value = log_num - log_den
    value = math.exp(log_value)
    std_error = value * math.sqrt(rv1 + rv2) if not (math.isnan(rv1) or math.isnan(rv2)) else math.nan
    return RatioEstimate(value=value, log_value=log_value, std_error=std_error, n1=n1, n2=n2)


# ---------------------------------------------------------------------------
# Bridge estimators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BridgeConfig:
    """Shared settings for the bridge estimators."""

    alpha_mode: str = "iterative-optimal"
    n1: int | None = None
    n2: int | None = None
    tol: float = 1e-8
    max_iter: int = 100

    def __post_init__(self):
        if self.alpha_mode not in BRIDGE_ALPHA_MODES:
            raise ValueError(f"alpha_mode must be one of {BRIDGE_ALPHA_MODES}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


def bridge_geometric(
    sample2: WeightedSample, log_pi1_unnorm: Callable, log_pi2_unnorm: Callable
) -> RatioEstimate:
    """Single-sample bridge: average ``pi1~ / pi2~`` over draws from pi2.

    Unbiased for the ratio of normalizing constants whenever pi2's
    support covers pi1's.  A draw where pi2~ vanishes is an error (the
    ratio is undefined there).
    """
    pts = sample2.points
    lp2 = np.asarray(log_pi2_unnorm(pts), dtype=float)
    if np.any(lp2 == -np.inf):
        raise ValueError("pi2 is zero at a point of its own sample")
    lr = np.asarray(log_pi1_unnorm(pts), dtype=float) - lp2
    n = sample2.n
    log_value, t = _log_mean_and_spread(lr)
    sd = float(np.std(t, ddof=1)) if n > 1 else math.inf
    if sd == 0.0:
        std_error = 0.0
    elif math.isinf(sd):
        std_error = math.inf
    else:
        std_error = math.exp(float(np.max(lr)) + math.log(sd) - 0.5 * math.log(n))
    return RatioEstimate(
        value=math.exp(log_value), log_value=log_value, std_error=std_error, n1=0, n2=n
    )


def bridge_single_proposal(
    proposal: NormalizedDensity,
    log_pi1_unnorm: Callable,
    log_pi2_unnorm: Callable,
    n: int,
    seed=None,
) -> RatioEstimate:
    """Bridge through one shared proposal sample.

    A single set of draws from ``proposal`` feeds both importance
    averages ``E[pi1~/proposal]`` and ``E[pi2~/proposal]``; the shared
    randomness correlates numerator and denominator, which cancels part
    of the noise in their ratio.  The reported covariance is between the
    two averages; the delta-method standard error includes it.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    pts = proposal.sample(rng, n)
    lq = np.asarray(proposal.log_density(pts), dtype=float)
    if np.any(lq == -np.inf):
        raise InvalidProposalError("proposal density is zero at one of its own draws")
    l1 = np.asarray(log_pi1_unnorm(pts), dtype=float) - lq
    l2 = np.asarray(log_pi2_unnorm(pts), dtype=float) - lq
    log_num, a = _log_mean_and_spread(l1)
    log_den, b = _log_mean_and_spread(l2)
    log_value = log_num - log_den
    if n > 1:
        abar, bbar = float(np.mean(a)), float(np.mean(b))
        cov = float(np.cov(a, b, ddof=1)[0, 1])
        rel_var = (
            float(np.var(a, ddof=1)) / abar**2
            + float(np.var(b, ddof=1)) / bbar**2
            - 2.0 * cov / (abar * bbar)
        ) / n
        std_error = math.exp(log_value) * math.sqrt(max(rel_var, 0.0))
        lin_cov = cov / n * math.exp(float(np.max(l1)) + float(np.max(l2)))
    else:
        std_error, lin_cov = math.nan, math.nan
    return RatioEstimate(
        value=math.exp(log_value),
        log_value=log_value,
        std_error=std_error,
        n1=n,
        n2=n,
        num_den_covariance=lin_cov,
    )


def _general_alpha_log(
    sample1: WeightedSample,
    sample2: WeightedSample,
    log_alpha: Callable,
    log_pi1_unnorm: Callable,
    log_pi2_unnorm: Callable,
) -> float:
    num_terms = np.asarray(log_pi1_unnorm(sample2.points), dtype=float) + np.asarray(
        log_alpha(sample2.points), dtype=float
    )
    den_terms = np.asarray(log_pi2_unnorm(sample1.points), dtype=float) + np.asarray(
        log_alpha(sample1.points), dtype=float
    )
    if np.any(np.isnan(num_terms)) or np.any(np.isnan(den_terms)):
        raise ValueError("alpha or a density evaluated to nan on a sample point")
    log_den = log_sum_exp(den_terms) - math.log(sample1.n)
    if log_den == -np.inf:
        raise DegenerateSampleError("every denominator term vanished; alpha misses pi2's mass")
    return log_sum_exp(num_terms) - math.log(sample2.n) - log_den


def bridge_general_alpha(
    sample1: WeightedSample,
    sample2: WeightedSample,
    log_alpha: Callable,
    log_pi1_unnorm: Callable,
    log_pi2_unnorm: Callable,
) -> float:
    """General bridge identity for a caller-chosen alpha.

    Estimates ``c1/c2`` as the ratio of ``mean(pi1~ * alpha)`` over
    draws from pi2 to ``mean(pi2~ * alpha)`` over draws from pi1.
    Choosing ``alpha = 1/pi2~`` recovers bridge_geometric, so the whole
    alpha family shares one orientation.  ``log_alpha`` must be finite
    on both samples (alpha strictly positive there); the choice of
    alpha sets the variance, not the target.
    """
    la1 = np.asarray(log_alpha(sample1.points), dtype=float)
    la2 = np.asarray(log_alpha(sample2.points), dtype=float)
    if np.any(~np.isfinite(la1)) or np.any(~np.isfinite(la2)):
        raise ValueError("alpha must be strictly positive and finite on both samples")
    return math.exp(
        _general_alpha_log(sample1, sample2, log_alpha, log_pi1_unnorm, log_pi2_unnorm)
    )


@dataclass(frozen=True)
class IterativeBridgeResult:
    """Converged optimal-alpha bridge estimate with its iteration trace."""

    value: float
    log_value: float
    std_error: float
    ess: float
    trace: tuple
    n_iter: int
    n1: int
    n2: int


def bridge_iterative_optimal(
    sample1: WeightedSample,
    sample2: WeightedSample,
    log_pi1_unnorm: Callable,
    log_pi2_unnorm: Callable,
    cfg: BridgeConfig = BridgeConfig(),
    initial: float | None = None,
) -> IterativeBridgeResult:
    """Bridge with the variance-optimal alpha, iterated to its fixed point.

    The optimal alpha depends on the unknown ratio B, so B is plugged in
    and refined: ``alpha(theta) = 1 / (n1 * pi1~(theta) / B + n2 * pi2~(theta))``.
    Iteration stops when the relative change of B drops below
    ``cfg.tol``; exceeding ``cfg.max_iter`` raises
    BridgeConvergenceError carrying the trace.  ``initial`` seeds the
    iteration; by default one pass with constant alpha supplies it.
    """
    n1, n2 = sample1.n, sample2.n
    lp1_s1 = np.asarray(log_pi1_unnorm(sample1.points), dtype=float)
    lp2_s1 = np.asarray(log_pi2_unnorm(sample1.points), dtype=float)
    lp1_s2 = np.asarray(log_pi1_unnorm(sample2.points), dtype=float)
    lp2_s2 = np.asarray(log_pi2_unnorm(sample2.points), dtype=float)
    ln1, ln2 = math.log(n1), math.log(n2)

    if initial is not None:
        if not initial > 0:
            raise ValueError("initial bridge value must be positive")
        log_b = math.log(initial)
    else:
        log_b = (log_sum_exp(lp1_s2) - ln2) - (log_sum_exp(lp2_s1) - ln1)

    def log_alpha(lp1, lp2, log_b):
        return -np.logaddexp(ln1 + lp1 - log_b, ln2 + lp2)

    trace = [math.exp(log_b)]
    for it in range(cfg.max_iter):
        la_s1 = log_alpha(lp1_s1, lp2_s1, log_b)
        la_s2 = log_alpha(lp1_s2, lp2_s2, log_b)
        num_terms = lp1_s2 + la_s2
        den_terms = lp2_s1 + la_s1
        log_den = log_sum_exp(den_terms) - ln1
        if log_den == -np.inf:
            raise DegenerateSampleError("bridge denominator vanished")
        log_b_new = log_sum_exp(num_terms) - ln2 - log_den
        trace.append(math.exp(log_b_new))
        delta = abs(math.expm1(log_b_new - log_b))
        log_b = log_b_new
        if delta < cfg.tol:
            break
    else:
        raise BridgeConvergenceError(
            f"no convergence after {cfg.max_iter} iterations (last rel change {delta:.3e})",
            trace,
        )

    _, a = _log_mean_and_spread(num_terms)  # over sample2
    _, b = _log_mean_and_spread(den_terms)  # over sample1
    rel_var = 0.0
    if n2 > 1:
        rel_var += float(np.var(a, ddof=1)) / float(np.mean(a)) ** 2 / n2
    if n1 > 1:
        rel_var += float(np.var(b, ddof=1)) / float(np.mean(b)) ** 2 / n1
    value = math.exp(log_b)
    ess = min(effective_sample_size(num_terms), effective_sample_size(den_terms))
    return IterativeBridgeResult(
        value=value,
        log_value=log_b,
        std_error=value * math.sqrt(rel_var),
        ess=ess,
        trace=tuple(trace),
        n_iter=it + 1,
        n1=n1,
        n2=n2,
    )


# ---------------------------------------------------------------------------
# Mixture-bridge evidence from a labeled chain
# ---------------------------------------------------------------------------

def mixture_bridge_evidence(
    chain: LabeledChain,
    omega1: float,
    phi: NormalizedDensity,
    log_prior_times_lik: Callable,
) -> EvidenceEstimate:
    """Evidence from a two-component mixture chain via responsibilities.

    For every chain state the posterior-component responsibility
    ``r = omega1 * prior * lik / (omega1 * prior * lik + phi)`` is
    computed in stable log arithmetic; the evidence estimate is
    ``(1 / omega1) * sum(r) / sum(1 - r)``.  Averaging responsibilities
    instead of the sampled labels removes the label noise from the
    estimator.  The standard error is a delete-one jackknife over the
    chain states.
    """
    if not omega1 > 0:
        raise ValueError("omega1 must be positive")
    pts = chain.points
    lp = np.asarray(log_prior_times_lik(pts), dtype=float)
    lphi = np.asarray(phi.log_density(pts), dtype=float)
    if np.any((lp == -np.inf) & (lphi == -np.inf)):
        raise DegenerateSampleError("chain state with zero density under both components")
    d = math.log(omega1) + lp - lphi
    # log r and log(1 - r) via the log-sigmoid; d = +/-inf are exact limits
    log_r = -np.logaddexp(0.0, -d)
    log_1mr = -np.logaddexp(0.0, d)
    log_sum_r = log_sum_exp(log_r)
    log_sum_1mr = log_sum_exp(log_1mr)
    if log_sum_r == -np.inf:
        raise DegenerateSampleError("no responsibility mass on the posterior component")
    if log_sum_1mr == -np.inf:
        raise DegenerateSampleError("no responsibility mass on phi; decrease omega1")
    log_evidence = log_sum_r - log_sum_1mr - math.log(omega1)

    # Jackknife on the linear scale; responsibilities live in [0, 1].
    n = chain.n
    r = np.exp(log_r)
    sum_r, sum_1mr = float(np.sum(r)), float(np.sum(1.0 - r))
    if n > 1:
        num_i = sum_r - r
        den_i = sum_1mr - (1.0 - r)
        if np.any(den_i <= 0.0) or np.any(num_i <= 0.0):
            std_error = math.inf
        else:
            z_i = num_i / den_i / omega1
            std_error = math.sqrt((n - 1) / n * float(np.sum((z_i - z_i.mean()) ** 2)))
    else:
        std_error = math.inf
    ess = min(effective_sample_size(log_r), effective_sample_size(log_1mr))
    return EvidenceEstimate(
        log_evidence=log_evidence, std_error=std_error, ess=ess, n_draws=n
    )
