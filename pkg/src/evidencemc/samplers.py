"""Samplers feeding the estimators: toy-model Gibbs, constrained prior
walks for nested sampling, and the two-component mixture chain."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .core import DegenerateSampleError, ModelSpec, NormalizedDensity, WeightedSample
from .benchmarks import GaussianToyData, gaussian_toy_log_posterior_unnorm

__all__ = [
    "MarkovKernelSpec",
    "LabeledChain",
    "ConstrainedWalkConfig",
    "WalkResult",
    "gibbs_toy_posterior",
    "toy_gibbs_kernel",
    "constrained_prior_walk",
    "mixture_gibbs_sampler",
]


@dataclass(frozen=True)
class MarkovKernelSpec:
    """One MCMC transition: ``step(point, rng) -> point`` leaving
    ``exp(target)`` invariant."""

    target: Callable
    step: Callable


@dataclass(frozen=True)
class LabeledChain:
    """Chain states plus the component label (1 = posterior kernel move,
    2 = independent draw from the auxiliary density) of every step."""

    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        lab = np.array(self.labels, dtype=np.int64)
        if pts.ndim != 2 or lab.shape != (pts.shape[0],):
            raise ValueError("need (n, dim) points and one label per point")
        if pts.shape[0] == 0:
            raise ValueError("chain must contain at least one state")
        if not np.all((lab == 1) | (lab == 2)):
            raise ValueError("labels must be 1 or 2")
        pts.setflags(write=False)
        lab.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", lab)

    @property
    def n(self) -> int:
        return self.points.shape[0]


def _toy_sweep(theta, sigma_sq, z, g, data):
    """One Gibbs sweep of the toy posterior given pre-drawn variates.

    theta | sigma_sq is normal around the data mean; sigma_sq | theta is
    inverse-gamma, sampled as scale over a gamma(n/2) draw.
    """
    theta = data.xbar + math.sqrt(sigma_sq / data.n) * z
    b = 0.5 * (data.n * data.s2 + data.n * (data.xbar - theta) ** 2)
    return theta, b / g


def gibbs_toy_posterior(
    data: GaussianToyData, n_draws: int, burn_in: int = 0, seed=None
) -> WeightedSample:
    """Gibbs sampler for the toy posterior under the 1/variance prior.

    Alternates the exact conditionals of the mean and the variance,
    starting from (xbar, s2).  Returns ``n_draws`` equally weighted
    states after discarding ``burn_in`` sweeps.

    Parameters
    ----------
    data : GaussianToyData
    n_draws : int
        States kept after burn-in.
    burn_in : int
        Sweeps discarded from the start of the chain.
    seed : int or numpy Generator
    """
    if n_draws < 1:
        raise ValueError("n_draws must be positive")
    if burn_in < 0:
        raise ValueError("burn_in must be nonnegative")
    rng = np.random.default_rng(seed)
    total = burn_in + n_draws
    z = rng.standard_normal(total)
    g = rng.gamma(0.5 * data.n, 1.0, size=total)
    theta, sigma_sq = data.xbar, data.s2
    out = np.empty((n_draws, 2))
    for t in range(total):
        theta, sigma_sq = _toy_sweep(theta, sigma_sq, z[t], g[t], data)
        if t >= burn_in:
            out[t - burn_in, 0] = theta
            out[t - burn_in, 1] = sigma_sq
    return WeightedSample(points=out, log_weights=np.zeros(n_draws), source="posterior-mcmc")


def toy_gibbs_kernel(data: GaussianToyData) -> MarkovKernelSpec:
    """The same Gibbs sweep packaged as a reusable Markov kernel."""

    def target(points):
        return gaussian_toy_log_posterior_unnorm(points, data)

    def step(point, rng):
        rng = np.random.default_rng(rng)
        theta, sigma_sq = _toy_sweep(
            point[0], point[1], rng.standard_normal(), rng.gamma(0.5 * data.n), data
        )
        return np.array([theta, sigma_sq])

    return MarkovKernelSpec(target=target, step=step)


@dataclass(frozen=True)
class ConstrainedWalkConfig:
    """Settings for the likelihood-constrained prior walk."""

    n_steps: int = 50
    step_variance: float = 0.1
    max_retries: int = 5

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError("n_steps must be positive")
        if not self.step_variance > 0:
            raise ValueError("step_variance must be positive")
        if self.max_retries < 1:
            raise ValueError("max_retries must be positive")


class WalkResult(NamedTuple):
    point: np.ndarray
    log_likelihood: float
    n_accepted: int


def constrained_prior_walk(
    model: ModelSpec,
    start,
    log_l_threshold: float,
    cfg: ConstrainedWalkConfig = ConstrainedWalkConfig(),
    seed=None,
) -> WalkResult:
    """Metropolis walk over the flat prior, restricted above a likelihood level.

    Runs ``cfg.n_steps`` isotropic Gaussian proposals with per-coordinate
    variance ``cfg.step_variance``.  A proposal is accepted iff it stays
    inside the model's support box and its log likelihood is at least
    ``log_l_threshold``; otherwise the walker stays in place.  With a
    flat prior this is a correct Metropolis kernel for the constrained
    prior.  The threshold comparison deliberately uses >=, which is
    equivalent almost surely for continuous likelihoods and keeps
    degenerate (tied-level) targets samplable.

    Returns the final point, its cached log likelihood, and the number
    of accepted moves (0 signals low walker mobility; the caller decides
    how to react).
    """
    if model.support is None:
        raise ValueError("constrained walk requires a model with box support")
    lo, hi = model.support.lower, model.support.upper
    current = np.array(start, dtype=float)
    if current.shape != (model.dim,):
        raise ValueError("start point has wrong dimension")
    if not (np.all(current >= lo) & np.all(current <= hi)):
        raise ValueError("start point lies outside the support box")
    log_l = float(np.asarray(model.log_likelihood(current)).item())
    if not log_l >= log_l_threshold:
        raise ValueError("start point violates the likelihood threshold")
    rng = np.random.default_rng(seed)
    steps = rng.standard_normal((cfg.n_steps, model.dim)) * math.sqrt(cfg.step_variance)
    n_accepted = 0
    # The chain is sequential, but rejections leave the state unchanged,
    # so all remaining proposals from the current state can be evaluated
    # in one vectorized call; jump to the first acceptance and repeat.
    k = 0
    while k < cfg.n_steps:
        props = current + steps[k:]
        in_box = np.all((props >= lo) & (props <= hi), axis=1)
        cand = np.full(props.shape[0], -np.inf)
        if np.any(in_box):
            cand[in_box] = model.log_likelihood(props[in_box])
        hits = np.nonzero(in_box & (cand >= log_l_threshold))[0]
        if hits.size == 0:
            break
        j = int(hits[0])
        current, log_l = props[j].copy(), float(cand[j])
        n_accepted += 1
        k += j + 1
    assert log_l >= log_l_threshold and np.all(current >= lo) and np.all(current <= hi)
    return WalkResult(point=current, log_likelihood=log_l, n_accepted=n_accepted)


def _stable_sigmoid(d: float) -> float:
    """1 / (1 + exp(-d)) without overflow for any real or infinite d."""
    if d >= 0:
        return 1.0 / (1.0 + math.exp(-d))
    e = math.exp(d)
    return e / (1.0 + e)


def mixture_gibbs_sampler(
    model: ModelSpec,
    phi: NormalizedDensity,
    omega1: float,
    kernel: MarkovKernelSpec,
    n_steps: int,
    seed=None,
    initial=None,
) -> LabeledChain:
    """Data-augmentation sampler for the target ``omega1 * prior * lik + phi``.

    At each step the component indicator is drawn from its conditional
    probability given the current state; indicator 1 advances the state
    with one ``kernel`` step (an MCMC move invariant for the posterior),
    indicator 2 replaces the state with an independent draw from
    ``phi``.  The recorded labels feed the mixture-bridge evidence
    estimator.

    Parameters
    ----------
    model : ModelSpec
        Supplies log(prior x likelihood); the kernel must target it.
    phi : NormalizedDensity
        Auxiliary normalized density with a sampler.
    omega1 : float
        Positive weight on the unnormalized posterior component.
    n_steps : int
        Chain length (recorded states).
    initial : array_like, optional
        Starting state; default is one draw from ``phi``.
    """
    if not omega1 > 0:
        raise ValueError("omega1 must be positive")
    if n_steps < 1:
        raise ValueError("n_steps must be positive")
    rng = np.random.default_rng(seed)
    log_omega1 = math.log(omega1)
    state = (
        np.array(initial, dtype=float) if initial is not None else phi.sample(rng, 1)[0]
    )
    points = np.empty((n_steps, model.dim))
    labels = np.empty(n_steps, dtype=np.int64)
    for t in range(n_steps):
        lp_target = float(model.log_target(state))
        lp_phi = float(phi.log_density(state))
        if lp_target == -np.inf and lp_phi == -np.inf:
            raise DegenerateSampleError(
                f"state {state} has zero density under both mixture components"
            )
        p1 = _stable_sigmoid(log_omega1 + lp_target - lp_phi)
        if rng.random() < p1:
            state = np.asarray(kernel.step(state, rng), dtype=float)
            labels[t] = 1
        else:
            state = phi.sample(rng, 1)[0]
            labels[t] = 2
        points[t] = state
    return LabeledChain(points=points, labels=labels)
