"""Nested sampling: likelihood-level exploration of a box prior.

The prior volume above the running likelihood level shrinks
geometrically; the evidence integral over that one-dimensional volume
coordinate is accumulated either as a Riemann sum over the recorded
levels (plus the final live-set remainder) or in the Lebesgue
(level-increment) form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import EvidenceEstimate, ModelSpec, effective_sample_size, log_sum_exp
from .samplers import ConstrainedWalkConfig, constrained_prior_walk

__all__ = [
    "NestedTermination",
    "NestedRun",
    "nested_sampling_run",
    "nested_evidence",
    "nested_evidence_lebesgue",
    "nested_evidence_riemann_sum",
    "nested_posterior_estimates",
    "load_records",
]

SCHEDULES = ("deterministic", "stochastic")


@dataclass(frozen=True)
class NestedTermination:
    """Why and where a run stopped."""

    n_iterations: int
    reason: str  # "max-iterations" or "remaining-mass"
    log_remaining_fraction: float
    n_stuck_walks: int


@dataclass(frozen=True)
class NestedRun:
    """Ordered dead-point records plus the surviving live set.

    ``log_prior_mass[i]`` is the log prior volume still above level i;
    under the deterministic schedule it equals ``-(i+1)/n_live``
    exactly.  Likelihood levels are non-decreasing by construction.
    """

    n_live: int
    dead_points: np.ndarray
    dead_log_l: np.ndarray
    log_prior_mass: np.ndarray
    schedule: str
    live_points: np.ndarray
    live_log_l: np.ndarray
    termination: NestedTermination

    def __post_init__(self):
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}")
        t = self.dead_log_l.shape[0]
        if t == 0:
            raise ValueError("run recorded no dead points")
        if self.dead_points.shape[0] != t or self.log_prior_mass.shape != (t,):
            raise ValueError("dead arrays must share their leading dimension")
        # nan from tied -inf levels compares False, i.e. counts as
        # non-decreasing; suppress the invalid-subtract warning.
        with np.errstate(invalid="ignore"):
            if np.any(np.diff(self.dead_log_l) < 0):
                raise ValueError("likelihood levels must be non-decreasing")
        if np.any(self.log_prior_mass >= 0) or np.any(np.diff(self.log_prior_mass) >= 0):
            raise ValueError("log prior mass must be negative and strictly decreasing")
        if self.schedule == "deterministic":
            expect = -np.arange(1, t + 1) / self.n_live
            if not np.array_equal(self.log_prior_mass, expect):
                raise ValueError("deterministic schedule does not match -i/n_live")

    @property
    def n_iterations(self) -> int:
        return self.dead_log_l.shape[0]

    def save_records(self, path) -> None:
        """Write the dead-point records as a flat text table.

        Columns: iteration index, log likelihood level, log prior mass,
        then the point coordinates.
        """
        t, dim = self.dead_points.shape
        table = np.column_stack(
            [np.arange(1, t + 1), self.dead_log_l, self.log_prior_mass, self.dead_points]
        )
        coords = " ".join(f"x{k}" for k in range(dim))
        np.savetxt(
            path,
            table,
            fmt=["%d"] + ["%.17g"] * (2 + dim),
            header=f"iteration log_likelihood log_prior_mass {coords}",
        )


def load_records(path) -> dict:
    """Read back a table written by NestedRun.save_records."""
    table = np.loadtxt(path, ndmin=2)
    return {
        "iteration": table[:, 0].astype(int),
        "log_likelihood": table[:, 1],
        "log_prior_mass": table[:, 2],
        "points": table[:, 3:],
    }


def nested_sampling_run(
    model: ModelSpec,
    n_live: int,
    walk_cfg: ConstrainedWalkConfig = ConstrainedWalkConfig(),
    max_iterations: int = 10_000,
    seed=None,
    schedule: str = "deterministic",
    remaining_fraction: float = 1e-8,
) -> NestedRun:
    """Run the constrained-exploration loop from a box prior.

    Each iteration records the worst live point as a dead level and
    replaces it by a constrained prior walk started from a uniformly
    chosen surviving live point.  The prior-mass schedule is either the
    deterministic ``x_i = exp(-i / n_live)`` or the stochastic
    Beta-shrinkage variant.  The loop stops at ``max_iterations`` or
    when the largest possible remaining contribution (current mass times
    the best live likelihood) falls below ``remaining_fraction`` of the
    accumulated sum.

    A walk that accepts no move is retried from a freshly chosen start,
    up to ``walk_cfg.max_retries`` attempts in total; if every attempt
    is stuck the unmoved copy is kept and counted in the termination
    record.  A fully degenerate live set (all points identical while
    stuck) is an error.
    """
    if model.prior_sampler is None or model.support is None:
        raise ValueError("nested sampling needs a prior sampler and box support")
    if n_live < 2:
        raise ValueError("need at least two live points")
    if max_iterations < 1:
        raise ValueError("max_iterations must be positive")
    if schedule not in SCHEDULES:
        raise ValueError(f"schedule must be one of {SCHEDULES}")
    rng = np.random.default_rng(seed)
    live = np.array(model.prior_sampler(rng, n_live), dtype=float)
    live_log_l = np.asarray(model.log_likelihood(live), dtype=float)

    dead = np.empty((max_iterations, model.dim))
    dead_log_l = np.empty(max_iterations)
    log_mass = np.empty(max_iterations)

    log_x_prev = 0.0
    log_z_dead = -np.inf
    log_remaining = np.inf
    n_stuck = 0
    reason = "max-iterations"
    n_done = max_iterations
    log_eps = math.log(remaining_fraction)

    for i in range(1, max_iterations + 1):
        log_remaining = log_x_prev + float(np.max(live_log_l))
        if log_z_dead > -np.inf and log_remaining - log_z_dead < log_eps:
            reason = "remaining-mass"
            n_done = i - 1
            break

        k = int(np.argmin(live_log_l))
        level = float(live_log_l[k])
        dead[i - 1] = live[k]
        dead_log_l[i - 1] = level

        if schedule == "deterministic":
            log_x = -i / n_live
        else:
            log_x = log_x_prev + math.log(rng.power(n_live))
        log_mass[i - 1] = log_x
        # log(x_prev - x) without leaving the log domain
        log_w = log_x_prev + math.log1p(-math.exp(log_x - log_x_prev))
        if level > -np.inf:
            log_z_dead = np.logaddexp(log_z_dead, log_w + level)
        log_x_prev = log_x

        for attempt in range(walk_cfg.max_retries):
            j = int(rng.integers(n_live - 1))
            if j >= k:
                j += 1
            result = constrained_prior_walk(model, live[j], level, walk_cfg, rng)
            if result.n_accepted > 0:
                break
        else:
            n_stuck += 1
            if np.all(live == live[0]):
                raise RuntimeError(
                    f"live set collapsed to a single point at iteration {i} "
                    f"(level {level:.6g}); the constrained walk cannot move"
                )
        live[k] = result.point
        live_log_l[k] = result.log_likelihood

    if reason == "max-iterations":
        log_remaining = log_x_prev + float(np.max(live_log_l))

    log_rem_frac = (
        log_remaining - log_z_dead if log_z_dead > -np.inf else math.inf
    )
    return NestedRun(
        n_live=n_live,
        dead_points=dead[:n_done].copy(),
        dead_log_l=dead_log_l[:n_done].copy(),
        log_prior_mass=log_mass[:n_done].copy(),
        schedule=schedule,
        live_points=live,
        live_log_l=live_log_l,
        termination=NestedTermination(
            n_iterations=n_done,
            reason=reason,
            log_remaining_fraction=log_rem_frac,
            n_stuck_walks=n_stuck,
        ),
    )


def _log_shell_widths(run: NestedRun) -> np.ndarray:
    """log(x_{i-1} - x_i) for every recorded level, with x_0 = 1."""
    log_x = run.log_prior_mass
    prev = np.concatenate([[0.0], log_x[:-1]])
    return prev + np.log1p(-np.exp(log_x - prev))


def nested_evidence(run: NestedRun) -> EvidenceEstimate:
    """Riemann-sum evidence with the final live-set remainder.

    Dead levels contribute ``(x_{i-1} - x_i) L_i``; the unexplored mass
    ``x_last`` contributes the mean live likelihood.  The standard
    error comes from the stochastic-shrinkage variance approximation:
    the log-mass coordinate at iteration i has standard deviation
    ``sqrt(i) / n_live``, and the evidence concentrates near depth
    ``i = n_live * H`` with H the information, so the log-evidence
    uncertainty is ``sqrt(H / n_live)``; the linear-scale error follows
    by the delta method.
    """
    log_w = _log_shell_widths(run)
    log_terms = log_w + run.dead_log_l
    log_z_dead = log_sum_exp(log_terms)
    log_x_last = float(run.log_prior_mass[-1])
    log_live_mean = log_sum_exp(run.live_log_l) - math.log(run.n_live)
    log_rem = log_x_last + log_live_mean
    log_z = float(np.logaddexp(log_z_dead, log_rem))

    # Information H = sum p * log(L / Z) over dead shells plus remainder.
    p_dead = np.exp(log_terms - log_z)
    finite = run.dead_log_l > -np.inf
    h = float(np.sum(p_dead[finite] * (run.dead_log_l[finite] - log_z)))
    p_rem = math.exp(log_rem - log_z)
    if log_live_mean > -np.inf:
        h += p_rem * (log_live_mean - log_z)
    h = max(h, 0.0)
    sigma_log = math.sqrt(h / run.n_live)
    return EvidenceEstimate(
        log_evidence=log_z,
        std_error=math.exp(log_z) * sigma_log,
        ess=effective_sample_size(log_terms),
        n_draws=run.n_iterations,
    )


def nested_evidence_riemann_sum(run: NestedRun) -> float:
    """The bare dead-level Riemann sum, without the live remainder."""
    return math.exp(log_sum_exp(_log_shell_widths(run) + run.dead_log_l))


def nested_evidence_lebesgue(run: NestedRun) -> float:
    """Level-increment (Lebesgue) form of the evidence sum.

    Accumulates ``(L_{i+1} - L_i) x_i`` over the recorded levels with
    ``L_0 = 0`` and ``x_0 = 1``, estimating the prior mass above each
    level by the run's shrinkage schedule.  Differs from the bare
    Riemann sum exactly by the summation-by-parts boundary term
    ``x_last * L_last``.
    """
    log_l = run.dead_log_l
    prev = np.concatenate([[-np.inf], log_l[:-1]])
    with np.errstate(invalid="ignore", divide="ignore"):
        # log(L_i - L_{i-1}); equal consecutive levels give -inf (zero term)
        log_inc = log_l + np.log1p(-np.exp(np.minimum(prev - log_l, 0.0)))
    log_inc[log_l == -np.inf] = -np.inf
    log_x_prev = np.concatenate([[0.0], run.log_prior_mass[:-1]])
    terms = log_inc + log_x_prev
    if np.all(terms == -np.inf):
        return 0.0
    return math.exp(log_sum_exp(terms))


def nested_posterior_estimates(run: NestedRun, moment_fn: Callable) -> tuple[float, float]:
    """Posterior expectation of a function from the dead-point records.

    Reuses the run: each dead point gets normalized weight proportional
    to ``(x_{i-1} - x_i) L_i``.  Returns the weighted mean of
    ``moment_fn(points)`` and its importance-weighted standard error.
    ``moment_fn`` must map an ``(n, dim)`` array to ``n`` values.
    """
    log_wl = _log_shell_widths(run) + run.dead_log_l
    if np.all(log_wl == -np.inf):
        raise ValueError("run carries no posterior mass")
    p = np.exp(log_wl - log_sum_exp(log_wl))
    p = p / p.sum()
    f = np.asarray(moment_fn(run.dead_points), dtype=float)
    if f.shape != p.shape:
        raise ValueError("moment_fn must return one value per dead point")
    value = float(np.sum(p * f))
    std_error = float(np.sqrt(np.sum(p**2 * (f - value) ** 2)))
    return value, std_error
