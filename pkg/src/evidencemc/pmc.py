"""Adaptive population Monte Carlo with a Student-t mixture proposal.

The proposal is a fixed-size mixture of multivariate Student-t
components, adapted towards the posterior by Rao-Blackwellized
integrated-EM updates: component responsibilities come from the mixture
densities rather than sampled labels, and every update is weighted by
the normalized importance weights of the current draw.  The final
weighted sample doubles as an evidence estimate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import gammaln, logsumexp

from .core import (
    DegenerateSampleError,
    EvidenceEstimate,
    ModelSpec,
    WeightedSample,
    effective_sample_size,
    evidence_from_weights,
    log_sum_exp,
)

__all__ = [
    "MixtureProposal",
    "PmcConfig",
    "PmcDiagnostics",
    "PmcResult",
    "load_proposal",
    "pmc_init",
    "pmc_iterate",
    "pmc_run",
    "pmc_evidence",
]

WEIGHT_FLOOR = 1e-4


@dataclass(frozen=True)
class MixtureProposal:
    """A normalized mixture of multivariate Student-t densities.

    ``weights`` lie on the simplex, ``means`` is ``(D, dim)``, ``scales``
    is ``(D, dim, dim)`` with every matrix symmetric positive definite
    (checked by Cholesky at construction), and ``dof`` is the common
    degrees-of-freedom parameter.
    """

    weights: np.ndarray
    means: np.ndarray
    scales: np.ndarray
    dof: float
    _chols: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        mu = np.asarray(self.means, dtype=float)
        sc = np.asarray(self.scales, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty vector")
        d = w.size
        if mu.ndim != 2 or mu.shape[0] != d:
            raise ValueError("means must be a (n_components, dim) array")
        p = mu.shape[1]
        if sc.shape != (d, p, p):
            raise ValueError("scales must be a (n_components, dim, dim) array")
        if np.any(w < 0) or not math.isclose(w.sum(), 1.0, rel_tol=0, abs_tol=1e-9):
            raise ValueError("weights must be nonnegative and sum to one")
        if not self.dof > 0:
            raise ValueError("dof must be positive")
        if not np.allclose(sc, np.swapaxes(sc, 1, 2), rtol=0, atol=1e-12):
            raise ValueError("every scale matrix must be symmetric")
        try:
            chols = np.linalg.cholesky(sc)
        except np.linalg.LinAlgError as exc:
            raise ValueError("every scale matrix must be positive definite") from exc
        for name, val in (("weights", w), ("means", mu), ("scales", sc)):
            val.flags.writeable = False
            object.__setattr__(self, name, val)
        chols.flags.writeable = False
        object.__setattr__(self, "_chols", chols)

    @property
    def n_components(self) -> int:
        return self.weights.size

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def mahalanobis_sq(self, points) -> np.ndarray:
        """Squared Mahalanobis distance to every component, shape (n, D)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.empty((pts.shape[0], self.n_components))
        for d in range(self.n_components):
            y = solve_triangular(
                self._chols[d], (pts - self.means[d]).T, lower=True
            )
            out[:, d] = np.sum(y * y, axis=0)
        return out

    def component_log_density(self, points) -> np.ndarray:
        """Log density of each Student-t component, shape (n, D)."""
        nu, p = self.dof, self.dim
        half = 0.5 * (nu + p)
        log_det_half = np.log(np.diagonal(self._chols, axis1=1, axis2=2)).sum(axis=1)
        const = (
            gammaln(half)
            - gammaln(0.5 * nu)
            - 0.5 * p * math.log(nu * math.pi)
            - log_det_half
        )
        m2 = self.mahalanobis_sq(points)
        return const - half * np.log1p(m2 / nu)

    def log_density(self, points) -> np.ndarray:
        """Log mixture density sum_d w_d t_nu(x; mean_d, scale_d)."""
        pts = np.asarray(points, dtype=float)
        comp = self.component_log_density(pts)
        with np.errstate(divide="ignore"):
            comp = comp + np.log(self.weights)
        out = logsumexp(comp, axis=1)
        return float(out[0]) if pts.ndim == 1 else out

    def sample(self, rng, n: int) -> np.ndarray:
        """Draw n points; rows arrive grouped by component."""
        rng = np.random.default_rng(rng)
        counts = rng.multinomial(n, self.weights)
        blocks = []
        for d, m in enumerate(counts):
            if m == 0:
                continue
            z = rng.standard_normal((m, self.dim)) @ self._chols[d].T
            g = rng.chisquare(self.dof, m)
            blocks.append(self.means[d] + z * np.sqrt(self.dof / g)[:, None])
        return np.concatenate(blocks, axis=0)

    def save(self, path) -> None:
        """Write a flat record: one row per component (weight, mean, scale)."""
        flat = np.column_stack(
            [self.weights, self.means, self.scales.reshape(self.n_components, -1)]
        )
        np.savetxt(
            path,
            flat,
            fmt="%.17g",
            header=f"dof={self.dof!r} dim={self.dim}\n"
            "weight mean[dim] scale[dim*dim] per row",
        )


def load_proposal(path) -> MixtureProposal:
    """Read back a proposal written by MixtureProposal.save."""
    with open(path) as fh:
        first = fh.readline()
    fields = dict(tok.split("=") for tok in first.lstrip("# ").split())
    dof, p = float(fields["dof"]), int(fields["dim"])
    flat = np.loadtxt(path, ndmin=2)
    if flat.shape[1] != 1 + p + p * p:
        raise ValueError("proposal record has inconsistent row length")
    return MixtureProposal(
        weights=flat[:, 0],
        means=flat[:, 1 : 1 + p],
        scales=flat[:, 1 + p :].reshape(-1, p, p),
        dof=dof,
    )


@dataclass(frozen=True)
class PmcConfig:
    """Adaptation schedule and initialization spread.

    Defaults are the replication values: nine Student-t components with
    nine degrees of freedom, ten adaptation rounds of 5000 draws, a
    50000-point final sample, and component means initialized from
    Normal(0, diag(sigma0_diag) / 5).
    """

    n_components: int = 9
    dof: float = 9.0
    n_per_iteration: int = 5000
    n_iterations: int = 10
    n_final: int = 50_000
    sigma0_diag: tuple = (200.0, 50.0)

    def __post_init__(self):
        if min(self.n_components, self.n_per_iteration, self.n_final) < 1:
            raise ValueError("counts must be positive")
        if self.n_iterations < 0:
            raise ValueError("n_iterations must be nonnegative")
        if not self.dof > 0:
            raise ValueError("dof must be positive")
        if len(self.sigma0_diag) == 0 or any(v <= 0 for v in self.sigma0_diag):
            raise ValueError("sigma0_diag entries must be positive")


class PmcDiagnostics(NamedTuple):
    """Per-stage adaptation health: higher perplexity = better overlap."""

    perplexity: float
    ess: float
    n_components: int


class PmcResult(NamedTuple):
    proposal: MixtureProposal
    sample: WeightedSample
    diagnostics: tuple


def pmc_init(cfg: PmcConfig, seed=None) -> MixtureProposal:
    """Equal-weight start: means drawn from Normal(0, Sigma0/5), scales Sigma0/5."""
    rng = np.random.default_rng(seed)
    p = len(cfg.sigma0_diag)
    init_cov = np.diag(cfg.sigma0_diag) / 5.0
    means = rng.standard_normal((cfg.n_components, p)) * np.sqrt(
        np.diag(init_cov)
    )
    return MixtureProposal(
        weights=np.full(cfg.n_components, 1.0 / cfg.n_components),
        means=means,
        scales=np.broadcast_to(init_cov, (cfg.n_components, p, p)).copy(),
        dof=cfg.dof,
    )


def _normalized_log_weights(model: ModelSpec, points, log_q):
    log_w = np.asarray(model.log_target(points), dtype=float) - log_q
    if np.all(log_w == -np.inf):
        raise DegenerateSampleError(
            "all importance weights are zero: the proposal missed the target"
        )
    return log_w


def pmc_iterate(
    proposal: MixtureProposal, model: ModelSpec, n: int, seed=None
) -> tuple[MixtureProposal, WeightedSample]:
    """One Rao-Blackwellized integrated-EM adaptation round.

    Draws n points from the proposal, forms normalized importance
    weights w ∝ prior×likelihood / q, and updates every component d
    with responsibilities rho_d(x) ∝ weight_d q_d(x) and the Student-t
    latent factor gamma_d(x) = (dof + dim) / (dof + Mahalanobis²_d(x)):

        weight_d <- sum w rho_d
        mean_d   <- sum w rho_d gamma_d x / sum w rho_d gamma_d
        scale_d  <- sum w rho_d gamma_d (x-mean_d)(x-mean_d)^T / sum w rho_d

    Components whose updated weight falls below 1e-4, or whose updated
    scale loses positive definiteness, are pruned with a warning and the
    remaining weights renormalized.  Returns the updated proposal and
    the weighted sample drawn from the *input* proposal.
    """
    rng = np.random.default_rng(seed)
    points = proposal.sample(rng, n)
    comp = proposal.component_log_density(points)
    with np.errstate(divide="ignore"):
        comp_w = comp + np.log(proposal.weights)
    log_q = logsumexp(comp_w, axis=1)
    log_w = _normalized_log_weights(model, points, log_q)
    w_bar = np.exp(log_w - log_sum_exp(log_w))
    rho = np.exp(comp_w - log_q[:, None])

    nu, p = proposal.dof, proposal.dim
    gamma = (nu + p) / (nu + proposal.mahalanobis_sq(points))
    u = w_bar[:, None] * rho
    new_weights = u.sum(axis=0)
    ug = u * gamma

    keep = new_weights >= WEIGHT_FLOOR
    for d in np.nonzero(~keep)[0]:
        warnings.warn(
            f"pruning component {d}: weight {new_weights[d]:.3e} below "
            f"{WEIGHT_FLOOR:g}",
            stacklevel=2,
        )
    weights, means, scales = [], [], []
    for d in np.nonzero(keep)[0]:
        mean = ug[:, d] @ points / ug[:, d].sum()
        centered = points - mean
        scale = np.einsum("i,ij,ik->jk", ug[:, d], centered, centered)
        scale = scale / new_weights[d]
        try:
            np.linalg.cholesky(scale)
        except np.linalg.LinAlgError:
            warnings.warn(
                f"pruning component {d}: updated scale not positive definite",
                stacklevel=2,
            )
            continue
        weights.append(new_weights[d])
        means.append(mean)
        scales.append(scale)
    if not weights:
        raise DegenerateSampleError("every mixture component was pruned")
    weights = np.array(weights)
    updated = MixtureProposal(
        weights=weights / weights.sum(),
        means=np.array(means),
        scales=np.array(scales),
        dof=nu,
    )
    sample = WeightedSample(points=points, log_weights=log_w, source="proposal")
    return updated, sample


def _stage_diagnostics(sample: WeightedSample, n_components: int) -> PmcDiagnostics:
    log_w = sample.log_weights
    w = np.exp(log_w - log_sum_exp(log_w))
    nz = w[w > 0]
    entropy = -float(np.sum(nz * np.log(nz)))
    return PmcDiagnostics(
        perplexity=math.exp(entropy) / sample.n,
        ess=effective_sample_size(log_w),
        n_components=n_components,
    )


def pmc_run(model: ModelSpec, cfg: PmcConfig = PmcConfig(), seed=None) -> PmcResult:
    """Full adaptation schedule plus the final large sample.

    Initializes from cfg, runs cfg.n_iterations adaptation rounds of
    cfg.n_per_iteration draws, then draws the cfg.n_final final sample
    from the last proposal without further updates.  Diagnostics hold
    one entry per stage (n_iterations + 1 total, the final stage last);
    each entry records the component count of the proposal that
    generated that stage's sample.
    """
    if len(cfg.sigma0_diag) != model.dim:
        raise ValueError("sigma0_diag length must match the model dimension")
    rng = np.random.default_rng(seed)
    proposal = pmc_init(cfg, rng)
    diagnostics = []
    for _ in range(cfg.n_iterations):
        n_gen = proposal.n_components
        proposal, sample = pmc_iterate(proposal, model, cfg.n_per_iteration, rng)
        diagnostics.append(_stage_diagnostics(sample, n_gen))
    points = proposal.sample(rng, cfg.n_final)
    log_q = proposal.log_density(points)
    log_w = _normalized_log_weights(model, points, log_q)
    final = WeightedSample(points=points, log_weights=log_w, source="proposal")
    diagnostics.append(_stage_diagnostics(final, proposal.n_components))
    return PmcResult(proposal=proposal, sample=final, diagnostics=tuple(diagnostics))


def pmc_evidence(sample: WeightedSample) -> EvidenceEstimate:
    """Evidence from a PMC weighted sample.

    Valid when the weights are prior×likelihood over a normalized
    proposal with a normalized prior; delegates to evidence_from_weights.
    """
    return evidence_from_weights(sample)
