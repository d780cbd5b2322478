"""Monte Carlo estimation of Bayesian evidence and Bayes factors.

Importance, bridge, stabilized-harmonic-mean, mixture-Gibbs, nested
and adaptive population Monte Carlo estimators of normalizing
constants, with benchmark targets, independent reference integrators,
and a seeded replication harness.
"""

from .benchmarks import (
    BananaParams,
    GaussianToyData,
    ReferenceEvidence,
    ReferenceMismatchError,
    banana_log_density,
    banana_model,
    banana_reference_evidence,
    banana_reference_moments,
    gaussian_toy_box_model,
    gaussian_toy_box_reference_evidence,
    gaussian_toy_log_evidence,
    gaussian_toy_log_posterior_unnorm,
    gaussian_toy_model,
    gaussian_toy_reference_evidence,
)
from .core import (
    Box,
    DegenerateSampleError,
    EvidenceEstimate,
    ModelSpec,
    NormalizedDensity,
    WeightedSample,
    effective_sample_size,
    evidence_from_weights,
    log_sum_exp,
    parameter_point,
)
from .estimators import (
    BridgeConfig,
    BridgeConvergenceError,
    HpdEllipse,
    InvalidProposalError,
    IterativeBridgeResult,
    RatioEstimate,
    bridge_general_alpha,
    bridge_geometric,
    bridge_iterative_optimal,
    bridge_single_proposal,
    harmonic_mean_evidence,
    hpd_ellipse,
    importance_bayes_factor,
    mixture_bridge_evidence,
)
from .harness import (
    ExperimentConfig,
    ResultRow,
    list_presets,
    regenerate_references,
    run_config_file,
    run_experiment,
    summarize,
)
from .nested import (
    NestedRun,
    NestedTermination,
    load_records,
    nested_evidence,
    nested_evidence_lebesgue,
    nested_evidence_riemann_sum,
    nested_posterior_estimates,
    nested_sampling_run,
)
from .pmc import (
    MixtureProposal,
    load_proposal,
    PmcConfig,
    PmcDiagnostics,
    PmcResult,
    pmc_evidence,
    pmc_init,
    pmc_iterate,
    pmc_run,
)
from .samplers import (
    ConstrainedWalkConfig,
    LabeledChain,
    MarkovKernelSpec,
    constrained_prior_walk,
    gibbs_toy_posterior,
    mixture_gibbs_sampler,
    toy_gibbs_kernel,
)

__version__ = "0.1.0"

__all__ = [
    "BananaParams",
    "Box",
    "BridgeConfig",
    "BridgeConvergenceError",
    "ConstrainedWalkConfig",
    "DegenerateSampleError",
    "EvidenceEstimate",
    "ExperimentConfig",
    "GaussianToyData",
    "HpdEllipse",
    "InvalidProposalError",
    "IterativeBridgeResult",
    "LabeledChain",
    "MarkovKernelSpec",
    "MixtureProposal",
    "ModelSpec",
    "NestedRun",
    "NestedTermination",
    "NormalizedDensity",
    "PmcConfig",
    "PmcDiagnostics",
    "PmcResult",
    "RatioEstimate",
    "ReferenceEvidence",
    "ReferenceMismatchError",
    "ResultRow",
    "WeightedSample",
    "banana_log_density",
    "banana_model",
    "banana_reference_evidence",
    "banana_reference_moments",
    "bridge_general_alpha",
    "bridge_geometric",
    "bridge_iterative_optimal",
    "bridge_single_proposal",
    "constrained_prior_walk",
    "effective_sample_size",
    "evidence_from_weights",
    "gaussian_toy_box_model",
    "gaussian_toy_box_reference_evidence",
    "gaussian_toy_log_evidence",
    "gaussian_toy_log_posterior_unnorm",
    "gaussian_toy_model",
    "gaussian_toy_reference_evidence",
    "gibbs_toy_posterior",
    "harmonic_mean_evidence",
    "hpd_ellipse",
    "importance_bayes_factor",
    "list_presets",
    "load_proposal",
    "load_records",
    "log_sum_exp",
    "mixture_bridge_evidence",
    "mixture_gibbs_sampler",
    "nested_evidence",
    "nested_evidence_lebesgue",
    "nested_evidence_riemann_sum",
    "nested_posterior_estimates",
    "nested_sampling_run",
    "parameter_point",
    "pmc_evidence",
    "pmc_init",
    "pmc_iterate",
    "pmc_run",
    "regenerate_references",
    "run_config_file",
    "run_experiment",
    "summarize",
    "toy_gibbs_kernel",
]
