"""Shared fixtures and frozen cross-check constants.

The frozen numbers below come from the in-package reference integrators
(closed forms, adaptive quadrature, deterministic midpoint grids); they
are re-derived and asserted in test_benchmarks.py, and every other test
module treats them as ground truth.  None of them was produced by an
estimator under test.
"""

from __future__ import annotations

import pytest

from evidencemc.benchmarks import GaussianToyData, gaussian_toy_log_posterior_unnorm
from evidencemc.estimators import hpd_ellipse
from evidencemc.samplers import gibbs_toy_posterior

# Conjugate toy model (n=10, xbar=0, s2=1), scale-invariant 1/variance prior:
# closed-form log evidence, cross-checked by 2-d adaptive quadrature.
TOY_LOG_EVIDENCE = -14.210473380450086

# Same posterior integrated against the normalized uniform prior on
# (-3, 3) x (0.05, 15): adaptive quadrature (epsrel=1e-9), grid-checked.
TOY_BOX_EVIDENCE = 7.509829802862379e-09
TOY_BOX_LOG_EVIDENCE = -18.707053034161873

# Twisted-normal target (beta=0.03, sigma1^2=100) under the flat prior on
# (-40, 40)^2: deterministic 1000x1000 midpoint grid, quadrature-checked.
BANANA_EVIDENCE = 0.00015622569299014665
BANANA_LOG_EVIDENCE = -8.7642088463122931
BANANA_E_THETA2 = 0.0071072559577399158


@pytest.fixture(scope="session")
def toy_data() -> GaussianToyData:
    return GaussianToyData(n=10, xbar=0.0, s2=1.0)


@pytest.fixture(scope="session")
def toy_chain(toy_data):
    """One well-mixed 10^4-state Gibbs chain, shared read-only."""
    return gibbs_toy_posterior(toy_data, n_draws=10_000, seed=20_240)


@pytest.fixture(scope="session")
def toy_log_posterior(toy_data):
    def log_posterior(points):
        return gaussian_toy_log_posterior_unnorm(points, toy_data)

    return log_posterior


@pytest.fixture(scope="session")
def toy_ellipse(toy_chain, toy_log_posterior):
    """10% HPD ellipse fitted to the shared chain."""
    return hpd_ellipse(toy_chain, toy_log_posterior, level=0.10)
