"""Tests for the constrained-exploration evidence loop.

The reference value for the boxed toy posterior comes from the frozen
quadrature constant in ``conftest.py``.  Structural identities (mass
schedule, telescoping shell widths, the summation-by-parts boundary
term) are checked exactly; Monte Carlo accuracy checks pin seeds and
assert margins verified to hold with room to spare.
"""

import dataclasses
import math

import numpy as np
import pytest
from scipy.stats import ks_1samp, uniform

from evidencemc import (
    Box,
    ModelSpec,
    NestedRun,
    NestedTermination,
    nested_evidence,
    nested_evidence_lebesgue,
    nested_evidence_riemann_sum,
    nested_posterior_estimates,
    nested_sampling_run,
)
from evidencemc.benchmarks import gaussian_toy_box_model, gaussian_toy_model
from evidencemc.nested import load_records
from evidencemc.samplers import ConstrainedWalkConfig

from .conftest import TOY_BOX_EVIDENCE


@pytest.fixture(scope="module")
def toy_box_model(toy_data):
    return gaussian_toy_box_model(toy_data)


@pytest.fixture(scope="module")
def toy_box_run(toy_box_model):
    return nested_sampling_run(toy_box_model, 100, max_iterations=1000, seed=5)


def gaussian_line_model():
    """1-d standard-normal likelihood under a uniform box prior."""
    box = Box(lower=(-5.0,), upper=(5.0,))
    return ModelSpec(
        dim=1,
        log_prior=box.uniform_log_density,
        log_likelihood=lambda pts: -0.5 * np.atleast_2d(pts)[:, 0] ** 2,
        prior_sampler=box.sample,
        support=box,
        prior_normalized=True,
    )


class TestRunStructure:
    def test_shapes_and_termination(self, toy_box_run, toy_box_model):
        run = toy_box_run
        assert run.n_iterations == 1000
        assert run.termination.reason == "max-iterations"
        assert run.termination.n_iterations == 1000
        assert run.termination.n_stuck_walks >= 0
        assert run.dead_points.shape == (1000, 2)
        assert run.live_points.shape == (100, 2)
        assert np.all(np.diff(run.dead_log_l) >= 0.0)
        assert toy_box_model.support.contains(run.dead_points).all()
        assert toy_box_model.support.contains(run.live_points).all()
        # every survivor sits above the last recorded level
        assert float(np.min(run.live_log_l)) >= float(run.dead_log_l[-1])

    def test_deterministic_mass_schedule_is_exact(self, toy_box_run):
        expect = -np.arange(1, 1001) / 100.0
        np.testing.assert_array_equal(toy_box_run.log_prior_mass, expect)

    def test_shell_widths_telescope_to_unit_mass(self, toy_box_run):
        x = np.exp(toy_box_run.log_prior_mass)
        widths = np.concatenate([[1.0], x[:-1]]) - x
        assert abs(float(np.sum(widths)) + x[-1] - 1.0) <= 1e-12

    def test_stochastic_schedule_strictly_decreasing(self):
        run = nested_sampling_run(
            gaussian_line_model(), 20, max_iterations=40, seed=2, schedule="stochastic"
        )
        assert run.schedule == "stochastic"
        assert np.all(run.log_prior_mass < 0.0)
        assert np.all(np.diff(run.log_prior_mass) < 0.0)
        assert nested_evidence(run).evidence > 0.0

    def test_records_roundtrip(self, toy_box_run, tmp_path):
        path = tmp_path / "records.txt"
        toy_box_run.save_records(path)
        back = load_records(path)
        np.testing.assert_array_equal(back["iteration"], np.arange(1, 1001))
        np.testing.assert_array_equal(back["log_likelihood"], toy_box_run.dead_log_l)
        np.testing.assert_array_equal(back["log_prior_mass"], toy_box_run.log_prior_mass)
        np.testing.assert_array_equal(back["points"], toy_box_run.dead_points)


class TestEvidence:
    def test_matches_quadrature_reference(self, toy_box_run):
        est = nested_evidence(toy_box_run)
        z = (est.evidence - TOY_BOX_EVIDENCE) / est.std_error
        assert abs(z) < 4.0  # measured +1.4 at seed 5
        assert est.n_draws == 1000
        assert est.ess > 10.0

    def test_replicate_mean_consistency(self, toy_box_model):
        values = []
        for seed in range(100, 125):
            run = nested_sampling_run(toy_box_model, 100, max_iterations=1000, seed=seed)
            values.append(nested_evidence(run).evidence)
        mean = float(np.mean(values))
        sd = float(np.std(values, ddof=1))
        # measured t = +2.6 over these 25 seeds
        assert abs(mean - TOY_BOX_EVIDENCE) < 4.0 * sd / math.sqrt(25)

    def test_abel_boundary_identity(self, toy_box_run):
        # The level-increment sum differs from the bare shell sum by
        # exactly the summation-by-parts boundary term x_T * L_T.
        bare = nested_evidence_riemann_sum(toy_box_run)
        lebesgue = nested_evidence_lebesgue(toy_box_run)
        boundary = math.exp(
            float(toy_box_run.log_prior_mass[-1]) + float(toy_box_run.dead_log_l[-1])
        )
        assert lebesgue - bare == pytest.approx(boundary, rel=1e-9)

    def test_full_estimate_within_boundary_bound(self, toy_box_run):
        # Full estimate replaces the boundary term by the live-set mean,
        # so the gap to the level-increment form is at most x_T * max
        # live likelihood.
        est = nested_evidence(toy_box_run)
        lebesgue = nested_evidence_lebesgue(toy_box_run)
        bound = math.exp(
            float(toy_box_run.log_prior_mass[-1]) + float(np.max(toy_box_run.live_log_l))
        )
        assert abs(est.evidence - lebesgue) <= bound * (1.0 + 1e-12)

    def test_constant_likelihood_recovers_constant(self):
        c = 3.7
        box = Box(lower=(-1.0, 0.5), upper=(1.0, 1.5))
        model = ModelSpec(
            dim=2,
            log_prior=box.uniform_log_density,
            log_likelihood=lambda pts: np.full(np.atleast_2d(pts).shape[0], math.log(c)),
            prior_sampler=box.sample,
            support=box,
            prior_normalized=True,
        )
        run = nested_sampling_run(model, 25, seed=11)
        est = nested_evidence(run)
        assert run.termination.reason == "remaining-mass"
        assert est.evidence == pytest.approx(c, rel=1e-6)
        assert est.std_error == 0.0  # zero information
        assert nested_evidence_lebesgue(run) == pytest.approx(c, rel=1e-6)

    def test_live_set_order_does_not_matter(self, toy_box_run):
        perm = np.random.default_rng(0).permutation(toy_box_run.n_live)
        shuffled = dataclasses.replace(
            toy_box_run,
            live_points=toy_box_run.live_points[perm],
            live_log_l=toy_box_run.live_log_l[perm],
        )
        assert nested_evidence(shuffled).evidence == pytest.approx(
            nested_evidence(toy_box_run).evidence, rel=1e-12
        )

    def test_live_sets_uniform_on_constrained_region(self):
        # Pool live sets from independent short runs, each rescaled by
        # its own final level radius: if replacement walks leave the
        # constrained prior invariant the pooled values are uniform on
        # [-1, 1] (measured KS p = 0.23).
        model = gaussian_line_model()
        pooled = []
        for k in range(30):
            run = nested_sampling_run(model, 20, max_iterations=60, seed=7000 + k)
            radius = math.sqrt(-2.0 * float(np.max(run.dead_log_l)))
            pooled.append(run.live_points[:, 0] / radius)
        pooled = np.concatenate(pooled)
        assert float(np.max(np.abs(pooled))) <= 1.0 + 1e-12
        p_value = ks_1samp(pooled, uniform(loc=-1.0, scale=2.0).cdf).pvalue
        assert p_value > 0.01


class TestPosteriorEstimates:
    def test_constant_function_is_exact(self, toy_box_run):
        value, std_error = nested_posterior_estimates(
            toy_box_run, lambda pts: np.ones(pts.shape[0])
        )
        assert value == 1.0
        assert std_error == 0.0

    def test_toy_moments(self, toy_box_run):
        # The boxed toy posterior is symmetric in theta, and the box
        # barely truncates the variance marginal (conjugate mean 10/7).
        e_theta, se_theta = nested_posterior_estimates(toy_box_run, lambda pts: pts[:, 0])
        e_var, _ = nested_posterior_estimates(toy_box_run, lambda pts: pts[:, 1])
        assert abs(e_theta) < 0.1  # measured -0.016
        assert se_theta > 0.0
        assert abs(e_var - 10.0 / 7.0) < 0.1  # measured 1.412

    def test_shape_mismatch_rejected(self, toy_box_run):
        with pytest.raises(ValueError):
            nested_posterior_estimates(toy_box_run, lambda pts: pts)  # (n, dim) not (n,)

    def test_run_without_mass_rejected(self):
        run = _make_run(dead_log_l=np.full(3, -np.inf))
        with pytest.raises(ValueError):
            nested_posterior_estimates(run, lambda pts: pts[:, 0])


def _make_run(
    n_live=4,
    dead_log_l=None,
    log_prior_mass=None,
    schedule="deterministic",
    dead_points=None,
):
    t = 3
    if dead_log_l is None:
        dead_log_l = np.array([0.0, 0.5, 1.0])
    if log_prior_mass is None:
        log_prior_mass = -np.arange(1, t + 1) / n_live
    if dead_points is None:
        dead_points = np.zeros((t, 1))
    return NestedRun(
        n_live=n_live,
        dead_points=dead_points,
        dead_log_l=dead_log_l,
        log_prior_mass=log_prior_mass,
        schedule=schedule,
        live_points=np.zeros((n_live, 1)),
        live_log_l=np.full(n_live, 2.0),
        termination=NestedTermination(
            n_iterations=t,
            reason="max-iterations",
            log_remaining_fraction=-1.0,
            n_stuck_walks=0,
        ),
    )


class TestValidation:
    def test_well_formed_run_accepted(self):
        assert _make_run().n_iterations == 3

    def test_bad_schedule_rejected(self):
        with pytest.raises(ValueError):
            _make_run(schedule="geometric")

    def test_empty_run_rejected(self):
        with pytest.raises(ValueError):
            _make_run(dead_log_l=np.empty(0), log_prior_mass=np.empty(0),
                      dead_points=np.empty((0, 1)))

    def test_mismatched_dead_arrays_rejected(self):
        with pytest.raises(ValueError):
            _make_run(dead_points=np.zeros((5, 1)))

    def test_decreasing_levels_rejected(self):
        with pytest.raises(ValueError):
            _make_run(dead_log_l=np.array([1.0, 0.5, 0.7]))

    def test_non_decreasing_mass_rejected(self):
        with pytest.raises(ValueError):
            _make_run(log_prior_mass=np.array([-0.25, -0.25, -0.75]),
                      schedule="stochastic")

    def test_deterministic_mass_mismatch_rejected(self):
        with pytest.raises(ValueError):
            _make_run(log_prior_mass=np.array([-0.3, -0.5, -0.8]))

    def test_run_preconditions(self, toy_data):
        improper = gaussian_toy_model(toy_data)  # no prior sampler
        with pytest.raises(ValueError):
            nested_sampling_run(improper, 100, seed=0)
        model = gaussian_line_model()
        with pytest.raises(ValueError):
            nested_sampling_run(model, 1, seed=0)
        with pytest.raises(ValueError):
            nested_sampling_run(model, 10, max_iterations=0, seed=0)
        with pytest.raises(ValueError):
            nested_sampling_run(model, 10, schedule="beta", seed=0)

    def test_degenerate_live_set_raises(self):
        # Steps so large that every proposal leaves the box: walks stay
        # put, duplicates accumulate, and the live set collapses.
        box = Box(lower=(0.0,), upper=(1.0,))
        model = ModelSpec(
            dim=1,
            log_prior=box.uniform_log_density,
            log_likelihood=lambda pts: -((np.atleast_2d(pts)[:, 0] - 0.5) ** 2),
            prior_sampler=box.sample,
            support=box,
            prior_normalized=True,
        )
        cfg = ConstrainedWalkConfig(n_steps=50, step_variance=1e12)
        with pytest.raises(RuntimeError, match="collapsed"):
            nested_sampling_run(model, 2, walk_cfg=cfg, max_iterations=200, seed=0)
