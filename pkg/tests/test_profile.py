"""Harness checks at the desk-scale profile (alpha=1.5, T=500, h=0.01, M=1000)."""
import dataclasses
import numpy as np
import pytest

from heavy_ou import harness
from heavy_ou.harness import ExperimentConfig, ks_two_sample
from heavy_ou.levy_model import JumpMeasureSpec, LevyModel
from heavy_ou.simulate import SimConfig, default_eps_cut

SPEC = JumpMeasureSpec.stable(1.5, 0.5, 0.5)
MODEL = LevyModel(1.0, 0.0, SPEC)


def profile(**kw):
    sim = SimConfig(T=500.0, h=0.01, theta=1.0, eps_cut=default_eps_cut(SPEC, 0.01))
    base = dict(model=MODEL, theta0=1.0, sim=sim, horizons=(500.0,), replications=1000)
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.fixture(scope="module")
def base():
    harness.clear_cache()
    yield profile()
    harness.clear_cache()


def test_x2_scales_with_theta0(base):
    a = harness.run_x2_experiment(base)
    b = harness.run_x2_experiment(dataclasses.replace(base, theta0=2.0))
    assert ks_two_sample(np.array(a.samples_empirical) / 2, b.samples_empirical) < 0.08


def test_x2_ks_does_not_grow_with_horizon(base):
    rep = harness.run_x2_experiment(dataclasses.replace(base, horizons=(50.0, 500.0)))
    ks = rep.details["ks_by_horizon"]
    assert ks["500.0"] <= ks["50.0"] + 0.02


def test_joint_marginals_and_slope(base):
    rep = harness.run_joint_experiment(base)
    assert rep.details["ks_first"] < 0.10
    assert rep.details["ks_second"] < 0.10
    assert abs(rep.details["mean_first"]) < 3 * rep.details["se_first"]
    assert rep.checks["conditional_variance_slope"]
    assert rep.details["samples_second"] == harness.run_x2_experiment(base).samples_empirical


def test_mle_consistency_between_horizons(base):
    rep = harness.run_mle_experiment(dataclasses.replace(base, horizons=(50.0, 500.0)))
    assert rep.checks["consistency"]
    assert rep.details["median_abs_error_by_horizon"]["500.0"] < 0.05


def test_eta_qv_theta_independence(base):
    a = harness.run_eta_qv_experiment(base)
    b = harness.run_eta_qv_experiment(dataclasses.replace(base, theta0=2.0))
    assert ks_two_sample(a.samples_empirical, b.samples_empirical) < 0.08


@pytest.mark.xfail(strict=True, reason="at T=500 both truncations are still far from the limit, at different distances")
def test_eta_qv_rho_zero_and_half_agree(base):
    stats = harness.collect_path_stats(base, 500.0)
    ph2 = base.phi(500.0) ** 2
    assert ks_two_sample(ph2 * stats["heavy_qv"], ph2 * stats["heavy_qv_rho0"]) < 0.08


def test_tail_probe_alpha_one_roughly_flat():
    cfg = profile(model=LevyModel(1.0, 0.0, JumpMeasureSpec.stable(1.0, 0.5, 0.5)))
    rep = harness.run_tail_probe(cfg, draws=10**6)
    vals = np.array([v for v in rep.details["probe"].values() if v is not None])
    assert len(vals) == 4 and np.all(vals < -0.05)
    # exponential regime: x^-1 log P(|N|/sqrt(S) > x) varies little over the grid
    assert np.ptp(vals) < 0.2 * abs(vals.mean())
