import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heavy_ou.levy_model import JumpMeasureSpec, LevyModel, tail, truncated_variance
from heavy_ou.simulate import (
    ConfigurationError,
    SimConfig,
    SmallJumpMode,
    decompose_heavy,
    default_eps_cut,
    heavy_quadratic_variation,
    ito_identity_terms,
    jump_response,
    path_rng,
    propagate_ou,
    simulate_ou,
    write_path,
)

SPEC = JumpMeasureSpec.stable(1.5, 0.5, 0.5)
MODEL = LevyModel(1.0, 0.0, SPEC)


def cfg(**kw):
    base = dict(T=100.0, h=0.01, theta=1.0, eps_cut=default_eps_cut(SPEC, 0.01))
    base.update(kw)
    return SimConfig(**base)


def test_default_eps_cut_hits_intensity_target():
    eps = default_eps_cut(SPEC, 0.01)
    assert tail(SPEC, eps) * 0.01 == pytest.approx(0.1, rel=1e-9)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        cfg(T=1.0, h=2.0)
    with pytest.raises(ConfigurationError):
        cfg(T=1.0, h=0.3)
    with pytest.raises(ConfigurationError):
        cfg(x0_mode="random")
    with pytest.raises(ValueError):
        cfg(small_jump_mode="exact")


def test_coarse_grid_rejected():
    # H(eps) h = 0.01^-1.5 / 1.5 * 0.5 >> 0.5
    with pytest.raises(ConfigurationError, match="exceeds 0.5"):
        simulate_ou(MODEL, cfg(T=10.0, h=0.5, eps_cut=0.01))


def test_soft_intensity_warning():
    with pytest.warns(UserWarning):
        simulate_ou(MODEL, cfg(T=10.0, h=0.01, eps_cut=0.1))


def test_stationary_variance_without_jumps():
    c = cfg(T=500.0, eps_cut=1e12, small_jump_mode=SmallJumpMode.DISCARD)
    x = simulate_ou(MODEL, c, 3).x
    tail_half = x[len(x) // 2:]
    assert tail_half.var() == pytest.approx(0.5, rel=0.05)


def test_deterministic_decay():
    # no noise and no jumps reduce the scheme to x0 * exp(-theta t)
    x = propagate_ou(5.0, math.exp(-0.01), np.zeros(1000))
    t = np.arange(1001) * 0.01
    np.testing.assert_allclose(x, 5.0 * np.exp(-t), rtol=1e-12)


def test_fixed_start_value():
    p = simulate_ou(MODEL, cfg(T=1.0, x0_mode="fixed", x0=5.0), 0)
    assert p.x[0] == 5.0


def test_stationary_start_is_random_and_theta_free():
    a = simulate_ou(MODEL, cfg(T=1.0, x0_mode="stationary"), 1).x[0]
    b = simulate_ou(MODEL, cfg(T=1.0, x0_mode="stationary"), 2).x[0]
    assert a != b


def test_poisson_jump_count():
    c = cfg(T=50.0)
    counts = np.array([len(simulate_ou(MODEL, c, path_rng(7, k)).jump_sizes) for k in range(200)])
    lam = tail(SPEC, c.eps_cut) * c.T
    assert abs(counts.mean() - lam) < 3 * math.sqrt(lam / 200)


def test_jump_record_invariants():
    p = simulate_ou(MODEL, cfg(), 11)
    assert np.all(np.diff(p.jump_times) > 0)
    assert np.all((p.jump_times > 0) & (p.jump_times <= p.T))
    assert np.all(np.abs(p.jump_sizes) > p.config.eps_cut)


def test_reconstruction_identity():
    p = simulate_ou(MODEL, cfg(), 4)
    decay = math.exp(-p.theta_true * p.h)
    inc = p.brownian_ou + p.small_noise_ou + p.drift_ou + p.cell_jump_sum()
    pred = decay * p.x[:-1] + inc
    scale = np.maximum(np.abs(p.x[1:]), 1.0)
    assert np.max(np.abs(pred - p.x[1:]) / scale) < 1e-12


def test_superposition_of_jump_response():
    c = cfg()
    full = simulate_ou(MODEL, c, 8)
    bare = simulate_ou(MODEL, c, 8, with_jumps=False)
    assert len(bare.jump_sizes) == 0
    np.testing.assert_array_equal(full.brownian_increments, bare.brownian_increments)
    rebuilt = bare.x + jump_response(full)
    assert np.max(np.abs(rebuilt - full.x) / np.maximum(np.abs(full.x), 1.0)) < 1e-12


def test_seed_reproducibility():
    a = simulate_ou(MODEL, cfg(T=10.0), 42)
    b = simulate_ou(MODEL, cfg(T=10.0), 42)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.jump_sizes, b.jump_sizes)


def test_path_rng_keyed_by_index():
    a = path_rng(1, 3).standard_normal(4)
    b = path_rng(1, 3).standard_normal(4)
    c = path_rng(1, 4).standard_normal(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_cell_increment_variance():
    p = simulate_ou(MODEL, cfg(T=200.0), 5)
    g = p.brownian_ou + p.small_noise_ou
    target = p.sigma_eff**2 * (-math.expm1(-2 * p.h)) / 2
    n = g.size
    # the sample variance of n normals has standard error sqrt(2/n) * var
    assert abs(g.var(ddof=1) - target) < 3 * math.sqrt(2 / n) * target
    assert p.small_variance == pytest.approx(truncated_variance(SPEC, p.config.eps_cut))


def test_discard_mode_has_no_small_noise():
    p = simulate_ou(MODEL, cfg(T=5.0, small_jump_mode="discard"), 0)
    assert p.small_variance == 0.0
    assert not p.small_noise_increments.any()


@given(st.sampled_from([0.0, 0.2, 0.5, 0.6]), st.integers(0, 50))
@settings(max_examples=20, deadline=None)
def test_decompose_sum_identity(rho, seed):
    p = simulate_ou(MODEL, cfg(T=100.0), seed)
    light, heavy = decompose_heavy(p, rho)
    np.testing.assert_allclose(light + heavy, p.x, rtol=0, atol=1e-12 * max(1.0, np.abs(p.x).max()))


def test_decompose_rho_zero_takes_jumps_above_one():
    p = simulate_ou(MODEL, cfg(), 9)
    _, heavy = decompose_heavy(p, 0.0)
    np.testing.assert_allclose(heavy, jump_response(p, np.abs(p.jump_sizes) > 1.0), rtol=0, atol=0)


def test_decompose_rejects_bad_rho():
    p = simulate_ou(MODEL, cfg(T=10.0), 0)
    for rho in (-0.1, 1 / 1.5, 1.0):
        with pytest.raises(ValueError):
            decompose_heavy(p, rho)


def test_heavy_jump_count_at_large_horizon():
    # R_T = 100 at T = 1e4; the heavy jumps form a Poisson(H(100) T) count
    c = SimConfig(T=1e4, h=0.1, theta=1.0, eps_cut=5.0, small_jump_mode="discard")
    lam = tail(SPEC, 100.0) * 1e4
    counts = []
    for k in range(100):
        p = simulate_ou(MODEL, c, path_rng(3, k))
        counts.append(np.sum(np.abs(p.jump_sizes) > 1e4**0.5))
    assert abs(np.mean(counts) - lam) < 3 * math.sqrt(lam / 100)


def test_heavy_quadratic_variation_arithmetic():
    p = simulate_ou(MODEL, cfg(T=1.0, eps_cut=1.0), 0)
    p = type(p)(**{**p.__dict__, "jump_times": np.array([0.2, 0.5]), "jump_sizes": np.array([3.0, -4.0])})
    assert heavy_quadratic_variation(p, 2.0) == 25.0
    assert heavy_quadratic_variation(p, 10.0) == 0.0
    with pytest.raises(ValueError):
        heavy_quadratic_variation(p, 0.5)


def test_ito_identity_residual_shrinks_with_h():
    spec = JumpMeasureSpec.stable(1.5, 0.5, 0.5)
    model = LevyModel(1.0, 0.0, spec)
    res = []
    for h in (0.02, 0.01):
        c = SimConfig(T=200.0, h=h, theta=1.0, eps_cut=1.0, small_jump_mode="discard")
        terms = ito_identity_terms(simulate_ou(model, c, 17), 1.0)
        res.append(abs(terms["residual"]))
    assert res[0] >= 3 * res[1]


def test_write_path_roundtrip(tmp_path):
    p = simulate_ou(MODEL, cfg(T=1.0), 1)
    write_path(p, tmp_path / "p.csv", tmp_path / "p.json")
    rows = (tmp_path / "p.csv").read_text().splitlines()
    assert rows[0] == "time,x"
    xs = np.array([float(r.split(",")[1]) for r in rows[1:]])
    np.testing.assert_array_equal(xs, p.x)
    jumps = json.loads((tmp_path / "p.json").read_text())["jumps"]
    assert [j["size"] for j in jumps] == p.jump_sizes.tolist()
