import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathwise import CadlagPath, ConfigError, DomainError, GeneratorConfig, augment_auxiliary, generate, market_weights
from pathwise.paths import fbm_increments, fgn_autocovariance, mixed_drivers, parse_kv_config, rng_for


def test_eval_is_right_continuous_and_left_limit_lags():
    S = CadlagPath([0.0, 0.5, 1.0], [[0.0], [1.0], [3.0]])
    assert S.eval(0.25)[0] == 0.0
    assert S.eval(0.5)[0] == 1.0
    assert S.eval_left(0.5)[0] == 0.0
    assert S.eval(1.0)[0] == 3.0
    assert S.eval_left(1.0)[0] == 1.0


def test_eval_outside_horizon_raises():
    S = CadlagPath([0.0, 1.0], [0.0, 1.0])
    with pytest.raises(DomainError):
        S.eval(1.5)


@pytest.mark.parametrize(
    "times, values",
    [([0.0, 0.0, 1.0], [0, 1, 2]), ([0.0, 1.0], [0.0, np.nan]), ([1.0, 0.5], [0, 1])],
)
def test_invalid_paths_are_rejected(times, values):
    with pytest.raises(DomainError):
        CadlagPath(times, values)


def test_arrays_are_read_only():
    S = CadlagPath([0.0, 1.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        S.values[0, 0] = 5.0


def test_csv_round_trip_is_exact(tmp_path, rng):
    S = CadlagPath(np.concatenate([[0.0], np.sort(rng.random(19)) + np.arange(19)]), rng.normal(size=(20, 3)))
    target = tmp_path / "p.csv"
    S.to_csv(target)
    back = CadlagPath.from_csv(target)
    assert np.array_equal(back.times, S.times) and np.array_equal(back.values, S.values)


def test_jump_indices_and_increments():
    S = CadlagPath([0.0, 1.0, 2.0, 3.0], [0.0, 0.0, 2.0, 2.0])
    assert S.jump_indices().tolist() == [2]
    assert S.increments()[:, 0].tolist() == [0.0, 2.0, 0.0]


def test_generation_is_deterministic():
    cfg = GeneratorConfig(model="merton", n_steps=256, seed=4, jump_intensity=5.0)
    a, b = generate(cfg), generate(cfg)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, generate(cfg.replace(seed=5)).values)


def test_rng_streams_are_independent():
    a = rng_for(1, 0).standard_normal(8)
    b = rng_for(1, 1).standard_normal(8)
    assert not np.array_equal(a, b)


def test_merton_without_jumps_is_gbm_bitwise():
    g = GeneratorConfig(model="gbm", n_steps=512, seed=9, sigma=0.4, mu_drift=0.1)
    m = g.replace(model="merton", jump_intensity=0.0, jump_std=0.3)
    assert np.array_equal(generate(g).values, generate(m).values)


def test_mixed_without_fbm_is_gbm_bitwise():
    g = GeneratorConfig(model="gbm", n_steps=512, seed=3, sigma=0.7, mu_drift=0.2)
    m = g.replace(model="mixed_bs", eta=0.0, frac_drift=0.0, nu=0.2 - 0.5 * 0.7**2)
    assert np.array_equal(generate(g).values, generate(m).values)


def test_gbm_without_volatility_is_deterministic():
    a = generate(GeneratorConfig(model="gbm", sigma=0.0, mu_drift=0.3, seed=1))
    b = generate(GeneratorConfig(model="gbm", sigma=0.0, mu_drift=0.3, seed=2))
    assert np.array_equal(a.values, b.values)
    np.testing.assert_allclose(a.values[:, 0], np.exp(0.3 * a.times), rtol=1e-14)


def test_mixed_drivers_rebuild_the_log_price():
    cfg = GeneratorConfig(model="mixed_bs", n_steps=256, seed=2, eta=0.6, hurst=0.7, nu=0.1, frac_drift=0.05)
    X, Y = mixed_drivers(cfg)
    np.testing.assert_allclose(np.log(generate(cfg).values), X.values + Y.values, atol=1e-12)


def test_fgn_autocovariance_at_half_is_white():
    gamma = fgn_autocovariance(0.5, np.arange(5))
    np.testing.assert_allclose(gamma, [1, 0, 0, 0, 0], atol=1e-15)


def test_fbm_variance_matches_scaling():
    # Var B^H_1 = 1; terminal values over seeds
    ends = np.array([fbm_increments(0.75, 64, s).sum() for s in range(400)])
    assert abs(ends.var() - 1.0) < 0.2


def test_fbm_increment_correlation():
    x = np.concatenate([fbm_increments(0.8, 256, s, horizon=256.0) for s in range(40)])
    lag1 = np.mean(x[:-1] * x[1:]) / np.mean(x * x)
    expected = fgn_autocovariance(0.8, np.array([1]))[0]
    assert abs(lag1 - expected) < 0.05


def test_market_weights_live_on_simplex():
    P = generate(GeneratorConfig(model="gbm", dim=4, n_steps=64, seed=0))
    mu = market_weights(P)
    np.testing.assert_allclose(mu.values.sum(axis=1), 1.0, atol=1e-15)
    assert np.all(mu.values > 0)


def test_market_weights_reject_nonpositive_prices():
    with pytest.raises(DomainError):
        market_weights(CadlagPath([0.0, 1.0], [[1.0, -1.0], [1.0, 1.0]]))


def test_auxiliary_augmentation():
    S = CadlagPath([0.0, 1.0, 2.0], [[1.0], [3.0], [2.0]])
    aug = augment_auxiliary(S, ["time", "running_max:0", "running_integral:0"])
    assert aug.values[:, 0].tolist() == [0.0, 1.0, 2.0]
    assert aug.values[:, 1].tolist() == [1.0, 3.0, 3.0]
    # left-point integral of S dt
    assert aug.values[:, 2].tolist() == [0.0, 1.0, 4.0]


def test_config_from_mapping_aliases_and_errors(tmp_path):
    cfg = GeneratorConfig.from_mapping({"T": "2", "steps": "16", "H": "0.7", "model": "mixed_bs"})
    assert (cfg.horizon, cfg.n_steps, cfg.hurst) == (2.0, 16, 0.7)
    with pytest.raises(ConfigError):
        GeneratorConfig.from_mapping({"steps": "many"})
    with pytest.raises(ConfigError):
        GeneratorConfig(model="heston")
    f = tmp_path / "c.cfg"
    f.write_text("# comment\nmodel = gbm\nsigma=0.2\n")
    assert parse_kv_config(f) == {"model": "gbm", "sigma": "0.2"}


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=2, max_size=30), st.floats(0.0, 1.0))
def test_path_algebra(values, q):
    S = CadlagPath(np.linspace(0, 1, len(values)), values)
    t = float(np.quantile(S.times, q))
    assert np.array_equal((S + S).values, S.scaled(2.0).values)
    assert np.all((S - S).values == 0)
    assert S.eval(t)[0] in S.values[:, 0]
