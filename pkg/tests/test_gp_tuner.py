import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdprel.cnn import HyperParams
from sdprel.errors import OutOfSpace, SingularKernel
from sdprel.gp_tuner import (
    FILTER_CATALOGUE,
    Categorical,
    GpState,
    Integer,
    Real,
    SearchSpace,
    _cholesky,
    _neg_log_marginal,
    config_to_hp,
    decode_config,
    encode_config,
    expected_improvement,
    fit_gp,
    gp_posterior,
    hp_to_config,
    hyperparam_space,
    read_trace,
    tune,
    write_trace,
)

LINE = SearchSpace((Real("x", 0.0, 1.0),))


def matern_oracle(a, b, ls, s2):
    r = math.sqrt(sum(((x - y) / l) ** 2 for x, y, l in zip(a, b, ls)))
    return s2 * (1 + math.sqrt(5) * r + 5 * r * r / 3) * math.exp(-math.sqrt(5) * r)


def test_catalogue_has_eighteen_entries():
    assert len(FILTER_CATALOGUE) == 18
    assert FILTER_CATALOGUE[0] == "3" and FILTER_CATALOGUE[-1] == "7-8-9"
    assert hyperparam_space().n_features == 18 + 1 + 5 + 2 + 3


@pytest.mark.parametrize("widths", FILTER_CATALOGUE)
def test_catalogue_round_trip(widths):
    space = hyperparam_space()
    config = {**hp_to_config(HyperParams()), "filter_widths": widths}
    back = decode_config(encode_config(config, space), space)
    assert back["filter_widths"] == widths
    assert config_to_hp(back).filter_widths == tuple(int(w) for w in widths.split("-"))


@pytest.mark.parametrize(
    "name, inside, outside",
    [
        ("feature_maps", [10, 1000], [9, 1001]),
        ("l2", [1e-4, 1e2], [0.99e-4, 100.01]),
        ("learning_rate", [1e-6, 1e-2], [0.99e-6, 1.01e-2]),
        ("dropout_keep", [0.1, 1.0], [0.0999, 1.0001]),
    ],
)
def test_bounds_are_inclusive(name, inside, outside):
    space = hyperparam_space()
    base = hp_to_config(HyperParams())
    for v in inside:
        encode_config({**base, name: v}, space)
    for v in outside:
        with pytest.raises(OutOfSpace):
            encode_config({**base, name: v}, space)


def test_unknown_categories_rejected():
    space = hyperparam_space()
    base = hp_to_config(HyperParams())
    with pytest.raises(OutOfSpace):
        encode_config({**base, "filter_widths": "2-3"}, space)
    with pytest.raises(OutOfSpace):
        encode_config({**base, "activation": "gelu"}, space)
    with pytest.raises(OutOfSpace):
        decode_config(np.zeros(3), space)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1, exclude_max=True), min_size=7, max_size=7))
def test_unit_encoding_matches_config_encoding(u):
    space = hyperparam_space()
    config = space.from_unit(u)
    space.validate(config)
    vec = encode_config(config, space)
    assert np.allclose(space.encode_unit(np.array([u]))[0], vec, atol=1e-12)
    back = decode_config(vec, space)
    for key, value in config.items():
        if isinstance(value, float):
            assert math.isclose(back[key], value, rel_tol=1e-9)
        else:
            assert back[key] == value


def test_gp_posterior_matches_direct_solve():
    rng = np.random.default_rng(4)
    X = rng.random((3, 2))
    y = rng.normal(size=3)
    state = GpState(X, y, np.array([0.4, 0.9]), signal_var=1.3, noise_var=1e-3)
    x = rng.random(2)
    ys = (y - y.mean()) / y.std()
    K = np.array([[matern_oracle(a, b, state.lengthscales, 1.3) for b in X] for a in X]) + 1e-3 * np.eye(3)
    k = np.array([matern_oracle(x, b, state.lengthscales, 1.3) for b in X])
    mu = y.mean() + y.std() * k @ np.linalg.solve(K, ys)
    var = 1.3 - k @ np.linalg.solve(K, k)
    got_mu, got_sigma = gp_posterior(state, x)
    assert abs(got_mu - mu) < 1e-10
    assert abs(got_sigma - y.std() * math.sqrt(var)) < 1e-10


def test_gp_prior_without_data():
    mu, sigma = gp_posterior(GpState.empty(3, signal_var=2.0), np.zeros(3))
    assert mu == 0.0 and math.isclose(sigma, math.sqrt(2.0))


def test_marginal_likelihood_gradient():
    rng = np.random.default_rng(2)
    X = rng.random((6, 3))
    y = rng.normal(size=6)
    sq = (X[:, None, :] - X[None, :, :]) ** 2
    theta = np.array([-0.5, 0.2, 0.1, 0.3, math.log(0.05)])
    _, grad = _neg_log_marginal(theta, X, y, sq)
    h = 1e-6
    for i in range(len(theta)):
        e = np.zeros_like(theta)
        e[i] = h
        num = (_neg_log_marginal(theta + e, X, y, sq)[0] - _neg_log_marginal(theta - e, X, y, sq)[0]) / (2 * h)
        assert abs(num - grad[i]) < 1e-5 * max(1, abs(num))


def test_fit_gp_interpolates_smooth_function():
    rng = np.random.default_rng(0)
    X = rng.random((12, 1))
    y = np.sin(6 * X[:, 0])
    state = fit_gp(X, y, rng)
    mu, _ = gp_posterior(state, np.array([[0.5]]))
    assert abs(mu[0] - math.sin(3.0)) < 0.1


def test_cholesky_gives_up_on_indefinite_matrix():
    with pytest.raises(SingularKernel):
        _cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))


@pytest.mark.parametrize("seed", range(5))
def test_expected_improvement_matches_monte_carlo(seed):
    rng = np.random.default_rng(seed)
    mu, sigma, best = rng.normal(), rng.uniform(0.05, 1.0), rng.normal()
    f = rng.normal(mu, sigma, 1_000_000)
    mc = np.maximum(f - best - 0.01, 0).mean()
    assert abs(expected_improvement(mu, sigma, best) - mc) < 1e-2


def test_expected_improvement_without_uncertainty():
    assert expected_improvement(1.0, 0.0, 0.5) == pytest.approx(0.49)
    assert expected_improvement(0.0, 0.0, 0.5) == 0.0
    assert np.all(expected_improvement(np.linspace(-3, 3, 50), np.full(50, 0.3), 0.0) >= 0)


@pytest.mark.parametrize("seed", range(10))
def test_tune_finds_quadratic_optimum(seed):
    result = tune(lambda c: -((c["x"] - 0.3) ** 2), LINE, iterations=30, seed=seed)
    assert len(result.trace) == 30
    assert abs(result.best_config["x"] - 0.3) < 0.05


def test_tune_records_failures_and_continues():
    def flaky(c):
        if c["x"] > 0.8:
            raise RuntimeError("diverged")
        return c["x"]

    result = tune(flaky, LINE, iterations=15, seed=1)
    assert len(result.trace) == 15
    failed = [e for e in result.trace if e.error]
    assert failed and all(e.value == -math.inf for e in failed)
    assert result.best_value <= 0.8


def test_tune_singleton_space_evaluates_once():
    space = SearchSpace((Categorical("a", ("only",)), Integer("n", 4, 4)))
    calls = []
    result = tune(lambda c: calls.append(c) or 1.0, space, iterations=50)
    assert calls == [{"a": "only", "n": 4}] and len(result.trace) == 1


def test_tune_is_deterministic_and_trace_round_trips():
    a = tune(lambda c: -abs(c["x"] - 0.6), LINE, iterations=13, seed=5)
    b = tune(lambda c: -abs(c["x"] - 0.6), LINE, iterations=13, seed=5)
    assert write_trace(a.trace) == write_trace(b.trace)
    back = read_trace(write_trace(a.trace))
    assert [e.config for e in back] == [e.config for e in a.trace]
    assert [e.best for e in back] == [e.best for e in a.trace]
    assert all(x.best <= y.best for x, y in zip(a.trace, a.trace[1:]))
