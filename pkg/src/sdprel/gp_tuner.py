"""Gaussian-process Bayesian optimization over mixed categorical/continuous spaces.

Configurations are plain dicts. They are embedded in the unit cube (one-hot
for categorical dimensions, min-max scaling otherwise, log10 first for
log-scaled ones), modelled with a Matérn-5/2 ARD Gaussian process and
queried by maximizing Expected Improvement over random candidates.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize
from scipy.stats import norm, qmc

from .cnn import ACTIVATIONS, POOLINGS, HyperParams, format_widths
from .errors import OutOfSpace, SingularKernel

log = logging.getLogger(__name__)

SQRT5 = math.sqrt(5.0)
MAX_JITTER = 1e-4
NOISE_FLOOR = 1e-6
LENGTHSCALE_BOUNDS = (1e-2, 1e2)
SIGNAL_VAR_BOUNDS = (5e-2, 2e1)
NOISE_VAR_BOUNDS = (NOISE_FLOOR, 1.0)


# -- search space ---------------------------------------------------------


@dataclass(frozen=True)
class Categorical:
    name: str
    choices: tuple

    @property
    def width(self) -> int:
        return len(self.choices)


@dataclass(frozen=True)
class Integer:
    name: str
    low: int
    high: int

    width = 1


@dataclass(frozen=True)
class Real:
    name: str
    low: float
    high: float
    log: bool = False

    width = 1


Dimension = Categorical | Integer | Real


@dataclass(frozen=True)
class SearchSpace:
    dims: tuple[Dimension, ...]

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.dims]

    @property
    def n_features(self) -> int:
        return sum(d.width for d in self.dims)

    def is_singleton(self) -> bool:
        for d in self.dims:
            if isinstance(d, Categorical) and len(d.choices) > 1:
                return False
            if not isinstance(d, Categorical) and d.high > d.low:
                return False
        return True

    def validate(self, config: Mapping[str, Any]) -> None:
        for d in self.dims:
            if d.name not in config:
                raise OutOfSpace(f"missing dimension {d.name!r}")
            v = config[d.name]
            if isinstance(d, Categorical):
                if v not in d.choices:
                    raise OutOfSpace(f"{d.name}={v!r} not in {d.choices}")
            elif not d.low <= v <= d.high:
                raise OutOfSpace(f"{d.name}={v!r} outside [{d.low}, {d.high}]")
            elif isinstance(d, Integer) and int(v) != v:
                raise OutOfSpace(f"{d.name}={v!r} is not an integer")

    def sample(self, rng: np.random.Generator) -> dict:
        return self.from_unit(rng.random(len(self.dims)))

    def encode_unit(self, U: np.ndarray) -> np.ndarray:
        """Vectorized ``encode_config(from_unit(u))`` for the rows of ``U``."""
        U = np.atleast_2d(U)
        cols = []
        for j, d in enumerate(self.dims):
            x = U[:, j]
            if isinstance(d, Categorical):
                k = len(d.choices)
                idx = np.minimum((x * k).astype(np.int64), k - 1)
                cols.append(np.eye(k)[idx])
                continue
            if isinstance(d, Integer):
                span = d.high - d.low
                v = np.minimum((x * (span + 1)).astype(np.int64), span)
                scaled = v / span if span else np.zeros_like(x)
            elif d.log:
                lo, hi = math.log10(d.low), math.log10(d.high)
                scaled = x if hi > lo else np.zeros_like(x)
            else:
                scaled = x if d.high > d.low else np.zeros_like(x)
            cols.append(scaled[:, None])
        return np.hstack(cols)

    def from_unit(self, u: Sequence[float]) -> dict:
        """Map a point of [0, 1)^n_dims to a configuration."""
        config = {}
        for d, x in zip(self.dims, u):
            x = float(x)
            if isinstance(d, Categorical):
                config[d.name] = d.choices[min(int(x * len(d.choices)), len(d.choices) - 1)]
            elif isinstance(d, Integer):
                config[d.name] = d.low + min(int(x * (d.high - d.low + 1)), d.high - d.low)
            elif d.log:
                lo, hi = math.log10(d.low), math.log10(d.high)
                config[d.name] = min(max(10.0 ** (lo + x * (hi - lo)), d.low), d.high)
            else:
                config[d.name] = d.low + x * (d.high - d.low)
        return config


FILTER_CATALOGUE = tuple(
    [str(w) for w in range(3, 10)]
    + [f"{w}-{w + 1}" for w in range(3, 9)]
    + [f"{w}-{w + 1}-{w + 2}" for w in range(3, 8)]
)


def hyperparam_space() -> SearchSpace:
    """The seven tuned dimensions with the bounds used for tuning."""
    return SearchSpace(
        (
            Categorical("filter_widths", FILTER_CATALOGUE),
            Integer("feature_maps", 10, 1000),
            Categorical("activation", ACTIVATIONS),
            Categorical("pooling", POOLINGS),
            Real("l2", 1e-4, 1e2, log=True),
            Real("learning_rate", 1e-6, 1e-2, log=True),
            Real("dropout_keep", 0.1, 1.0),
        )
    )


TUNED_FIELDS = (
    "filter_widths", "feature_maps", "activation", "pooling", "l2", "learning_rate", "dropout_keep",
)


def hp_to_config(hp: HyperParams) -> dict:
    return {
        "filter_widths": format_widths(hp.filter_widths),
        "feature_maps": hp.feature_maps,
        "activation": hp.activation,
        "pooling": hp.pooling,
        "l2": hp.l2,
        "learning_rate": hp.learning_rate,
        "dropout_keep": hp.dropout_keep,
    }


def config_to_hp(config: Mapping[str, Any], base: HyperParams | None = None) -> HyperParams:
    """Overlay the tuned fields of ``config`` on ``base`` (defaults otherwise)."""
    fields = (base or HyperParams()).to_json()
    fields.update({k: config[k] for k in TUNED_FIELDS if k in config})
    fields["feature_maps"] = int(fields["feature_maps"])
    return HyperParams.from_json(fields)


def _scale(d, v) -> float:
    if isinstance(d, Real) and d.log:
        lo, hi, v = math.log10(d.low), math.log10(d.high), math.log10(v)
    else:
        lo, hi = d.low, d.high
    return 0.0 if hi == lo else (v - lo) / (hi - lo)


def encode_config(config, space: SearchSpace) -> np.ndarray:
    """Unit-cube embedding of a configuration (or :class:`HyperParams`)."""
    if isinstance(config, HyperParams):
        config = hp_to_config(config)
    space.validate(config)
    out = []
    for d in space.dims:
        v = config[d.name]
        if isinstance(d, Categorical):
            onehot = [0.0] * len(d.choices)
            onehot[d.choices.index(v)] = 1.0
            out += onehot
        else:
            out.append(_scale(d, v))
    return np.array(out)


def decode_config(vector: Sequence[float], space: SearchSpace) -> dict:
    vector = np.asarray(vector, dtype=np.float64)
    if vector.shape != (space.n_features,):
        raise OutOfSpace(f"vector of length {vector.shape}, expected {space.n_features}")
    config, i = {}, 0
    for d in space.dims:
        if isinstance(d, Categorical):
            config[d.name] = d.choices[int(np.argmax(vector[i : i + d.width]))]
        else:
            x = float(vector[i])
            if isinstance(d, Integer):
                config[d.name] = int(round(d.low + x * (d.high - d.low)))
            elif d.log:
                lo, hi = math.log10(d.low), math.log10(d.high)
                config[d.name] = 10.0 ** (lo + x * (hi - lo))
            else:
                config[d.name] = d.low + x * (d.high - d.low)
        i += d.width
    return config


# -- Gaussian process -----------------------------------------------------


def matern52(A: np.ndarray, B: np.ndarray, lengthscales, signal_var: float) -> np.ndarray:
    diff = (A[:, None, :] - B[None, :, :]) / np.asarray(lengthscales)
    r = np.sqrt(np.maximum(np.sum(diff * diff, axis=-1), 0.0))
    return signal_var * (1.0 + SQRT5 * r + 5.0 / 3.0 * r * r) * np.exp(-SQRT5 * r)


def _cholesky(K: np.ndarray) -> np.ndarray:
    jitter = 0.0
    while True:
        try:
            return cholesky(K + jitter * np.eye(len(K)), lower=True)
        except np.linalg.LinAlgError:
            if jitter >= MAX_JITTER:
                raise SingularKernel(f"kernel matrix not positive definite with jitter {jitter}")
            jitter = 1e-10 if jitter == 0.0 else jitter * 10


@dataclass
class GpState:
    X: np.ndarray
    y: np.ndarray
    lengthscales: np.ndarray
    signal_var: float = 1.0
    noise_var: float = 1e-3

    @classmethod
    def empty(cls, n_features: int, **kw) -> "GpState":
        return cls(np.zeros((0, n_features)), np.zeros(0), np.ones(n_features), **kw)

    def standardized(self) -> tuple[np.ndarray, float, float]:
        if len(self.y) == 0:
            return self.y, 0.0, 1.0
        mean = float(np.mean(self.y))
        std = float(np.std(self.y))
        if not std > 0:
            std = 1.0
        return (self.y - mean) / std, mean, std


def gp_posterior(state: GpState, x) -> tuple[np.ndarray | float, np.ndarray | float]:
    """Posterior mean and standard deviation of the latent objective at ``x``.

    Observations are standardized internally; results are in the original
    units. Without observations the prior ``(0, sqrt(signal_var))`` is returned.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    Xq = x[None, :] if single else x
    if len(state.y) == 0:
        mu = np.zeros(len(Xq))
        sigma = np.full(len(Xq), math.sqrt(state.signal_var))
    else:
        ys, mean, std = state.standardized()
        K = matern52(state.X, state.X, state.lengthscales, state.signal_var)
        K[np.diag_indices_from(K)] += state.noise_var
        Lc = _cholesky(K)
        alpha = cho_solve((Lc, True), ys)
        Ks = matern52(Xq, state.X, state.lengthscales, state.signal_var)
        v = solve_triangular(Lc, Ks.T, lower=True)
        var = np.maximum(state.signal_var - np.sum(v * v, axis=0), 0.0)
        mu = mean + std * (Ks @ alpha)
        sigma = std * np.sqrt(var)
    if single:
        return float(mu[0]), float(sigma[0])
    return mu, sigma


def _neg_log_marginal(theta, X, y, sqdiffs):
    """Negative log marginal likelihood and its gradient in log-parameters."""
    D = X.shape[1]
    ls = np.exp(theta[:D])
    s2 = math.exp(theta[D])
    n2 = math.exp(theta[D + 1])
    scaled = sqdiffs / (ls * ls)
    r = np.sqrt(np.sum(scaled, axis=-1))
    e = np.exp(-SQRT5 * r)
    K = s2 * (1.0 + SQRT5 * r + 5.0 / 3.0 * r * r) * e
    Ky = K + n2 * np.eye(len(y))
    try:
        Lc = cholesky(Ky, lower=True)
    except np.linalg.LinAlgError:
        return 1e25, np.zeros_like(theta)
    alpha = cho_solve((Lc, True), y)
    nll = 0.5 * y @ alpha + np.sum(np.log(np.diag(Lc))) + 0.5 * len(y) * math.log(2 * math.pi)
    W = np.outer(alpha, alpha) - cho_solve((Lc, True), np.eye(len(y)))
    common = s2 * 5.0 / 3.0 * (1.0 + SQRT5 * r) * e
    grad = np.empty_like(theta)
    grad[:D] = -0.5 * np.einsum("ij,ijk->k", W * common, scaled)
    grad[D] = -0.5 * np.sum(W * K)
    grad[D + 1] = -0.5 * n2 * np.trace(W)
    return nll, grad


def fit_gp(X, y, rng: np.random.Generator, restarts: int = 3) -> GpState:
    """Fit kernel hyperparameters by multi-restart marginal-likelihood ascent."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    D = X.shape[1]
    state = GpState(X, y, np.ones(D))
    if len(y) < 2:
        return state
    ys, _, _ = state.standardized()
    sqdiffs = (X[:, None, :] - X[None, :, :]) ** 2
    bounds = [tuple(np.log(LENGTHSCALE_BOUNDS))] * D + [
        tuple(np.log(SIGNAL_VAR_BOUNDS)),
        tuple(np.log(NOISE_VAR_BOUNDS)),
    ]
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    starts = [np.concatenate([np.zeros(D), [0.0, math.log(1e-2)]])]
    for _ in range(restarts - 1):
        starts.append(lo + rng.random(len(lo)) * (hi - lo))

    best = None
    for theta0 in starts:
        res = minimize(
            _neg_log_marginal, theta0, args=(X, ys, sqdiffs), jac=True,
            method="L-BFGS-B", bounds=bounds, options={"maxiter": 200},
        )
        if best is None or res.fun < best.fun:
            best = res
    theta = best.x
    state.lengthscales = np.exp(theta[:D])
    state.signal_var = float(math.exp(theta[D]))
    state.noise_var = float(max(math.exp(theta[D + 1]), NOISE_FLOOR))
    return state


def expected_improvement(mu, sigma, best_so_far: float, xi: float = 0.01):
    """EI for maximization; reduces to ``max(mu - best - xi, 0)`` when sigma is 0."""
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    imp = mu - best_so_far - xi
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, imp / np.where(sigma > 0, sigma, 1.0), 0.0)
        ei = np.where(sigma > 0, imp * norm.cdf(z) + sigma * norm.pdf(z), np.maximum(imp, 0.0))
    ei = np.maximum(ei, 0.0)
    return float(ei) if ei.ndim == 0 else ei


# -- optimization loop ----------------------------------------------------


@dataclass
class TraceEntry:
    iteration: int
    config: dict
    value: float
    best: float
    error: str | None = None

    def to_line(self) -> str:
        return f"{self.iteration}\t{json.dumps(self.config, sort_keys=True)}\t{self.value!r}\t{self.best!r}"


@dataclass
class TuneResult:
    best_config: dict
    best_value: float
    trace: list[TraceEntry] = field(default_factory=list)


def write_trace(trace: Sequence[TraceEntry]) -> str:
    return "".join(e.to_line() + "\n" for e in trace)


def read_trace(text: str) -> list[TraceEntry]:
    out = []
    for line in text.splitlines():
        if not line.strip():
            continue
        it, cfg, value, best = line.split("\t")
        out.append(TraceEntry(int(it), json.loads(cfg), float(value), float(best)))
    return out


def tune(
    objective: Callable[[dict], float],
    space: SearchSpace,
    iterations: int = 100,
    seed: int = 0,
    n_initial: int = 10,
    n_candidates: int = 5000,
    xi: float = 0.01,
    restarts: int = 3,
    callback: Callable[[TraceEntry], None] | None = None,
) -> TuneResult:
    """Maximize ``objective`` with GP-EI; ``iterations`` counts all evaluations.

    A failing objective is recorded with value ``-inf`` and the search goes on.
    """
    rng = np.random.default_rng(seed)
    trace: list[TraceEntry] = []
    best_value, best_config = -math.inf, None

    def evaluate(config):
        nonlocal best_value, best_config
        error = None
        try:
            value = float(objective(config))
        except Exception as exc:  # recorded, not raised: one bad config must not end the search
            log.warning("objective failed for %s: %s", config, exc)
            value, error = -math.inf, f"{type(exc).__name__}: {exc}"
        if value > best_value or best_config is None:
            best_value, best_config = max(value, best_value), config
        entry = TraceEntry(len(trace) + 1, config, value, best_value, error)
        trace.append(entry)
        if callback is not None:
            callback(entry)

    if space.is_singleton():
        evaluate(space.from_unit([0.0] * len(space.dims)))
        return TuneResult(best_config, best_value, trace)

    n_init = min(n_initial, iterations)
    if n_init > 0:
        lhs = qmc.LatinHypercube(d=len(space.dims), seed=rng)
        for u in lhs.random(n_init):
            evaluate(space.from_unit(u))

    encoded = [encode_config(e.config, space) for e in trace]
    while len(trace) < iterations:
        values = np.array([e.value for e in trace])
        finite = np.isfinite(values)
        if finite.any():
            # failed points are modelled as the worst observed outcome
            values = np.where(finite, values, values[finite].min())
        else:
            values = np.zeros_like(values)
        state = fit_gp(np.array(encoded), values, rng, restarts)
        U = rng.random((n_candidates, len(space.dims)))
        mu, sigma = gp_posterior(state, space.encode_unit(U))
        ei = expected_improvement(mu, sigma, float(values.max()), xi)
        pick = space.from_unit(U[int(np.argmax(ei))])
        evaluate(pick)
        encoded.append(encode_config(pick, space))
    return TuneResult(best_config, best_value, trace)
