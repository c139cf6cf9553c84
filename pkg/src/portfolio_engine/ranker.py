"""Three-layer feed-forward network that ranks stocks inside each cluster.

Inputs per (firm, date): GDP growth, interest rate, trailing mean return,
trailing volatility and the firm's sentiment score. Target: next-period
return. Training is plain per-sample SGD on squared error, fully determined
by the seed.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from datetime import date
from typing import Mapping, Sequence

import numpy as np
from numba import njit

from .clustering import ClusterAssignment
from .core_data import MacroSeries, ReturnSeries
from .errors import MissingMacroCoverage, TooFewSamples, WindowTooLarge

N_FEATURES = 5
FEATURE_NAMES = ("gdp_growth", "interest_rate", "trailing_mean_return", "trailing_volatility", "sentiment_score")
MIN_SD = 1e-12


@dataclass(frozen=True)
class FeatureVector:
    gdp_growth: float
    interest_rate: float
    trailing_mean_return: float
    trailing_volatility: float
    sentiment_score: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in FEATURE_NAMES], dtype=float)


@dataclass(frozen=True)
class Sample:
    firm_id: str
    date: date
    features: FeatureVector
    target: float


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 500
    hidden_width: int = 8
    seed: int = 0
    validation_fraction: float = 0.2

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if not 1 <= self.hidden_width <= 256:
            raise ValueError("hidden_width must be in [1, 256]")
        if not 0 <= self.validation_fraction < 1:
            raise ValueError("validation_fraction must be in [0, 1)")


@dataclass(frozen=True)
class Mlp:
    W1: np.ndarray  # (h, 5)
    b1: np.ndarray  # (h,)
    W2: np.ndarray  # (h,)
    b2: float

    def __post_init__(self):
        W1 = np.atleast_2d(np.asarray(self.W1, dtype=float))
        b1 = np.asarray(self.b1, dtype=float).reshape(-1)
        W2 = np.asarray(self.W2, dtype=float).reshape(-1)
        h = W1.shape[0]
        if b1.shape != (h,) or W2.shape != (h,):
            raise ValueError("inconsistent layer shapes")
        for a in (W1, b1, W2):
            a.setflags(write=False)
        object.__setattr__(self, "W1", W1)
        object.__setattr__(self, "b1", b1)
        object.__setattr__(self, "W2", W2)
        object.__setattr__(self, "b2", float(self.b2))

    @property
    def hidden_width(self) -> int:
        return self.W1.shape[0]

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Vectorised forward pass over the rows of ``X``."""
        return np.tanh(np.asarray(X) @ self.W1.T + self.b1) @ self.W2 + self.b2

    def flat(self) -> np.ndarray:
        return np.concatenate([self.W1.ravel(), self.b1, self.W2, [self.b2]])


@dataclass(frozen=True)
class Gradients:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: float


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    def apply(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale


@dataclass(frozen=True)
class TrainResult:
    mlp: Mlp
    train_mse: tuple[float, ...]  # index 0 = before training
    val_mse: tuple[float, ...]
    best_epoch: int


@dataclass(frozen=True)
class Ranking:
    clusters: tuple[tuple[tuple[str, float], ...], ...]


# --- feature construction ---------------------------------------------------

def _macro_at(macro: MacroSeries, day: date) -> tuple[float, float]:
    i = bisect_right(macro.periods, day) - 1
    if i < 0:
        raise MissingMacroCoverage(f"no macro observation at or before {day}")
    return macro.gdp_growth[i], macro.interest_rate[i]


def _features(r: np.ndarray, t: int, window: int, day, macro, sentiment: float) -> FeatureVector:
    win = r[t - window + 1:t + 1]
    gdp, rate = _macro_at(macro, day)
    return FeatureVector(gdp, rate, float(win.mean()), float(win.std()), float(sentiment))


def build_training_set(
    returns: Mapping[str, ReturnSeries] | Sequence[ReturnSeries],
    macro: MacroSeries,
    sentiment: Mapping[str, float],
    window: int,
) -> list[Sample]:
    """One sample per firm and date t with ``window`` returns ending at t and a return at t+1.

    Firms without an entry in ``sentiment`` get a sentiment feature of 0.
    """
    if window < 1:
        raise ValueError("window must be at least 1")
    series = returns.values() if isinstance(returns, Mapping) else returns
    samples = []
    for s in sorted(series, key=lambda s: s.firm_id):
        if len(s) < window:
            raise WindowTooLarge(f"{s.firm_id} has {len(s)} returns, window is {window}")
        r = s.values
        senti = sentiment.get(s.firm_id, 0.0)
        for t in range(window - 1, len(r) - 1):
            fv = _features(r, t, window, s.dates[t], macro, senti)
            samples.append(Sample(s.firm_id, s.dates[t], fv, float(r[t + 1])))
    return samples


def latest_features(
    returns: Mapping[str, ReturnSeries] | Sequence[ReturnSeries],
    macro: MacroSeries,
    sentiment: Mapping[str, float],
    window: int,
) -> dict[str, FeatureVector]:
    """Features as of each firm's most recent return (the scoring-time input)."""
    series = returns.values() if isinstance(returns, Mapping) else returns
    out = {}
    for s in sorted(series, key=lambda s: s.firm_id):
        if len(s) < window:
            raise WindowTooLarge(f"{s.firm_id} has {len(s)} returns, window is {window}")
        t = len(s) - 1
        out[s.firm_id] = _features(s.values, t, window, s.dates[t], macro, sentiment.get(s.firm_id, 0.0))
    return out


def samples_to_arrays(samples: Sequence[Sample]) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([s.features.as_array() for s in samples]).reshape(-1, N_FEATURES)
    y = np.array([s.target for s in samples], dtype=float)
    return X, y


def standardize(X) -> tuple[np.ndarray, Standardizer]:
    """z-score each column with population statistics.

    Near-constant columns are centred only (divisor 1).
    """
    if isinstance(X, Sequence) and X and isinstance(X[0], Sample):
        X = samples_to_arrays(X)[0]
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise TooFewSamples("standardize needs at least 2 samples")
    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    scale = np.where(sd < MIN_SD, 1.0, sd)
    stats = Standardizer(mean, scale)
    return stats.apply(X), stats


# --- network -----------------------------------------------------------------

def forward(mlp: Mlp, x) -> float:
    x = x.as_array() if isinstance(x, FeatureVector) else np.asarray(x, dtype=float)
    return float(mlp.W2 @ np.tanh(mlp.W1 @ x + mlp.b1) + mlp.b2)


def backprop_gradient(mlp: Mlp, x, target: float) -> Gradients:
    """Analytic gradient of 0.5 * (forward(x) - target)**2."""
    x = x.as_array() if isinstance(x, FeatureVector) else np.asarray(x, dtype=float)
    hidden = np.tanh(mlp.W1 @ x + mlp.b1)
    resid = float(mlp.W2 @ hidden + mlp.b2) - target
    delta = resid * mlp.W2 * (1.0 - hidden ** 2)
    return Gradients(np.outer(delta, x), delta, resid * hidden, resid)


@njit(cache=True)
def _sgd_epoch(W1, b1, W2, b2, X, y, order, lr):  # pragma: no cover - compiled
    h, d = W1.shape
    hidden = np.empty(h)
    for idx in order:
        out = b2[0]
        for j in range(h):
            a = b1[j]
            for k in range(d):
                a += W1[j, k] * X[idx, k]
            hidden[j] = math.tanh(a)
            out += W2[j] * hidden[j]
        resid = out - y[idx]
        for j in range(h):
            delta = resid * W2[j] * (1.0 - hidden[j] * hidden[j])
            W2[j] -= lr * resid * hidden[j]
            b1[j] -= lr * delta
            for k in range(d):
                W1[j, k] -= lr * delta * X[idx, k]
        b2[0] -= lr * resid


def init_mlp(hidden_width: int, rng: np.random.Generator, n_in: int = N_FEATURES) -> Mlp:
    W1 = rng.uniform(-0.5, 0.5, (hidden_width, n_in))
    b1 = rng.uniform(-0.5, 0.5, hidden_width)
    W2 = rng.uniform(-0.5, 0.5, hidden_width)
    b2 = rng.uniform(-0.5, 0.5)
    return Mlp(W1, b1, W2, b2)


def _mse(W1, b1, W2, b2, X, y) -> float:
    if len(y) == 0:
        return float("nan")
    pred = np.tanh(X @ W1.T + b1) @ W2 + b2
    return float(np.mean((pred - y) ** 2))


def train(X, y, config: TrainConfig = TrainConfig()) -> TrainResult:
    """SGD on standardized features ``X`` (N x 5) and targets ``y``.

    The last ``validation_fraction`` of rows (in the given order) is held out;
    the returned network is the epoch snapshot with the lowest validation MSE
    (training MSE when nothing is held out).
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if X.shape[0] < 10:
        raise TooFewSamples(f"need at least 10 samples, got {X.shape[0]}")
    n_val = int(X.shape[0] * config.validation_fraction)
    n_train = X.shape[0] - n_val
    Xt, yt, Xv, yv = X[:n_train], y[:n_train], X[n_train:], y[n_train:]

    rng = np.random.default_rng(config.seed)
    init = init_mlp(config.hidden_width, rng, X.shape[1])
    W1, b1, W2 = init.W1.copy(), init.b1.copy(), init.W2.copy()
    b2 = np.array([init.b2])

    train_hist = [_mse(W1, b1, W2, b2[0], Xt, yt)]
    val_hist = [_mse(W1, b1, W2, b2[0], Xv, yv)]
    best = (math.inf, 0, init)
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n_train)
        _sgd_epoch(W1, b1, W2, b2, Xt, yt, order, config.learning_rate)
        tr = _mse(W1, b1, W2, b2[0], Xt, yt)
        va = _mse(W1, b1, W2, b2[0], Xv, yv)
        train_hist.append(tr)
        val_hist.append(va)
        crit = va if n_val else tr
        if not math.isfinite(crit):
            break
        if crit < best[0]:
            best = (crit, epoch, Mlp(W1.copy(), b1.copy(), W2.copy(), b2[0]))
    return TrainResult(best[2], tuple(train_hist), tuple(val_hist), best[1])


# --- ranking -------------------------------------------------------------------

def rank_predictions(
    predictions: Mapping[str, float], clusters: ClusterAssignment, m: int = 1
) -> tuple[Ranking, list[str]]:
    """Order each cluster by prediction (ties by firm_id) and pick the top ``m``."""
    if m < 1:
        raise ValueError("m must be at least 1")
    ranked = []
    candidates = []
    for members in clusters.clusters():
        order = sorted(((f, float(predictions[f])) for f in members), key=lambda p: (-p[1], p[0]))
        ranked.append(tuple(order))
        candidates.extend(f for f, _ in order[:m])
    return Ranking(tuple(ranked)), candidates


def rank_within_clusters(
    mlp: Mlp,
    stats: Standardizer,
    latest: Mapping[str, FeatureVector],
    clusters: ClusterAssignment,
    m: int = 1,
) -> tuple[Ranking, list[str]]:
    firms = sorted(clusters.assignment)
    X = stats.apply(np.array([latest[f].as_array() for f in firms]).reshape(-1, N_FEATURES))
    preds = dict(zip(firms, mlp.predict(X).tolist()))
    return rank_predictions(preds, clusters, m)
