"""Long-only mean-variance weighting with particle swarm and genetic search.

Both heuristics maximise ``mu.w - lambda * w' Sigma w`` over raw vectors in
[0, 1]^n that are mapped onto the simplex by clamp-and-renormalise before
every evaluation. A lambda grid traces the frontier and the best three
distinct portfolios by Sharpe ratio are reported.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core_data import AlignedReturns
from .errors import DimensionTooLarge, InsufficientObservations, ZeroVariancePortfolio

DEFAULT_LAMBDA_GRID = (0.5, 1.0, 2.0, 5.0, 10.0, 20.0)
DEDUP_L1 = 0.01


@dataclass(frozen=True)
class MomentEstimates:
    firm_ids: tuple[str, ...]
    mu: np.ndarray
    sigma: np.ndarray
    risk_free_rate: float = 0.0
    jitter: float = 0.0

    @property
    def n(self) -> int:
        return len(self.firm_ids)


@dataclass(frozen=True)
class Portfolio:
    firm_ids: tuple[str, ...]
    weights: np.ndarray
    lambda_used: float
    method: str
    fitness: float
    sharpe: float | None
    history: tuple[float, ...] = field(default=(), compare=False, repr=False)

    def expected_return(self, moments: MomentEstimates) -> float:
        return float(moments.mu @ self.weights)

    def variance(self, moments: MomentEstimates) -> float:
        return float(self.weights @ moments.sigma @ self.weights)


@dataclass(frozen=True)
class PsoConfig:
    swarm_size: int = 40
    iterations: int = 500
    inertia: float = 0.72
    cognitive: float = 1.49
    social: float = 1.49
    velocity_clamp: float = 0.5


@dataclass(frozen=True)
class GaConfig:
    population: int = 50
    generations: int = 500
    tournament_size: int = 3
    blend_alpha: float = 0.5
    mutation_sigma: float = 0.05
    mutation_prob: float = 0.1
    elitism: int = 2


@dataclass(frozen=True)
class HeuristicConfig:
    pso: PsoConfig = PsoConfig()
    ga: GaConfig = GaConfig()
    seed: int = 0

    def __post_init__(self):
        if self.pso.swarm_size < 2 or self.ga.population < 2:
            raise ValueError("swarm and population sizes must be at least 2")
        if self.pso.iterations < 1 or self.ga.generations < 1:
            raise ValueError("iteration counts must be at least 1")
        if not 2 <= self.ga.tournament_size:
            raise ValueError("tournament size must be at least 2")
        if not 0 <= self.ga.elitism < self.ga.population:
            raise ValueError("elitism must be smaller than the population")


def estimate_moments(aligned: AlignedReturns | np.ndarray, firm_ids=None, risk_free_rate: float = 0.0) -> MomentEstimates:
    """Sample means and covariance (divisor T-1), jittered if not PSD."""
    if isinstance(aligned, AlignedReturns):
        R = np.asarray(aligned.values, dtype=float)
        firm_ids = aligned.firm_ids
    else:
        R = np.asarray(aligned, dtype=float)
        if R.ndim == 1:
            R = R[:, None]
    if firm_ids is None:
        firm_ids = tuple(str(i) for i in range(R.shape[1]))
    if R.shape[0] < 2:
        raise InsufficientObservations(f"need at least 2 observations, got {R.shape[0]}")
    mu = R.mean(axis=0)
    sigma = np.atleast_2d(np.cov(R, rowvar=False, ddof=1))
    sigma = (sigma + sigma.T) / 2.0
    lam_min = float(np.linalg.eigvalsh(sigma).min())
    jitter = 0.0
    if lam_min < 0:
        jitter = abs(lam_min) + 1e-10
        sigma = sigma + jitter * np.eye(sigma.shape[0])
    return MomentEstimates(tuple(firm_ids), mu, sigma, float(risk_free_rate), jitter)


def fitness(w, moments: MomentEstimates, lam: float) -> float:
    w = np.asarray(w, dtype=float)
    return float(moments.mu @ w - lam * (w @ moments.sigma @ w))


def _fitness_rows(W: np.ndarray, moments: MomentEstimates, lam: float) -> np.ndarray:
    return W @ moments.mu - lam * np.einsum("ij,jk,ik->i", W, moments.sigma, W)


def project_simplex(w_raw) -> np.ndarray:
    """Clamp negatives to 0 and renormalise; uniform if nothing positive is left."""
    w = np.maximum(np.asarray(w_raw, dtype=float), 0.0)
    s = w.sum()
    if s > 0:
        return w / s
    return np.full(w.shape, 1.0 / w.size)


def _project_rows(W: np.ndarray) -> np.ndarray:
    W = np.maximum(W, 0.0)
    s = W.sum(axis=1, keepdims=True)
    uniform = np.full_like(W, 1.0 / W.shape[1])
    return np.where(s > 0, W / np.where(s > 0, s, 1.0), uniform)


def sharpe(portfolio_or_weights, moments: MomentEstimates) -> float:
    w = getattr(portfolio_or_weights, "weights", portfolio_or_weights)
    w = np.asarray(w, dtype=float)
    var = float(w @ moments.sigma @ w)
    if not var > 0:
        raise ZeroVariancePortfolio("portfolio variance is zero")
    return (float(moments.mu @ w) - moments.risk_free_rate) / math.sqrt(var)


def _sharpe_or_none(w, moments) -> float | None:
    try:
        return sharpe(w, moments)
    except ZeroVariancePortfolio:
        return None


def _portfolio(w, moments, lam, method, history=()) -> Portfolio:
    w = project_simplex(w)
    return Portfolio(moments.firm_ids, w, float(lam), method, fitness(w, moments, lam),
                     _sharpe_or_none(w, moments), tuple(history))


def pso_optimize(moments: MomentEstimates, lam: float, config: HeuristicConfig = HeuristicConfig(),
                 seed: int | None = None) -> Portfolio:
    """Global-best PSO. Particle 0 starts at the uniform portfolio."""
    cfg = config.pso
    seed = config.seed if seed is None else seed
    n, S = moments.n, cfg.swarm_size
    rngs = [np.random.default_rng(seed ^ i) for i in range(S)]
    X = np.empty((S, n))
    X[0] = 1.0 / n
    for i in range(1, S):
        X[i] = rngs[i].random(n)
    V = np.zeros((S, n))
    fit = _fitness_rows(_project_rows(X), moments, lam)
    pbest, pbest_fit = X.copy(), fit.copy()
    g = int(np.argmax(pbest_fit))  # first max = lowest index
    gbest, gbest_fit = pbest[g].copy(), pbest_fit[g]
    history = [gbest_fit]
    r1 = np.empty((S, n))
    r2 = np.empty((S, n))
    for _ in range(cfg.iterations):
        for i in range(S):
            r1[i] = rngs[i].random(n)
            r2[i] = rngs[i].random(n)
        V = cfg.inertia * V + cfg.cognitive * r1 * (pbest - X) + cfg.social * r2 * (gbest - X)
        np.clip(V, -cfg.velocity_clamp, cfg.velocity_clamp, out=V)
        X = np.clip(X + V, 0.0, 1.0)
        fit = _fitness_rows(_project_rows(X), moments, lam)
        better = fit > pbest_fit
        pbest[better] = X[better]
        pbest_fit[better] = fit[better]
        g = int(np.argmax(pbest_fit))
        if pbest_fit[g] > gbest_fit:
            gbest, gbest_fit = pbest[g].copy(), pbest_fit[g]
        history.append(gbest_fit)
    return _portfolio(gbest, moments, lam, "pso", history)


def _tournaments(fit: np.ndarray, picks: np.ndarray) -> np.ndarray:
    """Winner of each row of ``picks``; equal fitness goes to the lowest index."""
    f = fit[picks]
    top = f.max(axis=-1, keepdims=True)
    return np.where(f == top, picks, fit.size).min(axis=-1)


def ga_optimize(moments: MomentEstimates, lam: float, config: HeuristicConfig = HeuristicConfig(),
                seed: int | None = None) -> Portfolio:
    """Real-coded GA: tournament selection, BLX-alpha crossover, Gaussian mutation, elitism."""
    cfg = config.ga
    seed = config.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    n, P = moments.n, cfg.population
    pop = rng.random((P, n))
    pop[0] = 1.0 / n
    fit = _fitness_rows(_project_rows(pop), moments, lam)
    b = int(np.argmax(fit))
    best, best_fit = pop[b].copy(), fit[b]
    history = [best_fit]
    n_children = P - cfg.elitism
    alpha = cfg.blend_alpha
    for _ in range(cfg.generations):
        elite = pop[np.argsort(-fit, kind="stable")[:cfg.elitism]]
        picks = rng.integers(0, P, (n_children, 2, cfg.tournament_size))
        parents = _tournaments(fit, picks)
        a, c = pop[parents[:, 0]], pop[parents[:, 1]]
        lo, span = np.minimum(a, c), np.abs(a - c)
        children = lo - alpha * span + rng.random((n_children, n)) * (1.0 + 2.0 * alpha) * span
        mutate = rng.random((n_children, n)) < cfg.mutation_prob
        children += mutate * rng.normal(0.0, cfg.mutation_sigma, (n_children, n))
        pop = np.vstack([elite, np.clip(children, 0.0, 1.0)])
        fit = _fitness_rows(_project_rows(pop), moments, lam)
        b = int(np.argmax(fit))
        if fit[b] > best_fit:
            best, best_fit = pop[b].copy(), fit[b]
        history.append(best_fit)
    return _portfolio(best, moments, lam, "ga", history)


def equal_weight(moments: MomentEstimates, lam: float = 0.0) -> Portfolio:
    """Equal-weighting baseline."""
    return _portfolio(np.ones(moments.n), moments, lam, "equal")


def _compositions(total: int, parts: int):
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev, out = -1, []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(total + parts - 2 - prev)
        yield out


def grid_oracle(moments: MomentEstimates, lam: float, step: float = 0.01) -> Portfolio:
    """Exhaustive search over weights that are multiples of ``step``."""
    n = moments.n
    if n > 4:
        raise DimensionTooLarge(f"grid oracle supports n <= 4, got {n}")
    total = round(1.0 / step)
    if abs(total * step - 1.0) > 1e-12:
        raise ValueError(f"step {step} does not divide 1")
    W = np.array(list(_compositions(total, n)), dtype=float) / total
    f = _fitness_rows(W, moments, lam)
    best = W[int(np.argmax(f))]
    return Portfolio(moments.firm_ids, best, float(lam), "grid", fitness(best, moments, lam),
                     _sharpe_or_none(best, moments))


def _rank_key(p: Portfolio):
    return (p.sharpe is None, -(p.sharpe or 0.0), -p.fitness, p.method, p.lambda_used)


def top_portfolios(moments: MomentEstimates, lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
                   config: HeuristicConfig = HeuristicConfig(), seed: int | None = None,
                   top: int = 3) -> list[Portfolio]:
    """Run PSO and GA for every lambda, drop near-duplicates, return the best by Sharpe."""
    candidates = []
    for lam in lambda_grid:
        candidates.append(pso_optimize(moments, lam, config, seed))
        candidates.append(ga_optimize(moments, lam, config, seed))
    kept: list[Portfolio] = []
    for p in sorted(candidates, key=_rank_key):
        if all(np.abs(p.weights - q.weights).sum() >= DEDUP_L1 for q in kept):
            kept.append(p)
    return kept[:top]
