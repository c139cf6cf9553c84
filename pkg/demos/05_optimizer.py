"""Mean-variance weights by particle swarm and genetic search, checked against a grid."""

# %%
import numpy as np

from portfolio_engine.optimizer import (
    MomentEstimates,
    equal_weight,
    estimate_moments,
    ga_optimize,
    grid_oracle,
    pso_optimize,
    top_portfolios,
)

# Two uncorrelated assets with zero mean: the minimum-variance mix is 80/20.
two = MomentEstimates(("low", "high"), np.zeros(2), np.diag([0.01, 0.04]))
for opt in (pso_optimize, ga_optimize, grid_oracle):
    p = opt(two, 10.0)
    print(f"{p.method:>4}: weights {np.round(p.weights, 4)}  fitness {p.fitness:.6f}")

# %%
# Sweep risk aversion on simulated returns; higher lambda buys lower variance.
rng = np.random.default_rng(5)
R = rng.normal([0.002, 0.001, 0.0005], [0.03, 0.015, 0.006], size=(250, 3))
m = estimate_moments(R, ("growth", "balanced", "defensive"))
for lam in (0.5, 2.0, 20.0):
    p = pso_optimize(m, lam)
    print(f"lambda={lam:>4}: weights {np.round(p.weights, 3)}  variance {p.variance(m):.2e}")
print("equal-weight Sharpe:", round(equal_weight(m).sharpe, 4))

# %%
for rank, p in enumerate(top_portfolios(m), start=1):
    print(f"#{rank} {p.method} lambda={p.lambda_used}: Sharpe {p.sharpe:.4f}, weights {np.round(p.weights, 3)}")
