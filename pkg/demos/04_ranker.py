"""A small tanh network that predicts next-period returns and ranks firms within each cluster."""

# %%
import numpy as np

from portfolio_engine.clustering import ClusterAssignment
from portfolio_engine.ranker import TrainConfig, rank_predictions, standardize, train

# Learn a linear target from five features; the network has 8 hidden units.
rng = np.random.default_rng(1)
X = rng.normal(size=(300, 5))
y = 0.3 * X[:, 0] - 0.1 * X[:, 1] + rng.normal(0, 0.001, 300)
Z, stats = standardize(X)
result = train(Z, y, TrainConfig(epochs=300, hidden_width=8, seed=2))
print(f"best epoch {result.best_epoch}: train MSE {result.train_mse[result.best_epoch]:.2e}, "
      f"validation MSE {result.val_mse[result.best_epoch]:.2e}, target variance {y.var():.2e}")

# %%
# Ranking keeps the top m predictions of every cluster.
predictions = {"A": 0.012, "B": 0.004, "C": -0.002, "D": 0.009, "E": 0.010}
clusters = ClusterAssignment("kmeans", {"A": 0, "B": 0, "C": 0, "D": 1, "E": 1}, 2)
ranking, chosen = rank_predictions(predictions, clusters, m=1)
print("ranked clusters:", ranking.clusters)
print("candidates:", chosen)
