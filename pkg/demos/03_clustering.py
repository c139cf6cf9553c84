"""Grouping firms by return correlation with k-means and with Louvain."""

# %%
from datetime import date, timedelta

import numpy as np

from portfolio_engine.clustering import build_correlation_graph, correlation_matrix, kmeans, louvain, modularity
from portfolio_engine.core_data import AlignedReturns

# Three sectors of four firms each; firms in one sector share a common factor.
rng = np.random.default_rng(3)
T = 250
cols = []
for sector in range(3):
    factor = rng.normal(0, 0.01, T)
    cols += [0.95 * factor + 0.3 * rng.normal(0, 0.01, T) for _ in range(4)]
R = np.column_stack(cols)
firms = tuple(f"S{s}F{i}" for s in range(3) for i in range(4))
days = tuple(date(2024, 1, 1) + timedelta(days=t) for t in range(T))
corr = correlation_matrix(AlignedReturns(days, firms, R))
print(np.round(corr.values[:5, :5], 2))

# %%
km = kmeans(corr, k=3, seed=0, restarts=10)
print("k-means clusters:", km.clusters(), f"WCSS={km.wcss:.4f}")

# %%
# Louvain needs no k: it maximises modularity on the graph of positive correlations.
graph = build_correlation_graph(corr, threshold=0.3)
lv = louvain(graph, seed=0)
print("Louvain clusters:", lv.clusters())
print("modularity per pass:", [round(q, 4) for q in lv.history], "final", round(modularity(graph, lv), 4))
