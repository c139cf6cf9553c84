"""DEA screening: which firms turn their inputs into outputs most efficiently?"""

# %%
# Three firms with one input and one output. Under constant returns to scale
# the CCR score is simply each firm's output/input ratio divided by the best one.
import numpy as np

from portfolio_engine.dea import DeaInstance, efficient_set, score_all

toy = DeaInstance(("a", "b", "c"), inputs=[[1.0, 2.0, 4.0]], outputs=[[1.0, 1.0, 1.0]])
print("toy scores:", np.round(score_all(toy), 6))

# %%
# The real screen uses four balance-sheet inputs and two income outputs.
# Scores do not depend on the units of any row.
rng = np.random.default_rng(0)
X, Y = rng.uniform(1, 100, (4, 10)), rng.uniform(1, 100, (2, 10))
firms = tuple(f"F{i:02d}" for i in range(10))
results, efficient = efficient_set(DeaInstance(firms, X, Y))
for r in results:
    print(f"{r.firm_id}  score={r.score:.4f}  {'efficient' if r.is_efficient else ''}")
print("efficient set:", efficient)

rescaled = score_all(DeaInstance(firms, X * [[1000.0], [1], [1], [0.01]], Y))
print("max change after rescaling inputs:", np.abs(np.subtract(rescaled, [r.score for r in results])).max())
