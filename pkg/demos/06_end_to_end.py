"""Run all five stages on the seeded synthetic dataset and print the report."""

# %%
import json
import tempfile
from pathlib import Path

from portfolio_engine import load_config, run_pipeline
from portfolio_engine.fixture import write_fixture

workdir = Path(tempfile.mkdtemp())
config_path = write_fixture(workdir, seed=7, firms=12, days=300)
report = run_pipeline(load_config(config_path), workers=2)

# %%
# Each gate can only shrink the set of firms.
print(json.dumps(report["counts"], indent=2))
for p in report["portfolios"]:
    print(p["rank"], p["method"], p["lambda"], p["weights"], f"Sharpe {p['sharpe']:.4f}")
print("artifacts:", sorted(x.name for x in (workdir / "out").iterdir()))
