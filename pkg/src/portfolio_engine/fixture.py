"""Seeded synthetic dataset exercising every stage of the pipeline.

Construction (defaults: 12 firms, 300 trading days):

* DEA: each of the 4 x 2 (input, output) pairs is "owned" by one efficient
  firm whose ratio on that pair is far above everyone else's. Further
  efficient firms are scaled copies of owners (same ratios, so also score 1).
  A third of the firms are owners with inflated inputs and shrunk outputs,
  which makes them dominated and therefore inefficient.
* Sentiment: among the efficient firms one gets negative news and one gets
  only neutral text, so both fail the positive-sentiment gate.
* Prices follow a three-sector factor model with firm-specific drift.
"""

from __future__ import annotations

import json
import shutil
from datetime import date, timedelta
from importlib import resources
from pathlib import Path

import numpy as np

from .core_data import (
    Document,
    FirmFundamentals,
    MacroSeries,
    PriceSeries,
    write_documents,
    write_fundamentals,
    write_macro,
    write_prices,
)

N_PAIRS = 8  # 4 inputs x 2 outputs
START = date(2023, 1, 2)

POSITIVE = ["strong", "growth", "profit", "beat", "record", "upgrade", "robust", "gain"]
NEGATIVE = ["loss", "lawsuit", "downgrade", "weak", "decline", "scandal", "miss", "layoffs"]
NEUTRAL = ["quarter", "report", "board", "meeting", "market", "shares", "company", "update"]


def _business_days(n: int) -> list[date]:
    days, d = [], START
    while len(days) < n:
        if d.weekday() < 5:
            days.append(d)
        d += timedelta(days=1)
    return days


def _fundamentals(firm_ids, roles, rng) -> list[FirmFundamentals]:
    scale = {"in": np.array([5000.0, 2000.0, 1500.0, 600.0]), "out": np.array([2500.0, 300.0])}
    owners = {}
    records = []
    for idx, (firm, role) in enumerate(zip(firm_ids, roles)):
        x = scale["in"] * rng.uniform(0.9, 1.1, 4)
        y = scale["out"] * rng.uniform(0.9, 1.1, 2)
        if role == "inefficient":
            owner = list(owners.values())[idx % len(owners)]
            x, y = owner[0] * 1.25, owner[1] * 0.8
        else:
            pair = len(owners)
            if pair < N_PAIRS:
                i, r = divmod(pair, 2)
                x[i] *= 0.5
                y[r] *= 2.0
                owners[firm] = (x, y)
            else:
                src = list(owners.values())[pair % N_PAIRS]
                c = rng.uniform(0.6, 1.5)
                x, y = src[0] * c, src[1] * c
                owners[firm] = (x, y)
        records.append(FirmFundamentals(firm, *map(float, np.round(x, 2)), *map(float, np.round(y, 2))))
    return records


def _documents(firm_ids, tone, days, rng) -> list[Document]:
    docs = []
    for firm in firm_ids:
        t = tone[firm]
        for _ in range(int(rng.integers(4, 9))):
            d = days[int(rng.integers(len(days)))]
            words = list(rng.choice(NEUTRAL, 6))
            if t == "positive":
                words += list(rng.choice(POSITIVE, 3)) + list(rng.choice(NEGATIVE, 1))
            elif t == "negative":
                words += list(rng.choice(NEGATIVE, 3)) + list(rng.choice(POSITIVE, 1))
            rng.shuffle(words)
            text = f"{firm} " + " ".join(words).capitalize() + "."
            docs.append(Document(firm, f"{d.isoformat()}T{int(rng.integers(8, 18)):02d}:00:00Z", text))
    docs.sort(key=lambda d: (d.timestamp, d.firm_id))
    return docs


def generate(seed: int = 7, firms: int = 12, days: int = 300):
    """Return (fundamentals, prices, documents, macro, roles) without touching disk."""
    if firms < 4:
        raise ValueError("fixture needs at least 4 firms")
    if days < 40:
        raise ValueError("fixture needs at least 40 days")
    rng = np.random.default_rng(seed)
    firm_ids = [f"F{i + 1:02d}" for i in range(firms)]
    n_ineff = firms // 3
    ineff = set(rng.choice(firm_ids, n_ineff, replace=False).tolist())
    # owners must exist before their dominated copies are built
    efficient = [f for f in firm_ids if f not in ineff]
    build_order = efficient + sorted(ineff)
    roles_by_firm = {f: ("inefficient" if f in ineff else "efficient") for f in firm_ids}
    fundamentals = _fundamentals(build_order, [roles_by_firm[f] for f in build_order], rng)
    fundamentals.sort(key=lambda r: r.firm_id)

    tone = {f: "positive" for f in firm_ids}
    gated = rng.choice(efficient, 2, replace=False).tolist()
    tone[gated[0]] = "negative"
    tone[gated[1]] = "neutral"
    for f in ineff:
        tone[f] = "negative" if rng.random() < 0.5 else "positive"

    trading_days = _business_days(days)
    sector = {f: i % 3 for i, f in enumerate(firm_ids)}
    drift = {f: float(rng.uniform(0.0003, 0.002)) for f in firm_ids}
    market = rng.normal(0.0004, 0.005, days)
    factors = rng.normal(0.0, 0.008, (3, days))
    prices = {}
    for f in firm_ids:
        r = drift[f] + market + factors[sector[f]] + rng.normal(0.0, 0.007, days)
        closes = 50.0 * np.cumprod(1.0 + r)
        prices[f] = PriceSeries(f, tuple(trading_days), tuple(float(c) for c in np.round(closes, 4)))

    months = []
    d = date(START.year, START.month, 1)
    while d <= trading_days[-1]:
        months.append(d)
        d = date(d.year + d.month // 12, d.month % 12 + 1, 1)
    gdp = 0.02 + np.cumsum(rng.normal(0.0, 0.002, len(months)))
    rate = 0.04 + np.cumsum(rng.normal(0.0, 0.0015, len(months)))
    macro = MacroSeries(tuple(months), tuple(np.round(gdp, 6).tolist()), tuple(np.round(rate, 6).tolist()))

    docs = _documents(firm_ids, tone, trading_days, rng)
    roles = {"inefficient": sorted(ineff), "negative": gated[0], "neutral": gated[1]}
    return fundamentals, prices, docs, macro, roles


def write_fixture(out_dir, seed: int = 7, firms: int = 12, days: int = 300) -> Path:
    """Write the inputs, the default lexicon and a ``config.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fundamentals, prices, docs, macro, _ = generate(seed, firms, days)
    write_fundamentals(out / "fundamentals.csv", fundamentals)
    write_prices(out / "prices.csv", prices)
    write_documents(out / "documents.jsonl", docs)
    write_macro(out / "macro.csv", macro)
    src = resources.files("portfolio_engine").joinpath("data/lexicon.txt")
    with resources.as_file(src) as p:
        shutil.copyfile(p, out / "lexicon.txt")
    config = {
        "paths": {
            "fundamentals": "fundamentals.csv",
            "prices": "prices.csv",
            "documents": "documents.jsonl",
            "lexicon": "lexicon.txt",
            "macro": "macro.csv",
            "output_dir": "out",
        },
        "master_seed": 42,
    }
    (out / "config.json").write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    return out / "config.json"
