"""Shared domain types and loaders for the four input files.

Files are UTF-8 CSV (fundamentals, prices, macro) or JSON lines (documents).
All record types are frozen dataclasses and safe to share between threads.
"""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    DuplicateFirm,
    DuplicateObservation,
    InsufficientOverlap,
    MalformedRow,
    MissingFile,
    NonFiniteValue,
    NonPositivePrice,
    SeriesTooShort,
)

FUNDAMENTAL_FIELDS = (
    "total_assets",
    "total_equity",
    "cost_of_sales",
    "operating_expenses",
    "net_sales",
    "net_income",
)
FUNDAMENTALS_HEADER = ("firm_id",) + FUNDAMENTAL_FIELDS
PRICES_HEADER = ("date", "firm_id", "close")
MACRO_HEADER = ("period", "gdp_growth", "interest_rate")


@dataclass(frozen=True)
class FirmFundamentals:
    firm_id: str
    total_assets: float
    total_equity: float
    cost_of_sales: float
    operating_expenses: float
    net_sales: float
    net_income: float

    @property
    def inputs(self) -> tuple[float, float, float, float]:
        return (self.total_assets, self.total_equity, self.cost_of_sales, self.operating_expenses)

    @property
    def outputs(self) -> tuple[float, float]:
        return (self.net_sales, self.net_income)


@dataclass(frozen=True)
class PriceSeries:
    firm_id: str
    dates: tuple[date, ...]
    closes: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class ReturnSeries:
    firm_id: str
    dates: tuple[date, ...]
    returns: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.returns, dtype=float)


@dataclass(frozen=True)
class Document:
    firm_id: str
    timestamp: str
    text: str


@dataclass(frozen=True)
class MacroSeries:
    periods: tuple[date, ...]
    gdp_growth: tuple[float, ...]
    interest_rate: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.periods)


@dataclass(frozen=True)
class AlignedReturns:
    """Returns of several firms over their common dates (rows = dates)."""

    dates: tuple[date, ...]
    firm_ids: tuple[str, ...]
    values: np.ndarray

    def column(self, firm_id: str) -> np.ndarray:
        return self.values[:, self.firm_ids.index(firm_id)]


# --- helpers -----------------------------------------------------------------

def _open_csv(path, header: tuple[str, ...]):
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path)
    fh = open(path, newline="", encoding="utf-8")
    reader = csv.reader(fh)
    first = next(reader, None)
    if first is None or tuple(c.strip() for c in first) != header:
        fh.close()
        raise MalformedRow(1, f"expected header {','.join(header)}")
    return fh, reader


def _parse_float(text: str, field: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise MalformedRow(line, f"cannot parse {field}={text!r}") from None
    if not math.isfinite(value):
        raise NonFiniteValue(field, line)
    return value


def _parse_date(text: str, line: int) -> date:
    try:
        return date.fromisoformat(text.strip())
    except ValueError:
        raise MalformedRow(line, f"bad date {text!r}") from None


# --- loaders -----------------------------------------------------------------

def load_fundamentals(path) -> list[FirmFundamentals]:
    fh, reader = _open_csv(path, FUNDAMENTALS_HEADER)
    records: list[FirmFundamentals] = []
    seen: set[str] = set()
    with fh:
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(FUNDAMENTALS_HEADER):
                raise MalformedRow(line, f"expected {len(FUNDAMENTALS_HEADER)} fields, got {len(row)}")
            firm_id = row[0].strip()
            if not firm_id:
                raise MalformedRow(line, "empty firm_id")
            if firm_id in seen:
                raise DuplicateFirm(firm_id)
            seen.add(firm_id)
            values = [_parse_float(v, f, line) for v, f in zip(row[1:], FUNDAMENTAL_FIELDS)]
            records.append(FirmFundamentals(firm_id, *values))
    return records


def load_prices(path) -> dict[str, PriceSeries]:
    fh, reader = _open_csv(path, PRICES_HEADER)
    obs: dict[str, dict[date, float]] = defaultdict(dict)
    with fh:
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise MalformedRow(line, f"expected 3 fields, got {len(row)}")
            day = _parse_date(row[0], line)
            firm_id = row[1].strip()
            if not firm_id:
                raise MalformedRow(line, "empty firm_id")
            close = _parse_float(row[2], "close", line)
            if close <= 0:
                raise NonPositivePrice(firm_id, day)
            if day in obs[firm_id]:
                raise DuplicateObservation(firm_id, day)
            obs[firm_id][day] = close
    out = {}
    for firm_id in sorted(obs):
        days = sorted(obs[firm_id])
        out[firm_id] = PriceSeries(firm_id, tuple(days), tuple(obs[firm_id][d] for d in days))
    return out


def load_documents(path) -> list[Document]:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path)
    docs = []
    with open(path, encoding="utf-8") as fh:
        for line, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
                firm_id, timestamp, text = obj["firm_id"], obj["timestamp"], obj["text"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise MalformedRow(line, str(exc)) from None
            if not isinstance(firm_id, str) or not firm_id:
                raise MalformedRow(line, "empty firm_id")
            if not isinstance(text, str):
                raise MalformedRow(line, "text must be a string")
            docs.append(Document(firm_id, str(timestamp), text))
    return docs


def load_macro(path) -> MacroSeries:
    fh, reader = _open_csv(path, MACRO_HEADER)
    rows: dict[date, tuple[float, float]] = {}
    with fh:
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise MalformedRow(line, f"expected 3 fields, got {len(row)}")
            period = _parse_date(row[0], line)
            if period in rows:
                raise DuplicateObservation("macro", period)
            rows[period] = (
                _parse_float(row[1], "gdp_growth", line),
                _parse_float(row[2], "interest_rate", line),
            )
    periods = sorted(rows)
    return MacroSeries(
        tuple(periods),
        tuple(rows[p][0] for p in periods),
        tuple(rows[p][1] for p in periods),
    )


# --- writers (used by the fixture generator and round-trip tests) -----------

def write_fundamentals(path, records: Iterable[FirmFundamentals]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FUNDAMENTALS_HEADER)
        for r in records:
            w.writerow([r.firm_id] + [repr(float(getattr(r, f))) for f in FUNDAMENTAL_FIELDS])


def write_prices(path, series: Mapping[str, PriceSeries]) -> None:
    rows = []
    for firm_id in sorted(series):
        s = series[firm_id]
        rows.extend((d, firm_id, c) for d, c in zip(s.dates, s.closes))
    rows.sort(key=lambda r: (r[0], r[1]))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PRICES_HEADER)
        for d, firm_id, c in rows:
            w.writerow([d.isoformat(), firm_id, repr(float(c))])


def write_documents(path, docs: Iterable[Document]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for d in docs:
            obj = {"firm_id": d.firm_id, "timestamp": d.timestamp, "text": d.text}
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def write_macro(path, macro: MacroSeries) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MACRO_HEADER)
        for p, g, r in zip(macro.periods, macro.gdp_growth, macro.interest_rate):
            w.writerow([p.isoformat(), repr(float(g)), repr(float(r))])


# --- returns -----------------------------------------------------------------

def compute_returns(series: PriceSeries) -> ReturnSeries:
    """Simple returns ``close_t / close_{t-1} - 1`` dated at the later observation."""
    if len(series) < 2:
        raise SeriesTooShort(f"{series.firm_id}: need at least 2 prices, got {len(series)}")
    closes = np.asarray(series.closes, dtype=float)
    rets = closes[1:] / closes[:-1] - 1.0
    return ReturnSeries(series.firm_id, series.dates[1:], tuple(float(r) for r in rets))


def align_returns(
    collection: Iterable[ReturnSeries], min_firms: int = 2, min_dates: int = 3
) -> AlignedReturns:
    """Restrict every series to the dates they all share.

    Firms come out in lexicographic order regardless of input order.
    """
    by_firm = {s.firm_id: s for s in collection}
    if len(by_firm) < min_firms:
        raise InsufficientOverlap(f"need at least {min_firms} firms, got {len(by_firm)}")
    firm_ids = tuple(sorted(by_firm))
    common = set(by_firm[firm_ids[0]].dates)
    for f in firm_ids[1:]:
        common &= set(by_firm[f].dates)
    if len(common) < min_dates:
        raise InsufficientOverlap(f"only {len(common)} common dates across {len(firm_ids)} firms")
    dates = tuple(sorted(common))
    values = np.empty((len(dates), len(firm_ids)))
    for j, f in enumerate(firm_ids):
        lookup = dict(zip(by_firm[f].dates, by_firm[f].returns))
        values[:, j] = [lookup[d] for d in dates]
    values.setflags(write=False)
    return AlignedReturns(dates, firm_ids, values)
