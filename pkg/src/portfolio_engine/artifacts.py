"""Readers and writers for the per-stage files exchanged between pipeline stages.

Number formatting is fixed so that identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

from .clustering import ClusterAssignment
from .dea import EfficiencyResult
from .errors import MalformedRow, MissingUpstreamArtifact
from .optimizer import MomentEstimates, Portfolio
from .ranker import Ranking
from .sentiment import SentimentCounts, SentimentScore

DEA_SCORES = "dea_scores.csv"
SENTIMENT_SCORES = "sentiment_scores.csv"
CLUSTERS = "clusters.csv"
RANKING = "ranking.csv"
PORTFOLIOS = "portfolios.json"
REPORT = "report.json"


def _bool(v: bool) -> str:
    return "true" if v else "false"


def _parse_bool(text: str, line: int) -> bool:
    if text not in ("true", "false"):
        raise MalformedRow(line, f"expected true/false, got {text!r}")
    return text == "true"


def _read_rows(path, header: Sequence[str]) -> list[tuple[int, dict[str, str]]]:
    path = Path(path)
    if not path.is_file():
        raise MissingUpstreamArtifact(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or tuple(first) != tuple(header):
            raise MalformedRow(1, f"{path.name}: expected header {','.join(header)}")
        rows = []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise MalformedRow(line, f"{path.name}: expected {len(header)} fields")
            rows.append((line, dict(zip(header, row))))
    return rows


def _write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# --- dea ---------------------------------------------------------------------

DEA_HEADER = ("firm_id", "score", "is_efficient")


def write_dea_scores(path, results: Iterable[EfficiencyResult]) -> None:
    rows = sorted(results, key=lambda r: r.firm_id)
    _write_rows(path, DEA_HEADER, ((r.firm_id, f"{r.score:.9f}", _bool(r.is_efficient)) for r in rows))


def read_dea_scores(path) -> list[EfficiencyResult]:
    return [
        EfficiencyResult(r["firm_id"], float(r["score"]), _parse_bool(r["is_efficient"], line))
        for line, r in _read_rows(path, DEA_HEADER)
    ]


# --- sentiment ---------------------------------------------------------------

SENTIMENT_HEADER = ("firm_id", "pos", "neg", "score", "passed")


def write_sentiment_scores(path, counts: Iterable[SentimentCounts], scores: Iterable[SentimentScore]) -> None:
    by_firm = {s.firm_id: s for s in scores}
    rows = []
    for c in sorted(counts, key=lambda c: c.firm_id):
        s = by_firm[c.firm_id]
        rows.append((c.firm_id, c.pos, c.neg, f"{s.score:.6f}", _bool(s.score > 0)))
    _write_rows(path, SENTIMENT_HEADER, rows)


def read_sentiment_scores(path) -> list[tuple[str, int, int, float, bool]]:
    return [
        (r["firm_id"], int(r["pos"]), int(r["neg"]), float(r["score"]), _parse_bool(r["passed"], line))
        for line, r in _read_rows(path, SENTIMENT_HEADER)
    ]


# --- clusters ------------------------------------------------------------------

CLUSTERS_HEADER = ("firm_id", "cluster", "method")


def write_clusters(path, assignment: ClusterAssignment) -> None:
    _write_rows(path, CLUSTERS_HEADER, (
        (f, assignment.assignment[f], assignment.method) for f in sorted(assignment.assignment)
    ))


def read_clusters(path) -> ClusterAssignment:
    rows = _read_rows(path, CLUSTERS_HEADER)
    if not rows:
        raise MalformedRow(1, f"{Path(path).name}: no rows")
    mapping = {r["firm_id"]: int(r["cluster"]) for _, r in rows}
    methods = {r["method"] for _, r in rows}
    if len(methods) != 1:
        raise MalformedRow(2, "mixed clustering methods")
    return ClusterAssignment(methods.pop(), mapping, len(set(mapping.values())))


# --- ranking -------------------------------------------------------------------

RANKING_HEADER = ("firm_id", "cluster", "predicted_return", "rank_in_cluster", "selected")


def write_ranking(path, ranking: Ranking, candidates: Sequence[str]) -> None:
    chosen = set(candidates)
    rows = []
    for c, members in enumerate(ranking.clusters):
        for rank, (firm, pred) in enumerate(members, start=1):
            rows.append((firm, c, f"{pred:.9f}", rank, _bool(firm in chosen)))
    _write_rows(path, RANKING_HEADER, rows)


def read_selected(path) -> list[str]:
    """Selected firms in (cluster, rank) order."""
    rows = _read_rows(path, RANKING_HEADER)
    rows.sort(key=lambda lr: (int(lr[1]["cluster"]), int(lr[1]["rank_in_cluster"])))
    return [r["firm_id"] for line, r in rows if _parse_bool(r["selected"], line)]


# --- portfolios ----------------------------------------------------------------

def _rounded_weights(firm_ids, weights) -> dict[str, float]:
    """Weights to 9 decimals; the rounding residual goes to the largest weight so the sum stays 1."""
    r = [round(float(w), 9) for w in weights]
    big = max(range(len(r)), key=lambda i: (r[i], -i))
    r[big] = round(r[big] + (1.0 - math.fsum(r)), 9)
    return dict(sorted(zip(firm_ids, r)))


def portfolio_records(portfolios: Sequence[Portfolio], moments: MomentEstimates) -> list[dict]:
    out = []
    for rank, p in enumerate(portfolios, start=1):
        out.append({
            "rank": rank,
            "method": p.method,
            "lambda": p.lambda_used,
            "weights": _rounded_weights(p.firm_ids, p.weights),
            "expected_return": p.expected_return(moments),
            "variance": p.variance(moments),
            "sharpe": p.sharpe,
        })
    return out


def dump_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def load_json(path):
    path = Path(path)
    if not path.is_file():
        raise MissingUpstreamArtifact(path)
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
