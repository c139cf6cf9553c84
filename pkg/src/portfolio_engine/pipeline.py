"""Five-stage orchestration: DEA -> sentiment -> clustering -> ranking -> optimization.

Every stage reads its inputs from disk (raw inputs plus upstream artifacts in
``output_dir``) and writes exactly one artifact, so running the stages one by
one and running the whole pipeline produce the same files.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass
from pathlib import Path

from . import artifacts as art
from .clustering import build_correlation_graph, correlation_matrix, default_k, kmeans, louvain
from .config import PipelineConfig
from .core_data import align_returns, compute_returns, load_documents, load_fundamentals, load_macro, load_prices
from .dea import build_instance, efficient_set
from .errors import (
    ConfigError,
    DataError,
    MissingFile,
    MissingUpstreamArtifact,
    PortfolioError,
    StageError,
)
from .optimizer import estimate_moments, top_portfolios
from .ranker import build_training_set, latest_features, rank_within_clusters, samples_to_arrays, standardize, train
from .sentiment import count_corpus, default_lexicon, load_lexicon, positive_firms, score_firm

log = logging.getLogger(__name__)

STAGES = ("dea", "sentiment", "cluster", "rank", "optimize")
EXIT_CODES = {"dea": 10, "sentiment": 11, "cluster": 12, "rank": 13, "optimize": 14}
EXIT_IO = 2
EXIT_CONFIG = 3
ARTIFACT_OF = {
    "dea": art.DEA_SCORES,
    "sentiment": art.SENTIMENT_SCORES,
    "cluster": art.CLUSTERS,
    "rank": art.RANKING,
    "optimize": art.PORTFOLIOS,
}


@dataclass
class StageOutput:
    artifact: Path
    firms_in: int
    firms_out: int
    extra: dict


def resolve_workers(workers: int) -> int:
    return (os.cpu_count() or 1) if workers == 0 else max(1, workers)


def _returns_for(prices, firms):
    missing = [f for f in firms if f not in prices]
    if missing:
        raise DataError(f"no prices for {missing}")
    return {f: compute_returns(prices[f]) for f in firms}


def _stage_dea(cfg: PipelineConfig, workers: int) -> StageOutput:
    fundamentals = load_fundamentals(cfg.paths.fundamentals)
    instance = build_instance(fundamentals)
    results, efficient = efficient_set(instance, workers)
    out = cfg.paths.output_dir / art.DEA_SCORES
    art.write_dea_scores(out, results)
    log.info("dea: %d firms, %d scored, %d efficient", len(fundamentals), instance.n, len(efficient))
    return StageOutput(out, len(fundamentals), len(efficient),
                       {"excluded": [f for f, _ in instance.excluded]})


def _stage_sentiment(cfg: PipelineConfig, workers: int) -> StageOutput:
    efficient = [r.firm_id for r in art.read_dea_scores(cfg.paths.output_dir / art.DEA_SCORES) if r.is_efficient]
    docs = load_documents(cfg.paths.documents)
    lexicon = load_lexicon(cfg.paths.lexicon) if cfg.paths.lexicon else default_lexicon()
    counts = count_corpus(docs, lexicon, efficient, workers)
    scores = [score_firm(c) for c in counts]
    out = cfg.paths.output_dir / art.SENTIMENT_SCORES
    art.write_sentiment_scores(out, counts, scores)
    passed = positive_firms(scores)
    log.info("sentiment: %d efficient firms, %d positive", len(efficient), len(passed))
    if not passed:
        raise StageError("sentiment", EXIT_CODES["sentiment"], "no firms with positive sentiment")
    return StageOutput(out, len(efficient), len(passed), {})


def _stage_cluster(cfg: PipelineConfig, workers: int) -> StageOutput:
    rows = art.read_sentiment_scores(cfg.paths.output_dir / art.SENTIMENT_SCORES)
    firms = [r[0] for r in rows if r[4]]
    if not firms:
        raise StageError("cluster", EXIT_CODES["cluster"], "no firms passed the sentiment gate")
    prices = load_prices(cfg.paths.prices)
    aligned = align_returns(_returns_for(prices, firms).values(), min_firms=1)
    corr = correlation_matrix(aligned)
    c = cfg.clustering
    if c.method == "kmeans":
        k = c.k if c.k is not None else default_k(corr.n)
        assignment = kmeans(corr, k, c.seed, c.restarts, workers)
    else:
        assignment = louvain(build_correlation_graph(corr, c.threshold), c.seed)
    out = cfg.paths.output_dir / art.CLUSTERS
    art.write_clusters(out, assignment)
    log.info("cluster: %d firms into %d clusters (%s)", corr.n, assignment.k, assignment.method)
    return StageOutput(out, len(firms), len(firms), {"clusters": assignment.k})


def _stage_rank(cfg: PipelineConfig, workers: int) -> StageOutput:
    clusters = art.read_clusters(cfg.paths.output_dir / art.CLUSTERS)
    sentiment = {r[0]: r[3] for r in art.read_sentiment_scores(cfg.paths.output_dir / art.SENTIMENT_SCORES)}
    prices = load_prices(cfg.paths.prices)
    macro = load_macro(cfg.paths.macro)
    firms = sorted(clusters.assignment)
    returns = _returns_for(prices, firms)
    rc = cfg.ranker
    samples = build_training_set(returns, macro, sentiment, rc.window)
    X, y = samples_to_arrays(samples)
    Z, stats = standardize(X)
    result = train(Z, y, rc.train_config())
    latest = latest_features(returns, macro, sentiment, rc.window)
    ranking, candidates = rank_within_clusters(result.mlp, stats, latest, clusters, rc.top_m)
    out = cfg.paths.output_dir / art.RANKING
    art.write_ranking(out, ranking, candidates)
    log.info("rank: %d samples, best epoch %d, %d candidates", len(samples), result.best_epoch, len(candidates))
    return StageOutput(out, len(firms), len(candidates), {"training_samples": len(samples)})


def _stage_optimize(cfg: PipelineConfig, workers: int) -> StageOutput:
    selected = art.read_selected(cfg.paths.output_dir / art.RANKING)
    if not selected:
        raise StageError("optimize", EXIT_CODES["optimize"], "ranking selected no candidates")
    prices = load_prices(cfg.paths.prices)
    aligned = align_returns(_returns_for(prices, selected).values(), min_firms=1)
    oc = cfg.optimizer
    moments = estimate_moments(aligned, risk_free_rate=oc.risk_free_rate)
    portfolios = top_portfolios(moments, oc.lambda_grid, oc.heuristic_config())
    records = art.portfolio_records(portfolios, moments)
    out = cfg.paths.output_dir / art.PORTFOLIOS
    art.dump_json(out, records)
    log.info("optimize: %d candidates, %d portfolios", len(selected), len(portfolios))
    return StageOutput(out, len(selected), len(selected), {"portfolios": records})


_STAGE_FUNCS = {
    "dea": _stage_dea,
    "sentiment": _stage_sentiment,
    "cluster": _stage_cluster,
    "rank": _stage_rank,
    "optimize": _stage_optimize,
}


def run_stage(stage: str, cfg: PipelineConfig, workers: int = 1) -> StageOutput:
    """Run one stage, converting failures into StageError with the stage's exit code."""
    if stage not in _STAGE_FUNCS:
        raise ConfigError(f"unknown stage {stage!r}; expected one of {STAGES}")
    workers = resolve_workers(workers)
    try:
        cfg.paths.output_dir.mkdir(parents=True, exist_ok=True)
        return _STAGE_FUNCS[stage](cfg, workers)
    except StageError:
        raise
    except ConfigError as exc:
        raise StageError(stage, EXIT_CONFIG, exc) from exc
    except (MissingFile, MissingUpstreamArtifact, OSError) as exc:
        raise StageError(stage, EXIT_IO, exc) from exc
    except (PortfolioError, ValueError) as exc:
        raise StageError(stage, EXIT_CODES[stage], exc) from exc


def run_pipeline(cfg: PipelineConfig, workers: int = 1) -> dict:
    """Run all five stages and write ``report.json``; returns the report."""
    outputs: dict[str, StageOutput] = {}
    durations = {}
    for stage in STAGES:
        t0 = time.perf_counter()
        outputs[stage] = run_stage(stage, cfg, workers)
        durations[stage] = round(time.perf_counter() - t0, 6)

    counts = {
        "input_firms": outputs["dea"].firms_in,
        "efficient_firms": outputs["dea"].firms_out,
        "positive_sentiment_firms": outputs["sentiment"].firms_out,
        "clusters": outputs["cluster"].extra["clusters"],
        "candidates": outputs["rank"].firms_out,
    }
    report = {
        "counts": counts,
        "dea_excluded": outputs["dea"].extra["excluded"],
        "portfolios": outputs["optimize"].extra["portfolios"],
        "config": cfg.echo(),
        "durations_seconds": durations,
    }
    art.dump_json(cfg.paths.output_dir / art.REPORT, report)
    return report
