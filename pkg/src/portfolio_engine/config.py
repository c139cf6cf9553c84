"""JSON pipeline configuration.

Only ``paths`` is required. Relative paths resolve against the config file's
directory. Per-stage seeds default to ``master_seed`` XOR a fixed stage
constant.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .optimizer import DEFAULT_LAMBDA_GRID, GaConfig, HeuristicConfig, PsoConfig
from .ranker import TrainConfig

STAGE_SEED = {"dea": 1, "sentiment": 2, "clustering": 3, "ranker": 4, "optimizer": 5}
REQUIRED_PATHS = ("fundamentals", "prices", "documents", "macro", "output_dir")


@dataclass(frozen=True)
class Paths:
    fundamentals: Path
    prices: Path
    documents: Path
    macro: Path
    output_dir: Path
    lexicon: Path | None = None


@dataclass(frozen=True)
class ClusteringConfig:
    method: str = "kmeans"
    k: int | None = None
    threshold: float = 0.0
    restarts: int = 10
    seed: int = 0


@dataclass(frozen=True)
class RankerConfig:
    hidden_width: int = 8
    learning_rate: float = 0.01
    epochs: int = 500
    window: int = 20
    top_m: int = 1
    seed: int = 0
    validation_fraction: float = 0.2

    def train_config(self) -> TrainConfig:
        return TrainConfig(self.learning_rate, self.epochs, self.hidden_width, self.seed, self.validation_fraction)


@dataclass(frozen=True)
class OptimizerConfig:
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    risk_free_rate: float = 0.0
    pso: PsoConfig = PsoConfig()
    ga: GaConfig = GaConfig()
    seed: int = 0

    def heuristic_config(self) -> HeuristicConfig:
        return HeuristicConfig(self.pso, self.ga, self.seed)


@dataclass(frozen=True)
class PipelineConfig:
    paths: Paths
    master_seed: int = 42
    clustering: ClusteringConfig = field(default_factory=ClusteringConfig)
    ranker: RankerConfig = field(default_factory=RankerConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def echo(self) -> dict:
        """JSON-ready view of the effective configuration."""
        d = asdict(self)
        d["paths"] = {k: (None if v is None else str(v)) for k, v in d["paths"].items()}
        d["optimizer"]["lambda_grid"] = list(self.optimizer.lambda_grid)
        return d


def _section(cls, raw: dict | None, name: str, **overrides):
    raw = dict(raw or {})
    known = set(cls.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(unknown)}")
    raw.update({k: v for k, v in overrides.items() if k not in raw})
    try:
        return cls(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {name!r} section: {exc}") from None


def config_from_dict(data: dict[str, Any], base_dir: Path | str = ".") -> PipelineConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - {"paths", "master_seed", "clustering", "ranker", "optimizer"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    base = Path(base_dir)
    raw_paths = data.get("paths")
    if not isinstance(raw_paths, dict):
        raise ConfigError("'paths' section is required")
    missing = [k for k in REQUIRED_PATHS if k not in raw_paths]
    if missing:
        raise ConfigError(f"missing paths: {missing}")
    extra = set(raw_paths) - set(REQUIRED_PATHS) - {"lexicon"}
    if extra:
        raise ConfigError(f"unknown keys in 'paths': {sorted(extra)}")
    resolved = {
        k: (None if v is None else (base / v).resolve()) for k, v in raw_paths.items()
    }
    paths = Paths(**resolved)

    seed = data.get("master_seed", 42)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("master_seed must be a nonnegative integer")

    clustering = _section(ClusteringConfig, data.get("clustering"), "clustering",
                          seed=seed ^ STAGE_SEED["clustering"])
    if clustering.method not in ("kmeans", "louvain"):
        raise ConfigError(f"clustering.method must be 'kmeans' or 'louvain', got {clustering.method!r}")
    ranker = _section(RankerConfig, data.get("ranker"), "ranker", seed=seed ^ STAGE_SEED["ranker"])

    raw_opt = dict(data.get("optimizer") or {})
    pso = _section(PsoConfig, raw_opt.pop("pso", None), "optimizer.pso")
    ga = _section(GaConfig, raw_opt.pop("ga", None), "optimizer.ga")
    if "lambda_grid" in raw_opt:
        try:
            raw_opt["lambda_grid"] = tuple(float(x) for x in raw_opt["lambda_grid"])
        except (TypeError, ValueError):
            raise ConfigError("optimizer.lambda_grid must be a list of numbers") from None
    optimizer = _section(OptimizerConfig, raw_opt, "optimizer", pso=pso, ga=ga,
                         seed=seed ^ STAGE_SEED["optimizer"])
    try:
        optimizer.heuristic_config()
        ranker.train_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return PipelineConfig(paths, seed, clustering, ranker, optimizer)


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return config_from_dict(data, path.parent)
