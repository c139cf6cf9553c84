"""CCR efficiency screening (constant returns to scale, input oriented).

Each firm is a decision-making unit. For the unit under evaluation ``o`` the
multiplier-form program is::

    maximize    sum_r u_r y_ro
    subject to  sum_i v_i x_io = 1
                sum_r u_r y_rj - sum_i v_i x_ij <= 0     for every unit j
                u, v >= 0

and its optimum is the efficiency score in (0, 1].
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core_data import FirmFundamentals
from .errors import LPError, NoValidFirms, NumericalFailure
from .lp import EQ, LE, LinearProgram, solve_lp

log = logging.getLogger(__name__)

EFFICIENCY_TOL = 1e-6
INPUT_NAMES = ("total_assets", "total_equity", "cost_of_sales", "operating_expenses")
OUTPUT_NAMES = ("net_sales", "net_income")


@dataclass(frozen=True)
class DeaInstance:
    """Input matrix X (inputs x units) and output matrix Y (outputs x units)."""

    firm_ids: tuple[str, ...]
    inputs: np.ndarray
    outputs: np.ndarray
    excluded: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        Y = np.atleast_2d(np.asarray(self.outputs, dtype=float))
        n = len(self.firm_ids)
        if X.shape[1] != n or Y.shape[1] != n:
            raise ValueError(f"X {X.shape} and Y {Y.shape} must both have {n} columns")
        if not (np.all(X > 0) and np.all(Y > 0)):
            raise ValueError("DEA data must be strictly positive")
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "outputs", Y)
        object.__setattr__(self, "firm_ids", tuple(self.firm_ids))

    @property
    def n(self) -> int:
        return len(self.firm_ids)


@dataclass(frozen=True)
class EfficiencyResult:
    firm_id: str
    score: float
    is_efficient: bool


def build_instance(fundamentals: Sequence[FirmFundamentals]) -> DeaInstance:
    """Keep firms with strictly positive data, ordered by firm_id."""
    valid, excluded = [], []
    for f in fundamentals:
        if all(v > 0 for v in f.inputs + f.outputs):
            valid.append(f)
        else:
            excluded.append((f.firm_id, "non-positive data"))
    if not valid:
        raise NoValidFirms("every firm has non-positive DEA data")
    valid.sort(key=lambda f: f.firm_id)
    excluded.sort()
    for firm_id, reason in excluded:
        log.info("dea: excluding %s (%s)", firm_id, reason)
    X = np.array([f.inputs for f in valid]).T
    Y = np.array([f.outputs for f in valid]).T
    return DeaInstance(tuple(f.firm_id for f in valid), X, Y, tuple(excluded))


def _multiplier_lp(X: np.ndarray, Y: np.ndarray, o: int) -> LinearProgram:
    m, n = X.shape
    s = Y.shape[0]
    # variables: [u_1..u_s, v_1..v_m]
    c = np.concatenate([Y[:, o], np.zeros(m)])
    A = np.vstack([
        np.concatenate([np.zeros(s), X[:, o]]),
        np.hstack([Y.T, -X.T]),
    ])
    b = np.zeros(n + 1)
    b[0] = 1.0
    return LinearProgram(c, A, (EQ,) + (LE,) * n, b)


def _normalized(instance: DeaInstance) -> tuple[np.ndarray, np.ndarray]:
    # CCR scores are units invariant; rescaling rows to max 1 keeps the tableau well conditioned
    X = instance.inputs / instance.inputs.max(axis=1, keepdims=True)
    Y = instance.outputs / instance.outputs.max(axis=1, keepdims=True)
    return X, Y


def efficiency_score(instance: DeaInstance, dmu_index: int, _scaled=None) -> float:
    if not 0 <= dmu_index < instance.n:
        raise IndexError(f"dmu_index {dmu_index} out of range for {instance.n} units")
    X, Y = _scaled if _scaled is not None else _normalized(instance)
    try:
        sol = solve_lp(_multiplier_lp(X, Y, dmu_index))
    except LPError as exc:
        raise NumericalFailure(
            f"LP for {instance.firm_ids[dmu_index]} failed on positive data: {exc}"
        ) from exc
    if not 0.0 < sol.objective <= 1.0 + 1e-9:
        raise NumericalFailure(f"score {sol.objective!r} for {instance.firm_ids[dmu_index]} out of range")
    return sol.objective


def score_all(instance: DeaInstance, workers: int = 1) -> list[float]:
    """Scores for every unit in firm order. The per-unit LPs run on ``workers`` threads."""
    scaled = _normalized(instance)
    idx = range(instance.n)
    if workers <= 1 or instance.n < 2:
        return [efficiency_score(instance, o, scaled) for o in idx]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda o: efficiency_score(instance, o, scaled), idx))


def efficient_set(instance: DeaInstance, workers: int = 1) -> tuple[list[EfficiencyResult], list[str]]:
    scores = score_all(instance, workers)
    results = [
        EfficiencyResult(f, s, s >= 1.0 - EFFICIENCY_TOL)
        for f, s in zip(instance.firm_ids, scores)
    ]
    efficient = sorted(r.firm_id for r in results if r.is_efficient)
    return results, efficient
