"""Correlation-based stock clustering with k-means or Louvain."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .core_data import AlignedReturns
from .errors import InsufficientObservations, KTooLarge, ZeroVarianceSeries

MAX_LLOYD_ITER = 100
MOVE_TOL = 1e-12
LEVEL_TOL = 1e-9


@dataclass(frozen=True)
class CorrelationMatrix:
    firm_ids: tuple[str, ...]
    values: np.ndarray

    @property
    def n(self) -> int:
        return len(self.firm_ids)


@dataclass(frozen=True)
class WeightedGraph:
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str, float], ...]

    def __post_init__(self):
        index = {v: i for i, v in enumerate(self.nodes)}
        if len(index) != len(self.nodes):
            raise ValueError("duplicate node ids")
        seen = set()
        for a, b, w in self.edges:
            if a == b:
                raise ValueError(f"self-loop on {a!r}")
            if a not in index or b not in index:
                raise ValueError(f"edge ({a!r}, {b!r}) references unknown node")
            if not w > 0:
                raise ValueError(f"edge ({a!r}, {b!r}) has non-positive weight {w}")
            key = frozenset((a, b))
            if key in seen:
                raise ValueError(f"duplicate edge ({a!r}, {b!r})")
            seen.add(key)

    def adjacency(self) -> np.ndarray:
        index = {v: i for i, v in enumerate(self.nodes)}
        A = np.zeros((len(self.nodes), len(self.nodes)))
        for a, b, w in self.edges:
            A[index[a], index[b]] = A[index[b], index[a]] = w
        return A

    @property
    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.edges))


@dataclass(frozen=True)
class ClusterAssignment:
    """firm_id -> contiguous 0-based cluster index.

    ``history`` holds per-iteration WCSS (k-means, best restart) or the
    modularity after each aggregation pass (Louvain).
    """

    method: str
    assignment: Mapping[str, int]
    k: int
    wcss: float | None = None
    history: tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "assignment", MappingProxyType(dict(self.assignment)))
        if set(self.assignment.values()) != set(range(self.k)):
            raise ValueError("cluster indices must be exactly 0..k-1")

    def clusters(self) -> list[list[str]]:
        out: list[list[str]] = [[] for _ in range(self.k)]
        for firm in sorted(self.assignment):
            out[self.assignment[firm]].append(firm)
        return out


def correlation_matrix(aligned: AlignedReturns) -> CorrelationMatrix:
    R = np.asarray(aligned.values, dtype=float)
    if R.shape[0] < 3:
        raise InsufficientObservations(f"need at least 3 aligned observations, got {R.shape[0]}")
    for j, firm in enumerate(aligned.firm_ids):
        if np.all(R[:, j] == R[0, j]):
            raise ZeroVarianceSeries(firm)
    C = np.corrcoef(R, rowvar=False) if R.shape[1] > 1 else np.ones((1, 1))
    C = np.clip((C + C.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(C, 1.0)
    C.setflags(write=False)
    return CorrelationMatrix(tuple(aligned.firm_ids), C)


def default_k(n: int) -> int:
    return min(n, max(2, math.floor(math.sqrt(n / 2) + 0.5)))


# --- k-means -----------------------------------------------------------------

def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def _kmeanspp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = _sq_dists(X, X[chosen]).min(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            nxt = int(rng.integers(n))
        chosen.append(nxt)
        d2 = np.minimum(d2, _sq_dists(X, X[[nxt]])[:, 0])
    return X[chosen].copy()


def _wcss(X, labels, centroids) -> float:
    return float(((X - centroids[labels]) ** 2).sum())


def _lloyd(X: np.ndarray, k: int, rng: np.random.Generator, max_iter: int = MAX_LLOYD_ITER):
    centroids = _kmeanspp(X, k, rng)
    labels = None
    history = []
    for _ in range(max_iter):
        d2 = _sq_dists(X, centroids)
        new = d2.argmin(axis=1)  # first minimum = lowest centroid index
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            if np.any(labels == c):
                continue
            sizes = np.bincount(labels, minlength=k)
            own = d2[np.arange(len(X)), labels]
            own = np.where(sizes[labels] > 1, own, -np.inf)
            labels[int(np.argmax(own))] = c
        centroids = np.array([X[labels == c].mean(axis=0) for c in range(k)])
        history.append(_wcss(X, labels, centroids))
    return labels, _wcss(X, labels, centroids), history


def _contiguous(labels: Sequence[int]) -> list[int]:
    """Relabel so clusters are numbered by first appearance."""
    mapping: dict[int, int] = {}
    return [mapping.setdefault(int(l), len(mapping)) for l in labels]


def kmeans(
    corr: CorrelationMatrix,
    k: int,
    seed: int = 0,
    restarts: int = 10,
    workers: int = 1,
) -> ClusterAssignment:
    """k-means on correlation-matrix rows, best of ``restarts`` k-means++ runs."""
    n = corr.n
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > n:
        raise KTooLarge(f"k={k} exceeds the {n} available firms")
    X = np.asarray(corr.values, dtype=float)

    def run(r: int):
        return _lloyd(X, k, np.random.default_rng([seed, r]))

    if workers > 1 and restarts > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(run, range(max(1, restarts))))
    else:
        runs = [run(r) for r in range(max(1, restarts))]
    best = min(range(len(runs)), key=lambda r: (runs[r][1], r))
    labels, wcss, history = runs[best]
    labels = _contiguous(labels)
    return ClusterAssignment("kmeans", dict(zip(corr.firm_ids, labels)), k, wcss, tuple(history))


def wcss_of(corr: CorrelationMatrix, assignment: ClusterAssignment) -> float:
    X = np.asarray(corr.values, dtype=float)
    labels = np.array([assignment.assignment[f] for f in corr.firm_ids])
    centroids = np.array([X[labels == c].mean(axis=0) for c in range(assignment.k)])
    return _wcss(X, labels, centroids)


# --- Louvain -----------------------------------------------------------------

def build_correlation_graph(corr: CorrelationMatrix, threshold: float = 0.0) -> WeightedGraph:
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    edges = []
    ids = corr.firm_ids
    for i in range(corr.n):
        for j in range(i + 1, corr.n):
            rho = float(corr.values[i, j])
            if rho > threshold:
                edges.append((ids[i], ids[j], rho))
    return WeightedGraph(tuple(ids), tuple(edges))


def _modularity_dense(A: np.ndarray, labels: np.ndarray) -> float:
    two_m = A.sum()
    if two_m <= 0:
        return 0.0
    K = int(labels.max()) + 1
    P = np.zeros((A.shape[0], K))
    P[np.arange(A.shape[0]), labels] = 1.0
    inner = np.einsum("ic,ij,jc->c", P, A, P)
    tot = P.T @ A.sum(axis=1)
    return float((inner / two_m - (tot / two_m) ** 2).sum())


def modularity(graph: WeightedGraph, assignment: ClusterAssignment) -> float:
    """Weighted modularity; 0 by convention for an edgeless graph."""
    labels = np.array([assignment.assignment[v] for v in graph.nodes])
    return _modularity_dense(graph.adjacency(), labels)


def _local_moving(A: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, bool]:
    N = A.shape[0]
    k = A.sum(axis=1)
    two_m = A.sum()
    m = two_m / 2.0
    comm = np.arange(N)
    tot = k.copy()
    order = rng.permutation(N)
    moved_any = False
    while True:
        moved = False
        for i in order:
            c_old = comm[i]
            links = np.bincount(comm, weights=A[i], minlength=N)
            links[c_old] -= A[i, i]
            tot[c_old] -= k[i]
            cand = np.flatnonzero(links > 0)
            gain = links - tot * k[i] / two_m
            best, best_gain = c_old, gain[c_old]
            for c in cand:
                if gain[c] > best_gain + MOVE_TOL * m:
                    best, best_gain = c, gain[c]
            tot[best] += k[i]
            if best != c_old:
                comm[i] = best
                moved = moved_any = True
        if not moved:
            return comm, moved_any


def louvain(graph: WeightedGraph, seed: int = 0) -> ClusterAssignment:
    """Two-phase Louvain: local moving, then aggregation, until no pass gains."""
    if not graph.nodes:
        raise ValueError("graph has no nodes")
    A0 = graph.adjacency()
    n = A0.shape[0]
    rng = np.random.default_rng(seed)
    membership = np.arange(n)
    history = [_modularity_dense(A0, membership)]
    A = A0
    if A0.sum() > 0:
        while True:
            comm, moved = _local_moving(A, rng)
            if not moved:
                break
            _, comm = np.unique(comm, return_inverse=True)
            K = int(comm.max()) + 1
            P = np.zeros((A.shape[0], K))
            P[np.arange(A.shape[0]), comm] = 1.0
            A = P.T @ A @ P
            membership = comm[membership]
            q = _modularity_dense(A0, membership)
            gained = q - history[-1]
            history.append(q)
            if gained <= LEVEL_TOL or K == 1:
                break

    # relabel communities by their smallest firm_id
    groups: dict[int, list[str]] = {}
    for node, c in zip(graph.nodes, membership):
        groups.setdefault(int(c), []).append(node)
    ordered = sorted(groups.values(), key=min)
    assignment = {node: idx for idx, members in enumerate(ordered) for node in members}
    return ClusterAssignment("louvain", assignment, len(ordered), None, tuple(history))
