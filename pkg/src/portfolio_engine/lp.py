"""Dense two-phase simplex with Bland's anti-cycling rule."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import Infeasible, NumericalFailure, Unbounded

PIVOT_TOL = 1e-9
LE, EQ, GE = "<=", "=", ">="


@dataclass(frozen=True)
class LinearProgram:
    """maximize (or minimize) c.x subject to A x (senses) b, x >= lower."""

    objective: np.ndarray
    constraints: np.ndarray
    senses: tuple[str, ...]
    rhs: np.ndarray
    lower: np.ndarray | None = None
    maximize: bool = True

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float)
        A = np.atleast_2d(np.asarray(self.constraints, dtype=float))
        b = np.asarray(self.rhs, dtype=float)
        lb = np.zeros(c.size) if self.lower is None else np.asarray(self.lower, dtype=float)
        if A.shape != (b.size, c.size):
            raise ValueError(f"constraint matrix {A.shape} inconsistent with {b.size} rows x {c.size} vars")
        if len(self.senses) != b.size or any(s not in (LE, EQ, GE) for s in self.senses):
            raise ValueError("one sense in {'<=', '=', '>='} per constraint row")
        if lb.size != c.size:
            raise ValueError("lower bounds must match variable count")
        for name, arr in (("objective", c), ("constraints", A), ("rhs", b), ("lower", lb)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite entry in {name}")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "constraints", A)
        object.__setattr__(self, "rhs", b)
        object.__setattr__(self, "lower", lb)
        object.__setattr__(self, "senses", tuple(self.senses))

    @property
    def n_vars(self) -> int:
        return self.objective.size


@dataclass(frozen=True)
class LPSolution:
    objective: float
    x: np.ndarray
    iterations: int = field(default=0, compare=False)


def _pivot(T: np.ndarray, z: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            T[r] -= T[r, col] * T[row]
    if z[col] != 0.0:
        z -= z[col] * T[row]


def _run(T, z, basis, allowed: int, max_iter: int) -> int:
    """Maximize over the tableau in place. Columns >= ``allowed`` never enter."""
    it = 0
    while True:
        improving = np.flatnonzero(z[:allowed] < -PIVOT_TOL)
        if improving.size == 0:
            return it
        if it >= max_iter:
            raise NumericalFailure(f"simplex did not converge in {max_iter} pivots")
        col = int(improving[0])
        column = T[:, col]
        cand = np.flatnonzero(column > PIVOT_TOL)
        if cand.size == 0:
            if np.any(column > 0.0):
                raise NumericalFailure(f"pivot magnitude below {PIVOT_TOL} in column {col}")
            raise Unbounded("objective is unbounded")
        ratios = T[cand, -1] / column[cand]
        best = ratios.min()
        ties = cand[ratios <= best + 1e-12 * max(1.0, abs(best))]
        row = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, z, row, col)
        basis[row] = col
        it += 1


def solve_lp(lp: LinearProgram, max_iter: int = 50_000) -> LPSolution:
    """Solve ``lp`` and return the optimal objective and variable values.

    Raises Infeasible, Unbounded or NumericalFailure.
    """
    c = lp.objective if lp.maximize else -lp.objective
    A = lp.constraints.copy()
    # shift x = lower + x' so that x' >= 0
    b = lp.rhs - A @ lp.lower
    senses = list(lp.senses)
    m, n = A.shape

    for i in range(m):
        if b[i] < 0:
            A[i] *= -1
            b[i] *= -1
            senses[i] = {LE: GE, GE: LE, EQ: EQ}[senses[i]]

    n_slack = sum(s != EQ for s in senses)
    n_art = sum(s != LE for s in senses)
    n_cols = n + n_slack + n_art
    T = np.zeros((m, n_cols + 1))
    T[:, :n] = A
    T[:, -1] = b
    basis = [0] * m
    s_col, a_col = n, n + n_slack
    for i, s in enumerate(senses):
        if s == LE:
            T[i, s_col] = 1.0
            basis[i] = s_col
            s_col += 1
        else:
            if s == GE:
                T[i, s_col] = -1.0
                s_col += 1
            T[i, a_col] = 1.0
            basis[i] = a_col
            a_col += 1
    art_start = n + n_slack

    iterations = 0
    if n_art:
        # phase 1: maximize -(sum of artificials)
        cost = np.zeros(n_cols)
        cost[art_start:] = -1.0
        z = _objective_row(T, basis, cost)
        iterations += _run(T, z, basis, n_cols, max_iter)
        feas_tol = PIVOT_TOL * max(1.0, float(np.abs(b).max(initial=0.0)))
        if z[-1] < -feas_tol:
            raise Infeasible(f"phase 1 residual {-z[-1]:.3e}")
        # drive remaining zero-level artificials out of the basis
        keep = []
        for i in range(T.shape[0]):
            if basis[i] < art_start:
                keep.append(i)
                continue
            nz = np.flatnonzero(np.abs(T[i, :art_start]) > PIVOT_TOL)
            if nz.size == 0:
                continue  # redundant row
            _pivot(T, z, i, int(nz[0]))
            basis[i] = int(nz[0])
            keep.append(i)
        T = T[keep]
        basis = [basis[i] for i in keep]
        T = np.hstack([T[:, :art_start], T[:, -1:]])

    cost = np.zeros(art_start)
    cost[:n] = c
    z = _objective_row(T, basis, cost)
    iterations += _run(T, z, basis, art_start, max_iter)

    x = np.zeros(n)
    for i, j in enumerate(basis):
        if j < n:
            x[j] = T[i, -1]
    x = x + lp.lower
    value = float(lp.objective @ x)
    return LPSolution(value, x, iterations)


def _objective_row(T: np.ndarray, basis: Sequence[int], cost: np.ndarray) -> np.ndarray:
    """Reduced-cost row ``c_B B^-1 A - c`` with the current objective value last."""
    cb = cost[list(basis)]
    z = cb @ T
    z[:-1] -= cost
    return z
