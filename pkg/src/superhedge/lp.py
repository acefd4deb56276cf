"""Dense two-phase simplex with Bland's anti-cycling rule.

Problems solved here are tiny (a few hundred rows at most), so the solver
keeps a full tableau in a numpy array and favours robustness over speed.
Every problem is a minimisation::

    minimize    c @ x
    subject to  A[i] @ x  (<= | == | >=)  b[i]
                lower <= x <= upper          (bounds may be infinite)

An unbounded problem comes back with a recession direction ``ray`` such that
``c @ ray < 0`` and ``x + s * ray`` stays feasible for every ``s >= 0``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import FormatError, InternalError

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-9

LE, EQ, GE = "<=", "==", ">="
_RELATIONS = {LE: LE, "<": LE, EQ: EQ, "=": EQ, GE: GE, ">": GE}


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass
class LinearProgram:
    """``minimize c @ x`` over rows ``(A[i], relations[i], b[i])`` and box bounds.

    Bounds default to ``0 <= x < inf``; pass ``-np.inf`` / ``np.inf`` for free
    variables.
    """

    c: np.ndarray
    A: np.ndarray
    relations: Sequence[str]
    b: np.ndarray
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def __post_init__(self):
        self.c = np.atleast_1d(np.asarray(self.c, dtype=float))
        if self.c.ndim != 1:
            raise FormatError("objective must be a vector")
        n = self.c.shape[0]
        A = np.asarray(self.A, dtype=float)
        if A.size == 0:
            A = A.reshape(0, n)
        if A.ndim != 2 or A.shape[1] != n:
            raise FormatError(f"constraint matrix has shape {A.shape}, expected (m, {n})")
        self.A = A
        self.b = np.atleast_1d(np.asarray(self.b, dtype=float)).reshape(-1)
        if self.b.shape[0] != A.shape[0]:
            raise FormatError(f"{A.shape[0]} constraint rows but {self.b.shape[0]} right-hand sides")
        if len(self.relations) != A.shape[0]:
            raise FormatError(f"{A.shape[0]} constraint rows but {len(self.relations)} relations")
        try:
            self.relations = tuple(_RELATIONS[r] for r in self.relations)
        except KeyError as exc:
            raise FormatError(f"unknown relation {exc.args[0]!r}") from None
        self.lower = np.zeros(n) if self.lower is None else np.asarray(self.lower, dtype=float).reshape(-1)
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float).reshape(-1)
        if self.lower.shape[0] != n or self.upper.shape[0] != n:
            raise FormatError("bounds must have one entry per variable")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(A)) and np.all(np.isfinite(self.b))):
            raise FormatError("objective, matrix and right-hand side must be finite")
        if np.any(self.lower == np.inf) or np.any(self.upper == -np.inf):
            raise FormatError("lower bound +inf or upper bound -inf")

    @property
    def num_vars(self) -> int:
        return self.c.shape[0]

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    def violation(self, x) -> float:
        """Largest constraint or bound violation at ``x`` (0 when feasible)."""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        if self.num_rows:
            lhs = self.A @ x
            for v, rel, rhs in zip(lhs, self.relations, self.b):
                if rel == LE:
                    worst = max(worst, v - rhs)
                elif rel == GE:
                    worst = max(worst, rhs - v)
                else:
                    worst = max(worst, abs(v - rhs))
        worst = max(worst, float(np.max(self.lower - x, initial=0.0)))
        worst = max(worst, float(np.max(x - self.upper, initial=0.0)))
        return worst


@dataclass
class LpOutcome:
    status: Status
    solution: Optional[np.ndarray] = None
    objective_value: float = float("nan")
    ray: Optional[np.ndarray] = None
    iterations: int = field(default=0, compare=False)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


class _Tableau:
    def __init__(self, T: np.ndarray, rhs: np.ndarray, basis: list[int]):
        self.T = T
        self.rhs = rhs
        self.basis = basis
        self.iterations = 0

    def pivot(self, i: int, j: int) -> None:
        T = self.T
        piv = T[i, j]
        T[i] /= piv
        self.rhs[i] /= piv
        col = T[:, j].copy()
        col[i] = 0.0
        T -= np.outer(col, T[i])
        self.rhs -= col * self.rhs[i]
        T[:, j] = 0.0
        T[i, j] = 1.0
        self.basis[i] = j
        self.iterations += 1

    def run(self, cost: np.ndarray, allowed: np.ndarray, max_iter: int):
        """Primal simplex from the current basis; returns (status, entering col)."""
        while True:
            if self.iterations > max_iter:
                raise InternalError("simplex iteration limit reached")
            cb = cost[self.basis]
            reduced = cost - cb @ self.T if self.T.shape[0] else cost.copy()
            candidates = np.flatnonzero(allowed & (reduced < -PIVOT_TOL))
            if candidates.size == 0:
                return Status.OPTIMAL, None
            # Bland: lowest-index improving column
            j = int(candidates[0])
            column = self.T[:, j]
            rows = np.flatnonzero(column > PIVOT_TOL)
            if rows.size == 0:
                return Status.UNBOUNDED, j
            ratios = self.rhs[rows] / column[rows]
            best = ratios.min()
            tied = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
            # Bland: among ties, the row whose basic variable has lowest index
            i = int(min(tied, key=lambda r: self.basis[r]))
            self.pivot(i, j)


def solve(lp: LinearProgram, feas_tol: float = FEAS_TOL) -> LpOutcome:
    """Solve ``lp`` with the two-phase simplex method and Bland's rule."""
    n = lp.num_vars
    lo, hi = lp.lower, lp.upper
    if np.any(lo > hi):
        return LpOutcome(Status.INFEASIBLE)

    # Substitute x = offset + M @ x', x' >= 0.
    columns: list[tuple[int, float]] = []
    offset = np.zeros(n)
    range_rows: list[tuple[int, float]] = []
    for j in range(n):
        if np.isfinite(lo[j]):
            offset[j] = lo[j]
            columns.append((j, 1.0))
            if np.isfinite(hi[j]):
                range_rows.append((len(columns) - 1, hi[j] - lo[j]))
        elif np.isfinite(hi[j]):
            offset[j] = hi[j]
            columns.append((j, -1.0))
        else:
            columns.append((j, 1.0))
            columns.append((j, -1.0))
    k = len(columns)
    M = np.zeros((n, k))
    for col, (j, sign) in enumerate(columns):
        M[j, col] = sign

    A = lp.A @ M
    b = lp.b - lp.A @ offset
    rels = list(lp.relations)
    if range_rows:
        extra = np.zeros((len(range_rows), k))
        for r, (col, width) in enumerate(range_rows):
            extra[r, col] = 1.0
        A = np.vstack([A, extra])
        b = np.concatenate([b, [w for _, w in range_rows]])
        rels += [LE] * len(range_rows)
    cost = lp.c @ M
    m = A.shape[0]

    # Equality form with b >= 0.
    for i in range(m):
        if b[i] < 0:
            A[i] = -A[i]
            b[i] = -b[i]
            rels[i] = {LE: GE, GE: LE, EQ: EQ}[rels[i]]
    n_slack = sum(r != EQ for r in rels)
    n_art = sum(r != LE for r in rels)
    N = k + n_slack + n_art
    T = np.zeros((m, N))
    T[:, :k] = A
    basis = [0] * m
    s = k
    a = k + n_slack
    for i, rel in enumerate(rels):
        if rel == LE:
            T[i, s] = 1.0
            basis[i] = s
            s += 1
        else:
            if rel == GE:
                T[i, s] = -1.0
                s += 1
            T[i, a] = 1.0
            basis[i] = a
            a += 1
    tab = _Tableau(T, b.astype(float).copy(), basis)
    max_iter = 5000 + 50 * (m + N)
    is_art = np.zeros(N, dtype=bool)
    is_art[k + n_slack:] = True

    if n_art:
        phase1 = is_art.astype(float)
        status, _ = tab.run(phase1, np.ones(N, dtype=bool), max_iter)
        if status is not Status.OPTIMAL:
            raise InternalError("phase one cannot be unbounded")
        if float(phase1[tab.basis] @ tab.rhs) > feas_tol:
            return LpOutcome(Status.INFEASIBLE, iterations=tab.iterations)
        # Drive artificials out of the basis; drop rows that are redundant.
        keep = []
        for i in range(tab.T.shape[0]):
            if is_art[tab.basis[i]]:
                row = np.abs(tab.T[i]) * ~is_art
                j = int(np.argmax(row))
                if row[j] > PIVOT_TOL:
                    tab.rhs[i] = 0.0
                    tab.pivot(i, j)
                    keep.append(i)
            else:
                keep.append(i)
        if len(keep) < tab.T.shape[0]:
            tab.T = tab.T[keep]
            tab.rhs = tab.rhs[keep]
            tab.basis = [tab.basis[i] for i in keep]

    full_cost = np.zeros(N)
    full_cost[:k] = cost
    status, entering = tab.run(full_cost, ~is_art, max_iter)

    if status is Status.UNBOUNDED:
        direction = np.zeros(N)
        direction[entering] = 1.0
        for i, bv in enumerate(tab.basis):
            direction[bv] = -tab.T[i, entering]
        ray = M @ direction[:k]
        return LpOutcome(Status.UNBOUNDED, ray=ray + 0.0, objective_value=-np.inf,
                         iterations=tab.iterations)

    xs = np.zeros(N)
    for i, bv in enumerate(tab.basis):
        xs[bv] = max(tab.rhs[i], 0.0)
    x = offset + M @ xs[:k]
    return LpOutcome(Status.OPTIMAL, solution=x + 0.0, objective_value=float(lp.c @ x) + 0.0,
                     iterations=tab.iterations)
