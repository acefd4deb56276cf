"""Brute-force validators for the pricing and diagnostics modules.

Nothing here calls into :mod:`envelope`, :mod:`pricing` or
:mod:`diagnostics`; the routines reach the same answers through different
formulations (slope enumeration, one LP over the whole strategy space, sign
analysis, vertex enumeration).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import lp
from .errors import SizeError
from .market import MarketTree
from .payoff import PayoffSpec

MAX_PATHS = 1024
MAX_AWIP_LEAVES = 8


@dataclass(frozen=True)
class OracleResult:
    value: float
    method: str


def oracle_one_step_1d(points: Sequence[float], values: Sequence[float], y: float) -> OracleResult:
    """Minimise ``max_i (g_i - theta (z_i - y))`` over candidate slopes.

    The objective is convex and piecewise linear in ``theta`` with kinks at
    pairwise difference quotients, so a minimiser lies among those (plus 0 for
    a single support point).
    """
    z = np.asarray(points, dtype=float).reshape(-1)
    g = np.asarray(values, dtype=float).reshape(-1)
    if y < z.min() or y > z.max():
        return OracleResult(-math.inf, "slope-enum")
    candidates = {0.0}
    for i, j in itertools.combinations(range(z.size), 2):
        if z[i] != z[j]:
            candidates.add(float((g[i] - g[j]) / (z[i] - z[j])))
    best = min(float(np.max(g - th * (z - y))) for th in candidates)
    return OracleResult(best, "slope-enum")


def _leaf_value(tree: MarketTree, payoff, leaf: str) -> float:
    if isinstance(payoff, PayoffSpec):
        return float(payoff(tree.price(leaf), leaf))
    return float(payoff(tree.price(leaf)))


def oracle_full_horizon(tree: MarketTree, payoff: Union[PayoffSpec, Callable],
                        node: Optional[str] = None) -> OracleResult:
    """Minimal super-replication cost at ``node`` (default: root) as a single LP.

    Variables: the initial capital ``x`` and a holding ``theta_n`` in R^d for
    every non-leaf node ``n`` of the subtree.  One constraint per leaf:
    ``x + sum_{n on path} theta_n @ (S_child - S_n) >= g(leaf)``.
    """
    start = tree.root if node is None else node
    leaves = tree.leaves(start)
    if len(leaves) > MAX_PATHS:
        raise SizeError(f"{len(leaves)} paths exceed the oracle budget of {MAX_PATHS}")
    if tree.is_leaf(start):
        return OracleResult(_leaf_value(tree, payoff, start), "full-lp")
    d = tree.dim
    internal = []
    stack = [start]
    while stack:
        nid = stack.pop()
        if not tree.is_leaf(nid):
            internal.append(nid)
            stack.extend(tree.children(nid))
    offset = {nid: 1 + d * k for k, nid in enumerate(internal)}
    nvar = 1 + d * len(internal)
    A = np.zeros((len(leaves), nvar))
    b = np.zeros(len(leaves))
    for r, leaf in enumerate(leaves):
        A[r, 0] = 1.0
        path = tree.path(leaf)
        path = path[path.index(start):]
        for parent, child in zip(path, path[1:]):
            o = offset[parent]
            A[r, o:o + d] = tree.price(child) - tree.price(parent)
        b[r] = _leaf_value(tree, payoff, leaf)
    c = np.zeros(nvar)
    c[0] = 1.0
    out = lp.solve(lp.LinearProgram(c, A, [lp.GE] * len(leaves), b,
                                    lower=np.full(nvar, -np.inf), upper=np.full(nvar, np.inf)))
    if out.status is lp.Status.UNBOUNDED:
        return OracleResult(-math.inf, "full-lp")
    return OracleResult(out.objective_value, "full-lp")


def oracle_na(tree: MarketTree, node: str) -> bool:
    """Does no strategy at ``node`` gain ``>= 0`` on every child and ``> 0`` on one?"""
    y = tree.price(node)
    diffs = np.array([tree.price(c) - y for c in tree.children(node)])
    if tree.dim == 1:
        x = diffs[:, 0]
        if np.all(x >= 0) and np.any(x > 0):
            return False
        if np.all(x <= 0) and np.any(x < 0):
            return False
        return True
    # maximise total gain over theta in [-1, 1]^d with every gain >= 0
    scale = max(1.0, float(np.max(np.abs(diffs))))
    D = diffs / scale
    out = lp.solve(lp.LinearProgram(-D.sum(axis=0), D, [lp.GE] * len(D), np.zeros(len(D)),
                                    lower=-np.ones(tree.dim), upper=np.ones(tree.dim)))
    return -out.objective_value <= 1e-9


def oracle_awip_tiny(tree: MarketTree, t: int, tol: float = 1e-9) -> bool:
    """AWIP from time ``t`` by enumerating basic solutions of the weight polytope."""
    leaves = tree.leaves()
    if len(leaves) > MAX_AWIP_LEAVES:
        raise SizeError(f"{len(leaves)} leaves exceed the enumeration budget of {MAX_AWIP_LEAVES}")
    index = {leaf: j for j, leaf in enumerate(leaves)}

    def indicator(nid):
        v = np.zeros(len(leaves))
        for leaf in tree.leaves(nid):
            v[index[leaf]] = 1.0
        return v

    rows, rhs = [], []
    for a in tree.nodes_at(t):
        rows.append(indicator(a))
        rhs.append(tree.path_prob(a))
    scale = max(1.0, tree.max_price())
    for u in range(t, tree.horizon):
        for b in tree.nodes_at(u):
            for k in range(tree.dim):
                row = -indicator(b) * tree.price(b)[k]
                for c in tree.children(b):
                    row = row + indicator(c) * tree.price(c)[k]
                rows.append(row / scale)
                rhs.append(0.0)
    A = np.array(rows)
    rhs = np.array(rhs)
    n = len(leaves)
    for size in range(1, n + 1):
        for cols in itertools.combinations(range(n), size):
            sub = A[:, cols]
            if np.linalg.matrix_rank(sub) < size:
                continue
            w, *_ = np.linalg.lstsq(sub, rhs, rcond=None)
            if np.all(w >= -tol) and np.max(np.abs(sub @ w - rhs)) <= 1e-8:
                return True
    return False
