"""AIP, NA and AWIP verdicts with certificates.

* AIP at a node: the current price lies in the convex hull of the child prices.
* NA at a node: the current price lies in the relative interior of that hull,
  i.e. it is a convex combination of *all* child prices with strictly
  positive weights.
* AWIP from time ``t``: some measure ``Q << P`` agreeing with ``P`` on the
  atoms of time ``t`` makes the price a martingale from ``t`` to ``T``.

Each question is a small feasibility LP.  Equality rows are divided by the
largest price magnitude so that the feasibility tolerance is scale-aware.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import lp
from .envelope import SampledFunction, concave_envelope_at
from .market import MarketTree, conditional_support

log = logging.getLogger(__name__)

ROW_TOL = 1e-8
RI_TOL = 1e-10


@dataclass(frozen=True)
class Certificate:
    """Evidence attached to a node verdict.

    kind is one of ``hull-weights`` (weights on the support points reproducing
    the current price), ``positive-weights`` (the same, all weights > 0),
    ``separating-slope`` (``theta`` with ``theta @ (z - y) >= margin > 0`` on
    the support) or ``none``.
    """

    kind: str
    weights: Optional[tuple[float, ...]] = None
    theta: Optional[tuple[float, ...]] = None
    margin: Optional[float] = None

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.weights is not None:
            out["weights"] = list(self.weights)
        if self.theta is not None:
            out["theta"] = list(self.theta)
            out["margin"] = self.margin
        return out


@dataclass(frozen=True)
class NodeVerdict:
    node: str
    aip: bool
    na: Optional[bool]
    certificate: Certificate
    support: tuple[tuple[float, ...], ...] = ()

    def to_dict(self) -> dict:
        return {"node": self.node, "aip": self.aip, "na": self.na,
                "certificate": self.certificate.to_dict()}


@dataclass
class AipReport:
    holds: bool
    failing: list[str]
    verdicts: dict[str, NodeVerdict] = field(default_factory=dict)


@dataclass(frozen=True)
class AwipCertificate:
    """Leaf weights ``w`` of a measure ``Q``; ``W(n)`` sums them under ``n``."""

    t: int
    leaf_weights: dict[str, float]

    def node_weight(self, tree: MarketTree, node: str) -> float:
        return float(sum(self.leaf_weights.get(leaf, 0.0) for leaf in tree.leaves(node)))

    def density(self, tree: MarketTree, node: str) -> float:
        """``rho = E(dQ/dP | F_u)`` on the atom ``node``."""
        return self.node_weight(tree, node) / tree.path_prob(node)

    def violation(self, tree: MarketTree) -> float:
        """Largest residual of the defining constraints, relative to price scale."""
        scale = max(1.0, tree.max_price())
        worst = 0.0
        for w in self.leaf_weights.values():
            worst = max(worst, -w)
        for a in tree.nodes_at(self.t):
            worst = max(worst, abs(self.node_weight(tree, a) - tree.path_prob(a)))
        for u in range(self.t, tree.horizon):
            for b in tree.nodes_at(u):
                lhs = sum(self.node_weight(tree, c) * tree.price(c) for c in tree.children(b))
                rhs = self.node_weight(tree, b) * tree.price(b)
                worst = max(worst, float(np.max(np.abs(lhs - rhs))) / scale)
        return worst


def _scale(points: np.ndarray, y: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(points))), float(np.max(np.abs(y))))


def _separating(points: np.ndarray, y: np.ndarray) -> Certificate:
    env = concave_envelope_at(SampledFunction(points, np.zeros(len(points))), y)
    theta = env.ray
    if theta is None:
        return Certificate("none")
    margin = float(np.min((points - y) @ theta))
    return Certificate("separating-slope", theta=tuple(float(t) for t in theta), margin=margin)


def check_aip_node(tree: MarketTree, node: str) -> NodeVerdict:
    """Is the price at ``node`` a convex combination of its child prices?"""
    support = conditional_support(tree, node)
    pts = support.as_array()
    y = tree.price(node)
    s = _scale(pts, y)
    n, d = pts.shape
    A = np.vstack([pts.T / s, np.ones((1, n))])
    out = lp.solve(lp.LinearProgram(np.zeros(n), A, [lp.EQ] * (d + 1), np.append(y / s, 1.0)),
                   feas_tol=ROW_TOL)
    if out.optimal:
        cert = Certificate("hull-weights", weights=tuple(float(w) for w in out.solution))
        return NodeVerdict(node, True, None, cert, support.points)
    return NodeVerdict(node, False, None, _separating(pts, y), support.points)


def check_na_node(tree: MarketTree, node: str) -> NodeVerdict:
    """Is the price at ``node`` in the relative interior of the hull of its child prices?

    Solves ``max t`` subject to ``lambda_i >= t``, ``sum lambda = 1`` and
    ``sum lambda_i (z_i - y) = 0``; NA holds when ``t* > 0``.
    """
    aip = check_aip_node(tree, node)
    if not aip.aip:
        return NodeVerdict(node, False, False, aip.certificate, aip.support)
    pts = np.asarray(aip.support, dtype=float)
    y = tree.price(node)
    n, d = pts.shape
    if n == 1:
        # the hull is the single point y, which is its own relative interior
        return NodeVerdict(node, True, True, Certificate("positive-weights", weights=(1.0,)), aip.support)
    s = _scale(pts, y)
    # variables: lambda_1..lambda_n, t ; minimise -t
    A = np.zeros((n + d + 1, n + 1))
    A[:n, :n] = np.eye(n)
    A[:n, n] = -1.0
    A[n:n + d, :n] = (pts - y).T / s
    A[n + d, :n] = 1.0
    rels = [lp.GE] * n + [lp.EQ] * (d + 1)
    b = np.concatenate([np.zeros(n + d), [1.0]])
    lower = np.append(np.zeros(n), -np.inf)
    upper = np.append(np.full(n, np.inf), 1.0)
    c = np.zeros(n + 1)
    c[n] = -1.0
    out = lp.solve(lp.LinearProgram(c, A, rels, b, lower, upper), feas_tol=ROW_TOL)
    if not out.optimal:
        log.warning("relative-interior LP at %s is %s although AIP holds", node, out.status.value)
        return NodeVerdict(node, True, False, aip.certificate, aip.support)
    t_star = float(out.solution[n])
    weights = tuple(float(w) for w in out.solution[:n])
    if t_star > RI_TOL:
        return NodeVerdict(node, True, True, Certificate("positive-weights", weights=weights), aip.support)
    return NodeVerdict(node, True, False, Certificate("hull-weights", weights=weights), aip.support)


def check_aip_global(tree: MarketTree, with_na: bool = False) -> AipReport:
    """AIP holds on the tree iff it holds at every non-leaf node."""
    verdicts = {}
    for nid in tree.internal_nodes():
        verdicts[nid] = check_na_node(tree, nid) if with_na else check_aip_node(tree, nid)
    failing = [nid for nid, v in verdicts.items() if not v.aip]
    return AipReport(not failing, failing, verdicts)


def check_na_global(tree: MarketTree) -> bool:
    return all(check_na_node(tree, nid).na for nid in tree.internal_nodes())


def check_awip(tree: MarketTree, t: int) -> Optional[AwipCertificate]:
    """Search for leaf weights of a measure ``Q`` making prices a martingale from ``t``.

    Constraints: weights are non-negative; the weight under every time-``t``
    atom equals its ``P``-probability; at every non-leaf node ``b`` with
    ``time >= t``, ``sum_c W(c) S(c) = W(b) S(b)``.
    """
    if not 0 <= t < tree.horizon:
        raise ValueError(f"t must lie in [0, {tree.horizon})")
    leaves = tree.leaves()
    col = {leaf: j for j, leaf in enumerate(leaves)}
    under = {}
    for u in range(tree.horizon, t - 1, -1):
        for nid in tree.nodes_at(u):
            if tree.is_leaf(nid):
                under[nid] = np.zeros(len(leaves))
                under[nid][col[nid]] = 1.0
            else:
                under[nid] = sum(under[c] for c in tree.children(nid))
    scale = max(1.0, tree.max_price())
    rows, rhs = [], []
    for a in tree.nodes_at(t):
        rows.append(under[a])
        rhs.append(tree.path_prob(a))
    for u in range(t, tree.horizon):
        for b in tree.nodes_at(u):
            kids = tree.children(b)
            for k in range(tree.dim):
                row = sum(under[c] * tree.price(c)[k] for c in kids) - under[b] * tree.price(b)[k]
                rows.append(row / scale)
                rhs.append(0.0)
    out = lp.solve(lp.LinearProgram(np.zeros(len(leaves)), np.array(rows), [lp.EQ] * len(rows),
                                    np.array(rhs)), feas_tol=ROW_TOL)
    if not out.optimal:
        return None
    return AwipCertificate(t, {leaf: float(out.solution[j]) for leaf, j in col.items()})


def check_awip_global(tree: MarketTree) -> dict[int, Optional[AwipCertificate]]:
    return {t: check_awip(tree, t) for t in range(tree.horizon)}
