"""Finite filtered markets as event trees.

A :class:`MarketTree` holds one node per atom of the filtration.  Each node
carries the prices of the ``d`` risky assets on that atom and the probability
of moving there from its parent; the riskless asset is the constant 1.
Conditional objects (supports, essential bounds, conditional suprema) are
computed per node from its children.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping, Optional, Sequence

import numpy as np

from .errors import (
    CalibrationError,
    DimensionError,
    NoSuccessors,
    ParseError,
    ValidationError,
)

PROB_TOL = 1e-12


@dataclass(frozen=True)
class Node:
    id: str
    time: int
    price: tuple[float, ...]
    parent: Optional[str]
    transition_prob: float = 1.0

    @property
    def price_array(self) -> np.ndarray:
        return np.asarray(self.price, dtype=float)


class MarketTree:
    """Event tree with non-negative prices and positive transition probabilities.

    The tree is validated on construction and treated as immutable afterwards.
    All leaves sit at time ``horizon``.
    """

    def __init__(self, nodes: Iterable[Node], dim: int, horizon: Optional[int] = None):
        self.dim = int(dim)
        self._nodes: dict[str, Node] = {}
        for node in nodes:
            if node.id in self._nodes:
                raise ValidationError(f"duplicate node id {node.id!r}")
            self._nodes[node.id] = node
        if not self._nodes:
            raise ValidationError("a market needs at least a root node")
        self.horizon = max(n.time for n in self._nodes.values()) if horizon is None else int(horizon)
        self._children: dict[str, list[str]] = {nid: [] for nid in self._nodes}
        self._validate()
        self._by_time: list[list[str]] = [[] for _ in range(self.horizon + 1)]
        for n in self._nodes.values():
            self._by_time[n.time].append(n.id)
        self._path_prob: dict[str, float] = {}
        for t in range(self.horizon + 1):
            for nid in self._by_time[t]:
                n = self._nodes[nid]
                base = 1.0 if n.parent is None else self._path_prob[n.parent]
                self._path_prob[nid] = base * n.transition_prob

    def _validate(self) -> None:
        if self.dim < 1:
            raise ValidationError("dim must be >= 1")
        if self.horizon < 1:
            raise ValidationError("horizon must be >= 1")
        roots = [n for n in self._nodes.values() if n.parent is None]
        if len(roots) != 1:
            raise ValidationError(f"expected exactly one root, found {len(roots)}")
        self._root = roots[0].id
        if roots[0].time != 0:
            raise ValidationError(f"root {self._root!r} must be at time 0")
        for n in self._nodes.values():
            if len(n.price) != self.dim:
                raise ValidationError(f"node {n.id!r}: price has {len(n.price)} entries, dim is {self.dim}")
            if not all(math.isfinite(p) for p in n.price):
                raise ValidationError(f"node {n.id!r}: prices must be finite")
            if any(p < 0 for p in n.price):
                raise ValidationError(f"node {n.id!r}: negative price")
            if not (0 <= n.time <= self.horizon):
                raise ValidationError(f"node {n.id!r}: time {n.time} outside [0, {self.horizon}]")
            if not (0.0 < n.transition_prob <= 1.0):
                raise ValidationError(f"node {n.id!r}: transition probability must lie in (0, 1]")
            if n.parent is not None:
                if n.parent not in self._nodes:
                    raise ValidationError(f"node {n.id!r}: unknown parent {n.parent!r}")
                if self._nodes[n.parent].time != n.time - 1:
                    raise ValidationError(f"node {n.id!r}: time must be parent time + 1")
                self._children[n.parent].append(n.id)
        for nid, kids in self._children.items():
            node = self._nodes[nid]
            if not kids:
                if node.time != self.horizon:
                    raise ValidationError(f"leaf {nid!r} at time {node.time}, horizon is {self.horizon}")
                continue
            total = math.fsum(self._nodes[c].transition_prob for c in kids)
            if abs(total - 1.0) > PROB_TOL:
                raise ValidationError(f"node {nid!r}: transition probabilities sum to {total!r}")

    # -- navigation -----------------------------------------------------

    @property
    def root(self) -> str:
        return self._root

    def __len__(self) -> int:
        return len(self._nodes)

    def __iter__(self) -> Iterator[Node]:
        return iter(self._nodes.values())

    def __contains__(self, node_id) -> bool:
        return node_id in self._nodes

    def node(self, node_id: str) -> Node:
        return self._nodes[node_id]

    def price(self, node_id: str) -> np.ndarray:
        return self._nodes[node_id].price_array

    def children(self, node_id: str) -> list[str]:
        return list(self._children[node_id])

    def is_leaf(self, node_id: str) -> bool:
        return not self._children[node_id]

    def nodes_at(self, t: int) -> list[str]:
        return list(self._by_time[t])

    def leaves(self, under: Optional[str] = None) -> list[str]:
        if under is None:
            return self.nodes_at(self.horizon)
        out, stack = [], [under]
        while stack:
            nid = stack.pop()
            kids = self._children[nid]
            if kids:
                stack.extend(reversed(kids))
            else:
                out.append(nid)
        return out

    def internal_nodes(self) -> list[str]:
        return [nid for t in range(self.horizon) for nid in self._by_time[t]]

    def path_prob(self, node_id: str) -> float:
        """Unconditional probability of the atom ``node_id``."""
        return self._path_prob[node_id]

    def path(self, node_id: str) -> list[str]:
        """Node ids from the root down to ``node_id``."""
        out = [node_id]
        while self._nodes[out[-1]].parent is not None:
            out.append(self._nodes[out[-1]].parent)
        return out[::-1]

    def max_price(self) -> float:
        return max(max(n.price) for n in self._nodes.values())

    def summary(self) -> dict:
        return {"nodes": len(self), "horizon": self.horizon, "dim": self.dim,
                "leaves": len(self._by_time[self.horizon])}

    def __eq__(self, other) -> bool:
        if not isinstance(other, MarketTree):
            return NotImplemented
        return (self.dim, self.horizon) == (other.dim, other.horizon) and self._nodes == other._nodes

    def __repr__(self) -> str:
        return f"MarketTree(nodes={len(self)}, horizon={self.horizon}, dim={self.dim})"


@dataclass(frozen=True)
class SupportSet:
    """Distinct child prices of ``owner``, in first-seen order."""

    points: tuple[tuple[float, ...], ...]
    owner: str

    @property
    def dim(self) -> int:
        return len(self.points[0])

    def as_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)

    def __len__(self) -> int:
        return len(self.points)

    def __contains__(self, point) -> bool:
        return tuple(float(p) for p in np.atleast_1d(point)) in self.points


@dataclass(frozen=True)
class EssentialBounds:
    essinf: float
    esssup: float

    def __post_init__(self):
        if not self.essinf <= self.esssup:
            raise ValueError(f"essinf {self.essinf} exceeds esssup {self.esssup}")

    def contains(self, y: float) -> bool:
        return self.essinf <= y <= self.esssup


def conditional_support(tree: MarketTree, node: str) -> SupportSet:
    """Conditional support of next-period prices given the atom ``node``.

    Duplicate child prices are merged by exact value; no tolerance is applied.
    """
    kids = tree.children(node)
    if not kids:
        raise NoSuccessors(f"node {node!r} is a leaf")
    seen: dict[tuple[float, ...], None] = {}
    for c in kids:
        seen.setdefault(tree.node(c).price, None)
    return SupportSet(tuple(seen), node)


def essential_bounds(support: SupportSet) -> EssentialBounds:
    if support.dim != 1:
        raise DimensionError(f"essential bounds need d = 1, support has d = {support.dim}")
    values = [p[0] for p in support.points]
    return EssentialBounds(min(values), max(values))


def conditional_esssup_of_function(support: SupportSet, h: Callable) -> float:
    """Conditional essential supremum of ``h(Y)``: the plain max of ``h`` over the support."""
    return max(float(h(np.asarray(p, dtype=float))) for p in support.points)


# -- serialisation -------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def dumps_market(tree: MarketTree) -> str:
    lines = ["{", f'  "dim": {tree.dim},', f'  "horizon": {tree.horizon},', '  "nodes": [']
    rows = []
    for n in tree:
        price = ", ".join(_fmt(p) for p in n.price)
        parent = "null" if n.parent is None else json.dumps(n.parent)
        rows.append(f'    {{"id": {json.dumps(n.id)}, "time": {n.time}, "price": [{price}], '
                    f'"parent": {parent}, "prob": {_fmt(n.transition_prob)}}}')
    lines.append(",\n".join(rows))
    lines += ["  ]", "}"]
    return "\n".join(lines) + "\n"


def save_market(tree: MarketTree, path) -> None:
    Path(path).write_text(dumps_market(tree), encoding="utf-8")


def _number(value, node_id, field_name) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError("expected a number", node_id, field_name)
    return float(value)


def market_from_dict(doc: Mapping) -> MarketTree:
    if not isinstance(doc, Mapping):
        raise ParseError("top level must be an object")
    for key in ("dim", "horizon", "nodes"):
        if key not in doc:
            raise ParseError("missing key", field=key)
    dim, horizon = doc["dim"], doc["horizon"]
    if isinstance(dim, bool) or not isinstance(dim, int):
        raise ParseError("expected an integer", field="dim")
    if isinstance(horizon, bool) or not isinstance(horizon, int):
        raise ParseError("expected an integer", field="horizon")
    if not isinstance(doc["nodes"], list):
        raise ParseError("expected a list", field="nodes")
    nodes = []
    for i, raw in enumerate(doc["nodes"]):
        if not isinstance(raw, Mapping):
            raise ParseError(f"node entry {i} is not an object", field="nodes")
        nid = raw.get("id")
        if not isinstance(nid, str):
            raise ParseError(f"node entry {i} lacks a string id", node_id=nid, field="id")
        for key in ("time", "price", "parent", "prob"):
            if key not in raw:
                raise ParseError("missing key", nid, key)
        time = raw["time"]
        if isinstance(time, bool) or not isinstance(time, int):
            raise ParseError("expected an integer", nid, "time")
        price = raw["price"]
        if not isinstance(price, list):
            raise ParseError("expected a list of numbers", nid, "price")
        if len(price) != dim:
            raise ParseError(f"expected {dim} prices", nid, "price")
        parent = raw["parent"]
        if parent is not None and not isinstance(parent, str):
            raise ParseError("expected a string or null", nid, "parent")
        nodes.append(Node(nid, time, tuple(_number(p, nid, "price") for p in price), parent,
                          _number(raw["prob"], nid, "prob")))
    return MarketTree(nodes, dim=dim, horizon=horizon)


def loads_market(text: str) -> MarketTree:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    return market_from_dict(doc)


def load_market(path) -> MarketTree:
    return loads_market(Path(path).read_text(encoding="utf-8"))


# -- builders and calibration ---------------------------------------------

def tree_from_children(price0: Sequence[float], levels: Sequence, probs=None) -> MarketTree:
    """Small helper for one-step trees: ``levels`` is the list of child prices."""
    p0 = tuple(float(v) for v in np.atleast_1d(price0))
    dim = len(p0)
    n = len(levels)
    probs = [1.0 / n] * n if probs is None else list(probs)
    nodes = [Node("root", 0, p0, None, 1.0)]
    for i, (lvl, pr) in enumerate(zip(levels, probs)):
        nodes.append(Node(f"c{i}", 1, tuple(float(v) for v in np.atleast_1d(lvl)), "root", float(pr)))
    return MarketTree(nodes, dim=dim, horizon=1)


def binomial_tree(s0: float, multipliers: Sequence[tuple[float, float]], p_up: float = 0.5) -> MarketTree:
    """Full binary tree with S_t = S_{t-1} * k^d_{t-1} or S_{t-1} * k^u_{t-1}.

    Prices recombine but nodes do not: each node keeps its own parent.
    """
    nodes = [Node("r", 0, (float(s0),), None, 1.0)]
    frontier = [("r", float(s0))]
    for t, (kd, ku) in enumerate(multipliers, start=1):
        if not (math.isfinite(kd) and math.isfinite(ku)):
            raise ValidationError("an explicit tree needs finite multipliers")
        nxt = []
        for nid, s in frontier:
            for tag, k, pr in (("d", kd, 1.0 - p_up), ("u", ku, p_up)):
                cid = nid + tag
                nodes.append(Node(cid, t, (s * k,), nid, pr))
                nxt.append((cid, s * k))
        frontier = nxt
    return MarketTree(nodes, dim=1, horizon=len(multipliers))


def read_price_series(path) -> list[float]:
    """Read a ``date,price`` CSV."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty CSV file") from None
        if [h.strip().lower() for h in header] != ["date", "price"]:
            raise ParseError(f"expected header 'date,price', got {','.join(header)!r}")
        prices = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ParseError(f"line {lineno}: expected 2 columns")
            try:
                prices.append(float(row[1]))
            except ValueError:
                raise ParseError(f"line {lineno}: price {row[1]!r} is not a number") from None
    return prices


def calibrate_multipliers(series: Sequence[float], window: int) -> list[tuple[float, float]]:
    """Rolling min / max of one-step price ratios.

    Entry ``i`` uses the ratios ``S_u / S_{u-1}`` for the ``window`` steps
    ending at ``u = i + window``.
    """
    s = np.asarray(series, dtype=float)
    if window < 1:
        raise CalibrationError("window must be >= 1")
    if s.ndim != 1 or s.size < window + 1:
        raise CalibrationError(f"need at least {window + 1} prices, got {s.size}")
    if not np.all(np.isfinite(s)) or np.any(s <= 0):
        raise CalibrationError("prices must be strictly positive")
    ratios = s[1:] / s[:-1]
    out = []
    for i in range(ratios.size - window + 1):
        w = ratios[i:i + window]
        out.append((float(w.min()), float(w.max())))
    return out
