"""Random market generators and the shipped example corpus.

Randomised generation is seeded from the ``APP_SEED`` environment variable
when it is set.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Optional

import numpy as np

from .market import (MarketTree, Node, binomial_tree, calibrate_multipliers, save_market,
                     tree_from_children)
from .payoff import PayoffSpec

DEFAULT_SEED = 20240601
GRID = (0.5, 0.8, 1.0, 1.25, 1.5)
SAMPLE_SERIES = (
    ("2024-01-02", 100.0), ("2024-01-03", 101.5), ("2024-01-04", 99.8), ("2024-01-05", 100.6),
    ("2024-01-08", 102.3), ("2024-01-09", 101.1), ("2024-01-10", 103.0), ("2024-01-11", 102.2),
    ("2024-01-12", 104.1), ("2024-01-15", 103.4),
)
SAMPLE_WINDOW = 5


def seed_from_env(default: int = DEFAULT_SEED) -> int:
    raw = os.environ.get("APP_SEED")
    return default if raw in (None, "") else int(raw)


def make_rng(offset: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed_from_env() + offset)


def _probs(rng, n):
    w = rng.uniform(0.2, 1.0, size=n)
    p = w / w.sum()
    p[-1] = 1.0 - p[:-1].sum()
    return p


def _children(rng, y, n, dim, aip, grid):
    if grid:
        kids = y * rng.choice(GRID, size=(n, dim))
    else:
        kids = y * rng.uniform(0.6, 1.5, size=(n, dim))
    if not aip:
        return kids
    if n == 1:
        return y.reshape(1, dim).copy()
    if dim == 1 and kids.min() <= y[0] <= kids.max():
        return kids
    # put y on the segment between the mean of the others and the last child
    mean = kids[:-1].mean(axis=0)
    step = y - mean
    limit = 1.0
    for k in range(dim):
        if step[k] < 0:
            limit = min(limit, y[k] / -step[k])
    kids[-1] = np.maximum(y + limit * rng.uniform(0.3, 1.0) * step, 0.0)
    return kids


def random_tree(rng: np.random.Generator, horizon: Optional[int] = None, max_horizon: int = 4,
                max_branch: int = 4, dim: int = 1, aip: bool = False, grid: bool = True,
                s0: Optional[np.ndarray] = None, max_leaves: Optional[int] = None) -> MarketTree:
    """Random event tree.

    ``grid`` draws child/parent ratios from a small set containing 1, which
    produces ties and boundary cases; ``aip`` forces every node's price into
    the hull of its children.
    """
    T = int(rng.integers(1, max_horizon + 1)) if horizon is None else horizon
    y0 = rng.uniform(50.0, 150.0, size=dim) if s0 is None else np.asarray(s0, dtype=float)
    if grid:
        y0 = np.round(y0)
    nodes = [Node("n0", 0, tuple(float(v) for v in y0), None, 1.0)]
    frontier = [("n0", y0)]
    counter = 1
    for t in range(1, T + 1):
        nxt = []
        for j, (nid, y) in enumerate(frontier):
            budget = max_branch
            if max_leaves is not None:
                # reserve one child for each remaining node on this level
                room = max_leaves - len(nxt) - (len(frontier) - j - 1)
                budget = max(1, min(max_branch, room))
            n = int(rng.integers(1, budget + 1))
            kids = _children(rng, y, n, dim, aip, grid)
            for price, p in zip(kids, _probs(rng, n)):
                cid = f"n{counter}"
                counter += 1
                nodes.append(Node(cid, t, tuple(float(v) for v in price), nid, float(p)))
                nxt.append((cid, price))
        frontier = nxt
    return MarketTree(nodes, dim=dim, horizon=T)


def random_leaf_payoff(rng: np.random.Generator, tree: MarketTree, low: float = 0.0,
                       high: float = 50.0) -> PayoffSpec:
    return PayoffSpec.leaf({leaf: float(rng.uniform(low, high)) for leaf in tree.leaves()})


def build_corpus() -> dict[str, MarketTree]:
    """The example markets shipped in ``corpus/``."""
    out = {
        "binomial_2step": binomial_tree(100.0, [(0.9, 1.1), (0.9, 1.1)]),
        "binomial_3step_skewed": binomial_tree(100.0, [(0.95, 1.2), (1.0, 1.1), (0.8, 1.05)]),
        "one_step_80_120": tree_from_children([100.0], [[80.0], [120.0]]),
        "ip_root": tree_from_children([80.0], [[90.0], [120.0]]),
        "na_fails_boundary": tree_from_children([0.0], [[0.0], [0.25], [0.5], [1.0]]),
        "awip_not_na": tree_from_children([1.0], [[1.0], [2.0]]),
        "degenerate": tree_from_children([5.0], [[5.0]]),
        "two_assets": tree_from_children([100.0, 50.0], [[120.0, 40.0], [90.0, 60.0], [95.0, 50.0]],
                                         probs=[0.3, 0.3, 0.4]),
    }
    out["ip_inner"] = MarketTree([
        Node("r", 0, (100.0,), None, 1.0),
        Node("a", 1, (90.0,), "r", 0.3),
        Node("b", 1, (100.0,), "r", 0.4),
        Node("c", 1, (120.0,), "r", 0.3),
        Node("aa", 2, (85.0,), "a", 0.5),
        Node("ab", 2, (95.0,), "a", 0.5),
        Node("ba", 2, (110.0,), "b", 0.5),
        Node("bb", 2, (130.0,), "b", 0.5),
        Node("ca", 2, (120.0,), "c", 1.0),
    ], dim=1, horizon=2)
    rng = np.random.default_rng(DEFAULT_SEED)
    for i in range(3):
        out[f"random_aip_{i}"] = random_tree(rng, horizon=3, max_branch=3, dim=1 + (i == 2), aip=True)
    tree = random_tree(rng, horizon=3, max_branch=3, dim=1, aip=False)
    while len(tree.leaves()) < 6:
        tree = random_tree(rng, horizon=3, max_branch=3, dim=1, aip=False)
    out["random_any_0"] = tree
    last = calibrate_multipliers([p for _, p in SAMPLE_SERIES], SAMPLE_WINDOW)[-1]
    out["calibrated_3step"] = binomial_tree(SAMPLE_SERIES[-1][1], [last] * 3)
    return out


def write_corpus(directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, tree in build_corpus().items():
        path = directory / f"{name}.json"
        save_market(tree, path)
        written.append(path)
    path = directory / "prices_sample.csv"
    path.write_text("date,price\n" + "".join(f"{d},{p!r}\n" for d, p in SAMPLE_SERIES), encoding="utf-8")
    written.append(path)
    return written
