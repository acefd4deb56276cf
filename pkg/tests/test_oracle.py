from __future__ import annotations

import math

import numpy as np
import pytest

from superhedge.corpus import random_leaf_payoff, random_tree
from superhedge.envelope import SampledFunction, concave_envelope_at
from superhedge.errors import SizeError
from superhedge.market import MarketTree, Node, binomial_tree, tree_from_children
from superhedge.oracle import (
    MAX_PATHS,
    oracle_awip_tiny,
    oracle_full_horizon,
    oracle_na,
    oracle_one_step_1d,
)
from superhedge.payoff import PayoffSpec


def test_one_step_examples():
    assert oracle_one_step_1d([80, 120], [0, 20], 100).value == pytest.approx(10.0)
    assert oracle_one_step_1d([80, 100, 120], [1, 3, 5], 90).value == pytest.approx(2.0)
    assert oracle_one_step_1d([80, 100, 120], [0, 0, 0], 110).value == 0.0
    assert oracle_one_step_1d([90, 120], [0, 0], 80).value == -math.inf
    assert oracle_one_step_1d([90, 120], [0, 0], 80).method == "slope-enum"


def test_one_step_matches_envelope(rng):
    for _ in range(5000):
        n = int(rng.integers(1, 6))
        z = rng.integers(0, 20, n).astype(float) * 5
        g = rng.normal(scale=10, size=n).round(3)
        y = float(rng.uniform(z.min(), z.max())) if rng.random() < 0.85 else float(rng.choice(z))
        env = concave_envelope_at(SampledFunction(z, g), y)
        # duplicate abscissae: the envelope sees the larger value, and so does the max inside the oracle
        assert oracle_one_step_1d(z, g, y).value == pytest.approx(env.value, abs=1e-8)


def test_full_horizon_one_step_equals_one_step(call_tree):
    p = PayoffSpec.call(100)
    assert oracle_full_horizon(call_tree, p).value == pytest.approx(oracle_one_step_1d([80, 120], [0, 20], 100).value)


def test_full_horizon_binomial_call(binomial2):
    # hand backward induction: up node 110 -> (21 - 0) / (121 - 99) slope, value 10.5; root 0.5 * 10.5 = 5.25
    assert oracle_full_horizon(binomial2, PayoffSpec.call(100)).value == pytest.approx(5.25, abs=1e-12)


def test_full_horizon_ip_tree():
    tree = tree_from_children([80.0], [[90.0], [120.0]])
    assert oracle_full_horizon(tree, PayoffSpec.call(100)).value == -math.inf


def test_full_horizon_subtree_and_leaf(binomial2):
    p = PayoffSpec.call(100)
    assert oracle_full_horizon(binomial2, p, "ru").value == pytest.approx(10.5)
    assert oracle_full_horizon(binomial2, p, "ruu").value == pytest.approx(21.0)


def test_full_horizon_size_budget():
    tree = binomial_tree(100.0, [(0.9, 1.1)] * 11)
    assert len(tree.leaves()) > MAX_PATHS
    with pytest.raises(SizeError):
        oracle_full_horizon(tree, PayoffSpec.call(100))


@pytest.mark.parametrize("children, y, expected", [
    ([0.0, 0.25, 0.5, 1.0], 0.0, False),
    ([90.0, 120.0], 100.0, True),
    ([7.0], 7.0, True),
    ([7.0, 7.0], 7.0, True),
    ([90.0, 120.0], 80.0, False),
])
def test_na_examples(children, y, expected):
    tree = tree_from_children([y], [[c] for c in children])
    assert oracle_na(tree, "root") is expected


def test_na_two_assets():
    tree = tree_from_children([1.0, 1.0], [[2.0, 1.0], [0.0, 1.0], [1.0, 2.0]])
    # asset 2 never falls: buying it gains on one child and never loses
    assert oracle_na(tree, "root") is False
    tree = tree_from_children([1.0, 1.0], [[2.0, 1.0], [0.0, 1.0], [1.0, 2.0], [1.0, 0.0]])
    assert oracle_na(tree, "root") is True


def test_awip_tiny_examples():
    assert oracle_awip_tiny(tree_from_children([1.0], [[1.0], [2.0]]), 0) is True
    assert oracle_awip_tiny(tree_from_children([1.0], [[1.5], [2.0]]), 0) is False
    assert oracle_awip_tiny(binomial_tree(100.0, [(0.9, 1.1)] * 2), 0) is True
    assert oracle_awip_tiny(binomial_tree(100.0, [(0.9, 1.1)] * 2), 1) is True


def test_awip_tiny_budget():
    with pytest.raises(SizeError):
        oracle_awip_tiny(binomial_tree(100.0, [(0.9, 1.1)] * 4), 0)


def test_full_horizon_deterministic(rng):
    tree = random_tree(rng, horizon=3, max_branch=3)
    p = random_leaf_payoff(rng, tree)
    assert oracle_full_horizon(tree, p) == oracle_full_horizon(tree, p)
