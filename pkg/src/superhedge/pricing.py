"""Super-hedging costs and strategies on finite trees and binomial schemes.

One step: the cost at a node is the relative concave envelope of the
children's values, read at the node's price; the hedge is the slope of the
optimal affine majorant.  Several steps: dynamic programming from the leaves.

A child whose value is ``-inf`` (an instantaneous profit below it) imposes no
constraint on its parent, since any amount can be reached there from any
capital.  The parent is therefore priced over its remaining children and
becomes ``-inf`` only if its price leaves their hull.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from .diagnostics import check_aip_global
from .envelope import AffineMajorant, SampledFunction, concave_envelope_at
from .errors import InternalError, IpDetected, PayoffError, ValidationError
from .market import EssentialBounds, MarketTree, Node, conditional_support
from .payoff import PayoffSpec

NEG_INF = -math.inf


@dataclass(frozen=True)
class PriceResult:
    """Infimum super-hedging cost at one node.

    When ``value`` is finite, ``value + hedge @ (z - y) >= g(z)`` on the
    support.  When it is ``-inf``, ``ip_theta`` (if known) is a unit strategy
    with ``ip_theta @ (z - y) > 0`` for every relevant child price ``z``.
    """

    value: float
    hedge: Optional[np.ndarray] = None
    majorant: Optional[AffineMajorant] = None
    attained: bool = True
    ip_theta: Optional[np.ndarray] = None

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)


@dataclass
class ValueSurface:
    tree: MarketTree
    results: dict[str, PriceResult] = field(default_factory=dict)

    def __getitem__(self, node: str) -> PriceResult:
        return self.results[node]

    def value(self, node: str) -> float:
        return self.results[node].value

    @property
    def root(self) -> PriceResult:
        return self.results[self.tree.root]

    def ip_nodes(self) -> list[str]:
        return [nid for nid, r in self.results.items() if not r.finite]

    def rows(self):
        """``(time, node, value, theta_1..theta_d)`` rows, time-major."""
        d = self.tree.dim
        for t in range(self.tree.horizon + 1):
            for nid in self.tree.nodes_at(t):
                r = self.results[nid]
                theta = [math.nan] * d if r.hedge is None else [float(h) for h in r.hedge]
                yield (t, nid, r.value, *theta)


# -- one step and backward induction --------------------------------------

def price_one_step(tree: MarketTree, node: str, child_values: Mapping[str, float]) -> PriceResult:
    """Cheapest one-step super-hedge at ``node`` of the given child values.

    Children sharing a price are reduced to their largest value.
    """
    support = conditional_support(tree, node)
    best: dict[tuple, float] = {}
    for c in tree.children(node):
        v = float(child_values[c])
        if math.isnan(v) or v == math.inf:
            raise ValueError(f"child {c!r} has value {v}")
        if v == NEG_INF:
            continue
        key = tree.node(c).price
        best[key] = max(best.get(key, NEG_INF), v)
    y = tree.price(node)
    if not best:
        return PriceResult(NEG_INF, attained=False)
    pts = [p for p in support.points if p in best]
    g = SampledFunction(np.asarray(pts, dtype=float), np.array([best[p] for p in pts]))
    env = concave_envelope_at(g, y)
    if not env.member_of_hull:
        return PriceResult(NEG_INF, attained=False, ip_theta=env.ray)
    m = env.majorant
    # with y in the hull the cost lies between the smallest and largest child value;
    # clamping only removes rounding drift of alpha @ y + beta
    value = min(max(env.value, float(g.values.min())), float(g.values.max()))
    return PriceResult(value, hedge=m.slope.copy(), majorant=m, attained=True)


def _terminal_values(tree: MarketTree, payoff: Union[PayoffSpec, Callable]) -> dict[str, float]:
    out = {}
    for leaf in tree.leaves():
        if isinstance(payoff, PayoffSpec):
            out[leaf] = float(payoff(tree.price(leaf), leaf))
        else:
            out[leaf] = float(payoff(tree.price(leaf)))
        if not math.isfinite(out[leaf]):
            raise PayoffError(f"payoff at leaf {leaf!r} is not finite")
    return out


def price_claim(tree: MarketTree, payoff: Union[PayoffSpec, Callable]) -> ValueSurface:
    """Infimum super-hedging cost at every node, by backward induction."""
    surface = ValueSurface(tree)
    for leaf, v in _terminal_values(tree, payoff).items():
        surface.results[leaf] = PriceResult(v)
    for t in range(tree.horizon - 1, -1, -1):
        for nid in tree.nodes_at(t):
            kids = {c: surface.results[c].value for c in tree.children(nid)}
            surface.results[nid] = price_one_step(tree, nid, kids)
    return surface


# -- closed forms for one risky asset ---------------------------------------

def _check_aip_bounds(bounds: EssentialBounds, y: float) -> None:
    if not bounds.contains(y):
        raise IpDetected(f"price {y} outside [{bounds.essinf}, {bounds.esssup}]: instantaneous profit")


def price_convex_1d(bounds: EssentialBounds, y: float, g: Callable[[float], float],
                    M: Optional[float] = None) -> PriceResult:
    """Cost of a convex claim: the chord of ``g`` between essinf and esssup, read at ``y``.

    ``theta* = 0`` when the bounds coincide; ``theta* = M`` (the limit of
    ``g(x)/x``) when esssup is infinite.
    """
    _check_aip_bounds(bounds, y)
    lo, hi = bounds.essinf, bounds.esssup
    if M is None and isinstance(g, PayoffSpec):
        M = g.asymptotic_slope()
    value_at = g.value if isinstance(g, PayoffSpec) else g
    g_lo = float(value_at(lo))
    if hi == lo:
        theta = 0.0
    elif math.isinf(hi):
        if M is None:
            raise PayoffError("an unbounded support needs the asymptotic slope M")
        theta = float(M)
    else:
        theta = (float(value_at(hi)) - g_lo) / (hi - lo)
    value = g_lo + theta * (y - lo)
    hedge = np.array([theta])
    return PriceResult(value, hedge, AffineMajorant(hedge, value - theta * y), True)


def price_call_1d(bounds: EssentialBounds, y: float, K: float) -> PriceResult:
    """Cost of ``(S - K)^+`` under AIP, by the three-case formula."""
    _check_aip_bounds(bounds, y)
    if K < 0:
        raise PayoffError("strike must be non-negative")
    lo, hi = bounds.essinf, bounds.esssup
    if K >= hi:
        theta, value = 0.0, 0.0
    elif K <= lo:
        theta, value = 1.0, y - K
    elif math.isinf(hi):
        theta, value = 1.0, y - lo
    else:
        theta = (hi - K) / (hi - lo)
        value = theta * (y - lo)
    hedge = np.array([theta])
    return PriceResult(value, hedge, AffineMajorant(hedge, value - theta * y), True)


# -- binomial scheme --------------------------------------------------------

@dataclass(frozen=True)
class BinomialScheme:
    """Deterministic bounds ``k^d_t S_t <= S_{t+1} <= k^u_t S_t`` (``k^u`` may be ``inf``)."""

    s0: float
    multipliers: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "multipliers", tuple((float(a), float(b)) for a, b in self.multipliers))
        if not (math.isfinite(self.s0) and self.s0 > 0):
            raise ValidationError("S_0 must be positive and finite")
        if not self.multipliers:
            raise ValidationError("a scheme needs at least one step")
        for t, (kd, ku) in enumerate(self.multipliers):
            if not (0.0 <= kd <= ku) or math.isnan(ku) or math.isinf(kd):
                raise ValidationError(f"step {t}: need 0 <= k^d <= k^u, got ({kd}, {ku})")

    @property
    def horizon(self) -> int:
        return len(self.multipliers)

    def satisfies_aip(self) -> bool:
        return all(kd <= 1.0 <= ku for kd, ku in self.multipliers)

    def recombining(self) -> bool:
        return len(set(self.multipliers)) == 1


@dataclass(frozen=True)
class LatticePoint:
    t: int
    state: str
    price: float
    value: float
    theta: float


@dataclass
class BinomialValues:
    """Value function of a convex claim on the lattice of a binomial scheme."""

    scheme: BinomialScheme
    payoff: PayoffSpec
    levels: list[list[LatticePoint]]

    @property
    def root_value(self) -> float:
        return self.levels[0][0].value

    def evaluate(self, t: int, s: float) -> float:
        """``v_t(s)`` at an arbitrary price, by direct recursion."""
        if t == self.scheme.horizon:
            return self.payoff.value(s)
        kd, ku = self.scheme.multipliers[t]
        low = self.evaluate(t + 1, kd * s)
        high = None if math.isinf(ku) else self.evaluate(t + 1, ku * s)
        return _step(kd, ku, s, low, high, self.payoff)[0]

    def rows(self):
        for level in self.levels:
            for p in level:
                yield (p.t, p.state, p.price, p.value, p.theta)


def _step(kd: float, ku: float, s: float, low: float, high: Optional[float], payoff: PayoffSpec):
    """One backward step: value at ``s`` from the values at ``k^d s`` and ``k^u s``."""
    if ku == kd or s == 0.0:
        theta = 0.0
    elif math.isinf(ku):
        theta = payoff.asymptotic_slope()
    else:
        theta = (high - low) / (ku * s - kd * s)
    return low + theta * (s - kd * s), theta


def price_binomial_scheme(scheme: BinomialScheme, payoff: PayoffSpec) -> BinomialValues:
    """Backward recursion ``v_t(s) = v_{t+1}(k^d s) + theta(s) (s - k^d s)``.

    States are up-move counts when every step has the same multipliers (the
    lattice recombines), otherwise paths of ``d``/``u`` moves.  Steps with
    ``k^u = inf`` have no up move.
    """
    if not scheme.satisfies_aip():
        raise IpDetected("AIP needs k^d <= 1 <= k^u at every step")
    if not isinstance(payoff, PayoffSpec) or not payoff.on_price or not payoff.is_convex():
        raise PayoffError("the binomial scheme prices convex payoffs of the price only")
    T = scheme.horizon
    recombine = scheme.recombining()

    def moves(t, state):
        """(down child, up child or None)."""
        ku = scheme.multipliers[t][1]
        if recombine:
            return state, (None if math.isinf(ku) else state + 1)
        return state + "d", (None if math.isinf(ku) else state + "u")

    def price_of(t, state):
        if recombine:
            kd, ku = scheme.multipliers[0]
            return scheme.s0 * kd ** (t - state) * ku ** state
        s = scheme.s0
        for u, move in enumerate(state):
            kd, ku = scheme.multipliers[u]
            s *= ku if move == "u" else kd
        return s

    states = [[0 if recombine else ""]]
    for t in range(T):
        nxt = []
        for st in states[-1]:
            for c in moves(t, st):
                if c is not None and c not in nxt:
                    nxt.append(c)
        states.append(nxt)

    values: dict[tuple[int, object], float] = {}
    levels: list[list[LatticePoint]] = [[] for _ in range(T + 1)]
    for st in states[T]:
        s = price_of(T, st)
        values[(T, st)] = payoff.value(s)
        levels[T].append(LatticePoint(T, str(st), s, values[(T, st)], math.nan))
    for t in range(T - 1, -1, -1):
        kd, ku = scheme.multipliers[t]
        for st in states[t]:
            s = price_of(t, st)
            down, up = moves(t, st)
            high = None if up is None else values[(t + 1, up)]
            v, theta = _step(kd, ku, s, values[(t + 1, down)], high, payoff)
            values[(t, st)] = v
            levels[t].append(LatticePoint(t, str(st), s, v, theta))
        _check_convex(levels[t])
    return BinomialValues(scheme, payoff, levels)


def _check_convex(level: Sequence[LatticePoint], tol: float = 1e-9) -> None:
    pts = sorted((p.price, p.value) for p in level)
    for (x0, v0), (x1, v1), (x2, v2) in zip(pts, pts[1:], pts[2:]):
        if x2 == x0 or x1 == x0 or x2 == x1:
            continue
        chord = v0 + (v2 - v0) * (x1 - x0) / (x2 - x0)
        if v1 > chord + tol * (1.0 + abs(chord)):
            raise InternalError("value function lost convexity on the lattice")


# -- extended market ------------------------------------------------------

def extend_market(tree: MarketTree, payoff: Union[PayoffSpec, Callable]) -> MarketTree:
    """Add the claim, priced by its super-hedging cost process, as an extra asset.

    The result has ``dim + 1`` assets and must again satisfy AIP.
    """
    report = check_aip_global(tree)
    if not report.holds:
        raise IpDetected(f"instantaneous profit at nodes {report.failing}")
    surface = price_claim(tree, payoff)
    nodes = []
    for n in tree:
        c = surface.value(n.id)
        nodes.append(Node(n.id, n.time, n.price + (float(c),), n.parent, n.transition_prob))
    extended = MarketTree(nodes, dim=tree.dim + 1, horizon=tree.horizon)
    after = check_aip_global(extended)
    if not after.holds:
        raise InternalError(f"extended market lost AIP at {after.failing}")
    return extended
