"""European payoff specifications on the terminal price.

Grammar (CLI and files)::

    call:K            (S - K)^+
    put:K             (K - S)^+
    pwl:x1,v1;x2,v2   piecewise-linear through the knots, extended linearly
    leaf:{id:v,...}   explicit value per leaf of a given tree

``call``, ``put`` and ``pwl`` act on the first asset; append ``@j`` to act on
asset ``j`` instead (e.g. ``call:100@1``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .errors import PayoffError

_KINDS = ("call", "put", "pwl", "leaf")


@dataclass(frozen=True)
class PayoffSpec:
    kind: str
    strike: Optional[float] = None
    knots: tuple[tuple[float, float], ...] = ()
    leaf_values: Mapping[str, float] = field(default_factory=dict)
    asset: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise PayoffError(f"unknown payoff kind {self.kind!r}")
        if self.kind in ("call", "put"):
            if self.strike is None or not math.isfinite(self.strike):
                raise PayoffError(f"{self.kind} needs a finite strike")
        if self.kind == "pwl":
            if not self.knots:
                raise PayoffError("pwl needs at least one knot")
            xs = [x for x, _ in self.knots]
            if any(b <= a for a, b in zip(xs, xs[1:])):
                raise PayoffError("pwl knots must have strictly increasing abscissae")
            if not all(math.isfinite(x) and math.isfinite(v) for x, v in self.knots):
                raise PayoffError("pwl knots must be finite")
        if self.asset < 0:
            raise PayoffError("asset index must be >= 0")

    # -- constructors ---------------------------------------------------

    @classmethod
    def call(cls, strike: float, asset: int = 0) -> "PayoffSpec":
        return cls("call", strike=float(strike), asset=asset)

    @classmethod
    def put(cls, strike: float, asset: int = 0) -> "PayoffSpec":
        return cls("put", strike=float(strike), asset=asset)

    @classmethod
    def pwl(cls, knots, asset: int = 0) -> "PayoffSpec":
        return cls("pwl", knots=tuple((float(x), float(v)) for x, v in knots), asset=asset)

    @classmethod
    def leaf(cls, values: Mapping[str, float]) -> "PayoffSpec":
        return cls("leaf", leaf_values={str(k): float(v) for k, v in values.items()})

    @classmethod
    def parse(cls, text: str) -> "PayoffSpec":
        text = text.strip()
        kind, sep, body = text.partition(":")
        kind = kind.strip().lower()
        if not sep or kind not in _KINDS:
            raise PayoffError(f"cannot parse payoff {text!r}; expected call:K, put:K, pwl:... or leaf:{{...}}")
        asset = 0
        if kind != "leaf" and "@" in body:
            body, _, idx = body.rpartition("@")
            try:
                asset = int(idx)
            except ValueError:
                raise PayoffError(f"bad asset index {idx!r}") from None
        try:
            if kind in ("call", "put"):
                return cls(kind, strike=float(body), asset=asset)
            if kind == "pwl":
                knots = []
                for chunk in body.split(";"):
                    if not chunk.strip():
                        continue
                    x, v = chunk.split(",")
                    knots.append((float(x), float(v)))
                return cls.pwl(knots, asset=asset)
            body = body.strip()
            if not (body.startswith("{") and body.endswith("}")):
                raise PayoffError("leaf payoff must be wrapped in braces")
            values = {}
            for chunk in body[1:-1].split(","):
                if not chunk.strip():
                    continue
                key, _, val = chunk.rpartition(":")
                key = key.strip().strip("'\"")
                if not key:
                    raise PayoffError(f"leaf entry {chunk!r} lacks an id")
                values[key] = float(val)
            return cls.leaf(values)
        except PayoffError:
            raise
        except ValueError:
            raise PayoffError(f"cannot parse payoff {text!r}") from None

    def __str__(self) -> str:
        suffix = f"@{self.asset}" if self.asset else ""
        if self.kind in ("call", "put"):
            return f"{self.kind}:{self.strike!r}{suffix}"
        if self.kind == "pwl":
            return "pwl:" + ";".join(f"{x!r},{v!r}" for x, v in self.knots) + suffix
        return "leaf:{" + ",".join(f"{k}:{v!r}" for k, v in self.leaf_values.items()) + "}"

    # -- evaluation -----------------------------------------------------

    @property
    def on_price(self) -> bool:
        """True when the payoff is a function of the price rather than of the leaf id."""
        return self.kind != "leaf"

    def value(self, x: float) -> float:
        """Evaluate on a scalar price of the underlying asset."""
        if self.kind == "call":
            return max(x - self.strike, 0.0)
        if self.kind == "put":
            return max(self.strike - x, 0.0)
        if self.kind == "pwl":
            return self._pwl(x)
        raise PayoffError("a leaf payoff has no closed form in the price")

    def _pwl(self, x: float) -> float:
        knots = self.knots
        if len(knots) == 1:
            return knots[0][1]
        xs = [k[0] for k in knots]
        if x <= xs[0]:
            i = 0
        elif x >= xs[-1]:
            i = len(xs) - 2
        else:
            i = int(np.searchsorted(xs, x, side="right")) - 1
        (x0, v0), (x1, v1) = knots[i], knots[i + 1]
        return v0 + (v1 - v0) * (x - x0) / (x1 - x0)

    def __call__(self, price, node_id: Optional[str] = None) -> float:
        if self.kind == "leaf":
            if node_id is None:
                raise PayoffError("a leaf payoff needs the node id")
            try:
                return self.leaf_values[node_id]
            except KeyError:
                raise PayoffError(f"no payoff value for leaf {node_id!r}") from None
        p = np.atleast_1d(np.asarray(price, dtype=float))
        if self.asset >= p.size:
            raise PayoffError(f"payoff reads asset {self.asset} but prices have {p.size} entries")
        return self.value(float(p[self.asset]))

    # -- shape ----------------------------------------------------------

    def slopes(self) -> list[float]:
        if self.kind == "call":
            return [0.0, 1.0]
        if self.kind == "put":
            return [-1.0, 0.0]
        if self.kind == "pwl":
            k = self.knots
            return [(v1 - v0) / (x1 - x0) for (x0, v0), (x1, v1) in zip(k, k[1:])] or [0.0]
        raise PayoffError("a leaf payoff has no slopes")

    def is_convex(self, tol: float = 1e-12) -> bool:
        if self.kind == "leaf":
            return False
        s = self.slopes()
        return all(b >= a - tol * (1.0 + abs(a)) for a, b in zip(s, s[1:]))

    def asymptotic_slope(self) -> float:
        """Limit of g(x) / x as x grows."""
        return self.slopes()[-1]
