"""Conjugates and relative concave envelopes over a finite support.

With ``f(z) = -g(z) + delta_supp(z)`` the infimum super-hedging cost at the
current price ``y`` is ``-f**(y)``, i.e. the smallest value at ``y`` of an
affine function lying above ``g`` on the support, and ``-inf`` when ``y`` is
outside the convex hull of the support.  On a finite support the concave
envelope is automatically upper semicontinuous, so no closure is taken.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import lp
from .errors import DimensionError, InternalError


@dataclass(frozen=True)
class SampledFunction:
    """Values of a payoff ``g`` on a finite set of points of R^d."""

    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if pts.shape[0] != vals.shape[0]:
            raise ValueError("one value per support point is required")
        if not np.all(np.isfinite(vals)):
            raise ValueError("sampled values must be finite")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_support(cls, points, g: Callable) -> "SampledFunction":
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        return cls(pts, np.array([float(g(p)) for p in pts]))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class AffineMajorant:
    slope: np.ndarray
    intercept: float

    def __call__(self, z) -> float:
        return float(np.dot(self.slope, np.atleast_1d(np.asarray(z, dtype=float))) + self.intercept)

    def dominates(self, g: SampledFunction, tol: float = 1e-9) -> bool:
        gap = g.points @ self.slope + self.intercept - g.values
        return bool(np.all(gap >= -tol * np.maximum(1.0, np.abs(g.values))))


@dataclass(frozen=True)
class EnvelopeValue:
    """Envelope at ``y``: finite with a certifying majorant, or ``-inf``.

    ``ray`` is set when the value is ``-inf``: a unit direction ``theta`` with
    ``theta @ (z - y) > 0`` for every support point ``z``.
    """

    value: float
    majorant: Optional[AffineMajorant]
    member_of_hull: bool
    ray: Optional[np.ndarray] = None

    @property
    def finite(self) -> bool:
        return self.member_of_hull


def fenchel_conjugate(g: SampledFunction, x) -> float:
    """Conjugate of ``f = -g + delta_supp``: ``f*(x) = max_i (x z_i + g(z_i))``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(np.max(g.points @ x + g.values))


def _unit(v: np.ndarray) -> Optional[np.ndarray]:
    norm = np.linalg.norm(v)
    return None if norm == 0.0 else v / norm


def concave_envelope_at(g: SampledFunction, y) -> EnvelopeValue:
    """Relative concave envelope of ``g`` at ``y`` via the affine-majorant LP.

    Solves ``min alpha @ y + beta`` subject to ``alpha @ z_i + beta >= g(z_i)``.
    Unboundedness means ``y`` is outside the hull of the support.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    n, d = g.points.shape
    if y.shape[0] != d:
        raise DimensionError(f"y has {y.shape[0]} entries, support has d = {d}")
    A = np.hstack([g.points, np.ones((n, 1))])
    problem = lp.LinearProgram(
        c=np.append(y, 1.0), A=A, relations=[lp.GE] * n, b=g.values,
        lower=np.full(d + 1, -np.inf), upper=np.full(d + 1, np.inf),
    )
    out = lp.solve(problem)
    if out.status is lp.Status.OPTIMAL:
        alpha, beta = out.solution[:d], float(out.solution[d])
        return EnvelopeValue(out.objective_value, AffineMajorant(alpha, beta), True)
    if out.status is lp.Status.UNBOUNDED:
        return EnvelopeValue(-np.inf, None, False, _unit(out.ray[:d]))
    raise InternalError("affine-majorant LP reported infeasible")


def biconjugate_at(g: SampledFunction, y) -> float:
    """``f**(y) = sup_x (x y - f*(x))`` for ``f = -g + delta_supp``, as an LP in ``(x, t)``.

    ``f*(x) <= t`` is written as ``t - x z_i >= g(z_i)``.  Returns ``+inf``
    outside the hull of the support.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    n, d = g.points.shape
    A = np.hstack([-g.points, np.ones((n, 1))])
    problem = lp.LinearProgram(
        c=np.append(-y, 1.0), A=A, relations=[lp.GE] * n, b=g.values,
        lower=np.full(d + 1, -np.inf), upper=np.full(d + 1, np.inf),
    )
    out = lp.solve(problem)
    if out.status is lp.Status.UNBOUNDED:
        return np.inf
    if out.status is not lp.Status.OPTIMAL:
        raise InternalError("conjugate LP reported infeasible")
    return -out.objective_value


def convex_envelope_of_f(g: SampledFunction, y) -> float:
    """``conv f (y)`` from convex combinations of support points.

    ``min sum_i lambda_i (-g(z_i))`` over ``lambda >= 0``, ``sum lambda = 1``,
    ``sum lambda_i z_i = y``; ``+inf`` when no combination reaches ``y``.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    n, d = g.points.shape
    A = np.vstack([g.points.T, np.ones((1, n))])
    problem = lp.LinearProgram(c=-g.values, A=A, relations=[lp.EQ] * (d + 1), b=np.append(y, 1.0))
    out = lp.solve(problem)
    if out.status is lp.Status.INFEASIBLE:
        return np.inf
    if out.status is not lp.Status.OPTIMAL:
        raise InternalError("bounded convex-combination LP reported unbounded")
    return out.objective_value


def upper_hull_1d(z: Sequence[float], v: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Vertices of the upper concave hull of ``(z_i, v_i)``, sorted by ``z``."""
    z = np.asarray(z, dtype=float)
    v = np.asarray(v, dtype=float)
    order = np.lexsort((v, z))
    # keep the highest value per abscissa
    pts: list[tuple[float, float]] = []
    for i in order:
        if pts and pts[-1][0] == z[i]:
            pts[-1] = (z[i], max(pts[-1][1], v[i]))
        else:
            pts.append((z[i], v[i]))
    hull: list[tuple[float, float]] = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop the middle point unless it lies strictly above the chord
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    hz, hv = zip(*hull)
    return np.asarray(hz), np.asarray(hv)


def concave_envelope_1d(g: SampledFunction, y: float) -> EnvelopeValue:
    """One-dimensional envelope by a monotone-chain upper hull and interpolation."""
    if g.dim != 1:
        raise DimensionError(f"concave_envelope_1d needs d = 1, got d = {g.dim}")
    y = float(np.asarray(y, dtype=float).reshape(-1)[0])
    hz, hv = upper_hull_1d(g.points[:, 0], g.values)
    if y < hz[0]:
        return EnvelopeValue(-np.inf, None, False, np.array([1.0]))
    if y > hz[-1]:
        return EnvelopeValue(-np.inf, None, False, np.array([-1.0]))
    if hz.size == 1:
        return EnvelopeValue(float(hv[0]), AffineMajorant(np.array([0.0]), float(hv[0])), True)
    k = int(np.searchsorted(hz, y, side="right")) - 1
    k = min(max(k, 0), hz.size - 2)
    slope = (hv[k + 1] - hv[k]) / (hz[k + 1] - hz[k])
    if y == hz[k]:
        value = float(hv[k])
    elif y == hz[k + 1]:
        value = float(hv[k + 1])
    else:
        value = float(hv[k] + slope * (y - hz[k]))
    intercept = float(hv[k] - slope * hz[k])
    return EnvelopeValue(value, AffineMajorant(np.array([slope]), intercept), True)
