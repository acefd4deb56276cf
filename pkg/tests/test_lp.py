from __future__ import annotations

import numpy as np
import pytest
from scipy.optimize import linprog

from superhedge import lp
from superhedge.errors import FormatError

FREE = (-np.inf, np.inf)


def _free(n):
    return np.full(n, -np.inf), np.full(n, np.inf)


def test_single_lower_bound_row():
    out = lp.solve(lp.LinearProgram([1.0], [[1.0]], [lp.GE], [3.0]))
    assert out.status is lp.Status.OPTIMAL
    assert out.solution[0] == pytest.approx(3.0, abs=1e-12)
    assert out.objective_value == pytest.approx(3.0, abs=1e-12)


def test_free_variable_unbounded_below():
    lo, hi = _free(1)
    out = lp.solve(lp.LinearProgram([1.0], [[1.0]], [lp.LE], [3.0], lo, hi))
    assert out.status is lp.Status.UNBOUNDED
    np.testing.assert_allclose(out.ray, [-1.0])


def test_hull_weights_worked_node():
    out = lp.solve(lp.LinearProgram([0.0, 0.0], [[1.0, 1.0], [90.0, 120.0]], [lp.EQ, lp.EQ], [1.0, 100.0]))
    assert out.optimal
    np.testing.assert_allclose(out.solution, [2 / 3, 1 / 3], atol=1e-12)


def test_infeasible():
    out = lp.solve(lp.LinearProgram([1.0], [[1.0], [1.0]], [lp.GE, lp.LE], [2.0, 1.0]))
    assert out.status is lp.Status.INFEASIBLE


def test_infeasible_bounds():
    out = lp.solve(lp.LinearProgram([1.0], np.zeros((0, 1)), [], [], lower=[2.0], upper=[1.0]))
    assert out.status is lp.Status.INFEASIBLE


def test_no_rows_uses_bounds():
    out = lp.solve(lp.LinearProgram([1.0, -1.0], np.zeros((0, 2)), [], [], lower=[-2.0, 0.0], upper=[5.0, 4.0]))
    assert out.optimal
    np.testing.assert_allclose(out.solution, [-2.0, 4.0])
    assert out.objective_value == pytest.approx(-6.0)


@pytest.mark.parametrize("bad", [
    dict(c=[1.0, 2.0], A=[[1.0]], relations=[lp.GE], b=[1.0]),
    dict(c=[1.0], A=[[1.0]], relations=[lp.GE], b=[1.0, 2.0]),
    dict(c=[1.0], A=[[1.0]], relations=[lp.GE, lp.LE], b=[1.0]),
    dict(c=[1.0], A=[[1.0]], relations=["!="], b=[1.0]),
    dict(c=[1.0], A=[[np.nan]], relations=[lp.GE], b=[1.0]),
    dict(c=[1.0], A=[[1.0]], relations=[lp.GE], b=[1.0], lower=[0.0, 0.0]),
])
def test_dimension_and_entry_checks(bad):
    with pytest.raises(FormatError):
        lp.LinearProgram(**bad)


def test_beale_cycling_example_terminates():
    c = [-0.75, 20.0, -0.5, 6.0]
    A = [[0.25, -8.0, -1.0, 9.0], [0.5, -12.0, -0.5, 3.0], [0.0, 0.0, 1.0, 0.0]]
    out = lp.solve(lp.LinearProgram(c, A, [lp.LE] * 3, [0.0, 0.0, 1.0]))
    assert out.optimal
    assert out.objective_value == pytest.approx(-1.25, abs=1e-9)


def test_redundant_equalities():
    A = [[1.0, 1.0], [2.0, 2.0], [1.0, -1.0]]
    out = lp.solve(lp.LinearProgram([1.0, 2.0], A, [lp.EQ] * 3, [2.0, 4.0, 0.0]))
    assert out.optimal
    np.testing.assert_allclose(out.solution, [1.0, 1.0], atol=1e-12)


def _random_lp(rng, m, n, free_frac=0.3):
    """Feasible by construction: rows are built around a point x0 inside the bounds."""
    A = rng.normal(size=(m, n)).round(2)
    lower = np.where(rng.random(n) < free_frac, -np.inf, rng.uniform(-2, 0, n).round(2))
    upper = np.where(rng.random(n) < 0.5, np.inf, rng.uniform(1, 3, n).round(2))
    x0 = np.where(np.isfinite(lower), lower, -1.0) + 0.5
    x0 = np.minimum(x0, np.where(np.isfinite(upper), upper, x0))
    rels = rng.choice([lp.LE, lp.EQ, lp.GE], size=m, p=[0.4, 0.2, 0.4])
    slack = rng.uniform(0, 1, m).round(2)
    ax = A @ x0
    b = np.where(rels == lp.LE, ax + slack, np.where(rels == lp.GE, ax - slack, ax))
    c = rng.normal(size=n).round(2)
    return lp.LinearProgram(c, A, list(rels), b, lower, upper), x0


def _scipy(problem):
    ub_rows = [i for i, r in enumerate(problem.relations) if r != lp.EQ]
    eq_rows = [i for i, r in enumerate(problem.relations) if r == lp.EQ]
    sign = np.array([1.0 if problem.relations[i] == lp.LE else -1.0 for i in ub_rows])
    A_ub = problem.A[ub_rows] * sign[:, None] if ub_rows else None
    b_ub = problem.b[ub_rows] * sign if ub_rows else None
    A_eq = problem.A[eq_rows] if eq_rows else None
    b_eq = problem.b[eq_rows] if eq_rows else None
    bounds = [(None if np.isinf(lo) else lo, None if np.isinf(hi) else hi)
              for lo, hi in zip(problem.lower, problem.upper)]
    return linprog(problem.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")


def test_agrees_with_independent_solver(rng):
    counts = {lp.Status.OPTIMAL: 0, lp.Status.UNBOUNDED: 0}
    for _ in range(300):
        problem, _ = _random_lp(rng, int(rng.integers(1, 7)), int(rng.integers(1, 6)))
        ours = lp.solve(problem)
        ref = _scipy(problem)
        if ref.status == 0:
            assert ours.optimal
            assert ours.objective_value == pytest.approx(ref.fun, abs=1e-7, rel=1e-7)
            assert problem.violation(ours.solution) <= 1e-9
        elif ref.status == 3:
            assert ours.status is lp.Status.UNBOUNDED
        counts[ours.status] = counts.get(ours.status, 0) + 1
    assert counts[lp.Status.OPTIMAL] > 50 and counts[lp.Status.UNBOUNDED] > 10


def test_weak_duality_spot_check(rng):
    checked = 0
    for _ in range(500):
        problem, x0 = _random_lp(rng, int(rng.integers(1, 6)), int(rng.integers(1, 5)))
        out = lp.solve(problem)
        assert problem.violation(x0) <= 1e-9
        if out.status is lp.Status.UNBOUNDED:
            continue
        assert out.optimal
        samples = [x0]
        for _ in range(20):
            x = x0 + rng.normal(scale=0.3, size=x0.size)
            if problem.violation(x) <= 0.0:
                samples.append(x)
        for x in samples:
            assert out.objective_value <= problem.c @ x + 1e-9
        checked += 1
    assert checked > 200


def test_unbounded_ray_certifies(rng):
    seen = 0
    for _ in range(300):
        problem, _ = _random_lp(rng, int(rng.integers(1, 5)), int(rng.integers(2, 5)), free_frac=0.6)
        out = lp.solve(problem)
        if out.status is not lp.Status.UNBOUNDED:
            continue
        seen += 1
        r = out.ray
        assert problem.c @ r < 0
        for row, rel in zip(problem.A @ r, problem.relations):
            if rel == lp.LE:
                assert row <= 1e-9
            elif rel == lp.GE:
                assert row >= -1e-9
            else:
                assert abs(row) <= 1e-9
        assert np.all(r[np.isfinite(problem.lower)] >= -1e-12)
        assert np.all(r[np.isfinite(problem.upper)] <= 1e-12)
    assert seen > 5


def test_deterministic(rng):
    problem, _ = _random_lp(rng, 5, 4)
    a, b = lp.solve(problem), lp.solve(problem)
    assert a.status == b.status
    if a.optimal:
        assert np.array_equal(a.solution, b.solution)
