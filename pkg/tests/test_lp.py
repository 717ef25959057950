"""Solver tests: hand-checked programs plus randomized scipy cross-checks."""

from __future__ import annotations

import itertools

import numpy as np
import pytest
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from hyperamp.lp import (
    LinearProgram,
    MixedIntegerProgram,
    NodeLimitError,
    SolveStatus,
    solve_lp,
    solve_milp,
    to_lp_text,
)


def test_single_variable_optimum():
    p = LinearProgram(objective=np.array([1.0]),
                      rows=[(np.array([1.0]), "<=", 1.0)])
    res = solve_lp(p)
    assert res.status is SolveStatus.OPTIMAL
    assert res.value == pytest.approx(1.0, abs=1e-9)
    assert res.x == pytest.approx([1.0])


def test_infeasible_row():
    p = LinearProgram(objective=np.array([1.0]),
                      rows=[(np.array([1.0]), "<=", -1.0)])
    assert solve_lp(p).status is SolveStatus.INFEASIBLE


def test_unbounded_without_rows():
    p = LinearProgram(objective=np.array([1.0]))
    assert solve_lp(p).status is SolveStatus.UNBOUNDED


def test_min_sense():
    p = LinearProgram(objective=np.array([2.0, 3.0]), sense="min",
                      rows=[(np.array([1.0, 1.0]), ">=", 4.0)])
    res = solve_lp(p)
    assert res.value == pytest.approx(8.0, abs=1e-9)
    assert res.x == pytest.approx([4.0, 0.0])


def test_equality_with_upper_bounds():
    p = LinearProgram(objective=np.array([1.0, 1.0]),
                      rows=[(np.array([1.0, 2.0]), "=", 3.0)],
                      upper=np.array([1.0, 2.0]))
    res = solve_lp(p)
    assert res.value == pytest.approx(2.0, abs=1e-9)
    assert res.x == pytest.approx([1.0, 1.0])


def test_bounded_no_rows_hits_upper():
    p = LinearProgram(objective=np.array([3.0, -1.0]), upper=np.array([2.0, 5.0]))
    res = solve_lp(p)
    assert res.value == pytest.approx(6.0, abs=1e-9)
    assert res.x == pytest.approx([2.0, 0.0])


def test_degenerate_cycling_example():
    # Beale's classic cycling program; Bland's rule must terminate it.
    c = np.array([0.75, -150.0, 0.02, -6.0])
    rows = [
        (np.array([0.25, -60.0, -0.04, 9.0]), "<=", 0.0),
        (np.array([0.5, -90.0, -0.02, 3.0]), "<=", 0.0),
        (np.array([0.0, 0.0, 1.0, 0.0]), "<=", 1.0),
    ]
    res = solve_lp(LinearProgram(objective=c, rows=rows))
    assert res.status is SolveStatus.OPTIMAL
    assert res.value == pytest.approx(0.05, abs=1e-9)


def test_validation_errors():
    with pytest.raises(ValueError, match="lower bound exceeds"):
        solve_lp(LinearProgram(objective=np.array([1.0]),
                               lower=np.array([2.0]), upper=np.array([1.0])))
    with pytest.raises(ValueError, match="free variables"):
        solve_lp(LinearProgram(objective=np.array([1.0]),
                               lower=np.array([-np.inf])))
    with pytest.raises(ValueError, match="relation"):
        solve_lp(LinearProgram(objective=np.array([1.0]),
                               rows=[(np.array([1.0]), "<", 1.0)]))
    with pytest.raises(ValueError, match="sense"):
        solve_lp(LinearProgram(objective=np.array([1.0]), sense="maximize"))


def test_binary_bound_validation():
    p = MixedIntegerProgram(objective=np.array([1.0]), upper=np.array([2.0]),
                            binaries=frozenset({0}))
    with pytest.raises(ValueError, match="bounded within"):
        solve_milp(p)


def _random_lp(rng):
    n = int(rng.integers(1, 8))
    m = int(rng.integers(0, 8))
    c = rng.normal(size=n).round(2)
    rows = []
    for _ in range(m):
        a = rng.normal(size=n).round(2)
        rel = rng.choice(["<=", ">=", "="], p=[0.5, 0.3, 0.2])
        rows.append((a, str(rel), float(rng.normal() * 2)))
    hi = np.where(rng.random(n) < 0.7, rng.uniform(0.5, 20, n), np.inf)
    return LinearProgram(objective=c, rows=rows, upper=hi,
                         sense=str(rng.choice(["max", "min"])))


def _scipy_lp(p):
    c, a, rhs, rels, lo, hi, _ = p.finished()
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    for i, rel in enumerate(rels):
        if rel == "<=":
            a_ub.append(a[i]); b_ub.append(rhs[i])
        elif rel == ">=":
            a_ub.append(-a[i]); b_ub.append(-rhs[i])
        else:
            a_eq.append(a[i]); b_eq.append(rhs[i])
    sp = linprog(c if p.sense == "min" else -c,
                 A_ub=np.array(a_ub) if a_ub else None, b_ub=b_ub or None,
                 A_eq=np.array(a_eq) if a_eq else None, b_eq=b_eq or None,
                 bounds=list(zip(lo, np.where(np.isinf(hi), None, hi))),
                 method="highs")
    if sp.status == 0:
        return SolveStatus.OPTIMAL, (sp.fun if p.sense == "min" else -sp.fun)
    if sp.status == 2:
        return SolveStatus.INFEASIBLE, None
    if sp.status == 3:
        return SolveStatus.UNBOUNDED, None
    raise AssertionError(f"unexpected scipy status {sp.status}")


@pytest.mark.parametrize("seed", range(4))
def test_lp_matches_reference_solver(seed):
    rng = np.random.default_rng(seed)
    for _ in range(80):
        p = _random_lp(rng)
        res = solve_lp(p)
        status, value = _scipy_lp(p)
        assert res.status is status
        if status is SolveStatus.OPTIMAL:
            assert res.value == pytest.approx(value, abs=1e-6, rel=1e-6)
            c, a, rhs, rels, lo, hi, _ = p.finished()
            assert (res.x >= lo - 1e-7).all() and (res.x <= hi + 1e-7).all()


def _random_milp(rng):
    n = int(rng.integers(2, 9))
    m = int(rng.integers(1, 7))
    nb = int(rng.integers(1, n + 1))
    binaries = frozenset(int(j) for j in rng.choice(n, size=nb, replace=False))
    c = rng.normal(size=n).round(2)
    hi = np.array([1.0 if j in binaries else rng.uniform(1, 10) for j in range(n)])
    rows = [(rng.normal(size=n).round(2),
             str(rng.choice(["<=", ">=", "="], p=[0.6, 0.3, 0.1])),
             float(rng.normal() * 2)) for _ in range(m)]
    return MixedIntegerProgram(objective=c, rows=rows, upper=hi,
                               sense=str(rng.choice(["max", "min"])),
                               binaries=binaries)


def _scipy_milp(p):
    c, a, rhs, rels, lo, hi, _ = p.finished()
    lb = np.where(rels == "<=", -np.inf, rhs)
    ub = np.where(rels == ">=", np.inf, rhs)
    integrality = np.zeros(c.size)
    integrality[sorted(p.binaries)] = 1
    sp = milp(c if p.sense == "min" else -c,
              constraints=LinearConstraint(a, lb, ub),
              bounds=Bounds(lo, hi), integrality=integrality)
    if sp.status == 0:
        return SolveStatus.OPTIMAL, (sp.fun if p.sense == "min" else -sp.fun)
    if sp.status == 2:
        return SolveStatus.INFEASIBLE, None
    raise AssertionError(f"unexpected scipy status {sp.status}")


@pytest.mark.parametrize("seed", range(3))
def test_milp_matches_reference_solver(seed):
    rng = np.random.default_rng(100 + seed)
    for _ in range(50):
        p = _random_milp(rng)
        res = solve_milp(p)
        status, value = _scipy_milp(p)
        assert res.status is status
        if status is SolveStatus.OPTIMAL:
            assert res.value == pytest.approx(value, abs=1e-6, rel=1e-6)
            xb = res.x[sorted(p.binaries)]
            assert np.abs(xb - np.round(xb)).max() <= 1e-6


def test_pure_binary_matches_enumeration():
    rng = np.random.default_rng(7)
    for _ in range(20):
        n = int(rng.integers(2, 9))
        c = rng.normal(size=n).round(2)
        w = rng.uniform(0, 1, size=n).round(2)
        cap = float(rng.uniform(0.5, n / 2))
        p = MixedIntegerProgram(objective=c, rows=[(w, "<=", cap)],
                                upper=np.ones(n),
                                binaries=frozenset(range(n)))
        res = solve_milp(p)
        best = max((float(c @ np.array(bits)) for bits in
                    itertools.product((0, 1), repeat=n)
                    if float(w @ np.array(bits)) <= cap + 1e-12),
                   default=-np.inf)
        assert res.value == pytest.approx(best, abs=1e-9)


def test_incumbent_sequence_is_monotone():
    rng = np.random.default_rng(42)
    for _ in range(25):
        p = _random_milp(rng)
        seen = []
        try:
            res = solve_milp(p, on_incumbent=seen.append)
        except NodeLimitError:  # pragma: no cover - defensive
            continue
        if p.sense == "max":
            assert seen == sorted(seen)
        else:
            assert seen == sorted(seen, reverse=True)
        if res.is_optimal and seen:
            assert res.value == pytest.approx(seen[-1], abs=1e-9)


def test_warm_start_seeds_incumbent():
    p = MixedIntegerProgram(objective=np.array([1.0, 1.0]),
                            rows=[(np.array([1.0, 1.0]), "<=", 1.5)],
                            upper=np.ones(2), binaries=frozenset({0, 1}))
    seen = []
    res = solve_milp(p, warm_starts=[{0: 1, 1: 0}], on_incumbent=seen.append)
    assert res.value == pytest.approx(1.0, abs=1e-9)
    assert seen[0] == pytest.approx(1.0, abs=1e-9)


def test_bound_target_returns_early_with_valid_bound():
    p = MixedIntegerProgram(objective=np.array([1.0, 1.0]),
                            rows=[(np.array([1.0, 1.0]), "<=", 1.5)],
                            upper=np.ones(2), binaries=frozenset({0, 1}))
    res = solve_milp(p, bound_target=2.0)
    assert res.bound == pytest.approx(1.5, abs=1e-9)
    assert res.bound <= 2.0
    # without the target the same program solves to optimality
    assert solve_milp(p).value == pytest.approx(1.0, abs=1e-9)


def test_node_limit_is_enforced():
    rng = np.random.default_rng(3)
    n = 14
    c = rng.uniform(1, 2, n).round(3)
    w = rng.uniform(1, 2, n).round(3)
    p = MixedIntegerProgram(objective=c, rows=[(w, "<=", float(w.sum() / 2))],
                            upper=np.ones(n), binaries=frozenset(range(n)))
    with pytest.raises(NodeLimitError):
        solve_milp(p, node_limit=3)


def test_lp_text_dump_lists_all_sections():
    p = MixedIntegerProgram(objective=np.array([1.0, -2.0]),
                            rows=[(np.array([1.0, 1.0]), "<=", 4.0)],
                            upper=np.array([1.0, np.inf]),
                            names=["y", "x"], binaries=frozenset({0}))
    text = to_lp_text(p)
    assert "Maximize" in text and "Subject To" in text
    assert "Bounds" in text and "Binaries" in text and text.endswith("End\n")
    assert "- 2 x" in text and " y" in text
