import json

import numpy as np
import pytest
from scipy.optimize import linprog

import oracles
from conftest import DATA
from secvne.milp import BINARY, CONTINUOUS, MilpModel, build_model
from secvne.model import SubstrateState
from secvne.solver import (
    INFEASIBLE,
    LIMIT_REACHED,
    OPTIMAL,
    SolveLimits,
    solve_lp,
    solve_milp,
)
from secvne.solver.presolve import PresolveInfeasible, presolve


def test_lp_lower_bound():
    m = MilpModel()
    x = m.add_var("x", CONTINUOUS, 0, 10, obj=1)
    m.add_row("r", [(x, 1)], ">=", 3)
    out = solve_lp(m)
    assert out.status == OPTIMAL and out.objective == pytest.approx(3)


def test_lp_infeasible():
    m = MilpModel()
    x = m.add_var("x", CONTINUOUS, 0, 10)
    m.add_row("a", [(x, 1)], ">=", 2)
    m.add_row("b", [(x, 1)], "<=", 1)
    assert solve_lp(m).status == INFEASIBLE


def test_binary_cover():
    m = MilpModel()
    x = m.add_var("x", BINARY, obj=1)
    y = m.add_var("y", BINARY, obj=1)
    m.add_row("r", [(x, 1), (y, 1)], ">=", 1)
    out = solve_milp(m)
    assert out.optimal and out.objective == pytest.approx(1)


def test_infinite_bounds_refused():
    m = MilpModel()
    m.add_var("x", CONTINUOUS, 0, np.inf, obj=1)
    with pytest.raises(ValueError):
        solve_milp(m)


@pytest.mark.parametrize("kw", [{"integrality_tol": 0}, {"lp_tol": 1e-2}, {"max_nodes": 0}, {"time_budget": 0}])
def test_limits_validated(kw):
    with pytest.raises(ValueError):
        SolveLimits(**kw)


def test_random_lps_match_linprog():
    rng = np.random.default_rng(2)
    for _ in range(40):
        n, r = int(rng.integers(2, 9)), int(rng.integers(1, 7))
        c = rng.integers(-5, 6, n).astype(float)
        A = rng.integers(-4, 5, (r, n)).astype(float)
        b = rng.integers(-3, 12, r).astype(float)
        ub = rng.integers(1, 6, n).astype(float)
        m = MilpModel()
        cols = [m.add_var(f"x{j}", CONTINUOUS, 0, ub[j], obj=c[j]) for j in range(n)]
        for k in range(r):
            m.add_row(f"r{k}", list(zip(cols, A[k])), "<=", b[k])
        ref = linprog(c, A_ub=A, b_ub=b, bounds=list(zip(np.zeros(n), ub)), method="highs")
        out = solve_lp(m)
        if ref.status == 2:
            assert out.status == INFEASIBLE
        else:
            assert out.status == OPTIMAL and out.objective == pytest.approx(ref.fun, abs=1e-6)


def test_frozen_random_milps_subset():
    cases = json.loads((DATA / "milp_cases.json").read_text())[:60]
    for k, case in enumerate(cases):
        out = solve_milp(oracles.milp_from_spec(case["spec"]))
        if case["optimum"] is None:
            assert out.status == INFEASIBLE, k
        else:
            assert out.status == OPTIMAL and out.objective == pytest.approx(case["optimum"], abs=1e-6), k


def test_relaxation_bounds_milp():
    rng = np.random.default_rng(9)
    for _ in range(15):
        net, vnr = oracles.tiny_objects(oracles.random_tiny_instance(rng))
        model, _ = build_model(SubstrateState(net), vnr)
        lp, ip = solve_lp(model), solve_milp(model)
        if ip.optimal:
            assert lp.optimal and lp.objective <= ip.objective + 1e-6


def test_native_matches_highs_and_is_deterministic(fig1, fig2):
    model, _ = build_model(SubstrateState(fig1), fig2)
    a, b = solve_milp(model), solve_milp(model)
    assert a.status == b.status == OPTIMAL
    assert np.array_equal(a.assignment, b.assignment)
    h = solve_milp(model, backend="highs")
    assert h.objective == pytest.approx(a.objective, rel=1e-9)
    with pytest.raises(ValueError):
        solve_milp(model, backend="glpk")


def test_node_limit_reports_limit():
    # knapsack-like model needing branching
    rng = np.random.default_rng(4)
    m = MilpModel()
    w = rng.integers(5, 30, 20)
    cols = [m.add_var(f"x{j}", BINARY, obj=-float(w[j]) - rng.random()) for j in range(20)]
    m.add_row("cap", list(zip(cols, w.astype(float))), "<=", float(w.sum()) / 2 + 0.5)
    out = solve_milp(m, SolveLimits(max_nodes=1))
    assert out.status in (LIMIT_REACHED, OPTIMAL)
    assert out.stats["nodes"] <= 2
    full = solve_milp(m)
    assert full.optimal
    if out.assignment is not None:
        assert out.objective >= full.objective - 1e-9


def test_presolve_detects_infeasible_singleton():
    c = np.array([1.0])
    A = np.array([[1.0], [1.0]])
    with pytest.raises(PresolveInfeasible):
        presolve(c, A, np.array([2.0, -np.inf]), np.array([np.inf, 1.0]), np.zeros(1), np.array([10.0]),
                 np.zeros(1, dtype=bool))


def test_presolve_postsolve_roundtrip():
    # x + y = 4 aggregates away one column; fixed z removed
    c = np.array([1.0, 2.0, 3.0])
    A = np.array([[1.0, 1.0, 0.0], [1.0, 0.0, 0.0]])
    lo, hi = np.array([4.0, -np.inf]), np.array([4.0, 3.0])
    lb, ub = np.zeros(3), np.array([5.0, 5.0, 0.0])
    pre = presolve(c, A, lo, hi, lb, ub, np.zeros(3, dtype=bool))
    assert pre.A.shape[1] < 3
    x = pre.postsolve(np.full(pre.A.shape[1], min(3.0, pre.ub.min()) if pre.A.shape[1] else 0.0))
    assert x.shape == (3,)
    assert x[2] == 0 and x[0] + x[1] == pytest.approx(4)
