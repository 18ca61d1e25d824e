import json

import numpy as np
import pytest

import oracles
from conftest import DATA
from secvne.milp import (
    BINARY,
    CONTINUOUS,
    DecodeError,
    MilpModel,
    Weights,
    build_model,
    check_assignment,
    decode,
    evaluate_objective,
    variable_count,
)
from secvne.model import ModelError, SubstrateNetwork, SubstrateState, make_substrate, make_vnr
from secvne.solver import solve_milp

PATH3 = make_substrate({"c1": 1, "c2": 2}, [("A", 50, 1, "c1"), ("B", 50, 2, "c1"), ("C", 50, 3, "c2")],
                       [("A", "B", 100, 1), ("B", "C", 100, 2)])


def _solve(state, vnr, weights=None):
    model, ix = build_model(state, vnr, weights)
    out = solve_milp(model)
    return model, ix, out


def test_single_node_model(fig1):
    vnr = make_vnr([("a", 10)])
    model, ix, out = _solve(SubstrateState(fig1), vnr)
    assert model.count(BINARY) == len(fig1.nodes) + len(fig1.clouds) + len(fig1.links)
    assert model.count(CONTINUOUS) == 0 and not ix.wf
    # cheapest host: lowest sec * trust
    assert out.objective == pytest.approx(10 * 1 * 1)
    dec = decode(out.assignment, ix, solver_objective=out.objective)
    assert dec.working_nodes == {"a": "A"} and dec.working_flows == {}


def test_variable_count_closed_form():
    vnr = make_vnr([("a", 10), ("b", 10)], [("a", "b", 5)])
    model, ix = build_model(SubstrateState(PATH3), vnr)
    pairs = sum(len(v) for v in ix.eligible.values())
    assert pairs == 6
    assert model.n_vars == variable_count(3, 2, 2, 2, 1, pairs)
    assert model.n_vars == 4 * (2 * 2 + 2 * 6) * 1 + 2 * 3 + 2 * 2 + 2


def test_eligibility_fixes_bounds():
    vnr = make_vnr([("a", 10, 3), ("b", 10)], [("a", "b", 5, 2)])
    model, ix = build_model(SubstrateState(PATH3), vnr)
    assert ix.eligible["a"] == ["C"]
    ub = {v.name: v.ub for v in model.variables}
    assert ub["wn_a_A"] == 0 and ub["wn_a_C"] == 1
    # the sec-1 link cannot carry the sec-2 demand
    assert model.variables[ix.wl[("a", "b"), ("A", "B")]].ub == 0


def test_no_backup_network_emits_no_backup_columns(fig1):
    _, ix = build_model(SubstrateState(fig1), make_vnr([("a", 1), ("b", 1)], [("a", "b", 1)]))
    assert not (ix.bf or ix.bl or ix.bn or ix.bc)


def test_fig2_optimum_and_mapping(fig1, fig2):
    frozen = json.loads((DATA / "fig2_oracle.json").read_text())
    model, ix, out = _solve(SubstrateState(fig1), fig2)
    assert out.objective == pytest.approx(frozen["objective"], abs=1e-6)
    dec = decode(out.assignment, ix, solver_objective=out.objective)
    assert dec.working_nodes["a"] == "B"
    assert {dec.working_nodes["b"], dec.backup_nodes["b"]} == {"C", "E"}
    w = {tuple(sorted(a)) for a in dec.working_flows[("a", "b")]}
    b = {tuple(sorted(a)) for a in dec.backup_flows[("a", "b")]}
    assert w.isdisjoint(b)


def test_net_outflow_equals_demand(fig1, fig2):
    _, ix, out = _solve(SubstrateState(fig1), fig2)
    dec = decode(out.assignment, ix)
    for (i, j), flows in dec.working_flows.items():
        src = dec.working_nodes[i]
        net = sum(a for (p, q), a in flows.items() if p == src) - sum(a for (p, q), a in flows.items() if q == src)
        assert net == pytest.approx(20)


def test_avail0_backup_colocated(fig1, fig2):
    _, ix, out = _solve(SubstrateState(fig1), fig2)
    for p in ix.snodes:
        assert out.assignment[ix.bn["a", p]] == pytest.approx(out.assignment[ix.wn["a", p]])


def test_weight_scaling_invariance(fig1, fig2):
    state = SubstrateState(fig1)
    _, _, o1 = _solve(state, fig2, Weights(1, 1, 1))
    _, ix3, o3 = _solve(state, fig2, Weights(3, 3, 3))
    assert o3.objective == pytest.approx(3 * o1.objective)
    assert evaluate_objective(ix3, o3.assignment) == pytest.approx(o3.objective)


def test_weakening_demand_never_hurts():
    rng = np.random.default_rng(3)
    for _ in range(15):
        inst = oracles.random_tiny_instance(rng)
        net, vnr = oracles.tiny_objects(inst)
        _, _, strong = _solve(SubstrateState(net), vnr)
        weak = make_vnr([(n[0], n[1], 1.0, 1, 0) for n in inst["vnodes"]],
                        [(u, v, bw, 1.0) for u, v, bw, _ in inst["vlinks"]])
        _, _, relaxed = _solve(SubstrateState(net), weak)
        if strong.optimal:
            assert relaxed.optimal and relaxed.objective <= strong.objective + 1e-6


def test_strengthening_rows_keep_the_optimum(fig1, fig2):
    state = SubstrateState(fig1)
    for vnr in (fig2, make_vnr([("a", 10, 1), ("b", 10, 2), ("c", 5)], [("a", "b", 20), ("b", "c", 10)])):
        m1, _ = build_model(state, vnr, strengthen=True)
        m0, _ = build_model(state, vnr, strengthen=False)
        assert m1.n_rows > m0.n_rows
        assert solve_milp(m1).objective == pytest.approx(solve_milp(m0).objective)


def test_build_errors(fig2):
    with pytest.raises(ModelError):
        build_model(SubstrateState(SubstrateNetwork()), fig2)
    with pytest.raises(ModelError):
        build_model(SubstrateState(PATH3), make_vnr([("a", 1)], [("a", "zz", 1)]))


def test_decode_rejects_fractional():
    _, ix = build_model(SubstrateState(PATH3), make_vnr([("a", 10)]))
    x = np.zeros(max(ix.wn.values()) + 10)
    x[ix.wn["a", "A"]] = 0.5
    x[ix.wn["a", "B"]] = 0.5
    with pytest.raises(DecodeError):
        decode(x, ix)


def test_decode_objective_cross_check(fig1, fig2):
    _, ix, out = _solve(SubstrateState(fig1), fig2)
    with pytest.raises(DecodeError):
        decode(out.assignment, ix, solver_objective=out.objective + 1.0)


def test_ir_and_checker():
    m = MilpModel()
    x = m.add_var("x", BINARY, obj=1)
    y = m.add_var("y", CONTINUOUS, 0, 4, obj=-1)
    m.add_row("r", [(x, 2), (y, 1)], "<=", 3)
    assert m.objective_value(np.array([1, 1])) == 0
    assert check_assignment(m, np.array([1, 1])) == []
    assert check_assignment(m, np.array([1, 2]))
    assert check_assignment(m, np.array([0.5, 0]))
    with pytest.raises(ValueError):
        m.add_var("x")
