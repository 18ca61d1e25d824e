"""Reference oracles that share no code with the solver or the formulation.

Each oracle works from raw instance data and brute force:

* :func:`enumerate_milp` walks all 2^k binary patterns and settles the
  continuous remainder with SciPy's LP solver;
* :func:`fig2_oracle` enumerates node maps and simple working/backup path
  pairs on the two-node request used throughout the tests;
* :func:`single_path_oracle` enumerates injective node maps and one simple
  path per virtual link for no-backup requests;
* :func:`policy_holds` evaluates a randomly generated policy structure
  directly, without the parser or the DNF expansion.

``make_frozen.py`` runs them once and stores the results under ``data/``.
"""
from __future__ import annotations

import itertools
import math
from decimal import Decimal

import networkx as nx
import numpy as np
from scipy.optimize import linprog

from secvne.model import make_substrate, make_vnr

# ---------------------------------------------------------------------------
# random MILPs
# ---------------------------------------------------------------------------


def random_milp_spec(rng: np.random.Generator) -> dict:
    """Small MILP with integer data; at most 12 binaries."""
    k = int(rng.integers(1, 13))
    n_cont = int(rng.integers(0, 4)) if k <= 6 else 0
    n = k + n_cont
    m = int(rng.integers(1, 9))
    A = rng.integers(-5, 6, size=(m, n))
    A[A == 0] = 1
    mask = rng.random((m, n)) < 0.6
    A = np.where(mask, A, 0)
    c = rng.integers(-10, 11, size=n)
    ub_cont = rng.integers(1, 8, size=n_cont)
    point = np.concatenate([rng.integers(0, 2, size=k), rng.random(n_cont) * ub_cont])
    act = A @ point
    rows = []
    for r in range(m):
        sense = ["<=", ">=", "="][int(rng.integers(0, 3))] if n_cont else ["<=", ">="][int(rng.integers(0, 2))]
        # mostly loosen around the sampled point so most cases stay feasible
        jitter = int(rng.integers(-1, 4))
        if sense == "<=":
            rhs = math.floor(act[r]) + jitter
        elif sense == ">=":
            rhs = math.ceil(act[r]) - jitter
        else:
            rhs = round(float(act[r]), 3)
        rows.append({"coefs": [int(v) for v in A[r]], "sense": sense, "rhs": float(rhs)})
    return {
        "k": k,
        "n_cont": n_cont,
        "c": [int(v) for v in c],
        "ub_cont": [int(v) for v in ub_cont],
        "rows": rows,
    }


def enumerate_milp(spec: dict) -> float | None:
    """Exhaustive optimum of a spec from :func:`random_milp_spec`; None if infeasible."""
    k, nc = spec["k"], spec["n_cont"]
    c = np.array(spec["c"], dtype=float)
    A = np.array([r["coefs"] for r in spec["rows"]], dtype=float)
    senses = [r["sense"] for r in spec["rows"]]
    rhs = np.array([r["rhs"] for r in spec["rows"]], dtype=float)
    patterns = np.array(list(itertools.product((0, 1), repeat=k)), dtype=float)
    tol = 1e-9
    if nc == 0:
        act = patterns @ A.T
        ok = np.ones(len(patterns), dtype=bool)
        for r, s in enumerate(senses):
            if s == "<=":
                ok &= act[:, r] <= rhs[r] + tol
            elif s == ">=":
                ok &= act[:, r] >= rhs[r] - tol
            else:
                ok &= np.abs(act[:, r] - rhs[r]) <= tol
        if not ok.any():
            return None
        return float((patterns[ok] @ c).min())
    best = None
    Ab, Ac = A[:, :k], A[:, k:]
    bounds = [(0, u) for u in spec["ub_cont"]]
    for pat in patterns:
        resid = rhs - Ab @ pat
        A_ub, b_ub, A_eq, b_eq = [], [], [], []
        for r, s in enumerate(senses):
            if s == "<=":
                A_ub.append(Ac[r]); b_ub.append(resid[r])
            elif s == ">=":
                A_ub.append(-Ac[r]); b_ub.append(-resid[r])
            else:
                A_eq.append(Ac[r]); b_eq.append(resid[r])
        res = linprog(c[k:], A_ub=np.array(A_ub) if A_ub else None, b_ub=b_ub or None,
                      A_eq=np.array(A_eq) if A_eq else None, b_eq=b_eq or None,
                      bounds=bounds, method="highs")
        if res.status == 0:
            val = float(c[:k] @ pat + res.fun)
            best = val if best is None else min(best, val)
    return best


def milp_from_spec(spec: dict):
    from secvne.milp import BINARY, CONTINUOUS, MilpModel

    m = MilpModel(name="rand")
    cols = []
    for j in range(spec["k"]):
        cols.append(m.add_var(f"x{j}", BINARY, obj=spec["c"][j]))
    for t in range(spec["n_cont"]):
        cols.append(m.add_var(f"y{t}", CONTINUOUS, 0.0, spec["ub_cont"][t], obj=spec["c"][spec["k"] + t]))
    for r, row in enumerate(spec["rows"]):
        m.add_row(f"r{r}", list(zip(cols, row["coefs"])), row["sense"], row["rhs"])
    return m


# ---------------------------------------------------------------------------
# the two-node request with a protected node
# ---------------------------------------------------------------------------

FIG1_CLOUDS = {"c1": 1, "c2": 2, "c3": 3}
FIG1_NODES = [("A", 80, 1, "c1"), ("B", 80, 3, "c1"), ("C", 80, 2, "c2"), ("D", 80, 1, "c2"), ("E", 80, 3, "c3")]
FIG1_LINKS = [("A", "B", 100, 2), ("B", "D", 100, 2), ("D", "C", 100, 2), ("A", "E", 100, 2),
              ("C", "E", 100, 1), ("D", "E", 100, 1)]
FIG2_VNODES = [("a", 10, 3, 1, 0), ("b", 15, 2, 1, 2)]
FIG2_VLINKS = [("a", "b", 20, 2)]


def fig1_substrate():
    return make_substrate(FIG1_CLOUDS, FIG1_NODES, FIG1_LINKS)


def fig2_vnr():
    return make_vnr(FIG2_VNODES, FIG2_VLINKS)


def _graph(links):
    g = nx.Graph()
    for u, v, bw, sec, *rest in links:
        g.add_edge(u, v, bw=float(bw), sec=float(sec), alpha=float(rest[0]) if rest else 1.0)
    return g


def fig2_oracle(beta=(1.0, 1.0, 1.0)) -> dict:
    """Enumerate every embedding of the two-node request on the five-node substrate.

    Node ``a`` has no replica, node ``b`` needs a backup in another cloud.
    Working path joins host(a) to host(b); backup path joins host(a) (the
    replica-less node keeps its single copy) to backup(b); the two paths
    share no substrate link.  Capacity is ample, so single paths are exact.
    """
    b1, b2, b3 = beta
    nodes = {n[0]: {"cpu": n[1], "sec": n[2], "cloud": n[3]} for n in FIG1_NODES}
    trust = FIG1_CLOUDS
    g = _graph(FIG1_LINKS)
    va, vb = FIG2_VNODES
    bw, lsec = FIG2_VLINKS[0][2], FIG2_VLINKS[0][3]

    def node_ok(v, p):
        return nodes[p]["sec"] >= v[2] and trust[nodes[p]["cloud"]] >= v[3]

    def node_cost(v, p):
        return v[1] * nodes[p]["sec"] * trust[nodes[p]["cloud"]]

    sub = nx.Graph([(u, v, d) for u, v, d in g.edges(data=True) if d["sec"] >= lsec])
    sub.add_nodes_from(nodes)

    def paths(s, t):
        return [list(zip(p, p[1:])) for p in nx.all_simple_paths(sub, s, t)]

    def path_cost(path):
        return b2 * sum(bw * sub.edges[e]["sec"] * sub.edges[e]["alpha"] for e in path) + b3 * len(path)

    best, arg = math.inf, []
    for pa in nodes:
        if not node_ok(va, pa):
            continue
        for pb in nodes:
            if pb == pa or not node_ok(vb, pb):
                continue
            for qb in nodes:
                if qb in (pa, pb) or not node_ok(vb, qb):
                    continue
                if nodes[qb]["cloud"] == nodes[pb]["cloud"]:
                    continue
                ncost = b1 * (node_cost(va, pa) + node_cost(vb, pb) + node_cost(vb, qb))
                for wp in paths(pa, pb):
                    wset = {frozenset(e) for e in wp}
                    for bp in paths(pa, qb):
                        if wset & {frozenset(e) for e in bp}:
                            continue
                        total = ncost + path_cost(wp) + path_cost(bp)
                        entry = {"a": pa, "b": pb, "b_backup": qb, "working": wp, "backup": bp}
                        if total < best - 1e-9:
                            best, arg = total, [entry]
                        elif abs(total - best) <= 1e-9:
                            arg.append(entry)
    return {"objective": best, "optima": arg}


# ---------------------------------------------------------------------------
# tiny no-backup instances
# ---------------------------------------------------------------------------

SEC_LEVELS = (1.0, 1.2, 5.0)


def random_tiny_instance(rng: np.random.Generator) -> dict:
    """Substrate of 3..6 nodes, request of 2..3 nodes, no replicas."""
    ns = int(rng.integers(3, 7))
    n_clouds = int(rng.integers(1, 4))
    clouds = {f"c{t + 1}": t + 1 for t in range(n_clouds)}
    snodes = [(f"S{p}", int(rng.integers(20, 101)), float(rng.choice(SEC_LEVELS)), f"c{int(rng.integers(1, n_clouds + 1))}")
              for p in range(ns)]
    while True:
        pairs = [(f"S{p}", f"S{q}") for p in range(ns) for q in range(p + 1, ns) if rng.random() < 0.5]
        g = nx.Graph(pairs)
        g.add_nodes_from(n[0] for n in snodes)
        if nx.is_connected(g):
            break
    slinks = [(u, v, int(rng.integers(20, 101)), float(rng.choice(SEC_LEVELS))) for u, v in pairs]
    nv = int(rng.integers(2, 4))
    vnodes = []
    for i in range(nv):
        sec = float(rng.choice(SEC_LEVELS)) if rng.random() < 0.3 else 1.0
        cloud = int(rng.integers(1, n_clouds + 1)) if rng.random() < 0.3 else 1
        vnodes.append((f"v{i}", int(rng.integers(5, 41)), sec, cloud, 0))
    names = [v[0] for v in vnodes]
    vpairs = [(names[i], names[i + 1]) for i in range(nv - 1)]
    if nv == 3 and rng.random() < 0.5:
        vpairs.append((names[0], names[2]))
    vlinks = [(u, v, int(rng.integers(5, 41)), float(rng.choice(SEC_LEVELS)) if rng.random() < 0.3 else 1.0)
              for u, v in vpairs]
    return {"clouds": clouds, "snodes": snodes, "slinks": slinks, "vnodes": vnodes, "vlinks": vlinks}


def tiny_objects(inst: dict):
    return (make_substrate(inst["clouds"], [tuple(n) for n in inst["snodes"]], [tuple(l) for l in inst["slinks"]]),
            make_vnr([tuple(n) for n in inst["vnodes"]], [tuple(l) for l in inst["vlinks"]]))


def single_path_oracle(inst: dict, beta=(1.0, 1.0, 1.0)) -> float | None:
    """Cheapest embedding using exactly one simple path per virtual link."""
    b1, b2, b3 = beta
    clouds = inst["clouds"]
    snodes = {n[0]: {"cpu": n[1], "sec": n[2], "trust": clouds[n[3]]} for n in inst["snodes"]}
    g = _graph(inst["slinks"])
    g.add_nodes_from(snodes)
    vnodes = inst["vnodes"]
    vlinks = inst["vlinks"]

    def ok(v, p):
        s = snodes[p]
        return s["cpu"] >= v[1] and s["sec"] >= v[2] and s["trust"] >= v[3]

    best = None
    for hosts in itertools.permutations(snodes, len(vnodes)):
        if not all(ok(v, p) for v, p in zip(vnodes, hosts)):
            continue
        where = {v[0]: p for v, p in zip(vnodes, hosts)}
        ncost = b1 * sum(v[1] * snodes[p]["sec"] * snodes[p]["trust"] for v, p in zip(vnodes, hosts))
        options = []
        for u, v, bw, sec in vlinks:
            sub = nx.Graph([(a, b, d) for a, b, d in g.edges(data=True) if d["sec"] >= sec and d["bw"] >= bw])
            sub.add_nodes_from(snodes)
            opts = []
            for path in nx.all_simple_paths(sub, where[u], where[v]):
                edges = [tuple(sorted(e)) for e in zip(path, path[1:])]
                cost = b2 * sum(bw * g.edges[e]["sec"] * g.edges[e]["alpha"] for e in edges) + b3 * len(edges)
                opts.append((cost, edges, bw))
            if not opts:
                break
            options.append(opts)
        else:
            for combo in itertools.product(*options):
                used: dict = {}
                for _, edges, bw in combo:
                    for e in edges:
                        used[e] = used.get(e, 0) + bw
                if any(used[e] > g.edges[e]["bw"] + 1e-9 for e in used):
                    continue
                total = ncost + sum(cst for cst, _, _ in combo)
                if best is None or total < best:
                    best = total
    return best


# ---------------------------------------------------------------------------
# random policies with a direct evaluator
# ---------------------------------------------------------------------------

POLICY_ATTRS = (("sec", ("a",)), ("cloud", ("a",)), ("sec", ("b",)), ("cloud", ("b",)), ("sec", ("a", "b")))


def random_policy(rng: np.random.Generator, levels, depth: int = 0):
    """Nested tuples: ("leaf", func, params, op, value) | ("not", x) | ("and"|"or", x, y)."""
    if depth >= 4 or rng.random() < 0.3 + 0.15 * depth:
        func, params = POLICY_ATTRS[int(rng.integers(len(POLICY_ATTRS)))]
        # thresholds may fall between or outside the declared levels
        pool = list(levels) + [0.5, 2.5, 9.0]
        value = float(pool[int(rng.integers(len(pool)))])
        return ("leaf", func, params, ">=" if rng.random() < 0.7 else "=", value)
    r = rng.random()
    if r < 0.2:
        return ("not", random_policy(rng, levels, depth + 1))
    kind = "and" if r < 0.6 else "or"
    return (kind, random_policy(rng, levels, depth + 1), random_policy(rng, levels, depth + 1))


def policy_text(p) -> str:
    tag = p[0]
    if tag == "leaf":
        _, func, params, op, value = p
        return f"{func}^V({','.join(params)}){op}{value:g}"
    if tag == "not":
        return f"!({policy_text(p[1])})"
    sym = " & " if tag == "and" else " | "
    return f"({policy_text(p[1])}{sym}{policy_text(p[2])})"


def policy_attrs(p) -> set:
    if p[0] == "leaf":
        return {(p[1], p[2])}
    return set().union(*(policy_attrs(q) for q in p[1:]))


def policy_holds(p, levels: dict) -> bool:
    """Truth of ``p`` when attribute ``(func, params)`` takes value ``levels[...]``."""
    tag = p[0]
    if tag == "leaf":
        _, func, params, op, value = p
        x = levels[(func, params)]
        return x >= value - 1e-12 if op == ">=" else abs(x - value) < 1e-12
    if tag == "not":
        return not policy_holds(p[1], levels)
    if tag == "and":
        return policy_holds(p[1], levels) and policy_holds(p[2], levels)
    return policy_holds(p[1], levels) or policy_holds(p[2], levels)


def decimal_json(value):
    if isinstance(value, Decimal):
        return float(value)
    raise TypeError(type(value))


def policy_mismatches(p, variants, sec_dom, cloud_dom) -> int:
    """Level tuples on which the policy and the union of ``variants`` disagree.

    ``variants`` is None when expansion declared the policy unsatisfiable.
    """
    from decimal import Decimal as D

    bad = 0
    for sa, ca, sb, cb, sl in itertools.product(sec_dom, cloud_dom, sec_dom, cloud_dom, sec_dom):
        levels = {("sec", ("a",)): sa, ("cloud", ("a",)): ca, ("sec", ("b",)): sb,
                  ("cloud", ("b",)): cb, ("sec", ("a", "b")): sl}
        truth = policy_holds(p, levels)
        admitted = False
        for v in variants or ():
            ok = True
            for i, s, c in (("a", sa, ca), ("b", sb, cb)):
                if i in v.vnr.node and not v.node_admits(i, D(str(s)), D(str(c))):
                    ok = False
            if ("a", "b") in v.vnr.link and not v.link_admits(("a", "b"), D(str(sl))):
                ok = False
            if ok:
                admitted = True
                break
        bad += truth != admitted
    return bad
