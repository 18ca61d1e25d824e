from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .formulation import VarIndex, evaluate_objective


class DecodeError(ValueError):
    pass


@dataclass
class EmbeddingDecision:
    """Node maps and per-link flows of one embedding.

    Flows are keyed by canonical virtual link ``(i, j)`` and oriented from
    ``i`` to ``j``; only substrate arcs appear (meta-arcs are dropped).
    Backup maps cover nodes with ``avail > 0`` and links touching them.
    """

    working_nodes: dict[str, str] = field(default_factory=dict)
    backup_nodes: dict[str, str] = field(default_factory=dict)
    working_flows: dict[tuple[str, str], dict[tuple[str, str], float]] = field(default_factory=dict)
    backup_flows: dict[tuple[str, str], dict[tuple[str, str], float]] = field(default_factory=dict)
    objective: float = 0.0

    def to_dict(self) -> dict:
        def flows(fm):
            return {
                f"{i}-{j}": [{"arc": [p, q], "amount": amt} for (p, q), amt in sorted(arcs.items())]
                for (i, j), arcs in sorted(fm.items())
            }

        return {
            "working_nodes": dict(sorted(self.working_nodes.items())),
            "backup_nodes": dict(sorted(self.backup_nodes.items())),
            "working_flows": flows(self.working_flows),
            "backup_flows": flows(self.backup_flows),
            "objective": self.objective,
        }


def _clean(v: float) -> float:
    # snap solver noise onto the 1e-3 grid the instance data lives on
    r = round(v, 3)
    return float(r) if abs(v - r) <= 1e-7 else float(v)


def decode(solution, index: VarIndex, tol: float = 1e-6, solver_objective: float | None = None) -> EmbeddingDecision:
    """Read an :class:`EmbeddingDecision` back from a column assignment.

    Raises :class:`DecodeError` on fractional binaries, a virtual node mapped
    twice, cloud indicators inconsistent with the chosen hosts, or when the
    recomputed objective disagrees with ``solver_objective`` (relative ``tol``).
    """
    x = np.asarray(solution, dtype=float)
    ix = index

    def binval(col, name):
        v = x[col]
        if abs(v - round(v)) > tol:
            raise DecodeError(f"{name} = {v:g} is not integral")
        return int(round(v))

    dec = EmbeddingDecision()
    for i in ix.vnodes:
        hosts = [p for p in ix.snodes if binval(ix.wn[i, p], f"wn[{i},{p}]")]
        if len(hosts) != 1:
            raise DecodeError(f"virtual node {i} mapped to {len(hosts)} working hosts")
        dec.working_nodes[i] = hosts[0]
        if ix.backup_network:
            bhosts = [p for p in ix.snodes if binval(ix.bn[i, p], f"bn[{i},{p}]")]
            if len(bhosts) != 1:
                raise DecodeError(f"virtual node {i} mapped to {len(bhosts)} backup hosts")
            if i in ix.aux.nodes_backup:
                dec.backup_nodes[i] = bhosts[0]
        for c in ix.clouds:
            if binval(ix.wc[i, c], f"wc[{i},{c}]") != (ix.node_cloud[dec.working_nodes[i]] == c):
                raise DecodeError(f"cloud indicator wc[{i},{c}] disagrees with host {dec.working_nodes[i]}")
            if ix.backup_network:
                host = bhosts[0]
                if binval(ix.bc[i, c], f"bc[{i},{c}]") != (ix.node_cloud[host] == c):
                    raise DecodeError(f"cloud indicator bc[{i},{c}] disagrees with backup host {host}")

    for link in ix.vlinks:
        wf = {}
        for a in ix.sub_arcs:
            v = x[ix.wf[link, a]]
            if v > tol:
                wf[a] = _clean(v)
        dec.working_flows[link] = wf
        if ix.backup_network and link in ix.aux.links_backup:
            bf = {}
            for a in ix.sub_arcs:
                v = x[ix.bf[link, a]]
                if v > tol:
                    bf[a] = _clean(v)
            dec.backup_flows[link] = bf

    dec.objective = float(evaluate_objective(ix, x))
    if solver_objective is not None:
        scale = max(1.0, abs(solver_objective))
        if abs(dec.objective - solver_objective) > tol * scale:
            raise DecodeError(
                f"recomputed objective {dec.objective!r} differs from solver objective {solver_objective!r}")
    return dec
