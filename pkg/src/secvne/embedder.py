"""Online embedding: pick the cheapest feasible variant, then book it."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .milp import EmbeddingDecision, Weights, build_model, decode
from .model import (
    Allocation,
    SubstrateNetwork,
    SubstrateState,
    VirtualNetworkRequest,
    _num,
    canon,
    dec,
    level_domain,
)
from .policy import Leaf, Not, And, Or, RequestVariant, expand, policy_domain
from .solver import LIMIT_REACHED, OPTIMAL, SolveLimits, solve_milp

log = logging.getLogger(__name__)

RECORD_SCHEMA = "secvne.embedding/1"

NO_ELIGIBLE_NODE = "no-eligible-node"
CAPACITY = "capacity"
NO_FEASIBLE_PATH = "no-feasible-path"
SOLVER_LIMIT = "solver-limit"


@dataclass(frozen=True)
class PricingWeights:
    lambda1: float = 1.0
    lambda2: float = 1.0

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0 or not (self.lambda1 or self.lambda2):
            raise ValueError("pricing weights must be non-negative and not both zero")


@dataclass
class EmbeddingRecord:
    request_id: str
    variant: RequestVariant
    decision: EmbeddingDecision
    allocation: Allocation
    revenue: float
    cost: float
    revision: int
    variant_index: int = 0
    arrival: float | None = None
    departure: float | None = None
    stats: dict = field(default_factory=dict)

    accepted = True

    def to_dict(self) -> dict:
        return {
            "schema": RECORD_SCHEMA,
            "request_id": self.request_id,
            "accepted": True,
            "variant_index": self.variant_index,
            "variant": self.variant.to_dict(),
            "embedding": self.decision.to_dict(),
            "allocation": {
                "node_cpu": {p: _num(v) for p, v in sorted(self.allocation.node_cpu.items())},
                "link_bw": {f"{p}-{q}": _num(v) for (p, q), v in sorted(self.allocation.link_bw.items())},
            },
            "revenue": self.revenue,
            "cost": self.cost,
            "revision": self.revision,
        }


@dataclass
class Rejection:
    request_id: str
    reason: str
    detail: str = ""
    arrival: float | None = None

    accepted = False

    def to_dict(self) -> dict:
        return {"schema": RECORD_SCHEMA, "request_id": self.request_id, "accepted": False,
                "reason": self.reason, "detail": self.detail}


# ---------------------------------------------------------------------------
# pricing
# ---------------------------------------------------------------------------


def revenue(variant: RequestVariant | VirtualNetworkRequest, pricing: PricingWeights | None = None) -> float:
    """Price of the demands; allowed-sets are priced at their minimum level."""
    pricing = pricing or PricingWeights()
    vnr = variant.vnr if isinstance(variant, RequestVariant) else variant
    protected = {n.id for n in vnr.nodes if n.avail > 0}
    node_part = sum(
        (2 if n.id in protected else 1) * n.cpu * n.sec_demand * n.cloud_demand for n in vnr.nodes)
    link_part = sum(
        (2 if (l.endpoints[0] in protected or l.endpoints[1] in protected) else 1) * l.bw * l.sec_demand
        for l in vnr.links)
    return pricing.lambda1 * float(node_part) + pricing.lambda2 * float(link_part)


def cost(decision: EmbeddingDecision | EmbeddingRecord, vnr: VirtualNetworkRequest | None,
         network: SubstrateNetwork, pricing: PricingWeights | None = None) -> float:
    """Price of the substrate resources actually held, backups included."""
    pricing = pricing or PricingWeights()
    if isinstance(decision, EmbeddingRecord):
        vnr = decision.variant.vnr
        decision = decision.decision
    node_part = 0.0
    for i, p in decision.working_nodes.items():
        node_part += float(vnr.node[i].cpu) * float(network.node[p].sec) * float(network.trust(p))
    for i, p in decision.backup_nodes.items():
        node_part += float(vnr.node[i].cpu) * float(network.node[p].sec) * float(network.trust(p))
    link_part = 0.0
    for flows in (decision.working_flows, decision.backup_flows):
        for arcs in flows.values():
            for (p, q), amt in arcs.items():
                link_part += amt * float(network.link[canon(p, q)].sec)
    return pricing.lambda1 * node_part + pricing.lambda2 * link_part


def allocation_of(decision: EmbeddingDecision, vnr: VirtualNetworkRequest) -> Allocation:
    """Resources to book for ``decision``, rounded onto the 0.001 grid."""
    cpu: dict[str, float] = {}
    for i, p in decision.working_nodes.items():
        cpu[p] = cpu.get(p, 0.0) + float(vnr.node[i].cpu)
    for i, p in decision.backup_nodes.items():
        cpu[p] = cpu.get(p, 0.0) + float(vnr.node[i].cpu)
    bw: dict[tuple[str, str], float] = {}
    for flows in (decision.working_flows, decision.backup_flows):
        for arcs in flows.values():
            for (p, q), amt in arcs.items():
                e = canon(p, q)
                bw[e] = bw.get(e, 0.0) + amt
    node_cpu = {p: dec(v) for p, v in sorted(cpu.items())}
    link_bw = {e: dec(v) for e, v in sorted(bw.items()) if dec(v) > 0}
    return Allocation(node_cpu, link_bw)


# ---------------------------------------------------------------------------
# soundness
# ---------------------------------------------------------------------------


def check_embedding(state: SubstrateState, variant: RequestVariant | VirtualNetworkRequest,
                    decision: EmbeddingDecision, allocation: Allocation | None = None,
                    tol: float = 1e-6) -> list[str]:
    """Re-verify an embedding from raw data, independently of the model.

    Covers host eligibility, link security on every carrying link, host
    exclusivity, flow conservation, working/backup link disjointness,
    same/different-cloud placement of replicas, and residuals after booking.
    Returns human-readable violations (empty when sound).
    """
    if not isinstance(variant, RequestVariant):
        variant = RequestVariant.from_vnr(variant)
    net = state.network
    vnr = variant.vnr
    out: list[str] = []
    protected = {n.id for n in vnr.nodes if n.avail > 0}

    # 1. node eligibility
    if set(decision.working_nodes) != {n.id for n in vnr.nodes}:
        out.append("working map does not cover every virtual node")
    if set(decision.backup_nodes) != protected:
        out.append("backup map does not match the nodes asking for a replica")
    for role, nmap in (("working", decision.working_nodes), ("backup", decision.backup_nodes)):
        for i, p in nmap.items():
            if p not in net.node:
                out.append(f"{role} host {p} of {i} is not a substrate node")
            elif not variant.node_admits(i, net.node[p].sec, net.trust(p)):
                out.append(f"{role} host {p} of {i} fails its security/cloud demand")
    if out:
        return out

    # 2. link security
    for role, flows in (("working", decision.working_flows), ("backup", decision.backup_flows)):
        for link, arcs in flows.items():
            for (p, q), amt in arcs.items():
                e = canon(p, q)
                if e not in net.link:
                    out.append(f"{role} flow of {link} uses unknown link {e}")
                elif amt > tol and not variant.link_admits(link, net.link[e].sec):
                    out.append(f"{role} flow of {link} crosses {e} with insufficient security")

    # 3. host exclusivity
    hosts = list(decision.working_nodes.values())
    if len(set(hosts)) != len(hosts):
        out.append("two virtual nodes share a working host")
    backups = list(decision.backup_nodes.values())
    if len(set(backups)) != len(backups):
        out.append("two replicas share a backup host")
    for i, p in decision.backup_nodes.items():
        if p in hosts:
            out.append(f"replica of {i} sits on working host {p}")

    # 4. flow conservation
    def conserve(role, link, arcs, src, dst, bw):
        net_out: dict[str, float] = {}
        for (p, q), amt in arcs.items():
            net_out[p] = net_out.get(p, 0.0) + amt
            net_out[q] = net_out.get(q, 0.0) - amt
        for node in set(net_out) | {src, dst}:
            want = bw if node == src else -bw if node == dst else 0.0
            if abs(net_out.get(node, 0.0) - want) > tol * max(1.0, bw):
                out.append(f"{role} flow of {link} not conserved at {node}")

    ebar = set()
    for l in vnr.links:
        i, j = l.endpoints
        bw = float(l.bw)
        conserve("working", l.endpoints, decision.working_flows.get(l.endpoints, {}),
                 decision.working_nodes[i], decision.working_nodes[j], bw)
        if i in protected or j in protected:
            ebar.add(l.endpoints)
            src = decision.backup_nodes.get(i, decision.working_nodes[i])
            dst = decision.backup_nodes.get(j, decision.working_nodes[j])
            conserve("backup", l.endpoints, decision.backup_flows.get(l.endpoints, {}), src, dst, bw)
    if set(decision.backup_flows) - ebar:
        out.append("backup flows reported for links without a protected endpoint")

    # 5. disjointness
    def carried(flows):
        return {canon(p, q) for arcs in flows.values() for (p, q), amt in arcs.items() if amt > tol}

    shared = carried(decision.working_flows) & carried(decision.backup_flows)
    if shared:
        out.append(f"links {sorted(shared)} carry both working and backup traffic")

    # 6. replica placement
    for n in vnr.nodes:
        if n.avail == 0:
            continue
        wc = net.node[decision.working_nodes[n.id]].cloud_id
        bc = net.node[decision.backup_nodes[n.id]].cloud_id
        if n.avail == 1 and wc != bc:
            out.append(f"replica of {n.id} must share cloud {wc}, got {bc}")
        if n.avail == 2 and wc == bc:
            out.append(f"replica of {n.id} must leave cloud {wc}")

    # 7. residuals after booking
    alloc = allocation if allocation is not None else allocation_of(decision, vnr)
    for p, amt in alloc.node_cpu.items():
        if state.residual_node(p) - amt < 0:
            out.append(f"node {p} would be overbooked")
    for e, amt in alloc.link_bw.items():
        if state.residual_link(e) - amt < 0:
            out.append(f"link {e} would be overbooked")
    return out


# ---------------------------------------------------------------------------
# embedding
# ---------------------------------------------------------------------------


def _variants(state: SubstrateState, request) -> list[RequestVariant]:
    if isinstance(request, RequestVariant):
        return [request]
    if isinstance(request, VirtualNetworkRequest):
        return [RequestVariant.from_vnr(request)]
    if isinstance(request, (Leaf, Not, And, Or)):
        domain = level_domain(state.network) if state.network.nodes else policy_domain(request)
        return expand(request, domain)
    raise TypeError(f"cannot embed a {type(request).__name__}")


def _diagnose(state: SubstrateState, variant: RequestVariant) -> str:
    net = state.network
    for n in variant.vnr.nodes:
        hosts = [p.id for p in net.nodes if variant.node_admits(n.id, p.sec, net.trust(p.id))]
        if not hosts:
            return NO_ELIGIBLE_NODE
        if not any(state.residual_node(p) >= n.cpu for p in hosts):
            return CAPACITY
    return NO_FEASIBLE_PATH


def embed(state: SubstrateState, request, weights: Weights | None = None,
          pricing: PricingWeights | None = None, limits: SolveLimits | None = None,
          request_id: str = "r0", backend: str = "native") -> EmbeddingRecord | Rejection:
    """Embed ``request`` (a policy, request or variant) without touching ``state``.

    Every variant is solved; the feasible one of lowest cost wins, ties going
    to the earliest variant.  The returned record carries the state revision
    it was computed against, which :func:`commit` checks.
    """
    weights = weights or Weights()
    pricing = pricing or PricingWeights()
    limits = limits or SolveLimits()
    variants = _variants(state, request)
    if not state.network.nodes:
        return Rejection(request_id, NO_ELIGIBLE_NODE, "substrate has no nodes")

    best: EmbeddingRecord | None = None
    reasons = []
    for k, variant in enumerate(variants):
        model, index = build_model(state, variant, weights)
        outcome = solve_milp(model, limits, backend=backend)
        log.debug("request %s variant %d: %s (%s)", request_id, k, outcome.status, outcome.stats)
        if outcome.status != OPTIMAL:
            reasons.append(SOLVER_LIMIT if outcome.status == LIMIT_REACHED else _diagnose(state, variant))
            continue
        decision = decode(outcome.assignment, index, solver_objective=outcome.objective)
        alloc = allocation_of(decision, variant.vnr)
        rec = EmbeddingRecord(
            request_id=request_id,
            variant=variant,
            decision=decision,
            allocation=alloc,
            revenue=revenue(variant, pricing),
            cost=cost(decision, variant.vnr, state.network, pricing),
            revision=state.revision,
            variant_index=k,
            stats=dict(outcome.stats, variants=len(variants)),
        )
        if best is None or rec.cost < best.cost - 1e-9 * max(1.0, abs(best.cost)):
            best = rec
    if best is not None:
        return best
    reason = SOLVER_LIMIT if SOLVER_LIMIT in reasons else reasons[0]
    return Rejection(request_id, reason, f"{len(variants)} variant(s) without a feasible embedding")


def commit(state: SubstrateState, record: EmbeddingRecord) -> SubstrateState:
    """Book ``record`` on ``state``; refuses records computed at another revision."""
    state.commit(record.request_id, record.allocation, revision=record.revision)
    return state


def release(state: SubstrateState, request_id: str) -> SubstrateState:
    state.release(request_id)
    return state


__all__ = [
    "CAPACITY", "NO_ELIGIBLE_NODE", "NO_FEASIBLE_PATH", "SOLVER_LIMIT",
    "EmbeddingRecord", "PricingWeights", "Rejection",
    "allocation_of", "check_embedding", "commit", "cost", "embed", "release", "revenue",
]

