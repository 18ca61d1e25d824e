"""Substrate and virtual network types, residual bookkeeping and JSON interchange.

All capacities, demands and levels are held as :class:`decimal.Decimal` values
quantized to three fractional digits, so that allocating and releasing the same
resources always restores the residual capacities exactly.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from functools import cached_property
from typing import Iterable, Mapping

QUANTUM = Decimal("0.001")
ZERO = Decimal(0)

_ID_RE = re.compile(r"^[A-Za-z0-9]+$")

SUBSTRATE_SCHEMA = "secvne.substrate/1"
VNR_SCHEMA = "secvne.vnr/1"


class ModelError(ValueError):
    """Raised for malformed networks or invalid state operations."""


class CapacityError(ModelError):
    """An allocation would drive a residual capacity below zero."""


class StaleRecordError(ModelError):
    """A record was computed against an older substrate revision."""


def dec(value) -> Decimal:
    """Convert ``value`` to a Decimal with three fractional digits."""
    if isinstance(value, Decimal):
        d = value
    elif isinstance(value, float):
        d = Decimal(repr(value))
    else:
        d = Decimal(str(value))
    return d.quantize(QUANTUM, rounding=ROUND_HALF_EVEN)


def canon(u: str, v: str) -> tuple[str, str]:
    """Canonical (sorted) endpoint order for an undirected link."""
    return (u, v) if u <= v else (v, u)


def _num(d: Decimal):
    # JSON rendering: integral values as ints, the rest as floats
    if d == d.to_integral_value():
        return int(d)
    return float(d)


# ---------------------------------------------------------------------------
# Substrate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Cloud:
    id: str
    trust: Decimal

    def __post_init__(self):
        object.__setattr__(self, "trust", dec(self.trust))


@dataclass(frozen=True)
class SubstrateNode:
    id: str
    cpu_total: Decimal
    sec: Decimal
    cloud_id: str

    def __post_init__(self):
        object.__setattr__(self, "cpu_total", dec(self.cpu_total))
        object.__setattr__(self, "sec", dec(self.sec))


@dataclass(frozen=True)
class SubstrateLink:
    endpoints: tuple[str, str]
    bw_total: Decimal
    sec: Decimal
    alpha: Decimal = Decimal(1)

    def __post_init__(self):
        u, v = self.endpoints
        object.__setattr__(self, "endpoints", canon(u, v))
        object.__setattr__(self, "bw_total", dec(self.bw_total))
        object.__setattr__(self, "sec", dec(self.sec))
        object.__setattr__(self, "alpha", dec(self.alpha))


@dataclass(frozen=True)
class SubstrateNetwork:
    nodes: tuple[SubstrateNode, ...] = ()
    links: tuple[SubstrateLink, ...] = ()
    clouds: tuple[Cloud, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(sorted(self.nodes, key=lambda n: n.id)))
        object.__setattr__(self, "links", tuple(sorted(self.links, key=lambda l: l.endpoints)))
        object.__setattr__(self, "clouds", tuple(sorted(self.clouds, key=lambda c: c.id)))

    @cached_property
    def node(self) -> dict[str, SubstrateNode]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def link(self) -> dict[tuple[str, str], SubstrateLink]:
        return {l.endpoints: l for l in self.links}

    @cached_property
    def cloud(self) -> dict[str, Cloud]:
        return {c.id: c for c in self.clouds}

    def trust(self, node_id: str) -> Decimal:
        """Trust of the cloud hosting ``node_id``."""
        return self.cloud[self.node[node_id].cloud_id].trust

    def neighbors(self, node_id: str) -> list[str]:
        out = []
        for u, v in self.link:
            if u == node_id:
                out.append(v)
            elif v == node_id:
                out.append(u)
        return sorted(out)


def validate_substrate(net: SubstrateNetwork) -> list[str]:
    """Return one description per violated invariant (empty when valid)."""
    problems = []
    cloud_ids = set()
    for c in net.clouds:
        if not _ID_RE.match(c.id):
            problems.append(f"cloud {c.id!r}: identifier must be alphanumeric")
        if c.id in cloud_ids:
            problems.append(f"cloud {c.id!r}: duplicate id")
        cloud_ids.add(c.id)
        if c.trust <= 0:
            problems.append(f"cloud {c.id!r}: trust must be > 0")
    node_ids = set()
    for n in net.nodes:
        if not _ID_RE.match(n.id):
            problems.append(f"node {n.id!r}: identifier must be alphanumeric")
        if n.id in node_ids:
            problems.append(f"node {n.id!r}: duplicate id")
        node_ids.add(n.id)
        if n.cpu_total < 0:
            problems.append(f"node {n.id!r}: cpu_total must be >= 0")
        if n.sec <= 0:
            problems.append(f"node {n.id!r}: sec must be > 0")
        if n.cloud_id not in cloud_ids:
            problems.append(f"node {n.id!r}: unknown cloud {n.cloud_id!r}")
    seen = set()
    for l in net.links:
        u, v = l.endpoints
        name = f"link {u}-{v}"
        if u == v:
            problems.append(f"{name}: endpoints must be distinct")
        for end in (u, v):
            if end not in node_ids:
                problems.append(f"{name}: unknown endpoint {end!r}")
        if l.endpoints in seen:
            problems.append(f"{name}: parallel link")
        seen.add(l.endpoints)
        if l.bw_total < 0:
            problems.append(f"{name}: bw_total must be >= 0")
        if l.sec <= 0:
            problems.append(f"{name}: sec must be > 0")
        if l.alpha <= 0:
            problems.append(f"{name}: alpha must be > 0")
    return problems


# ---------------------------------------------------------------------------
# Virtual network requests
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VirtualNode:
    id: str
    cpu: Decimal
    sec_demand: Decimal = Decimal(1)
    cloud_demand: Decimal = Decimal(1)
    avail: int = 0

    def __post_init__(self):
        object.__setattr__(self, "cpu", dec(self.cpu))
        object.__setattr__(self, "sec_demand", dec(self.sec_demand))
        object.__setattr__(self, "cloud_demand", dec(self.cloud_demand))
        object.__setattr__(self, "avail", int(self.avail))


@dataclass(frozen=True)
class VirtualLink:
    endpoints: tuple[str, str]
    bw: Decimal
    sec_demand: Decimal = Decimal(1)

    def __post_init__(self):
        u, v = self.endpoints
        object.__setattr__(self, "endpoints", canon(u, v))
        object.__setattr__(self, "bw", dec(self.bw))
        object.__setattr__(self, "sec_demand", dec(self.sec_demand))


@dataclass(frozen=True)
class VirtualNetworkRequest:
    nodes: tuple[VirtualNode, ...] = ()
    links: tuple[VirtualLink, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(sorted(self.nodes, key=lambda n: n.id)))
        object.__setattr__(self, "links", tuple(sorted(self.links, key=lambda l: l.endpoints)))

    @cached_property
    def node(self) -> dict[str, VirtualNode]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def link(self) -> dict[tuple[str, str], VirtualLink]:
        return {l.endpoints: l for l in self.links}


def validate_vnr(vnr: VirtualNetworkRequest) -> list[str]:
    problems = []
    ids = set()
    for n in vnr.nodes:
        if not _ID_RE.match(n.id):
            problems.append(f"virtual node {n.id!r}: identifier must be alphanumeric")
        if n.id in ids:
            problems.append(f"virtual node {n.id!r}: duplicate id")
        ids.add(n.id)
        if n.cpu < 0:
            problems.append(f"virtual node {n.id!r}: cpu must be >= 0")
        if n.sec_demand <= 0:
            problems.append(f"virtual node {n.id!r}: sec_demand must be > 0")
        if n.cloud_demand <= 0:
            problems.append(f"virtual node {n.id!r}: cloud_demand must be > 0")
        if n.avail not in (0, 1, 2):
            problems.append(f"virtual node {n.id!r}: avail must be 0, 1 or 2")
    seen = set()
    for l in vnr.links:
        u, v = l.endpoints
        name = f"virtual link {u}-{v}"
        if u == v:
            problems.append(f"{name}: endpoints must be distinct")
        for end in (u, v):
            if end not in ids:
                problems.append(f"{name}: unknown endpoint {end!r}")
        if l.endpoints in seen:
            problems.append(f"{name}: parallel link")
        seen.add(l.endpoints)
        if l.bw < 0:
            problems.append(f"{name}: bw must be >= 0")
        if l.sec_demand <= 0:
            problems.append(f"{name}: sec_demand must be > 0")
    return problems


@dataclass(frozen=True)
class AuxSets:
    nodes_no_backup: frozenset[str]
    nodes_backup: frozenset[str]
    links_no_backup: frozenset[tuple[str, str]]
    links_backup: frozenset[tuple[str, str]]
    backup_network: bool


def derive_aux_sets(vnr: VirtualNetworkRequest) -> AuxSets:
    """Partition nodes and links by whether a backup replica is involved.

    A link needs a backup path as soon as one of its endpoints asks for a
    replica; the backup network exists iff any node does.
    """
    backup = frozenset(n.id for n in vnr.nodes if n.avail > 0)
    no_backup = frozenset(n.id for n in vnr.nodes) - backup
    lb = frozenset(l.endpoints for l in vnr.links if l.endpoints[0] in backup or l.endpoints[1] in backup)
    lnb = frozenset(l.endpoints for l in vnr.links) - lb
    return AuxSets(no_backup, backup, lnb, lb, bool(backup))


# ---------------------------------------------------------------------------
# Level domain
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelDomain:
    """Finite sets of security levels and cloud trusts against which policies expand."""

    sec: frozenset[Decimal]
    cloud: frozenset[Decimal]

    def __post_init__(self):
        object.__setattr__(self, "sec", frozenset(dec(v) for v in self.sec))
        object.__setattr__(self, "cloud", frozenset(dec(v) for v in self.cloud))


def level_domain(net: SubstrateNetwork) -> LevelDomain:
    secs = {n.sec for n in net.nodes} | {l.sec for l in net.links}
    return LevelDomain(frozenset(secs), frozenset(c.trust for c in net.clouds))


# ---------------------------------------------------------------------------
# Residual capacity bookkeeping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Allocation:
    """Resources held by one embedded request: cpu per node, bandwidth per link."""

    node_cpu: Mapping[str, Decimal] = field(default_factory=dict)
    link_bw: Mapping[tuple[str, str], Decimal] = field(default_factory=dict)


class SubstrateState:
    """A substrate together with the allocations currently committed on it.

    Mutated only through :meth:`commit` and :meth:`release`; every mutation
    bumps :attr:`revision`.
    """

    def __init__(self, network: SubstrateNetwork):
        self.network = network
        self.revision = 0
        self._allocations: dict[str, Allocation] = {}
        self._used_cpu = {n.id: ZERO for n in network.nodes}
        self._used_bw = {l.endpoints: ZERO for l in network.links}

    @property
    def allocations(self) -> dict[str, Allocation]:
        return dict(self._allocations)

    def residual_node(self, p: str) -> Decimal:
        try:
            return self.network.node[p].cpu_total - self._used_cpu[p]
        except KeyError:
            raise ModelError(f"unknown substrate node {p!r}") from None

    def residual_link(self, pq: tuple[str, str]) -> Decimal:
        key = canon(*pq)
        try:
            return self.network.link[key].bw_total - self._used_bw[key]
        except KeyError:
            raise ModelError(f"unknown substrate link {pq!r}") from None

    def residual_nodes(self) -> dict[str, Decimal]:
        return {p: self.residual_node(p) for p in self._used_cpu}

    def residual_links(self) -> dict[tuple[str, str], Decimal]:
        return {e: self.residual_link(e) for e in self._used_bw}

    def node_load(self) -> dict[str, Decimal]:
        return dict(self._used_cpu)

    def link_load(self) -> dict[tuple[str, str], Decimal]:
        return dict(self._used_bw)

    def commit(self, request_id: str, alloc: Allocation, revision: int | None = None) -> None:
        if revision is not None and revision != self.revision:
            raise StaleRecordError(
                f"record computed at revision {revision}, state is at {self.revision}")
        if request_id in self._allocations:
            raise ModelError(f"request {request_id!r} already allocated")
        for p, amount in alloc.node_cpu.items():
            if self.residual_node(p) - amount < 0:
                raise CapacityError(f"node {p}: residual {self.residual_node(p)} < {amount}")
        for e, amount in alloc.link_bw.items():
            if self.residual_link(e) - amount < 0:
                raise CapacityError(f"link {e}: residual {self.residual_link(e)} < {amount}")
        for p, amount in alloc.node_cpu.items():
            self._used_cpu[p] += amount
        for e, amount in alloc.link_bw.items():
            self._used_bw[canon(*e)] += amount
        self._allocations[request_id] = alloc
        self.revision += 1

    def release(self, request_id: str) -> Allocation:
        try:
            alloc = self._allocations.pop(request_id)
        except KeyError:
            raise ModelError(f"request {request_id!r} is not allocated") from None
        for p, amount in alloc.node_cpu.items():
            self._used_cpu[p] -= amount
        for e, amount in alloc.link_bw.items():
            self._used_bw[canon(*e)] -= amount
        self.revision += 1
        return alloc


# ---------------------------------------------------------------------------
# JSON interchange
# ---------------------------------------------------------------------------


def substrate_to_dict(net: SubstrateNetwork) -> dict:
    return {
        "schema": SUBSTRATE_SCHEMA,
        "clouds": [{"id": c.id, "trust": _num(c.trust)} for c in net.clouds],
        "nodes": [
            {"id": n.id, "cpu_total": _num(n.cpu_total), "sec": _num(n.sec), "cloud_id": n.cloud_id}
            for n in net.nodes
        ],
        "links": [
            {"endpoints": list(l.endpoints), "bw_total": _num(l.bw_total), "sec": _num(l.sec),
             "alpha": _num(l.alpha)}
            for l in net.links
        ],
    }


def substrate_from_dict(data: dict) -> SubstrateNetwork:
    try:
        clouds = [Cloud(c["id"], c["trust"]) for c in data.get("clouds", [])]
        nodes = [SubstrateNode(n["id"], n["cpu_total"], n["sec"], n["cloud_id"])
                 for n in data.get("nodes", [])]
        links = [SubstrateLink(tuple(l["endpoints"]), l["bw_total"], l["sec"], l.get("alpha", 1))
                 for l in data.get("links", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"malformed substrate document: {exc}") from exc
    return SubstrateNetwork(tuple(nodes), tuple(links), tuple(clouds))


def vnr_to_dict(vnr: VirtualNetworkRequest) -> dict:
    return {
        "schema": VNR_SCHEMA,
        "nodes": [
            {"id": n.id, "cpu": _num(n.cpu), "sec_demand": _num(n.sec_demand),
             "cloud_demand": _num(n.cloud_demand), "avail": n.avail}
            for n in vnr.nodes
        ],
        "links": [
            {"endpoints": list(l.endpoints), "bw": _num(l.bw), "sec_demand": _num(l.sec_demand)}
            for l in vnr.links
        ],
    }


def vnr_from_dict(data: dict) -> VirtualNetworkRequest:
    try:
        nodes = [VirtualNode(n["id"], n["cpu"], n.get("sec_demand", 1), n.get("cloud_demand", 1),
                             n.get("avail", 0)) for n in data.get("nodes", [])]
        links = [VirtualLink(tuple(l["endpoints"]), l["bw"], l.get("sec_demand", 1))
                 for l in data.get("links", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"malformed VNR document: {exc}") from exc
    return VirtualNetworkRequest(tuple(nodes), tuple(links))


def load_substrate(path) -> SubstrateNetwork:
    with open(path, encoding="utf-8") as fh:
        return substrate_from_dict(json.load(fh))


def load_vnr(path) -> VirtualNetworkRequest:
    with open(path, encoding="utf-8") as fh:
        return vnr_from_dict(json.load(fh))


def dump_json(data, fh=None, **kw) -> str | None:
    text = json.dumps(data, indent=2, sort_keys=False, **kw)
    if fh is None:
        return text
    fh.write(text + "\n")
    return None


def make_substrate(clouds: Mapping[str, float], nodes: Iterable[tuple], links: Iterable[tuple]) -> SubstrateNetwork:
    """Shorthand constructor: ``nodes`` as (id, cpu, sec, cloud_id), ``links`` as (u, v, bw, sec[, alpha])."""
    return SubstrateNetwork(
        tuple(SubstrateNode(*n) for n in nodes),
        tuple(SubstrateLink((l[0], l[1]), *l[2:]) for l in links),
        tuple(Cloud(cid, t) for cid, t in clouds.items()),
    )


def make_vnr(nodes: Iterable[tuple], links: Iterable[tuple] = ()) -> VirtualNetworkRequest:
    """Shorthand constructor: ``nodes`` as (id, cpu[, sec, cloud, avail]), ``links`` as (u, v, bw[, sec])."""
    return VirtualNetworkRequest(
        tuple(VirtualNode(*n) for n in nodes),
        tuple(VirtualLink((l[0], l[1]), *l[2:]) for l in links),
    )
