"""Stochastic VNR arrivals with the request configurations under study.

Two random streams come from one seed.  The *base* stream fixes arrival
times, lifetimes, sizes, topologies and capacity demands; the *decoration*
stream fixes which resources get elevated security or a replica.  Every
configuration consumes both streams identically, so a given seed yields the
same base requests everywhere and a resource decorated at 10% is also
decorated at 20%.
"""
from __future__ import annotations

from dataclasses import dataclass

import networkx as nx
import numpy as np

from ..model import VirtualLink, VirtualNetworkRequest, VirtualNode
from .topology import sample_graph

# config -> (share of resources with security demands, share of nodes with replicas)
CONFIGS = {
    "NS+NA": (0.0, 0.0),
    "10S+NA": (0.1, 0.0),
    "20S+NA": (0.2, 0.0),
    "NS+10A": (0.0, 0.1),
    "NS+20A": (0.0, 0.2),
    "20S+20A": (0.2, 0.2),
}


@dataclass(frozen=True)
class WorkloadParams:
    arrival_rate: float = 0.04
    mean_lifetime: float = 1000.0
    vnr_node_range: tuple[int, int] = (2, 4)
    connectivity: float = 0.5
    cpu_range: tuple[float, float] = (10.0, 20.0)
    bw_range: tuple[float, float] = (10.0, 20.0)
    config: str = "NS+NA"
    horizon: float = 50_000.0
    max_vnrs: int | None = None
    seed: int = 0
    min_sec: float = 1.0
    sec_levels: tuple[float, ...] = (1.2, 5.0)
    cloud_demand: float = 1.0
    avail_levels: tuple[int, ...] = (1, 2)

    def __post_init__(self):
        if self.arrival_rate <= 0 or self.mean_lifetime <= 0:
            raise ValueError("arrival rate and mean lifetime must be positive")
        lo, hi = self.vnr_node_range
        if lo < 2 or hi < lo:
            raise ValueError("vnr_node_range must lie within [2, inf) and be non-empty")
        if self.config not in CONFIGS:
            raise ValueError(f"unknown config {self.config!r}; expected one of {sorted(CONFIGS)}")
        if self.horizon < 0:
            raise ValueError("horizon must be non-negative")

    @classmethod
    def from_dict(cls, data: dict) -> "WorkloadParams":
        data = dict(data)
        for key in ("vnr_node_range", "cpu_range", "bw_range", "sec_levels", "avail_levels"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)

    def to_dict(self) -> dict:
        return {
            "arrival_rate": self.arrival_rate, "mean_lifetime": self.mean_lifetime,
            "vnr_node_range": list(self.vnr_node_range), "connectivity": self.connectivity,
            "cpu_range": list(self.cpu_range), "bw_range": list(self.bw_range), "config": self.config,
            "horizon": self.horizon, "max_vnrs": self.max_vnrs, "seed": self.seed, "min_sec": self.min_sec,
            "sec_levels": list(self.sec_levels), "cloud_demand": self.cloud_demand,
            "avail_levels": list(self.avail_levels),
        }


@dataclass(frozen=True)
class Arrival:
    time: float
    request_id: str
    vnr: VirtualNetworkRequest
    lifetime: float


def _streams(seed: int):
    base, deco = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(base), np.random.default_rng(deco)


def _virtual_edges(rng, n, p):
    edges = sample_graph(rng, n, "waxman", p)
    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_edges_from(edges)
    comps = [sorted(c) for c in nx.connected_components(g)]
    comps.sort()
    # join components one edge at a time, endpoints chosen at random
    while len(comps) > 1:
        a, b = comps[0], comps[1]
        u = a[int(rng.integers(len(a)))]
        v = b[int(rng.integers(len(b)))]
        edges.append((min(u, v), max(u, v)))
        comps = [sorted(a + b)] + comps[2:]
    return sorted(edges)


def _amount(rng, lo, hi) -> float:
    return round(float(rng.uniform(lo, hi)), 3)


def gen_workload(params: WorkloadParams) -> list[Arrival]:
    """Arrivals in time order up to ``horizon`` (and at most ``max_vnrs``)."""
    base, deco = _streams(params.seed)
    s_frac, a_frac = CONFIGS[params.config]
    out: list[Arrival] = []
    t = 0.0
    lo, hi = params.vnr_node_range
    while params.max_vnrs is None or len(out) < params.max_vnrs:
        t += float(base.exponential(1.0 / params.arrival_rate))
        if t > params.horizon:
            break
        lifetime = float(base.exponential(params.mean_lifetime))
        n = int(base.integers(lo, hi + 1))
        edges = _virtual_edges(base, n, params.connectivity)
        cpus = [_amount(base, *params.cpu_range) for _ in range(n)]
        bws = [_amount(base, *params.bw_range) for _ in edges]
        # decoration draws are made for every resource whatever the config
        node_u = deco.random(n)
        node_lvl = deco.integers(len(params.sec_levels), size=n)
        avail_u = deco.random(n)
        avail_lvl = deco.integers(len(params.avail_levels), size=n)
        link_u = deco.random(len(edges))
        link_lvl = deco.integers(len(params.sec_levels), size=len(edges))
        nodes = tuple(
            VirtualNode(
                f"v{i}", cpus[i],
                params.sec_levels[node_lvl[i]] if node_u[i] < s_frac else params.min_sec,
                params.cloud_demand,
                params.avail_levels[avail_lvl[i]] if avail_u[i] < a_frac else 0,
            )
            for i in range(n))
        links = tuple(
            VirtualLink((f"v{u}", f"v{v}"), bws[k],
                        params.sec_levels[link_lvl[k]] if link_u[k] < s_frac else params.min_sec)
            for k, (u, v) in enumerate(edges))
        out.append(Arrival(round(t, 6), f"r{len(out)}", VirtualNetworkRequest(nodes, links), round(lifetime, 6)))
    return out


__all__ = ["CONFIGS", "Arrival", "WorkloadParams", "gen_workload"]
