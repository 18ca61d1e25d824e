"""Random substrate generation (Waxman or flat random graphs)."""
from __future__ import annotations

from dataclasses import dataclass

import networkx as nx
import numpy as np

from ..model import Cloud, SubstrateLink, SubstrateNetwork, SubstrateNode

WAXMAN_ALPHA = 0.5


class GenerationError(RuntimeError):
    pass


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


@dataclass(frozen=True)
class SubstrateGenParams:
    node_count: int = 25
    topology: str = "waxman"  # or "random"
    p: float = 0.5  # waxman target mean pair probability
    p_range: tuple[float, float] = (0.25, 0.30)  # random topology, drawn once per network
    cpu_range: tuple[float, float] = (50.0, 100.0)
    bw_range: tuple[float, float] = (50.0, 100.0)
    sec_levels: tuple[tuple[float, float], ...] = ((1.0, 1 / 3), (1.2, 1 / 3), (5.0, 1 / 3))
    cloud_trust: tuple[tuple[float, float], ...] = ((1.0, 1 / 3), (1.2, 1 / 3), (5.0, 1 / 3))
    cloud_count: int = 3
    use_coordinates: bool = True
    seed: int = 0
    max_retries: int = 1000

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError("node_count must be positive")
        if self.topology not in ("waxman", "random"):
            raise ValueError(f"unknown topology {self.topology!r}")
        for name in ("cpu_range", "bw_range", "p_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} is empty")
        for name in ("sec_levels", "cloud_trust"):
            probs = [pr for _, pr in getattr(self, name)]
            if not probs or abs(sum(probs) - 1) > 1e-9 or min(probs) < 0:
                raise ValueError(f"{name} probabilities must sum to 1")
        if len(self.cloud_trust) != self.cloud_count:
            raise ValueError("cloud_trust needs one (trust, probability) entry per cloud")
        if not 0 <= self.p <= 1:
            raise ValueError("p must be a probability")

    @classmethod
    def from_dict(cls, data: dict) -> "SubstrateGenParams":
        data = dict(data)
        for key in ("p_range", "cpu_range", "bw_range"):
            if key in data:
                data[key] = tuple(data[key])
        for key in ("sec_levels", "cloud_trust"):
            if key in data:
                data[key] = tuple(tuple(x) for x in data[key])
        return cls(**data)

    def to_dict(self) -> dict:
        return {
            "node_count": self.node_count, "topology": self.topology, "p": self.p,
            "p_range": list(self.p_range), "cpu_range": list(self.cpu_range), "bw_range": list(self.bw_range),
            "sec_levels": [list(x) for x in self.sec_levels], "cloud_trust": [list(x) for x in self.cloud_trust],
            "cloud_count": self.cloud_count, "use_coordinates": self.use_coordinates, "seed": self.seed,
            "max_retries": self.max_retries,
        }


def waxman_probabilities(coords: np.ndarray, p: float, alpha: float = WAXMAN_ALPHA) -> np.ndarray:
    """Pair probabilities ``min(1, beta * exp(-d / (alpha * L)))`` for i < j.

    ``beta`` is found by bisection so that the mean over pairs equals ``p``.
    Returned in ``itertools.combinations`` order.
    """
    n = len(coords)
    iu = np.triu_indices(n, k=1)
    d = np.linalg.norm(coords[:, None, :] - coords[None, :, :], axis=-1)[iu]
    if d.size == 0:
        return d
    L = d.max() if d.max() > 0 else 1.0
    kernel = np.exp(-d / (alpha * L))
    if p >= 1:
        return np.ones_like(kernel)
    lo, hi = 0.0, 1.0 / kernel.min()
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if np.minimum(1.0, mid * kernel).mean() < p:
            lo = mid
        else:
            hi = mid
    return np.minimum(1.0, hi * kernel)


def sample_graph(rng: np.random.Generator, n: int, topology: str, p: float,
                 use_coordinates: bool = True) -> list[tuple[int, int]]:
    """One draw of an undirected edge list over nodes ``0..n-1`` (may be disconnected)."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if topology == "waxman" and use_coordinates:
        coords = rng.random((n, 2))
        probs = waxman_probabilities(coords, p)
    else:
        probs = np.full(len(pairs), p)
    u = rng.random(len(pairs))
    return [pr for pr, ui, pi in zip(pairs, u, probs) if ui < pi]


def _connected(n, edges) -> bool:
    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_edges_from(edges)
    return nx.is_connected(g)


def _uniform(rng, lo, hi) -> float:
    return round(float(rng.uniform(lo, hi)), 3)


def _pick(rng, table) -> float:
    values = [v for v, _ in table]
    probs = np.array([pr for _, pr in table], dtype=float)
    return float(values[int(rng.choice(len(values), p=probs / probs.sum()))])


def gen_substrate(params: SubstrateGenParams) -> SubstrateNetwork:
    """Draw a connected substrate; resamples the topology up to ``max_retries`` times."""
    rng = _rng(params.seed)
    n = params.node_count
    p = params.p if params.topology == "waxman" else float(rng.uniform(*params.p_range))
    for _ in range(params.max_retries):
        edges = sample_graph(rng, n, params.topology, p, params.use_coordinates)
        if _connected(n, edges):
            break
    else:
        raise GenerationError(f"no connected topology after {params.max_retries} draws")
    # clouds are numbered by increasing trust
    trusts = sorted(t for t, _ in params.cloud_trust)
    clouds = tuple(Cloud(f"cloud{k + 1}", t) for k, t in enumerate(trusts))
    by_trust = {float(t): c.id for t, c in zip(trusts, clouds)}
    ids = [f"n{i}" for i in range(n)]
    nodes = tuple(
        SubstrateNode(ids[i], _uniform(rng, *params.cpu_range), _pick(rng, params.sec_levels),
                      by_trust[_pick(rng, params.cloud_trust)])
        for i in range(n))
    links = tuple(
        SubstrateLink((ids[i], ids[j]), _uniform(rng, *params.bw_range), _pick(rng, params.sec_levels))
        for i, j in edges)
    return SubstrateNetwork(nodes, links, clouds)


__all__ = ["GenerationError", "SubstrateGenParams", "gen_substrate", "sample_graph", "waxman_probabilities"]

