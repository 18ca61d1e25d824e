"""Compile (substrate state, request variant, weights) into the SecVNE MILP.

Variable naming is stable and doubles as the export naming scheme:

* ``wn_<i>_<p>`` / ``bn_<i>_<p>``: virtual node ``i`` (or its backup) on substrate node ``p``
* ``wc_<i>_<c>`` / ``bc_<i>_<c>``: virtual node ``i`` (or its backup) in cloud ``c``
* ``wf_<i>_<j>__<u>_<v>`` / ``bf_...``: flow of virtual link orientation ``(i, j)`` on arc ``u -> v``
* ``wl_...`` / ``bl_...``: the matching arc-usage binaries
* ``working_<p>_<q>`` / ``backup_<p>_<q>``: substrate link belongs to the working / backup network

Arcs cover both directions of every substrate link plus meta-arcs joining a
virtual node to each substrate node eligible to host it.  Virtual endpoints
are written ``v.<i>`` inside arc names.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..model import AuxSets, ModelError, SubstrateState, derive_aux_sets, validate_vnr
from ..policy import RequestVariant
from .ir import BINARY, CONTINUOUS, EQ, GE, LE, MilpModel


@dataclass(frozen=True)
class Weights:
    beta1: float = 1.0
    beta2: float = 1.0
    beta3: float = 1.0

    def __post_init__(self):
        vals = (self.beta1, self.beta2, self.beta3)
        if any(v < 0 for v in vals) or not any(vals):
            raise ValueError(f"weights must be non-negative and not all zero, got {vals}")

    def scaled(self, k: float) -> "Weights":
        return Weights(self.beta1 * k, self.beta2 * k, self.beta3 * k)


def vend(i: str) -> str:
    """Arc endpoint label for virtual node ``i``."""
    return "v." + i


def is_vend(u: str) -> bool:
    return u.startswith("v.")


@dataclass
class VarIndex:
    """Column lookup for every decision variable, plus the instance data
    needed to decode and re-evaluate a solution."""

    wf: dict = field(default_factory=dict)
    wl: dict = field(default_factory=dict)
    bf: dict = field(default_factory=dict)
    bl: dict = field(default_factory=dict)
    wn: dict = field(default_factory=dict)
    bn: dict = field(default_factory=dict)
    wc: dict = field(default_factory=dict)
    bc: dict = field(default_factory=dict)
    working: dict = field(default_factory=dict)
    backup: dict = field(default_factory=dict)

    vnodes: list = field(default_factory=list)
    vlinks: list = field(default_factory=list)
    orientations: list = field(default_factory=list)
    snodes: list = field(default_factory=list)
    slinks: list = field(default_factory=list)
    sub_arcs: list = field(default_factory=list)
    meta_arcs: list = field(default_factory=list)
    clouds: list = field(default_factory=list)
    eligible: dict = field(default_factory=dict)
    aux: AuxSets | None = None
    backup_network: bool = False

    weights: Weights = field(default_factory=Weights)
    cpu: dict = field(default_factory=dict)
    bw: dict = field(default_factory=dict)
    avail: dict = field(default_factory=dict)
    node_sec: dict = field(default_factory=dict)
    node_trust: dict = field(default_factory=dict)
    node_cloud: dict = field(default_factory=dict)
    link_sec: dict = field(default_factory=dict)
    link_alpha: dict = field(default_factory=dict)

    @property
    def arcs(self) -> list:
        return self.sub_arcs + self.meta_arcs


def _arc_name(a) -> str:
    return f"{a[0]}_{a[1]}"


def build_model(state: SubstrateState, variant: RequestVariant | object, weights: Weights | None = None,
                strengthen: bool = True):
    """Return ``(MilpModel, VarIndex)`` for embedding ``variant`` on ``state``.

    ``variant`` may also be a plain :class:`~secvne.model.VirtualNetworkRequest`.
    Residual capacities of ``state`` stand in for raw capacities.  When no node
    asks for a backup, no backup variables or rows are emitted at all.
    """
    if not isinstance(variant, RequestVariant):
        variant = RequestVariant.from_vnr(variant)
    weights = weights or Weights()
    net = state.network
    vnr = variant.vnr
    if not net.nodes:
        raise ModelError("cannot build a model on an empty substrate")
    problems = validate_vnr(vnr)
    if problems:
        raise ModelError("invalid request: " + "; ".join(problems))

    aux = derive_aux_sets(vnr)
    bnet = aux.backup_network
    ix = VarIndex(aux=aux, backup_network=bnet, weights=weights)
    ix.snodes = [n.id for n in net.nodes]
    ix.slinks = [l.endpoints for l in net.links]
    ix.clouds = [c.id for c in net.clouds]
    ix.vnodes = [n.id for n in vnr.nodes]
    ix.vlinks = [l.endpoints for l in vnr.links]
    ix.orientations = [o for (i, j) in ix.vlinks for o in ((i, j), (j, i))]
    for n in net.nodes:
        ix.node_sec[n.id] = float(n.sec)
        ix.node_trust[n.id] = float(net.trust(n.id))
        ix.node_cloud[n.id] = n.cloud_id
    for l in net.links:
        ix.link_sec[l.endpoints] = float(l.sec)
        ix.link_alpha[l.endpoints] = float(l.alpha)
    for n in vnr.nodes:
        ix.cpu[n.id] = float(n.cpu)
        ix.avail[n.id] = n.avail
    for l in vnr.links:
        ix.bw[l.endpoints] = float(l.bw)
        ix.bw[(l.endpoints[1], l.endpoints[0])] = float(l.bw)

    for i in ix.vnodes:
        ix.eligible[i] = [p for p in ix.snodes
                          if variant.node_admits(i, net.node[p].sec, net.trust(p))]
    ix.sub_arcs = [a for (p, q) in ix.slinks for a in ((p, q), (q, p))]
    ix.meta_arcs = [a for i in ix.vnodes for p in ix.eligible[i] for a in ((vend(i), p), (p, vend(i)))]
    arcs = ix.arcs
    arc_link = {a: (a if a[0] <= a[1] else (a[1], a[0])) for a in ix.sub_arcs}

    b1, b2, b3 = weights.beta1, weights.beta2, weights.beta3
    m = MilpModel(name="secvne")
    nbar = aux.nodes_backup
    ebar = aux.links_backup

    # ---- variables -------------------------------------------------------
    def flow_vars(prefix_f, prefix_l, fdict, ldict, backup_part):
        for o in ix.orientations:
            i, j = o
            link = o if i <= j else (j, i)
            bw = ix.bw[o]
            canonical = o == link
            counted = canonical and (not backup_part or link in ebar)
            for a in arcs:
                an = _arc_name(a)
                if a in arc_link:
                    e = arc_link[a]
                    ok = variant.link_admits(link, net.link[e].sec)
                    cost_f = b2 * ix.link_alpha[e] * ix.link_sec[e] if counted else 0.0
                    # hop count: one binary per undirected link
                    cost_l = b3 if counted and a == e else 0.0
                else:
                    ok = True
                    cost_f = cost_l = 0.0
                fdict[(o, a)] = m.add_var(f"{prefix_f}_{i}_{j}__{an}", CONTINUOUS, 0.0,
                                          bw if ok else 0.0, cost_f)
                ldict[(o, a)] = m.add_var(f"{prefix_l}_{i}_{j}__{an}", BINARY, 0.0,
                                          1.0 if ok else 0.0, cost_l)

    flow_vars("wf", "wl", ix.wf, ix.wl, False)
    if bnet:
        flow_vars("bf", "bl", ix.bf, ix.bl, True)

    for i in ix.vnodes:
        elig = set(ix.eligible[i])
        for p in ix.snodes:
            cost = b1 * ix.cpu[i] * ix.node_sec[p] * ix.node_trust[p]
            ix.wn[(i, p)] = m.add_var(f"wn_{i}_{p}", BINARY, 0.0, 1.0 if p in elig else 0.0, cost)
            if bnet:
                ix.bn[(i, p)] = m.add_var(f"bn_{i}_{p}", BINARY, 0.0, 1.0 if p in elig else 0.0,
                                          cost if i in nbar else 0.0)
        for c in ix.clouds:
            ix.wc[(i, c)] = m.add_var(f"wc_{i}_{c}", BINARY)
            if bnet:
                ix.bc[(i, c)] = m.add_var(f"bc_{i}_{c}", BINARY)
    for e in ix.slinks:
        ix.working[e] = m.add_var(f"working_{e[0]}_{e[1]}", BINARY)
        if bnet:
            ix.backup[e] = m.add_var(f"backup_{e[0]}_{e[1]}", BINARY)

    # ---- node mapping ----------------------------------------------------
    wn, bn, wc, bc = ix.wn, ix.bn, ix.wc, ix.bc
    for i in ix.vnodes:
        m.add_row(f"wnode_{i}", [(wn[i, p], 1) for p in ix.snodes], EQ, 1)
    if bnet:
        for i in sorted(nbar):
            m.add_row(f"bnode_{i}", [(bn[i, p], 1) for p in ix.snodes], EQ, 1)
    for p in ix.snodes:
        wsum = [(wn[i, p], 1) for i in ix.vnodes]
        m.add_row(f"wshare_{p}", wsum, LE, 1)
        if bnet:
            m.add_row(f"bshare_{p}", [(bn[i, p], 1) for i in ix.vnodes], LE, 1)
            for j in ix.vnodes:
                if j in nbar:
                    m.add_row(f"wbshare_{j}_{p}", wsum + [(bn[j, p], 1)], LE, 1)
                else:
                    m.add_row(f"vback_{j}_{p}", [(bn[j, p], 1), (wn[j, p], -1)], LE, 0)
                    m.add_row(f"vshare_{j}_{p}", wsum + [(bn[j, p], 1)], LE, 2)

    # ---- clouds ----------------------------------------------------------
    members = {c: [p for p in ix.snodes if ix.node_cloud[p] == c] for c in ix.clouds}
    for i in ix.vnodes:
        for c in ix.clouds:
            m.add_row(f"wcloud_{i}_{c}", [(wc[i, c], 1)] + [(wn[i, p], -1) for p in members[c]], LE, 0)
            if bnet:
                m.add_row(f"bcloud_{i}_{c}", [(bc[i, c], 1)] + [(bn[i, p], -1) for p in members[c]], LE, 0)
        m.add_row(f"wonecloud_{i}", [(wc[i, c], 1) for c in ix.clouds], EQ, 1)
        if bnet:
            m.add_row(f"bonecloud_{i}", [(bc[i, c], 1) for c in ix.clouds], EQ, 1)
            if ix.avail[i] == 1:
                for c in ix.clouds:
                    m.add_row(f"samecloud_{i}_{c}", [(bc[i, c], 1), (wc[i, c], -1)], EQ, 0)
            elif ix.avail[i] == 2:
                for c in ix.clouds:
                    m.add_row(f"diffcloud_{i}_{c}", [(wc[i, c], 1), (bc[i, c], 1)], LE, 1)

    # ---- flows -----------------------------------------------------------
    out_arcs = {}
    in_arcs = {}
    for a in arcs:
        out_arcs.setdefault(a[0], []).append(a)
        in_arcs.setdefault(a[1], []).append(a)

    def flow_rows(tag, fv, lv, nv):
        for o in ix.orientations:
            i, j = o
            bw = ix.bw[o]
            on = f"{i}_{j}"
            # flow/indicator coupling on substrate arcs
            for a in ix.sub_arcs:
                m.add_row(f"{tag}cap_{on}__{_arc_name(a)}", [(fv[o, a], 1), (lv[o, a], -bw)], LE, 0)
            # indicator symmetry, one row per unordered arc pair
            for a in ix.sub_arcs[::2]:
                b = (a[1], a[0])
                m.add_row(f"{tag}lsym_{on}__{_arc_name(a)}", [(lv[o, a], 1), (lv[o, b], -1)], EQ, 0)
            for k in ix.vnodes:
                for p in ix.eligible[k]:
                    a, b = (vend(k), p), (p, vend(k))
                    m.add_row(f"{tag}lsym_{on}__{_arc_name(a)}", [(lv[o, a], 1), (lv[o, b], -1)], EQ, 0)
                    m.add_row(f"{tag}lmeta_{on}__{_arc_name(a)}", [(lv[o, a], 1), (nv[k, p], -1)], EQ, 0)
            # meta-link source and sink
            for p in ix.eligible[i]:
                m.add_row(f"{tag}src_{on}__{p}", [(fv[o, (vend(i), p)], 1), (nv[i, p], -bw)], EQ, 0)
            for q in ix.eligible[j]:
                m.add_row(f"{tag}snk_{on}__{q}", [(fv[o, (q, vend(j))], 1), (nv[j, q], -bw)], EQ, 0)
            # hosts are distinct, so traffic leaving the source host (entering the
            # sink host) must use substrate arcs; implied for integral maps, cuts
            # off fractional maps that short-circuit through one shared node
            if strengthen:
                for p in ix.eligible[i]:
                    m.add_row(f"{tag}srcout_{on}__{p}",
                              [(fv[o, a], 1) for a in out_arcs[p] if a in arc_link] + [(nv[i, p], -bw)], GE, 0)
                for q in ix.eligible[j]:
                    m.add_row(f"{tag}snkin_{on}__{q}",
                              [(fv[o, a], 1) for a in in_arcs[q] if a in arc_link] + [(nv[j, q], -bw)], GE, 0)
            # conservation at the virtual endpoints
            vi, vj = vend(i), vend(j)
            m.add_row(f"{tag}out_{on}",
                      [(fv[o, a], 1) for a in out_arcs.get(vi, [])] + [(fv[o, a], -1) for a in in_arcs.get(vi, [])],
                      EQ, bw)
            m.add_row(f"{tag}in_{on}",
                      [(fv[o, a], 1) for a in out_arcs.get(vj, [])] + [(fv[o, a], -1) for a in in_arcs.get(vj, [])],
                      EQ, -bw)
            # conservation at substrate nodes
            for q in ix.snodes:
                m.add_row(f"{tag}cons_{on}__{q}",
                          [(fv[o, a], 1) for a in out_arcs.get(q, [])] + [(fv[o, a], -1) for a in in_arcs.get(q, [])],
                          EQ, 0)
        # meta-links carry only traffic of their own virtual node
        for k in ix.vnodes:
            foreign = [o for o in ix.orientations if k not in o]
            if not foreign:
                continue
            for p in ix.eligible[k]:
                terms = [(fv[o, a], 1) for o in foreign for a in ((vend(k), p), (p, vend(k)))]
                m.add_row(f"{tag}meta_{k}__{p}", terms, EQ, 0)
        # orientation symmetry
        for (i, j) in ix.vlinks:
            for a in arcs:
                m.add_row(f"{tag}fsym_{i}_{j}__{_arc_name(a)}",
                          [(fv[(i, j), a], 1), (fv[(j, i), (a[1], a[0])], -1)], EQ, 0)

    flow_rows("w", ix.wf, ix.wl, wn)
    if bnet:
        flow_rows("b", ix.bf, ix.bl, bn)
        for (i, j) in ix.vlinks:
            if (i, j) in ebar:
                continue
            for o in ((i, j), (j, i)):
                for a in ix.sub_arcs:
                    m.add_row(f"wbeq_{o[0]}_{o[1]}__{_arc_name(a)}",
                              [(ix.wf[o, a], 1), (ix.bf[o, a], -1)], EQ, 0)

    # ---- disjointness ----------------------------------------------------
    if bnet:
        for e in ix.slinks:
            m.add_row(f"disj_{e[0]}_{e[1]}", [(ix.working[e], 1), (ix.backup[e], 1)], LE, 1)
    for o in ix.orientations:
        link = o if o[0] <= o[1] else (o[1], o[0])
        for a in ix.sub_arcs:
            e = arc_link[a]
            m.add_row(f"wnet_{o[0]}_{o[1]}__{_arc_name(a)}", [(ix.wl[o, a], 1), (ix.working[e], -1)], LE, 0)
            if bnet and link in ebar:
                m.add_row(f"bnet_{o[0]}_{o[1]}__{_arc_name(a)}", [(ix.bl[o, a], 1), (ix.backup[e], -1)], LE, 0)

    # ---- capacities ------------------------------------------------------
    for p in ix.snodes:
        terms = [(wn[i, p], ix.cpu[i]) for i in ix.vnodes]
        if bnet:
            terms += [(bn[i, p], ix.cpu[i]) for i in ix.vnodes if i in nbar]
        m.add_row(f"cpu_{p}", terms, LE, float(state.residual_node(p)))
    for e in ix.slinks:
        p, q = e
        terms = []
        for link in ix.vlinks:
            terms += [(ix.wf[link, (p, q)], 1), (ix.wf[link, (q, p)], 1)]
            if bnet and link in ebar:
                terms += [(ix.bf[link, (p, q)], 1), (ix.bf[link, (q, p)], 1)]
        m.add_row(f"bw_{p}_{q}", terms, LE, float(state.residual_link(e)))
    return m, ix


def variable_count(n_sub_nodes: int, n_sub_links: int, n_clouds: int, n_vnodes: int, n_vlinks: int,
                   n_eligible_pairs: int) -> int:
    """Closed-form column count when no backup network is modeled."""
    arcs = 2 * n_sub_links + 2 * n_eligible_pairs
    return 4 * arcs * n_vlinks + n_vnodes * n_sub_nodes + n_vnodes * n_clouds + n_sub_links


def evaluate_objective(ix: VarIndex, x) -> float:
    """Weighted cost of assignment ``x`` recomputed from the instance data."""
    w = ix.weights
    nbar = ix.aux.nodes_backup
    ebar = ix.aux.links_backup
    node = 0.0
    for (i, p), col in ix.wn.items():
        node += ix.cpu[i] * ix.node_sec[p] * ix.node_trust[p] * x[col]
    for (i, p), col in ix.bn.items():
        if i in nbar:
            node += ix.cpu[i] * ix.node_sec[p] * ix.node_trust[p] * x[col]
    flow = 0.0
    hops = 0.0
    for link in ix.vlinks:
        parts = [(ix.wf, ix.wl)]
        if ix.backup_network and link in ebar:
            parts.append((ix.bf, ix.bl))
        for fv, lv in parts:
            for (p, q) in ix.slinks:
                s = ix.link_alpha[(p, q)] * ix.link_sec[(p, q)]
                flow += s * (x[fv[link, (p, q)]] + x[fv[link, (q, p)]])
                hops += x[lv[link, (p, q)]]
    return w.beta1 * node + w.beta2 * flow + w.beta3 * hops
