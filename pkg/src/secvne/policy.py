"""Policy language for substrates and virtual network requests.

Grammar (whitespace-insensitive)::

    expr  := conj ('|' conj)*
    conj  := unary ('&' unary)*
    unary := '!' unary | '(' expr ')' | leaf
    leaf  := FUNC '^' SCOPE '(' ID [',' ID] ')' ('=' | '>=') NUMBER

``FUNC`` is one of cpu, sec, cloud, avail, bw (case-insensitive) and ``SCOPE``
is ``S`` (substrate) or ``V`` (virtual).  Substrate leaves may only use ``=``
and may only be joined with ``&``.

Virtual specifications with ``|`` and ``!`` are expanded into a list of
concrete :class:`RequestVariant` objects, one per satisfiable conjunct of the
disjunctive normal form.  Security and cloud constraints become allowed-sets
over a finite :class:`~secvne.model.LevelDomain`; negation is the complement
within that domain.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Iterator, Mapping, Union

from .model import (
    Cloud,
    LevelDomain,
    SubstrateLink,
    SubstrateNetwork,
    SubstrateNode,
    VirtualLink,
    VirtualNetworkRequest,
    VirtualNode,
    _num,
    canon,
    dec,
)

FUNCS = ("cpu", "sec", "cloud", "avail", "bw")
# function -> allowed parameter counts
_ARITY = {"cpu": (1,), "cloud": (1,), "avail": (1,), "bw": (2,), "sec": (1, 2)}
_EXACT = ("cpu", "bw", "avail")


class PolicyError(ValueError):
    pass


class PolicySyntaxError(PolicyError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class UnknownFunctionError(PolicySyntaxError):
    pass


class ArityError(PolicySyntaxError):
    pass


class PolicySemanticError(PolicyError):
    """Well-formed text that does not describe a usable substrate or request."""


class UnsatisfiablePolicyError(PolicyError):
    pass


# ---------------------------------------------------------------------------
# Expression tree
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Leaf:
    func: str
    scope: str  # "S" or "V"
    params: tuple[str, ...]
    op: str  # "eq" or "geq"
    value: Decimal


@dataclass(frozen=True)
class Not:
    child: "PolicyExpr"


@dataclass(frozen=True)
class And:
    left: "PolicyExpr"
    right: "PolicyExpr"


@dataclass(frozen=True)
class Or:
    left: "PolicyExpr"
    right: "PolicyExpr"


PolicyExpr = Union[Leaf, Not, And, Or]


def leaves(expr: PolicyExpr) -> Iterator[Leaf]:
    if isinstance(expr, Leaf):
        yield expr
    elif isinstance(expr, Not):
        yield from leaves(expr.child)
    else:
        yield from leaves(expr.left)
        yield from leaves(expr.right)


# ---------------------------------------------------------------------------
# Lexer / parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s+|>=|[A-Za-z0-9_.]+|[\^(),=&|!]|.", re.S)


@dataclass(frozen=True)
class _Tok:
    kind: str  # WORD, OP or EOF
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    line, col = 1, 1
    for m in _TOKEN_RE.finditer(text):
        s = m.group()
        if not s.isspace():
            if re.fullmatch(r"[A-Za-z0-9_.]+", s):
                toks.append(_Tok("WORD", s, line, col))
            elif s in ("^", "(", ")", ",", "=", ">=", "&", "|", "!"):
                toks.append(_Tok("OP", s, line, col))
            else:
                raise PolicySyntaxError(f"unexpected character {s!r}", line, col)
        for ch in s:
            if ch == "\n":
                line, col = line + 1, 1
            else:
                col += 1
    toks.append(_Tok("EOF", "", line, col))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0

    @property
    def cur(self) -> _Tok:
        return self.toks[self.pos]

    def _error(self, msg: str, tok: _Tok | None = None, cls=PolicySyntaxError):
        tok = tok or self.cur
        return cls(msg, tok.line, tok.col)

    def _expect(self, text: str) -> _Tok:
        tok = self.cur
        if tok.kind != "OP" or tok.text != text:
            found = "end of input" if tok.kind == "EOF" else repr(tok.text)
            raise self._error(f"expected {text!r}, found {found}")
        self.pos += 1
        return tok

    def _word(self, what: str) -> _Tok:
        tok = self.cur
        if tok.kind != "WORD":
            found = "end of input" if tok.kind == "EOF" else repr(tok.text)
            raise self._error(f"expected {what}, found {found}")
        self.pos += 1
        return tok

    def parse(self) -> PolicyExpr:
        if self.cur.kind == "EOF":
            raise self._error("empty policy")
        expr = self.expr()
        if self.cur.kind != "EOF":
            raise self._error(f"unexpected {self.cur.text!r}")
        return expr

    def expr(self) -> PolicyExpr:
        node = self.conj()
        while self.cur.kind == "OP" and self.cur.text == "|":
            self.pos += 1
            node = Or(node, self.conj())
        return node

    def conj(self) -> PolicyExpr:
        node = self.unary()
        while self.cur.kind == "OP" and self.cur.text == "&":
            self.pos += 1
            node = And(node, self.unary())
        return node

    def unary(self) -> PolicyExpr:
        tok = self.cur
        if tok.kind == "OP" and tok.text == "!":
            self.pos += 1
            return Not(self.unary())
        if tok.kind == "OP" and tok.text == "(":
            self.pos += 1
            node = self.expr()
            self._expect(")")
            return node
        return self.leaf()

    def leaf(self) -> Leaf:
        ftok = self._word("a function name")
        func = ftok.text.lower()
        if func not in FUNCS:
            raise self._error(f"unknown function {ftok.text!r}", ftok, UnknownFunctionError)
        self._expect("^")
        stok = self._word("scope S or V")
        scope = stok.text.upper()
        if scope not in ("S", "V"):
            raise self._error(f"scope must be S or V, got {stok.text!r}", stok)
        self._expect("(")
        params = [self._param()]
        while self.cur.kind == "OP" and self.cur.text == ",":
            self.pos += 1
            params.append(self._param())
        self._expect(")")
        if len(params) not in _ARITY[func]:
            want = " or ".join(str(a) for a in _ARITY[func])
            raise self._error(f"{func} takes {want} parameter(s), got {len(params)}", ftok, ArityError)
        if len(params) == 2 and params[0] == params[1]:
            raise self._error("link endpoints must differ", ftok)
        optok = self.cur
        if optok.kind == "OP" and optok.text == "=":
            op = "eq"
        elif optok.kind == "OP" and optok.text == ">=":
            op = "geq"
        else:
            raise self._error("expected '=' or '>='")
        self.pos += 1
        vtok = self._word("a number")
        try:
            value = Decimal(vtok.text)
        except InvalidOperation:
            raise self._error(f"invalid number {vtok.text!r}", vtok) from None
        if not value.is_finite() or value < 0:
            raise self._error(f"value must be a non-negative number, got {vtok.text!r}", vtok)
        if scope == "S":
            if op != "eq":
                raise self._error("substrate attributes only admit '='", optok)
            if func == "avail":
                raise self._error("avail is not a substrate attribute", ftok)
        if func == "avail" and value not in (0, 1, 2):
            raise self._error("avail must be 0, 1 or 2", vtok)
        if len(params) == 2:
            params = list(canon(*params))
        return Leaf(func, scope, tuple(params), op, dec(value))

    def _param(self) -> str:
        tok = self._word("an identifier")
        if not re.fullmatch(r"[A-Za-z0-9]+", tok.text):
            raise self._error(f"identifier must be alphanumeric, got {tok.text!r}", tok)
        return tok.text


def parse(text: str) -> PolicyExpr:
    """Parse policy text into an expression tree (left-associative ``&``/``|``)."""
    return _Parser(text).parse()


def _fmt(d: Decimal) -> str:
    s = format(d.normalize(), "f")
    return s


def to_text(expr: PolicyExpr) -> str:
    """Render ``expr`` so that ``parse(to_text(e)) == e``."""
    if isinstance(expr, Leaf):
        op = "=" if expr.op == "eq" else ">="
        return f"{expr.func}^{expr.scope}({','.join(expr.params)}){op}{_fmt(expr.value)}"
    if isinstance(expr, Not):
        inner = to_text(expr.child)
        return "!" + (inner if isinstance(expr.child, (Leaf, Not)) else f"({inner})")
    if isinstance(expr, And):
        left = to_text(expr.left)
        if isinstance(expr.left, Or):
            left = f"({left})"
        right = to_text(expr.right)
        if isinstance(expr.right, (And, Or)):
            right = f"({right})"
        return f"{left} & {right}"
    left = to_text(expr.left)
    right = to_text(expr.right)
    if isinstance(expr.right, Or):
        right = f"({right})"
    return f"{left} | {right}"


# ---------------------------------------------------------------------------
# Substrate specifications
# ---------------------------------------------------------------------------


def _conjuncts(expr: PolicyExpr) -> list[Leaf]:
    if isinstance(expr, Leaf):
        return [expr]
    if isinstance(expr, And):
        return _conjuncts(expr.left) + _conjuncts(expr.right)
    kind = "'|'" if isinstance(expr, Or) else "'!'"
    raise PolicySemanticError(f"substrate specifications may not use {kind}")


def to_substrate(expr: PolicyExpr) -> SubstrateNetwork:
    """Build a substrate from a conjunction of ``func^S(...)=v`` leaves.

    One cloud is created per distinct ``cloud`` value, named ``cloud1``,
    ``cloud2``, ... in increasing order of trust.
    """
    node_attrs: dict[str, dict[str, Decimal]] = {}
    link_attrs: dict[tuple[str, str], dict[str, Decimal]] = {}
    for leaf in _conjuncts(expr):
        if leaf.scope != "S":
            raise PolicySemanticError(f"virtual leaf {to_text(leaf)} in a substrate specification")
        if len(leaf.params) == 1:
            target = node_attrs.setdefault(leaf.params[0], {})
        else:
            target = link_attrs.setdefault(tuple(leaf.params), {})
        if leaf.func in ("cloud", "cpu") and len(leaf.params) != 1:
            raise PolicySemanticError(f"{leaf.func} applies to nodes only")
        old = target.get(leaf.func)
        if old is not None and old != leaf.value:
            raise PolicySemanticError(
                f"conflicting values for {leaf.func}^S({','.join(leaf.params)}): {old} vs {leaf.value}")
        target[leaf.func] = leaf.value
    for u, v in link_attrs:
        node_attrs.setdefault(u, {})
        node_attrs.setdefault(v, {})
    for nid, attrs in sorted(node_attrs.items()):
        missing = [a for a in ("cpu", "sec", "cloud") if a not in attrs]
        if missing:
            raise PolicySemanticError(f"node {nid}: missing {', '.join(missing)}")
    for (u, v), attrs in sorted(link_attrs.items()):
        missing = [a for a in ("bw", "sec") if a not in attrs]
        if missing:
            raise PolicySemanticError(f"link ({u},{v}): missing {', '.join(missing)}")
    trusts = sorted({a["cloud"] for a in node_attrs.values()})
    cloud_id = {t: f"cloud{k}" for k, t in enumerate(trusts, start=1)}
    return SubstrateNetwork(
        tuple(SubstrateNode(nid, a["cpu"], a["sec"], cloud_id[a["cloud"]]) for nid, a in node_attrs.items()),
        tuple(SubstrateLink(e, a["bw"], a["sec"]) for e, a in link_attrs.items()),
        tuple(Cloud(cid, t) for t, cid in cloud_id.items()),
    )


# ---------------------------------------------------------------------------
# Request variants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RequestVariant:
    """A concrete request plus optional allowed level sets.

    When an allowed-set is absent for a node or link, the plain demand of the
    underlying :class:`VirtualNetworkRequest` applies with "equal or greater"
    semantics.
    """

    vnr: VirtualNetworkRequest
    node_sec: Mapping[str, frozenset] | None = None
    node_cloud: Mapping[str, frozenset] | None = None
    link_sec: Mapping[tuple[str, str], frozenset] | None = None

    @classmethod
    def from_vnr(cls, vnr: VirtualNetworkRequest) -> "RequestVariant":
        return cls(vnr)

    def node_admits(self, i: str, sec: Decimal, trust: Decimal) -> bool:
        n = self.vnr.node[i]
        if self.node_sec is not None and i in self.node_sec:
            ok_sec = sec in self.node_sec[i]
        else:
            ok_sec = sec >= n.sec_demand
        if self.node_cloud is not None and i in self.node_cloud:
            ok_cloud = trust in self.node_cloud[i]
        else:
            ok_cloud = trust >= n.cloud_demand
        return ok_sec and ok_cloud

    def link_admits(self, link: tuple[str, str], sec: Decimal) -> bool:
        if self.link_sec is not None and link in self.link_sec:
            return sec in self.link_sec[link]
        return sec >= self.vnr.link[link].sec_demand

    def key(self) -> tuple:
        def frz(m):
            return None if m is None else tuple(sorted((k, tuple(sorted(v))) for k, v in m.items()))

        return (self.vnr, frz(self.node_sec), frz(self.node_cloud), frz(self.link_sec))

    def to_dict(self) -> dict:
        nodes = []
        for n in self.vnr.nodes:
            d = {"id": n.id, "cpu": _num(n.cpu), "avail": n.avail}
            if self.node_sec is not None and n.id in self.node_sec:
                d["sec_allowed"] = [_num(v) for v in sorted(self.node_sec[n.id])]
            else:
                d["sec_demand"] = _num(n.sec_demand)
            if self.node_cloud is not None and n.id in self.node_cloud:
                d["cloud_allowed"] = [_num(v) for v in sorted(self.node_cloud[n.id])]
            else:
                d["cloud_demand"] = _num(n.cloud_demand)
            nodes.append(d)
        links = []
        for l in self.vnr.links:
            d = {"endpoints": list(l.endpoints), "bw": _num(l.bw)}
            if self.link_sec is not None and l.endpoints in self.link_sec:
                d["sec_allowed"] = [_num(v) for v in sorted(self.link_sec[l.endpoints])]
            else:
                d["sec_demand"] = _num(l.sec_demand)
            links.append(d)
        return {"nodes": nodes, "links": links}


def _nnf(expr: PolicyExpr, negate: bool = False) -> PolicyExpr:
    if isinstance(expr, Leaf):
        if negate and expr.func in _EXACT:
            raise PolicySemanticError(f"cannot negate exact-valued leaf {to_text(expr)}")
        return Not(expr) if negate else expr
    if isinstance(expr, Not):
        return _nnf(expr.child, not negate)
    left, right = _nnf(expr.left, negate), _nnf(expr.right, negate)
    if isinstance(expr, And):
        return Or(left, right) if negate else And(left, right)
    return And(left, right) if negate else Or(left, right)


def _dnf(expr: PolicyExpr) -> list[list[PolicyExpr]]:
    if isinstance(expr, Or):
        return _dnf(expr.left) + _dnf(expr.right)
    if isinstance(expr, And):
        return [a + b for a in _dnf(expr.left) for b in _dnf(expr.right)]
    return [[expr]]


def _allowed(leaf: Leaf, domain_levels: frozenset) -> frozenset:
    if leaf.op == "geq":
        return frozenset(v for v in domain_levels if v >= leaf.value)
    return frozenset(v for v in domain_levels if v == leaf.value)


def expand(expr: PolicyExpr, domain: LevelDomain) -> list[RequestVariant]:
    """Expand a virtual policy into its distinct satisfiable variants.

    Conjuncts whose allowed-sets become empty, or which assign two different
    exact values to the same cpu/bw/avail attribute, are dropped.  Raises
    :class:`UnsatisfiablePolicyError` when nothing survives.
    """
    node_ids: set[str] = set()
    link_ids: set[tuple[str, str]] = set()
    for leaf in leaves(expr):
        if leaf.scope != "V":
            raise PolicySemanticError(f"substrate leaf {to_text(leaf)} in a virtual specification")
        if len(leaf.params) == 1:
            if leaf.func == "bw":
                raise PolicySemanticError("bw applies to links only")
            node_ids.add(leaf.params[0])
        else:
            if leaf.func not in ("bw", "sec"):
                raise PolicySemanticError(f"{leaf.func} applies to nodes only")
            link_ids.add(tuple(leaf.params))
            node_ids.update(leaf.params)

    variants: list[RequestVariant] = []
    seen: set = set()
    for conj in _dnf(_nnf(expr)):
        v = _conjunct_variant(conj, sorted(node_ids), sorted(link_ids), domain)
        if v is None:
            continue
        k = v.key()
        if k not in seen:
            seen.add(k)
            variants.append(v)
    if not variants:
        raise UnsatisfiablePolicyError("no variant of the policy is satisfiable over the level domain")
    return variants


def _conjunct_variant(conj, node_ids, link_ids, domain: LevelDomain) -> RequestVariant | None:
    exact: dict[tuple, Decimal] = {}
    sets: dict[tuple, frozenset] = {}
    for lit in conj:
        negated = isinstance(lit, Not)
        leaf = lit.child if negated else lit
        key = (leaf.func, leaf.params)
        if leaf.func in _EXACT:
            if key in exact and exact[key] != leaf.value:
                return None
            exact[key] = leaf.value
            continue
        universe = domain.cloud if leaf.func == "cloud" else domain.sec
        allowed = _allowed(leaf, universe)
        if negated:
            allowed = universe - allowed
        sets[key] = sets.get(key, universe) & allowed
        if not sets[key]:
            return None

    node_sec, node_cloud, link_sec = {}, {}, {}
    vnodes, vlinks = [], []
    for i in node_ids:
        node_sec[i] = sets.get(("sec", (i,)), domain.sec)
        node_cloud[i] = sets.get(("cloud", (i,)), domain.cloud)
        if not node_sec[i] or not node_cloud[i]:
            return None
        vnodes.append(VirtualNode(
            i,
            exact.get(("cpu", (i,)), Decimal(0)),
            min(node_sec[i]),
            min(node_cloud[i]),
            int(exact.get(("avail", (i,)), 0)),
        ))
    for e in link_ids:
        link_sec[e] = sets.get(("sec", e), domain.sec)
        if not link_sec[e]:
            return None
        vlinks.append(VirtualLink(e, exact.get(("bw", e), Decimal(0)), min(link_sec[e])))
    return RequestVariant(VirtualNetworkRequest(tuple(vnodes), tuple(vlinks)), node_sec, node_cloud, link_sec)


def policy_domain(expr: PolicyExpr) -> LevelDomain:
    """Fallback level domain built from the sec/cloud values named in ``expr``."""
    secs = {l.value for l in leaves(expr) if l.func == "sec"}
    clouds = {l.value for l in leaves(expr) if l.func == "cloud"}
    return LevelDomain(frozenset(secs or {Decimal(1)}), frozenset(clouds or {Decimal(1)}))
