"""LP text and fixed-column MPS writers for :class:`MilpModel`."""
from __future__ import annotations

import math
import re

from .ir import BINARY, EQ, GE, LE, MilpModel

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")
_LP_LINE = 250


class ExportError(ValueError):
    pass


def _num(v: float) -> str:
    if v == 0:
        return "0"  # never emit -0
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _check_names(model: MilpModel) -> None:
    seen = set()
    for v in model.variables:
        if not _NAME_RE.match(v.name):
            raise ExportError(f"variable name {v.name!r} is not exportable")
        if v.name in seen:
            raise ExportError(f"variable name collision: {v.name!r}")
        seen.add(v.name)
    rows = set()
    for c in model.constraints:
        if not _NAME_RE.match(c.name):
            raise ExportError(f"row name {c.name!r} is not exportable")
        if c.name in rows or c.name == "obj":
            raise ExportError(f"row name collision: {c.name!r}")
        rows.add(c.name)


def _wrap(head: str, pieces: list[str]) -> list[str]:
    lines, cur = [], head
    for piece in pieces:
        if len(cur) + len(piece) + 1 > _LP_LINE:
            lines.append(cur)
            cur = "   "
        cur += " " + piece
    lines.append(cur)
    return lines


def _terms(model: MilpModel, terms) -> list[str]:
    out = []
    for k, (j, coef) in enumerate(terms):
        name = model.variables[j].name
        sign = "-" if coef < 0 else ("+" if k else "")
        mag = abs(coef)
        body = name if mag == 1 else f"{_num(mag)} {name}"
        out.append(f"{sign} {body}" if sign else body)
    return out


def to_lp(model: MilpModel) -> str:
    _check_names(model)
    lines = [f"\\ {model.name}", "Minimize"]
    obj = sorted(model.objective.items())
    lines += _wrap(" obj:", _terms(model, obj)) if obj else [" obj:"]
    lines.append("Subject To")
    for c in model.constraints:
        op = {LE: "<=", GE: ">=", EQ: "="}[c.sense]
        pieces = _terms(model, c.terms) if c.terms else ["0 " + model.variables[0].name] if model.variables else []
        if not pieces:
            raise ExportError(f"row {c.name} has no terms and the model has no variables")
        lines += _wrap(f" {c.name}:", pieces + [f"{op} {_num(c.rhs)}"])
    bounds = []
    for v in model.variables:
        if v.kind == BINARY:
            if v.lb != 0 or v.ub != 1:
                bounds.append(f" {_num(v.lb)} <= {v.name} <= {_num(v.ub)}")
        elif v.lb == -math.inf and v.ub == math.inf:
            bounds.append(f" {v.name} free")
        elif v.ub == math.inf:
            if v.lb != 0:
                bounds.append(f" {v.name} >= {_num(v.lb)}")
        else:
            lo = "-inf" if v.lb == -math.inf else _num(v.lb)
            bounds.append(f" {lo} <= {v.name} <= {_num(v.ub)}")
    if bounds:
        lines.append("Bounds")
        lines += bounds
    binaries = [v.name for v in model.variables if v.kind == BINARY]
    if binaries:
        lines.append("Binaries")
        lines += [f" {b}" for b in binaries]
    lines.append("End")
    return "\n".join(lines) + "\n"


def _field(text: str, width: int) -> str:
    # fixed-column layout; longer names push later fields right but stay space-separated
    return text.ljust(width) if len(text) < width else text + " "


def _mps_line(code: str, f1: str = "", f2: str = "", f3: str = "", f4: str = "", f5: str = "") -> str:
    line = " " + _field(code, 3) + _field(f1, 10) + _field(f2, 10)
    if f3:
        line += _field(f3, 15)
    if f4:
        line += _field(f4, 10) + f5
    return line.rstrip()


def to_mps(model: MilpModel) -> str:
    _check_names(model)
    lines = [f"NAME          {model.name}", "ROWS", " N  obj"]
    for c in model.constraints:
        lines.append(f" {dict(((LE, 'L'), (GE, 'G'), (EQ, 'E')))[c.sense]}  {c.name}")
    col_entries: list[list[tuple[str, float]]] = [[] for _ in model.variables]
    for j, coef in sorted(model.objective.items()):
        col_entries[j].append(("obj", coef))
    for c in model.constraints:
        for j, coef in c.terms:
            col_entries[j].append((c.name, coef))
    lines.append("COLUMNS")
    in_int = False
    marker = 0
    for j, v in enumerate(model.variables):
        is_int = v.kind == BINARY
        if is_int != in_int:
            tag = "'INTORG'" if is_int else "'INTEND'"
            lines.append(_mps_line("", f"MARKER{marker}", "'MARKER'", "", tag))
            marker += 1
            in_int = is_int
        entries = col_entries[j] or [("obj", 0.0)]
        for k in range(0, len(entries), 2):
            chunk = entries[k:k + 2]
            f4, f5 = (chunk[1][0], _num(chunk[1][1])) if len(chunk) == 2 else ("", "")
            lines.append(_mps_line("", v.name, chunk[0][0], _num(chunk[0][1]), f4, f5))
    if in_int:
        lines.append(_mps_line("", f"MARKER{marker}", "'MARKER'", "", "'INTEND'"))
    rhs = [(c.name, c.rhs) for c in model.constraints if c.rhs != 0]
    if rhs:
        lines.append("RHS")
        for name, val in rhs:
            lines.append(_mps_line("", "RHS", name, _num(val)))
    bounds = []
    for v in model.variables:
        if v.kind == BINARY:
            if v.lb == 0 and v.ub == 1:
                bounds.append(_mps_line("BV", "BND", v.name))
            else:
                bounds.append(_mps_line("LO", "BND", v.name, _num(v.lb)))
                bounds.append(_mps_line("UP", "BND", v.name, _num(v.ub)))
            continue
        if v.lb == v.ub:
            bounds.append(_mps_line("FX", "BND", v.name, _num(v.lb)))
            continue
        if v.lb == -math.inf:
            bounds.append(_mps_line("MI", "BND", v.name))
        elif v.lb != 0:
            bounds.append(_mps_line("LO", "BND", v.name, _num(v.lb)))
        if v.ub != math.inf:
            bounds.append(_mps_line("UP", "BND", v.name, _num(v.ub)))
    if bounds:
        lines.append("BOUNDS")
        lines += bounds
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def export(model: MilpModel, fmt: str = "lp_text") -> bytes:
    """Render ``model`` as ``lp_text`` or ``mps_fixed``."""
    if fmt in ("lp", "lp_text"):
        return to_lp(model).encode("ascii")
    if fmt in ("mps", "mps_fixed"):
        return to_mps(model).encode("ascii")
    raise ExportError(f"unknown export format {fmt!r}")
