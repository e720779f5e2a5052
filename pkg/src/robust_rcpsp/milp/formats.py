"""LP and fixed-MPS text for :class:`MipModel`, with matching readers.

Both writers are deterministic: variables and rows appear sorted by name.
Every variable gets an explicit bounds line (LP) or a column entry (MPS)
so that reading the text back restores the declared variable set.
"""
from __future__ import annotations

import math
import re

from .model import BINARY, CONTINUOUS, Constraint, MipModel, Variable

LP_WIDTH = 78
MPS_NAME_LEN = 8
MPS_NUM_LEN = 12


class FormatError(ValueError):
    pass


def _num(v) -> str:
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if v.is_integer():
            return str(int(v))
        return repr(v)
    return str(v)


def _parse_num(text: str):
    low = text.lower()
    if low in ("inf", "+inf", "infinity", "+infinity"):
        return math.inf
    if low in ("-inf", "-infinity"):
        return -math.inf
    try:
        return int(text)
    except ValueError:
        return float(text)


# ---------------------------------------------------------------- LP

def _wrap(head: str, pieces: list[str]) -> list[str]:
    lines, cur = [], head
    for piece in pieces:
        if len(cur) + 1 + len(piece) > LP_WIDTH and cur.strip():
            lines.append(cur)
            cur = "   " + piece
        else:
            cur = f"{cur} {piece}" if cur else piece
    lines.append(cur)
    return lines


def _expr(terms, fallback: str) -> list[str]:
    if not terms:
        return [f"0 {fallback}"]
    out = []
    for idx, (var, coef) in enumerate(terms):
        sign = "-" if coef < 0 else "+"
        mag = _num(abs(coef))
        body = var if mag == "1" else f"{mag} {var}"
        out.append(body if idx == 0 and sign == "+" else f"{sign} {body}")
    return out


def emit_lp(model: MipModel) -> str:
    first = model.variables[0].name if model.variables else None
    if first is None:
        raise FormatError("model without variables")
    lines = [f"\\ Model {model.name}", "Maximize" if model.maximize else "Minimize"]
    lines += _wrap(" obj:", _expr(model.objective, first))
    lines.append("Subject To")
    for c in model.constraints:
        lines += _wrap(f" {c.name}:", _expr(c.terms, first) + [c.sense, _num(c.rhs)])
    lines.append("Bounds")
    for v in model.variables:
        if v.lower == -math.inf and v.upper == math.inf:
            lines.append(f" {v.name} free")
        else:
            lines.append(f" {_num(v.lower)} <= {v.name} <= {_num(v.upper)}")
    binaries = [v.name for v in model.variables if v.kind == BINARY]
    if binaries:
        lines.append("Binaries")
        lines += _wrap("", binaries)
    lines.append("End")
    return "\n".join(lines) + "\n"


_SECTIONS = {
    "minimize": "min", "minimum": "min", "min": "min",
    "maximize": "max", "maximum": "max", "max": "max",
    "subject to": "st", "such that": "st", "st": "st", "s.t.": "st",
    "bounds": "bounds", "bound": "bounds",
    "binaries": "bin", "binary": "bin", "bin": "bin",
    "generals": "gen", "general": "gen", "gen": "gen",
    "end": "end",
}
_TOKEN = re.compile(r"\s*(<=|>=|=<|=>|=|<|>|[+-]|[A-Za-z_][\w.\[\]]*|\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)")
_LABEL = re.compile(r"^\s*([A-Za-z_][\w.\[\]]*)\s*:(.*)$")


def _tokens(text: str) -> list[str]:
    out, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormatError(f"cannot tokenize LP expression near {text[pos:pos + 20]!r}")
        out.append(m.group(1))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


def _is_number(tok: str) -> bool:
    return bool(re.fullmatch(r"\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?", tok)) or \
        tok.lower() in ("inf", "infinity")


def _linear(tokens: list[str]) -> list[tuple[str, float]]:
    terms, sign, coef = [], 1, None
    for tok in tokens:
        if tok in "+-":
            sign = -1 if tok == "-" else 1
        elif _is_number(tok):
            coef = _parse_num(tok)
        else:
            terms.append((tok, sign * (1 if coef is None else coef)))
            sign, coef = 1, None
    if coef is not None:
        raise FormatError("constant term in linear expression")
    return terms


_SENSE = {"<=": "<=", "=<": "<=", "<": "<=", ">=": ">=", "=>": ">=", ">": ">=", "=": "="}


def parse_lp(text: str) -> MipModel:
    name = "model"
    section = None
    statements: dict[str, list[list[str]]] = {"min": [], "max": [], "st": [], "bounds": [], "bin": [], "gen": []}
    for raw in text.splitlines():
        if raw.startswith("\\"):
            m = re.match(r"\\\s*Model\s+(\S+)", raw)
            if m:
                name = m.group(1)
            continue
        line = raw.split("\\", 1)[0]
        key = line.strip().lower()
        if key in _SECTIONS:
            section = _SECTIONS[key]
            if section == "end":
                break
            continue
        if not line.strip():
            continue
        if section is None:
            raise FormatError(f"text before any section: {raw!r}")
        if section in ("min", "max", "st"):
            m = _LABEL.match(line)
            if m:
                statements[section].append([m.group(1), m.group(2)])
            elif statements[section]:
                statements[section][-1][1] += " " + line
            else:
                raise FormatError(f"unlabelled row: {raw!r}")
        else:
            statements[section].append(line.split())
    maximize = bool(statements["max"])
    obj_rows = statements["max"] or statements["min"]
    if len(obj_rows) != 1:
        raise FormatError("expected exactly one objective")
    objective = _linear(_tokens(obj_rows[0][1]))
    rows = []
    for cname, body in statements["st"]:
        toks = _tokens(body)
        ops = [i for i, tk in enumerate(toks) if tk in _SENSE]
        if len(ops) != 1:
            raise FormatError(f"row {cname}: expected one comparison")
        at = ops[0]
        rhs_toks = toks[at + 1:]
        rhs_sign = -1 if rhs_toks and rhs_toks[0] == "-" else 1
        rhs = rhs_sign * _parse_num(rhs_toks[-1])
        rows.append(Constraint(cname, tuple(_linear(toks[:at])), _SENSE[toks[at]], rhs))
    bounds: dict[str, tuple] = {}
    for parts in statements["bounds"]:
        if len(parts) == 2 and parts[1].lower() == "free":
            bounds[parts[0]] = (-math.inf, math.inf)
        elif len(parts) == 5 and parts[1] == parts[3] == "<=":
            bounds[parts[2]] = (_parse_num(parts[0]), _parse_num(parts[4]))
        elif len(parts) == 3 and parts[1] in (">=", "<=", "="):
            lo, hi = bounds.get(parts[0], (0, math.inf))
            val = _parse_num(parts[2])
            lo, hi = {">=": (val, hi), "<=": (lo, val), "=": (val, val)}[parts[1]]
            bounds[parts[0]] = (lo, hi)
        else:
            raise FormatError(f"unsupported bounds line {' '.join(parts)!r}")
    binaries = {tok for parts in statements["bin"] for tok in parts}
    used = {v for v, _ in objective} | {v for c in rows for v, _ in c.terms} | set(bounds) | binaries
    variables = []
    for v in sorted(used):
        lo, hi = bounds.get(v, (0, 1) if v in binaries else (0, math.inf))
        variables.append(Variable(v, lo, hi, BINARY if v in binaries else CONTINUOUS))
    return MipModel(name, tuple(variables), tuple(rows), tuple(objective), maximize)


# ---------------------------------------------------------------- MPS

def mps_aliases(names: list[str], prefix: str) -> dict[str, str]:
    if all(len(n) <= MPS_NAME_LEN and " " not in n for n in names):
        return {n: n for n in names}
    width = MPS_NAME_LEN - 1
    if len(names) >= 10 ** width:
        raise FormatError("too many names for the alias scheme")
    return {n: f"{prefix}{i + 1:0{width}d}" for i, n in enumerate(names)}


def _mps_num(v) -> str:
    text = _num(v)
    if len(text) <= MPS_NUM_LEN:
        return text
    alt = f"{v:.6e}"
    if len(alt) <= MPS_NUM_LEN and float(alt) == v:
        return alt
    raise FormatError(f"number {v!r} does not fit a fixed MPS field")


def _field_line(kind: str, a: str, b: str = "", num: str = "") -> str:
    line = f" {kind:<2} {a:<8}  {b:<8}  {num:>12}" if num else f" {kind:<2} {a:<8}  {b}"
    return line.rstrip()


def emit_mps(model: MipModel) -> str:
    cols = mps_aliases([v.name for v in model.variables], "C")
    rows = mps_aliases([c.name for c in model.constraints], "R")
    if "OBJ" in rows.values():
        raise FormatError("row name OBJ is reserved for the objective")
    lines = []
    if any(k != v for k, v in cols.items()):
        lines += [f"* COLUMN {alias} {name}" for name, alias in cols.items()]
    if any(k != v for k, v in rows.items()):
        lines += [f"* ROW {alias} {name}" for name, alias in rows.items()]
    lines.append(f"NAME          {model.name}")
    if model.maximize:
        lines += ["OBJSENSE", "    MAX"]
    lines.append("ROWS")
    lines.append(" N  OBJ")
    tag = {"<=": "L", ">=": "G", "=": "E"}
    for c in model.constraints:
        lines.append(f" {tag[c.sense]}  {rows[c.name]}")
    entries: dict[str, list[tuple[str, object]]] = {v.name: [] for v in model.variables}
    for var, coef in model.objective:
        entries[var].append(("OBJ", coef))
    for c in model.constraints:
        for var, coef in c.terms:
            entries[var].append((rows[c.name], coef))
    lines.append("COLUMNS")
    for v in model.variables:
        items = entries[v.name] or [("OBJ", 0)]
        for row, coef in items:
            lines.append(f"    {cols[v.name]:<8}  {row:<8}  {_mps_num(coef):>12}")
    lines.append("RHS")
    for c in model.constraints:
        if c.rhs:
            lines.append(f"    RHS       {rows[c.name]:<8}  {_mps_num(c.rhs):>12}")
    lines.append("BOUNDS")
    for v in model.variables:
        a = cols[v.name]
        if v.kind == BINARY:
            lines.append(_field_line("BV", "BND", a))
        elif v.lower == -math.inf and v.upper == math.inf:
            lines.append(_field_line("FR", "BND", a))
        elif v.lower == v.upper:
            lines.append(_field_line("FX", "BND", a, _mps_num(v.lower)))
        else:
            if v.lower == -math.inf:
                lines.append(_field_line("MI", "BND", a))
            elif v.lower != 0:
                lines.append(_field_line("LO", "BND", a, _mps_num(v.lower)))
            if v.upper != math.inf:
                lines.append(_field_line("UP", "BND", a, _mps_num(v.upper)))
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def parse_mps(text: str) -> MipModel:
    col_alias: dict[str, str] = {}
    row_alias: dict[str, str] = {}
    name, maximize, section = "model", False, None
    senses: dict[str, str] = {}
    order: list[str] = []
    terms: dict[str, list] = {}
    objective: list = []
    rhs: dict[str, object] = {}
    bounds: dict[str, list] = {}
    binaries: set[str] = set()
    obj_row = None
    for raw in text.splitlines():
        if raw.startswith("*"):
            parts = raw[1:].split()
            if len(parts) == 3 and parts[0] == "COLUMN":
                col_alias[parts[1]] = parts[2]
            elif len(parts) == 3 and parts[0] == "ROW":
                row_alias[parts[1]] = parts[2]
            continue
        if not raw.strip():
            continue
        if not raw[0].isspace():
            head = raw.split()
            section = head[0]
            if section == "NAME":
                name = head[1] if len(head) > 1 else name
            elif section == "OBJSENSE" and len(head) > 1:
                maximize = head[1].upper() in ("MAX", "MAXIMIZE")
            elif section == "ENDATA":
                break
            continue
        parts = raw.split()
        if section == "OBJSENSE":
            maximize = parts[0].upper() in ("MAX", "MAXIMIZE")
        elif section == "ROWS":
            kind, row = parts
            if kind == "N":
                if obj_row is None:
                    obj_row = row
                continue
            senses[row] = {"L": "<=", "G": ">=", "E": "="}[kind]
            order.append(row)
            terms[row] = []
        elif section == "COLUMNS":
            if "'MARKER'" in parts:
                continue
            col = parts[0]
            bounds.setdefault(col, [0, math.inf])
            for row, val in zip(parts[1::2], parts[2::2]):
                coef = _parse_num(val)
                if row == obj_row:
                    objective.append((col, coef))
                else:
                    terms[row].append((col, coef))
        elif section == "RHS":
            for row, val in zip(parts[1::2], parts[2::2]):
                rhs[row] = _parse_num(val)
        elif section == "BOUNDS":
            kind, col = parts[0], parts[2]
            val = _parse_num(parts[3]) if len(parts) > 3 else None
            b = bounds.setdefault(col, [0, math.inf])
            if kind == "BV":
                binaries.add(col)
                b[:] = [0, 1]
            elif kind == "FR":
                b[:] = [-math.inf, math.inf]
            elif kind == "MI":
                b[0] = -math.inf
            elif kind == "PL":
                b[1] = math.inf
            elif kind == "LO":
                b[0] = val
            elif kind == "UP":
                b[1] = val
            elif kind == "FX":
                b[:] = [val, val]
            else:
                raise FormatError(f"unsupported bound type {kind}")
        else:
            raise FormatError(f"unsupported MPS section {section}")
    cname = lambda a: col_alias.get(a, a)  # noqa: E731
    variables = [Variable(cname(c), b[0], b[1], BINARY if c in binaries else CONTINUOUS)
                 for c, b in bounds.items()]
    rows = [Constraint(row_alias.get(r, r), tuple((cname(c), v) for c, v in terms[r]), senses[r], rhs.get(r, 0))
            for r in order]
    return MipModel(name, tuple(variables), tuple(rows), tuple((cname(c), v) for c, v in objective), maximize)
