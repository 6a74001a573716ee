"""CPLEX-LP-format text export/import for MilpModel.

The writer is canonical (terms sorted by variable name, repr float
formatting) so export -> read -> export is byte-stable. The reader accepts
the dialect the writer produces plus the common section spellings
("Subject To" / "st", "Binaries" / "Binary", "General(s)").
"""

from __future__ import annotations

import math
import re

from .formulation import BINARY, CONTINUOUS, Constraint, MilpModel, Variable

_TOKEN_RE = re.compile(
    r"<=|>=|=|\+|-|:"
    r"|[0-9]+\.?[0-9]*(?:[eE][+-]?[0-9]+)?"
    r"|\.[0-9]+(?:[eE][+-]?[0-9]+)?"
    r"|[A-Za-z_][A-Za-z0-9_.]*"
)


def _tokenize(line: str) -> list[str]:
    return _TOKEN_RE.findall(line)

__all__ = ["export_lp", "read_lp", "LpParseError", "structurally_equal"]


class LpParseError(ValueError):
    def __init__(self, line_no: int, msg: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {msg}")


def _fmt(value: float) -> str:
    return repr(float(value))


def _expr(coeffs: dict[str, float]) -> str:
    parts = []
    for name in sorted(coeffs):
        c = coeffs[name]
        if c == 0.0:
            continue
        sign = "-" if c < 0 else "+"
        parts.append(f"{sign} {_fmt(abs(c))} {name}")
    if not parts:
        return "0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def export_lp(model: MilpModel) -> str:
    lines = ["Minimize" if model.minimize else "Maximize"]
    lines.append(f" obj: {_expr(model.objective)}")
    lines.append("Subject To")
    for c in model.constraints:
        sense = {"<=": "<=", ">=": ">=", "=": "="}[c.sense]
        lines.append(f" {c.name}: {_expr(c.coeffs)} {sense} {_fmt(c.rhs)}")
    lines.append("Bounds")
    for v in model.variables:
        if v.kind == BINARY:
            continue
        if v.upper is None:
            if v.lower == 0.0:
                lines.append(f" {v.name} >= 0.0")
            else:
                lines.append(f" {v.name} >= {_fmt(v.lower)}")
        else:
            lines.append(f" {_fmt(v.lower)} <= {v.name} <= {_fmt(v.upper)}")
    binaries = [v.name for v in model.variables if v.kind == BINARY]
    if binaries:
        lines.append("Binaries")
        for i in range(0, len(binaries), 8):
            lines.append(" " + " ".join(binaries[i : i + 8]))
    lines.append("End")
    return "\n".join(lines) + "\n"


_SECTIONS = {
    "minimize": "objective",
    "maximize": "objective",
    "min": "objective",
    "max": "objective",
    "subject to": "constraints",
    "such that": "constraints",
    "st": "constraints",
    "s.t.": "constraints",
    "bounds": "bounds",
    "bound": "bounds",
    "binaries": "binaries",
    "binary": "binaries",
    "bin": "binaries",
    "generals": "generals",
    "general": "generals",
    "end": "end",
}


def _is_number(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def _parse_expr(tokens: list[str], line_no: int) -> dict[str, float]:
    coeffs: dict[str, float] = {}
    sign = 1.0
    coef: float | None = None
    for tok in tokens:
        if tok == "+":
            if coef is not None:
                raise LpParseError(line_no, "dangling coefficient before '+'")
            sign = 1.0
        elif tok == "-":
            if coef is not None:
                coef = -coef
            else:
                sign = -sign
        elif _is_number(tok):
            if coef is not None:
                raise LpParseError(line_no, f"two consecutive numbers near {tok!r}")
            coef = sign * float(tok)
            sign = 1.0
        else:
            c = coef if coef is not None else sign
            coeffs[tok] = coeffs.get(tok, 0.0) + c
            coef = None
            sign = 1.0
    if coef is not None and coef != 0.0:
        raise LpParseError(line_no, "expression ends with a dangling coefficient")
    return coeffs


def read_lp(text: str) -> MilpModel:
    minimize = True
    objective: dict[str, float] = {}
    constraints: list[Constraint] = []
    bounds: dict[str, tuple[float, float | None]] = {}
    binaries: list[str] = []
    order: list[str] = []
    seen: set[str] = set()

    def note(names):
        for n in names:
            if n not in seen:
                seen.add(n)
                order.append(n)

    section = None
    # Constraints and the objective may span lines; accumulate until complete.
    pending: list[str] = []
    pending_name = None
    pending_line = 0

    def flush_constraint():
        nonlocal pending, pending_name
        if not pending and pending_name is None:
            return
        toks = pending
        sense_idx = next(
            (i for i, t in enumerate(toks) if t in ("<=", ">=", "=", "<", ">")), None
        )
        if sense_idx is None:
            raise LpParseError(pending_line, "constraint without a sense")
        sense = {"<": "<=", ">": ">="}.get(toks[sense_idx], toks[sense_idx])
        lhs = _parse_expr(toks[:sense_idx], pending_line)
        rhs_toks = toks[sense_idx + 1 :]
        rhs_sign = 1.0
        if rhs_toks and rhs_toks[0] == "-":
            rhs_sign, rhs_toks = -1.0, rhs_toks[1:]
        if len(rhs_toks) != 1 or not _is_number(rhs_toks[0]):
            raise LpParseError(pending_line, "constraint right-hand side must be a number")
        name = pending_name or f"c{len(constraints) + 1}"
        constraints.append(Constraint(name, lhs, sense, rhs_sign * float(rhs_toks[0])))
        note(lhs.keys())
        pending, pending_name = [], None

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("\\")[0].strip()
        if not line:
            continue
        key = line.lower()
        if key in _SECTIONS:
            if section == "constraints":
                flush_constraint()
            section = _SECTIONS[key]
            if key in ("minimize", "min"):
                minimize = True
            elif key in ("maximize", "max"):
                minimize = False
            if section == "end":
                break
            continue
        if section == "objective":
            toks = _tokenize(line)
            if ":" in toks:
                toks = toks[toks.index(":") + 1 :]
            for name, c in _parse_expr(toks, line_no).items():
                objective[name] = objective.get(name, 0.0) + c
            note(objective.keys())
        elif section == "constraints":
            toks = _tokenize(line)
            if ":" in toks:
                flush_constraint()
                idx = toks.index(":")
                if idx != 1:
                    raise LpParseError(line_no, "malformed constraint label")
                pending_name = toks[0]
                toks = toks[idx + 1 :]
                pending_line = line_no
            pending.extend(toks)
        elif section == "bounds":
            toks = _tokenize(line)
            if len(toks) == 2 and toks[1].lower() == "free":
                bounds[toks[0]] = (-math.inf, None)
                note([toks[0]])
            elif len(toks) == 3 and toks[1] in ("<=", ">=", "="):
                name_first = not _is_number(toks[0])
                name = toks[0] if name_first else toks[2]
                val = float(toks[2] if name_first else toks[0])
                op = toks[1]
                lo, up = bounds.get(name, (0.0, None))
                if op == "=":
                    lo, up = val, val
                elif (op == ">=" and name_first) or (op == "<=" and not name_first):
                    lo = val
                else:
                    up = val
                bounds[name] = (lo, up)
                note([name])
            elif len(toks) == 5 and toks[1] == "<=" and toks[3] == "<=":
                bounds[toks[2]] = (float(toks[0]), float(toks[4]))
                note([toks[2]])
            else:
                raise LpParseError(line_no, f"unrecognized bounds line: {raw.strip()!r}")
        elif section in ("binaries", "generals"):
            names = line.split()
            if section == "binaries":
                binaries.extend(names)
            note(names)
        else:
            raise LpParseError(line_no, "content before the objective section")
    if section == "constraints":
        flush_constraint()

    binary_set = set(binaries)
    variables = []
    for name in order:
        if name in binary_set:
            variables.append(Variable(name, BINARY, 0.0, 1.0))
        else:
            lo, up = bounds.get(name, (0.0, None))
            variables.append(Variable(name, CONTINUOUS, lo, up))
    return MilpModel(tuple(variables), tuple(constraints), objective, minimize, {})


def structurally_equal(m1: MilpModel, m2: MilpModel, tol: float = 1e-12) -> bool:
    """Same variables, constraints and coefficients, ignoring declaration order."""
    if m1.minimize != m2.minimize:
        return False

    def vkey(v: Variable):
        return v.name

    v1 = sorted(m1.variables, key=vkey)
    v2 = sorted(m2.variables, key=vkey)
    if len(v1) != len(v2):
        return False
    for a, b in zip(v1, v2):
        if a.name != b.name or a.kind != b.kind:
            return False
        if abs(a.lower - b.lower) > tol:
            return False
        if (a.upper is None) != (b.upper is None):
            return False
        if a.upper is not None and abs(a.upper - b.upper) > tol:
            return False

    def close(d1: dict[str, float], d2: dict[str, float]) -> bool:
        keys = set(d1) | set(d2)
        return all(abs(d1.get(k, 0.0) - d2.get(k, 0.0)) <= tol for k in keys)

    c1 = sorted(m1.constraints, key=lambda c: c.name)
    c2 = sorted(m2.constraints, key=lambda c: c.name)
    if len(c1) != len(c2):
        return False
    for a, b in zip(c1, c2):
        if a.name != b.name or a.sense != b.sense or abs(a.rhs - b.rhs) > tol:
            return False
        if not close(a.coeffs, b.coeffs):
            return False
    return close(m1.objective, m2.objective)
