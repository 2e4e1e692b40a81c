"""LP and MPS text emission plus a reference reader.

Writers are bit-deterministic: same model in, same bytes out.  Numbers are
rendered with Python's shortest round-trip ``repr`` so a re-import
reproduces every coefficient exactly.  The reader understands the subset
the writers emit (free-format MPS with BV bounds; CPLEX-style LP with an
optional objective constant) and exists so exports can be verified without
an external solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .instance import SsoaError
from .milp import BINARY, CONTINUOUS, Constraint, LinearModel, Variable

MAX_NAME_LENGTH = 255

_REL_TO_LP = {"<=": "<=", ">=": ">=", "=": "="}
_REL_TO_MPS = {"<=": "L", ">=": "G", "=": "E"}
_MPS_TO_REL = {"L": "<=", "G": ">=", "E": "="}


class ExportError(SsoaError):
    pass


class ParseError(SsoaError):
    pass


def _num(value: float) -> str:
    if not np.isfinite(value):
        raise ExportError(f"non-finite coefficient {value!r}")
    return repr(float(value))


def _check_names(model: LinearModel) -> None:
    for var in model.variables:
        if len(var.name) > MAX_NAME_LENGTH:
            raise ExportError(f"variable name too long for export: {var.name[:40]}...")
    for row in model.constraints:
        if len(row.label) > MAX_NAME_LENGTH:
            raise ExportError(f"row label too long for export: {row.label[:40]}...")
    names = [v.name for v in model.variables]
    if len(set(names)) != len(names):
        raise ExportError("duplicate variable names")
    labels = [r.label for r in model.constraints]
    if len(set(labels)) != len(labels):
        raise ExportError("duplicate row labels")


def export_model(model: LinearModel, fmt: str) -> str:
    """Render the model in the named industry format (``lp`` or ``mps``)."""
    fmt = fmt.lower()
    if fmt == "lp":
        return write_lp(model)
    if fmt == "mps":
        return write_mps(model)
    raise ExportError(f"unknown export format {fmt!r}")


def write_lp(model: LinearModel) -> str:
    _check_names(model)
    out = [f"\\ kind={model.metadata.get('kind', '?')}"
           f" mode={model.metadata.get('mode', '?')}"
           f" fingerprint={model.metadata.get('instance_fingerprint', '?')}"]
    out.append("Minimize")
    terms = _terms_text(model.objective, model.variables)
    if model.objective_constant:
        terms = f"{terms} + {_num(model.objective_constant)}" if terms \
            else _num(model.objective_constant)
    if not terms:
        terms = f"0 {model.variables[0].name}" if model.variables else "0"
    out.append(f" obj: {terms}")
    out.append("Subject To")
    for row in model.constraints:
        out.append(f" {row.label}: {_terms_text(row.coeffs, model.variables)} "
                   f"{_REL_TO_LP[row.relation]} {_num(row.rhs)}")
    out.append("Bounds")
    for var in model.variables:
        if var.integrality == BINARY:
            continue  # stated in Binaries
        lo = _num(var.lower)
        hi = "+inf" if not np.isfinite(var.upper) else _num(var.upper)
        out.append(f" {lo} <= {var.name} <= {hi}")
    binaries = [v.name for v in model.variables if v.integrality == BINARY]
    if binaries:
        out.append("Binaries")
        for name in binaries:
            out.append(f" {name}")
    out.append("End")
    return "\n".join(out) + "\n"


def _terms_text(coeffs: dict[int, float], variables: list[Variable]) -> str:
    parts = []
    for idx in sorted(coeffs):
        coef = coeffs[idx]
        name = variables[idx].name
        if not parts:
            parts.append(f"{_num(coef)} {name}")
        elif coef < 0:
            parts.append(f"- {_num(-coef)} {name}")
        else:
            parts.append(f"+ {_num(coef)} {name}")
    return " ".join(parts)


def write_mps(model: LinearModel) -> str:
    """Free-format MPS; the objective constant rides on the cost row's RHS
    entry, negated, per the common solver convention."""
    _check_names(model)
    out = [f"NAME {model.metadata.get('kind', 'model')}"]
    out.append("ROWS")
    out.append(" N obj")
    for row in model.constraints:
        out.append(f" {_REL_TO_MPS[row.relation]} {row.label}")
    out.append("COLUMNS")
    by_var: dict[int, list[tuple[str, float]]] = {}
    for i, row in enumerate(model.constraints):
        for idx, coef in row.coeffs.items():
            by_var.setdefault(idx, []).append((row.label, coef))
    in_integer_block = False
    marker = 0
    for idx, var in enumerate(model.variables):
        is_int = var.integrality == BINARY
        if is_int and not in_integer_block:
            out.append(f"    MARKER{marker} 'MARKER' 'INTORG'")
            marker += 1
            in_integer_block = True
        elif not is_int and in_integer_block:
            out.append(f"    MARKER{marker} 'MARKER' 'INTEND'")
            marker += 1
            in_integer_block = False
        entries = []
        if idx in model.objective:
            entries.append(("obj", model.objective[idx]))
        entries.extend(by_var.get(idx, []))
        if not entries:
            entries.append(("obj", 0.0))
        for label, coef in entries:
            out.append(f"    {var.name} {label} {_num(coef)}")
    if in_integer_block:
        out.append(f"    MARKER{marker} 'MARKER' 'INTEND'")
    out.append("RHS")
    for row in model.constraints:
        if row.rhs:
            out.append(f"    rhs {row.label} {_num(row.rhs)}")
    if model.objective_constant:
        out.append(f"    rhs obj {_num(-model.objective_constant)}")
    out.append("BOUNDS")
    for var in model.variables:
        if var.integrality == BINARY:
            out.append(f" BV bnd {var.name}")
        else:
            if var.lower:
                out.append(f" LO bnd {var.name} {_num(var.lower)}")
            if np.isfinite(var.upper):
                out.append(f" UP bnd {var.name} {_num(var.upper)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# reference reader


@dataclass
class ParsedModel:
    """Reader output: plain dicts keyed by names, for export verification."""

    objective: dict[str, float]
    objective_constant: float
    rows: list[tuple[str, dict[str, float], str, float]]  # label, coeffs, rel, rhs
    binaries: set[str] = field(default_factory=set)
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)

    def row_map(self) -> dict[str, tuple[dict[str, float], str, float]]:
        return {label: (coeffs, rel, rhs) for label, coeffs, rel, rhs in self.rows}


def read_lp(text: str) -> ParsedModel:
    lines = [ln for ln in (raw.strip() for raw in text.splitlines())
             if ln and not ln.startswith("\\")]
    section = None
    objective: dict[str, float] = {}
    constant = 0.0
    rows: list[tuple[str, dict[str, float], str, float]] = []
    binaries: set[str] = set()
    bounds: dict[str, tuple[float, float]] = {}
    for ln in lines:
        lowered = ln.lower()
        if lowered in ("minimize", "subject to", "bounds", "binaries", "end"):
            section = lowered
            continue
        if section == "minimize":
            body = ln.split(":", 1)[1] if ":" in ln else ln
            coeffs, const = _parse_terms(body)
            objective.update(coeffs)
            constant += const
        elif section == "subject to":
            if ":" not in ln:
                raise ParseError(f"constraint line without label: {ln!r}")
            label, body = (s.strip() for s in ln.split(":", 1))
            rel, _ = _split_relation(body)
            coeff_text, _, rhs_part = body.rpartition(rel)
            coeffs, const = _parse_terms(coeff_text)
            rows.append((label, coeffs, rel, float(rhs_part) - const))
        elif section == "bounds":
            tokens = ln.split()
            if len(tokens) != 5 or tokens[1] != "<=" or tokens[3] != "<=":
                raise ParseError(f"unsupported bounds line: {ln!r}")
            lo = float(tokens[0])
            hi = np.inf if tokens[4] == "+inf" else float(tokens[4])
            bounds[tokens[2]] = (lo, hi)
        elif section == "binaries":
            binaries.add(ln)
    return ParsedModel(objective, constant, rows, binaries, bounds)


def _split_relation(body: str) -> tuple[str, str]:
    for rel in ("<=", ">=", "="):
        if f" {rel} " in body:
            return rel, body.rpartition(rel)[2]
    raise ParseError(f"no relation found in: {body!r}")


def _parse_terms(text: str) -> tuple[dict[str, float], float]:
    tokens = text.replace("+", " + ").replace("-", " - ").split()
    # repair splits inside scientific notation like 1e - 05
    merged: list[str] = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if (tok not in "+-" and (tok[-1] in "eE") and i + 2 < len(tokens)
                and tokens[i + 1] in "+-"):
            merged.append(tok + tokens[i + 1] + tokens[i + 2])
            i += 3
        else:
            merged.append(tok)
            i += 1
    coeffs: dict[str, float] = {}
    constant = 0.0
    sign = 1.0
    pending: float | None = None
    for tok in merged:
        if tok == "+":
            if pending is not None:
                constant += sign * pending
                pending = None
            sign = 1.0
        elif tok == "-":
            if pending is not None:
                constant += sign * pending
                pending = None
            sign = -1.0
        else:
            try:
                value = float(tok)
                if pending is not None:
                    constant += sign * pending
                pending = value
            except ValueError:
                coef = sign * (pending if pending is not None else 1.0)
                coeffs[tok] = coeffs.get(tok, 0.0) + coef
                pending = None
                sign = 1.0
    if pending is not None:
        constant += sign * pending
    return coeffs, constant


def read_mps(text: str) -> ParsedModel:
    section = None
    row_rel: dict[str, str] = {}
    row_order: list[str] = []
    obj_row = None
    columns: dict[str, dict[str, float]] = {}
    rhs: dict[str, float] = {}
    binaries: set[str] = set()
    bounds: dict[str, tuple[float, float]] = {}
    lower: dict[str, float] = {}
    upper: dict[str, float] = {}
    in_integer = False
    for raw in text.splitlines():
        ln = raw.strip()
        if not ln or ln.startswith("*"):
            continue
        # section headers are unindented; data lines are indented
        if raw[0] not in " \t":
            head = ln.split()[0].upper()
            if head in ("NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "RANGES", "ENDATA"):
                section = head
                continue
        tokens = ln.split()
        if section == "ROWS":
            sense, label = tokens
            if sense.upper() == "N":
                obj_row = label
            else:
                row_rel[label] = _MPS_TO_REL[sense.upper()]
                row_order.append(label)
        elif section == "COLUMNS":
            if len(tokens) >= 3 and tokens[1].strip("'").upper() == "MARKER":
                in_integer = tokens[2].strip("'").upper() == "INTORG"
                continue
            name = tokens[0]
            if in_integer:
                binaries.add(name)
            pairs = tokens[1:]
            for k in range(0, len(pairs), 2):
                columns.setdefault(name, {})[pairs[k]] = \
                    columns.get(name, {}).get(pairs[k], 0.0) + float(pairs[k + 1])
        elif section == "RHS":
            pairs = tokens[1:]
            for k in range(0, len(pairs), 2):
                rhs[pairs[k]] = float(pairs[k + 1])
        elif section == "BOUNDS":
            btype = tokens[0].upper()
            name = tokens[2]
            if btype == "BV":
                binaries.add(name)
                bounds[name] = (0.0, 1.0)
            elif btype == "LO":
                lower[name] = float(tokens[3])
            elif btype == "UP":
                upper[name] = float(tokens[3])
    if obj_row is None:
        raise ParseError("MPS document lacks an objective row")
    objective: dict[str, float] = {}
    rows_coeffs: dict[str, dict[str, float]] = {label: {} for label in row_order}
    for name, entries in columns.items():
        for label, coef in entries.items():
            if label == obj_row:
                if coef:
                    objective[name] = coef
            else:
                if label not in rows_coeffs:
                    raise ParseError(f"column entry references unknown row {label!r}")
                rows_coeffs[label][name] = coef
    for name in lower:
        bounds[name] = (lower[name], upper.get(name, np.inf))
    for name in upper:
        if name not in bounds:
            bounds[name] = (0.0, upper[name])
    rows = [(label, rows_coeffs[label], row_rel[label], rhs.get(label, 0.0))
            for label in row_order]
    constant = -rhs.get(obj_row, 0.0)
    return ParsedModel(objective, constant, rows, binaries, bounds)


def read_model(text: str, fmt: str) -> ParsedModel:
    fmt = fmt.lower()
    if fmt == "lp":
        return read_lp(text)
    if fmt == "mps":
        return read_mps(text)
    raise ParseError(f"unknown format {fmt!r}")
