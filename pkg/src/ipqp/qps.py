"""Problem ingestion and solution output.

Reads QPS/MPS-format quadratic programs (free-form, whitespace
delimited), a native JSON problem format ("qp_v1"), and built-in
synthetic instances; converts everything to the solver's canonical
shape (Ax >= b, Cx = d); and writes/reads solution JSON files.

Conversion rules: G rows and finite lower bounds become rows of
Ax >= b as written; L rows and finite upper bounds are sign-flipped
into the same form; E rows become equality rows; RANGES split a row
into its two one-sided faces; FX bounds append equality rows; FR/MI
drop the default nonnegativity floor.  Integer markers and integer
bound types are rejected.
"""

from __future__ import annotations

import dataclasses
import importlib.resources
import json
import math

import numpy as np
import scipy.sparse as sp

from .problem import ExplicitIterate, QpProblem, residuals

__all__ = [
    "QpsParseError",
    "QpsFile",
    "parse_qps",
    "to_qp_problem",
    "builtin_problem",
    "load_problem",
    "bundled_instances",
    "load_bundled",
    "write_solution",
    "read_solution",
    "write_problem_json",
    "read_problem_json",
    "BUILTIN_NAMES",
]

_SECTIONS = {"NAME", "OBJSENSE", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "QUADOBJ", "QMATRIX", "ENDATA"}
_INF = math.inf


class QpsParseError(ValueError):
    """Malformed QPS input; messages carry the offending line number."""


@dataclasses.dataclass
class QpsFile:
    """Parsed QPS sections, prior to conversion.

    Linear coefficients live in ``columns[col][row]``; quadratic entries
    in ``quad[(col1, col2)]`` with ``quad_kind`` recording whether they
    came from QUADOBJ (lower triangle, mirrored on conversion) or
    QMATRIX (as given, symmetrized).  Bounds are (lower, upper) pairs
    that still contain the format's defaults (0, +inf) unless overridden.
    """

    name: str = ""
    sense: str = "MIN"
    objective_row: str = ""
    row_types: dict[str, str] = dataclasses.field(default_factory=dict)
    row_order: list[str] = dataclasses.field(default_factory=list)
    free_rows: set[str] = dataclasses.field(default_factory=set)
    column_order: list[str] = dataclasses.field(default_factory=list)
    columns: dict[str, dict[str, float]] = dataclasses.field(default_factory=dict)
    rhs: dict[str, float] = dataclasses.field(default_factory=dict)
    ranges: dict[str, float] = dataclasses.field(default_factory=dict)
    bounds: dict[str, tuple[float, float]] = dataclasses.field(default_factory=dict)
    quad: dict[tuple[str, str], float] = dataclasses.field(default_factory=dict)
    quad_kind: str | None = None
    warnings: list[str] = dataclasses.field(default_factory=list)

    @property
    def objective_constant(self) -> float:
        """RHS given on the objective row encodes minus the constant term."""
        return -self.rhs.get(self.objective_row, 0.0)


def _number(token: str, lineno: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise QpsParseError(f"line {lineno}: expected a number, got {token!r}") from None


def parse_qps(text: str) -> QpsFile:
    """Parse free-form QPS/MPS text into its section model.

    Duplicate entries are summed.  Comment lines ('*') and blank lines
    are skipped.  Errors carry line numbers.

    Raises:
        QpsParseError: unknown section, dangling row/column reference,
            non-numeric field, integer markers, or missing sections.
    """
    out = QpsFile()
    section = None
    pending_objsense = False
    seen_columns: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("*"):
            continue
        tokens = stripped.split()
        if not raw[0].isspace():
            keyword = tokens[0].upper()
            if keyword not in _SECTIONS:
                raise QpsParseError(f"line {lineno}: unknown section {tokens[0]!r}")
            section = keyword
            pending_objsense = section == "OBJSENSE" and len(tokens) == 1
            if section == "NAME":
                out.name = tokens[1] if len(tokens) > 1 else ""
            elif section == "OBJSENSE" and len(tokens) > 1:
                out.sense = _parse_sense(tokens[1], lineno)
            elif section == "ENDATA":
                break
            continue
        if section is None:
            raise QpsParseError(f"line {lineno}: data before any section header")
        if pending_objsense:
            out.sense = _parse_sense(tokens[0], lineno)
            pending_objsense = False
            continue
        if section == "ROWS":
            _parse_row(out, tokens, lineno)
        elif section == "COLUMNS":
            _parse_column(out, tokens, lineno, seen_columns)
        elif section in ("RHS", "RANGES"):
            _parse_valued(out, tokens, lineno, section)
        elif section == "BOUNDS":
            _parse_bound(out, tokens, lineno, seen_columns)
        elif section in ("QUADOBJ", "QMATRIX"):
            _parse_quad(out, tokens, lineno, section, seen_columns)
        else:
            raise QpsParseError(f"line {lineno}: data not allowed in section {section}")
    if not out.objective_row:
        raise QpsParseError("no objective (N) row declared")
    return out


def _parse_sense(token: str, lineno: int) -> str:
    word = token.upper()
    if word in ("MIN", "MINIMIZE"):
        return "MIN"
    if word in ("MAX", "MAXIMIZE"):
        return "MAX"
    raise QpsParseError(f"line {lineno}: unknown objective sense {token!r}")


def _parse_row(out: QpsFile, tokens: list[str], lineno: int) -> None:
    if len(tokens) != 2:
        raise QpsParseError(f"line {lineno}: ROWS entries need a type and a name")
    rtype, name = tokens[0].upper(), tokens[1]
    if rtype == "N":
        if not out.objective_row:
            out.objective_row = name
        else:
            out.free_rows.add(name)
            out.warnings.append(f"line {lineno}: extra free row {name!r} ignored")
        return
    if rtype not in ("G", "L", "E"):
        raise QpsParseError(f"line {lineno}: unknown row type {tokens[0]!r}")
    if name in out.row_types or name == out.objective_row:
        raise QpsParseError(f"line {lineno}: duplicate row name {name!r}")
    out.row_types[name] = rtype
    out.row_order.append(name)


def _known_row(out: QpsFile, name: str) -> bool:
    return name == out.objective_row or name in out.row_types or name in out.free_rows


def _parse_column(out: QpsFile, tokens: list[str], lineno: int, seen_columns: set[str]) -> None:
    if len(tokens) >= 3 and tokens[1].upper() == "'MARKER'":
        raise QpsParseError(f"line {lineno}: integer markers are not supported")
    if len(tokens) not in (3, 5):
        raise QpsParseError(f"line {lineno}: COLUMNS entries need (column, row, value) pairs")
    col = tokens[0]
    if col not in seen_columns:
        seen_columns.add(col)
        out.column_order.append(col)
        out.columns[col] = {}
    for i in range(1, len(tokens), 2):
        row, value = tokens[i], _number(tokens[i + 1], lineno)
        if not _known_row(out, row):
            raise QpsParseError(f"line {lineno}: COLUMNS references undeclared row {row!r}")
        out.columns[col][row] = out.columns[col].get(row, 0.0) + value


def _parse_valued(out: QpsFile, tokens: list[str], lineno: int, section: str) -> None:
    # The leading set name is optional in the wild; detect by parity and
    # by whether the first token is itself a declared row.
    if len(tokens) % 2 == 1:
        pairs = tokens[1:]
    elif _known_row(out, tokens[0]):
        pairs = tokens
    else:
        raise QpsParseError(f"line {lineno}: malformed {section} entry")
    if not pairs:
        raise QpsParseError(f"line {lineno}: empty {section} entry")
    target = out.rhs if section == "RHS" else out.ranges
    for i in range(0, len(pairs), 2):
        row, value = pairs[i], _number(pairs[i + 1], lineno)
        if not _known_row(out, row):
            raise QpsParseError(f"line {lineno}: {section} references undeclared row {row!r}")
        if section == "RANGES" and row == out.objective_row:
            raise QpsParseError(f"line {lineno}: RANGES cannot apply to the objective row")
        target[row] = target.get(row, 0.0) + value


def _parse_bound(out: QpsFile, tokens: list[str], lineno: int, seen_columns: set[str]) -> None:
    if len(tokens) < 3:
        raise QpsParseError(f"line {lineno}: BOUNDS entries need (type, set, column[, value])")
    btype, col = tokens[0].upper(), tokens[2]
    if btype in ("BV", "UI", "LI"):
        raise QpsParseError(f"line {lineno}: integer bound type {tokens[0]!r} is not supported")
    if col not in seen_columns:
        raise QpsParseError(f"line {lineno}: BOUNDS references undeclared column {col!r}")
    lo, up = out.bounds.get(col, (0.0, _INF))
    if btype in ("UP", "LO", "FX"):
        if len(tokens) < 4:
            raise QpsParseError(f"line {lineno}: bound type {btype} needs a value")
        value = _number(tokens[3], lineno)
        if btype == "UP":
            up = value
            if value < 0.0 and lo == 0.0 and col not in out.bounds:
                # Standard format convention: a negative upper bound with no
                # explicit lower bound frees the lower side.
                lo = -_INF
                out.warnings.append(f"line {lineno}: negative UP bound on {col!r} frees its lower bound")
        elif btype == "LO":
            lo = value
        else:
            lo = up = value
    elif btype == "FR":
        lo, up = -_INF, _INF
    elif btype == "MI":
        lo = -_INF
    elif btype == "PL":
        up = _INF
    else:
        raise QpsParseError(f"line {lineno}: unknown bound type {tokens[0]!r}")
    out.bounds[col] = (lo, up)


def _parse_quad(out: QpsFile, tokens: list[str], lineno: int, section: str, seen_columns: set[str]) -> None:
    if out.quad_kind is None:
        out.quad_kind = section
    elif out.quad_kind != section:
        raise QpsParseError(f"line {lineno}: mixed QUADOBJ and QMATRIX sections")
    if len(tokens) != 3:
        raise QpsParseError(f"line {lineno}: {section} entries need (column, column, value)")
    c1, c2, value = tokens[0], tokens[1], _number(tokens[2], lineno)
    for col in (c1, c2):
        if col not in seen_columns:
            raise QpsParseError(f"line {lineno}: {section} references undeclared column {col!r}")
    key = (c1, c2)
    out.quad[key] = out.quad.get(key, 0.0) + value


def to_qp_problem(qps: QpsFile) -> QpProblem:
    """Convert a parsed QPS file to the canonical QP shape.

    Raises:
        QpsParseError: infeasible bound pair (lower > upper).
    """
    cols = qps.column_order
    n = len(cols)
    col_index = {c: i for i, c in enumerate(cols)}
    sense = -1.0 if qps.sense == "MAX" else 1.0

    q = np.zeros(n)
    for col, entries in qps.columns.items():
        q[col_index[col]] = sense * entries.get(qps.objective_row, 0.0)

    q_rows, q_cols, q_vals = [], [], []
    for (c1, c2), value in qps.quad.items():
        i, j = col_index[c1], col_index[c2]
        q_rows.append(i)
        q_cols.append(j)
        q_vals.append(sense * value)
        if qps.quad_kind == "QUADOBJ" and i != j:
            q_rows.append(j)
            q_cols.append(i)
            q_vals.append(sense * value)
    Q = sp.csc_matrix((q_vals, (q_rows, q_cols)), shape=(n, n))
    if qps.quad_kind == "QMATRIX":
        Q = (Q + Q.T) * 0.5

    a_rows: list[tuple[dict[int, float], float]] = []
    c_rows: list[tuple[dict[int, float], float]] = []

    def row_coefficients(row: str) -> dict[int, float]:
        return {
            col_index[col]: entries[row]
            for col, entries in qps.columns.items()
            if row in entries
        }

    for row in qps.row_order:
        rtype = qps.row_types[row]
        coeffs = row_coefficients(row)
        h = qps.rhs.get(row, 0.0)
        if row in qps.ranges:
            lo, hi = _ranged_interval(rtype, h, qps.ranges[row])
            a_rows.append((coeffs, lo))
            a_rows.append(({i: -c for i, c in coeffs.items()}, -hi))
        elif rtype == "G":
            a_rows.append((coeffs, h))
        elif rtype == "L":
            a_rows.append(({i: -c for i, c in coeffs.items()}, -h))
        else:
            c_rows.append((coeffs, h))

    for col in cols:
        lo, up = qps.bounds.get(col, (0.0, _INF))
        if lo > up:
            raise QpsParseError(f"infeasible bounds on column {col!r}: [{lo}, {up}]")
        i = col_index[col]
        if lo == up:
            c_rows.append(({i: 1.0}, lo))
            continue
        if math.isfinite(lo):
            a_rows.append(({i: 1.0}, lo))
        if math.isfinite(up):
            a_rows.append(({i: -1.0}, -up))

    A, b = _rows_to_matrix(a_rows, n)
    C, d = _rows_to_matrix(c_rows, n)
    return QpProblem.build(
        Q=Q,
        q=q,
        A=A,
        b=b,
        C=C,
        d=d,
        name=qps.name,
        objective_constant=sense * qps.objective_constant,
    )


def _ranged_interval(rtype: str, h: float, r: float) -> tuple[float, float]:
    if rtype == "G":
        return h, h + abs(r)
    if rtype == "L":
        return h - abs(r), h
    return (h, h + r) if r >= 0.0 else (h + r, h)


def _rows_to_matrix(rows: list[tuple[dict[int, float], float]], n: int):
    if not rows:
        return None, None
    data, ridx, cidx = [], [], []
    rhs = np.zeros(len(rows))
    for k, (coeffs, h) in enumerate(rows):
        rhs[k] = h
        for j, value in coeffs.items():
            ridx.append(k)
            cidx.append(j)
            data.append(value)
    return sp.csc_matrix((data, (ridx, cidx)), shape=(len(rows), n)), rhs


BUILTIN_NAMES = ("synthetic2d",)


def builtin_problem(name: str) -> QpProblem:
    """Return a built-in test instance by name.

    "synthetic2d" is the two-variable projection problem with four
    inequality faces of which exactly one is active at the optimum
    x = (0.325, 0.325).

    Raises:
        ValueError: unknown name (the message lists what exists).
    """
    if name == "synthetic2d":
        return QpProblem.build(
            Q=np.eye(2),
            q=np.zeros(2),
            A=np.array([[1.0, 1.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]),
            b=np.array([0.65, -0.1, -0.85, -0.8]),
            name="synthetic2d",
        )
    raise ValueError(f"unknown builtin problem {name!r}; available: {', '.join(BUILTIN_NAMES)}")


def load_problem(source: str) -> QpProblem:
    """Load a problem from "builtin:<name>", a .json file, or a QPS file."""
    if source.startswith("builtin:"):
        return builtin_problem(source.split(":", 1)[1])
    if source.endswith(".json"):
        return read_problem_json(source)
    try:
        with open(source, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise QpsParseError(f"cannot read problem file {source!r}: {exc}") from exc
    return to_qp_problem(parse_qps(text))


def _bundled_root():
    return importlib.resources.files(__package__).joinpath("data", "maros_meszaros")


def bundled_instances() -> tuple[str, ...]:
    """Names of the QPS instances shipped with the package, sorted."""
    return tuple(sorted(entry.name[:-4] for entry in _bundled_root().iterdir() if entry.name.endswith(".qps")))


def load_bundled(name: str) -> QpProblem:
    """Load a bundled benchmark instance by (case-insensitive) name.

    Raises:
        ValueError: unknown name (the message lists what's bundled).
    """
    target = _bundled_root().joinpath(f"{name.lower()}.qps")
    if not target.is_file():
        raise ValueError(f"unknown bundled instance {name!r}; available: {', '.join(bundled_instances())}")
    return to_qp_problem(parse_qps(target.read_text(encoding="utf-8")))


def write_solution(iterate, problem: QpProblem, path: str, status: str) -> None:
    """Write a solution JSON file.

    Residual norms are recomputed on the original (unscaled) problem at
    mu = 0.  Vectors round-trip bit-exactly through the JSON encoding.

    Raises:
        OSError: surfaced with the path on I/O failure.
    """
    view = ExplicitIterate(
        x=np.asarray(iterate.x, dtype=np.float64),
        lam=np.asarray(iterate.lam, dtype=np.float64),
        gamma=np.asarray(iterate.gamma, dtype=np.float64),
        s=np.asarray(iterate.s, dtype=np.float64),
    )
    res = residuals(problem, view, 0.0)
    r_x, r_i, r_e, r_comp = res.block_inf_norms()
    payload = {
        "schema": "solution_v1",
        "problem": problem.name,
        "status": status,
        "x": list(view.x),
        "lam": list(view.lam),
        "gamma": list(view.gamma),
        "s": list(view.s),
        "objective": problem.objective(view.x),
        "gap": float(view.lam @ view.s) if problem.m else 0.0,
        "residuals": {
            "r_x_inf": r_x,
            "r_i_inf": r_i,
            "r_e_inf": r_e,
            "r_comp_inf": r_comp,
            "r_inf": res.inf_norm,
        },
    }
    try:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=1)
            handle.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write solution file {path!r}: {exc}") from exc


def read_solution(path: str) -> dict:
    """Read a solution JSON file back; vector fields become arrays."""
    with open(path, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    if payload.get("schema") != "solution_v1":
        raise ValueError(f"{path}: unknown solution schema {payload.get('schema')!r}")
    for key in ("x", "lam", "gamma", "s"):
        payload[key] = np.asarray(payload[key], dtype=np.float64)
    return payload


def _triplets(mat: sp.csc_matrix) -> dict:
    coo = mat.tocoo()
    return {"rows": coo.row.tolist(), "cols": coo.col.tolist(), "vals": coo.data.tolist()}


def write_problem_json(problem: QpProblem, path: str) -> None:
    """Write a problem in the native JSON format (schema "qp_v1")."""
    payload = {
        "schema": "qp_v1",
        "name": problem.name,
        "n": problem.n,
        "m": problem.m,
        "p": problem.p,
        "Q": _triplets(problem.Q),
        "q": problem.q.tolist(),
        "A": _triplets(problem.A),
        "b": problem.b.tolist(),
        "C": _triplets(problem.C),
        "d": problem.d.tolist(),
        "objective_constant": problem.objective_constant,
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=1)
        handle.write("\n")


def read_problem_json(path: str) -> QpProblem:
    """Read a problem from the native JSON format.

    Raises:
        ValueError: wrong schema tag or inconsistent dimensions.
    """
    with open(path, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    if payload.get("schema") != "qp_v1":
        raise ValueError(f"{path}: unknown problem schema {payload.get('schema')!r}")
    n, m, p = payload["n"], payload["m"], payload["p"]

    def mat(key: str, shape):
        spec = payload[key]
        return sp.csc_matrix((spec["vals"], (spec["rows"], spec["cols"])), shape=shape)

    return QpProblem.build(
        Q=mat("Q", (n, n)),
        q=payload["q"],
        A=mat("A", (m, n)) if m else None,
        b=payload["b"] if m else None,
        C=mat("C", (p, n)) if p else None,
        d=payload["d"] if p else None,
        name=payload.get("name", ""),
        objective_constant=payload.get("objective_constant", 0.0),
    )
