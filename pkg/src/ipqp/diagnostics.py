"""Per-iteration solve instrumentation and its on-disk formats.

A trace carries one record per outer iteration plus a terminal record
for the final state, and is deterministic given (problem, config,
precision) except for the wall-time field.  Scalar fields (residual
norms, step length, Krylov count, matrix delta) are always recorded;
eigenvalue extrema, condition number, and the retraction-derivative
snapshot appear only at trace level "spectrum", which converts the KKT
matrix to dense and is therefore restricted to small problems.

On disk a trace is either line-delimited JSON (a header object with
schema tag "trace_v1" followed by one object per record) or CSV with a
fixed column order for plotting.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
from typing import NamedTuple

import numpy as np

from .linalg import SparseSymmetric, dense_symmetric_eigenvalues

__all__ = [
    "TraceHeader",
    "IterationRecord",
    "SolveTrace",
    "record_iteration",
    "SpectrumMetrics",
    "spectrum_metrics",
    "trace_to_jsonl",
    "trace_to_csv",
    "write_trace",
    "read_trace_jsonl",
    "CSV_COLUMNS",
]

TRACE_SCHEMA = "trace_v1"

CSV_COLUMNS = (
    "iter",
    "mu",
    "eta",
    "r_x_inf",
    "r_i_inf",
    "r_e_inf",
    "r_comp_inf",
    "r_inf",
    "alpha",
    "factorized",
    "krylov_iters",
    "eig_min",
    "eig_max",
    "cond",
    "matrix_delta",
    "wall_time_ns",
)


@dataclasses.dataclass(frozen=True)
class TraceHeader:
    """Run metadata stamped on every trace."""

    method: str
    linear_strategy: str
    precision: str
    sigma: float
    theta: float | None
    tol: float
    problem: str
    equilibrate: bool
    trace_level: str


@dataclasses.dataclass(frozen=True)
class IterationRecord:
    """One outer iteration (or the terminal state, with alpha = 0).

    Residual norms describe the state at the start of the iteration;
    alpha, factorized, and krylov_iters describe the step taken from it.
    matrix_delta is the infinity norm of the change in the KKT matrix's
    mutable diagonal since the previous assembly (None on the first).
    """

    iteration: int
    mu: float
    eta: float
    r_x_inf: float
    r_i_inf: float
    r_e_inf: float
    r_comp_inf: float
    r_inf: float
    alpha: float
    factorized: bool
    krylov_iters: int
    wall_time_ns: int
    eig_min: float | None = None
    eig_max: float | None = None
    cond: float | None = None
    matrix_delta: float | None = None
    db_minus: tuple[float, ...] | None = None


@dataclasses.dataclass
class SolveTrace:
    """Header, accumulated records, warnings, and outcome for one solve."""

    header: TraceHeader
    records: list[IterationRecord] = dataclasses.field(default_factory=list)
    warnings: list[str] = dataclasses.field(default_factory=list)
    status: str = "unknown"

    def warn(self, message: str) -> None:
        self.warnings.append(message)

    @property
    def iterations(self) -> int:
        """Outer iterations performed (terminal record excluded)."""
        return max(len(self.records) - 1, 0)

    def factorizations(self) -> int:
        return sum(1 for rec in self.records if rec.factorized)

    def total_krylov_iters(self) -> int:
        return sum(rec.krylov_iters for rec in self.records)


def record_iteration(trace: SolveTrace, record: IterationRecord) -> SolveTrace:
    """Append one record; iteration indices must strictly increase.

    Raises:
        ValueError: non-monotone (or duplicate) iteration index.
    """
    if trace.records and record.iteration <= trace.records[-1].iteration:
        raise ValueError(
            f"iteration index {record.iteration} not greater than last recorded {trace.records[-1].iteration}"
        )
    trace.records.append(record)
    return trace


class SpectrumMetrics(NamedTuple):
    """Absolute-eigenvalue extrema and their ratio for a KKT matrix.

    Eigenvalues below 1e-14 of the largest magnitude are treated as
    zero and excluded; ``dropped`` counts them.
    """

    eig_min_abs: float
    eig_max_abs: float
    cond: float
    dropped: int


def spectrum_metrics(M) -> SpectrumMetrics:
    """Compute |eig| extrema and condition ratio of a symmetric matrix.

    Accepts a dense array or a :class:`SparseSymmetric`.  The condition
    number is the ratio of absolute-eigenvalue extrema over the nonzero
    part of the spectrum.

    Raises:
        ValueError: dimension above the eigensolver cap (disable
            spectrum tracing for such problems), or an all-zero matrix.
    """
    dense = M.to_dense() if isinstance(M, SparseSymmetric) else np.asarray(M, dtype=np.float64)
    eigs = dense_symmetric_eigenvalues(dense)
    magnitudes = np.abs(eigs)
    max_abs = float(np.max(magnitudes, initial=0.0))
    if max_abs == 0.0:
        raise ValueError("zero matrix has no nonzero spectrum")
    nonzero = magnitudes[magnitudes >= 1e-14 * max_abs]
    min_abs = float(np.min(nonzero))
    return SpectrumMetrics(
        eig_min_abs=min_abs,
        eig_max_abs=max_abs,
        cond=max_abs / min_abs,
        dropped=int(magnitudes.shape[0] - nonzero.shape[0]),
    )


def _record_to_dict(record: IterationRecord) -> dict:
    out = {
        "iter": record.iteration,
        "mu": record.mu,
        "eta": record.eta,
        "r_x_inf": record.r_x_inf,
        "r_i_inf": record.r_i_inf,
        "r_e_inf": record.r_e_inf,
        "r_comp_inf": record.r_comp_inf,
        "r_inf": record.r_inf,
        "alpha": record.alpha,
        "factorized": record.factorized,
        "krylov_iters": record.krylov_iters,
        "wall_time_ns": record.wall_time_ns,
    }
    for key in ("eig_min", "eig_max", "cond", "matrix_delta"):
        value = getattr(record, key)
        if value is not None:
            out[key] = value
    if record.db_minus is not None:
        out["db_minus"] = list(record.db_minus)
    return out


def trace_to_jsonl(trace: SolveTrace) -> str:
    """Serialize as line-delimited JSON: header line, then one record per line."""
    header = {
        "schema": TRACE_SCHEMA,
        "method": trace.header.method,
        "linear_strategy": trace.header.linear_strategy,
        "precision": trace.header.precision,
        "sigma": trace.header.sigma,
        "theta": trace.header.theta,
        "tol": trace.header.tol,
        "problem": trace.header.problem,
        "equilibrate": trace.header.equilibrate,
        "trace_level": trace.header.trace_level,
        "status": trace.status,
        "warnings": list(trace.warnings),
    }
    lines = [json.dumps(header)]
    lines.extend(json.dumps(_record_to_dict(rec)) for rec in trace.records)
    return "\n".join(lines) + "\n"


def trace_to_csv(trace: SolveTrace) -> str:
    """Serialize records as CSV with the fixed plotting column order."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in trace.records:
        row = _record_to_dict(rec)
        writer.writerow(["" if row.get(col) is None else row.get(col, "") for col in CSV_COLUMNS])
    return buffer.getvalue()


def write_trace(trace: SolveTrace, path: str) -> None:
    """Write a trace file; '.csv' suffix selects CSV, anything else JSONL."""
    text = trace_to_csv(trace) if str(path).endswith(".csv") else trace_to_jsonl(trace)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)


def read_trace_jsonl(path: str) -> SolveTrace:
    """Read a line-delimited trace file back into a SolveTrace.

    Raises:
        ValueError: unknown schema tag or malformed lines.
    """
    with open(path, "r", encoding="utf-8") as handle:
        lines = [line for line in handle.read().splitlines() if line.strip()]
    if not lines:
        raise ValueError(f"{path}: empty trace file")
    head = json.loads(lines[0])
    if head.get("schema") != TRACE_SCHEMA:
        raise ValueError(f"{path}: unknown trace schema {head.get('schema')!r}")
    header = TraceHeader(
        method=head["method"],
        linear_strategy=head["linear_strategy"],
        precision=head["precision"],
        sigma=head["sigma"],
        theta=head.get("theta"),
        tol=head["tol"],
        problem=head["problem"],
        equilibrate=head["equilibrate"],
        trace_level=head.get("trace_level", "basic"),
    )
    trace = SolveTrace(header=header, warnings=list(head.get("warnings", [])), status=head.get("status", "unknown"))
    for line in lines[1:]:
        raw = json.loads(line)
        record = IterationRecord(
            iteration=raw["iter"],
            mu=raw["mu"],
            eta=raw["eta"],
            r_x_inf=raw["r_x_inf"],
            r_i_inf=raw["r_i_inf"],
            r_e_inf=raw["r_e_inf"],
            r_comp_inf=raw["r_comp_inf"],
            r_inf=raw["r_inf"],
            alpha=raw["alpha"],
            factorized=raw["factorized"],
            krylov_iters=raw["krylov_iters"],
            wall_time_ns=raw["wall_time_ns"],
            eig_min=raw.get("eig_min"),
            eig_max=raw.get("eig_max"),
            cond=raw.get("cond"),
            matrix_delta=raw.get("matrix_delta"),
            db_minus=tuple(raw["db_minus"]) if "db_minus" in raw else None,
        )
        record_iteration(trace, record)
    return trace
