"""Figure rendering for solve traces.

The only module that imports matplotlib.  ``render_report`` reads a
trace JSONL file and writes, next to a flat CSV of the same records:
a residual-history figure, and — when the trace carries the data — a
spectrum figure, a matrix-change figure, and a Krylov-iteration figure.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .diagnostics import SolveTrace, read_trace_jsonl, trace_to_csv

__all__ = ["render_report"]

_DPI = 150


def _positive(values) -> np.ndarray:
    arr = np.array([np.nan if v is None else float(v) for v in values])
    return np.where(arr > 0.0, arr, np.nan)


def _save(fig, path: Path) -> str:
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return str(path)


def _residual_figure(trace: SolveTrace, path: Path) -> str:
    iters = [r.iteration for r in trace.records]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for field, label in (
        ("r_inf", "KKT residual"),
        ("eta", "duality gap"),
        ("mu", "barrier"),
        ("r_comp_inf", "complementarity"),
    ):
        ax.semilogy(iters, _positive(getattr(r, field) for r in trace.records), label=label)
    ax.set_xlabel("iteration")
    ax.set_ylabel("magnitude")
    ax.set_title(f"{trace.header.problem}: {trace.header.method} convergence")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    return _save(fig, path)


def _spectrum_figure(trace: SolveTrace, path: Path) -> str:
    iters = [r.iteration for r in trace.records]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.semilogy(iters, _positive(r.eig_max for r in trace.records), label="max |eigenvalue|")
    ax.semilogy(iters, _positive(r.eig_min for r in trace.records), label="min |eigenvalue|")
    ax.semilogy(iters, _positive(r.cond for r in trace.records), label="condition number", linestyle="--")
    ax.set_xlabel("iteration")
    ax.set_ylabel("magnitude")
    ax.set_title(f"{trace.header.problem}: {trace.header.method} iteration-matrix spectrum")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    return _save(fig, path)


def _delta_figure(trace: SolveTrace, path: Path) -> str:
    iters = [r.iteration for r in trace.records]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.semilogy(iters, _positive(r.matrix_delta for r in trace.records), marker=".")
    ax.set_xlabel("iteration")
    ax.set_ylabel("max diagonal change")
    ax.set_title(f"{trace.header.problem}: {trace.header.method} matrix change per iteration")
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, path)


def _krylov_figure(trace: SolveTrace, path: Path) -> str:
    iters = [r.iteration for r in trace.records]
    counts = [0 if r.krylov_iters is None else r.krylov_iters for r in trace.records]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.bar(iters, counts, width=0.8)
    ax.set_xlabel("iteration")
    ax.set_ylabel("Krylov iterations")
    ax.set_title(f"{trace.header.problem}: {trace.header.method} inner-solve effort")
    ax.grid(True, axis="y", alpha=0.3)
    return _save(fig, path)


def render_report(trace_path: str, out_dir: str | None = None) -> list[str]:
    """Render figures and a CSV table from a trace JSONL file.

    Args:
        trace_path: trace file written by the solve/compare commands.
        out_dir: output directory; defaults to the trace file's own.

    Returns:
        Paths written, CSV first.  Spectrum, matrix-change, and Krylov
        figures appear only when the trace contains that data.

    Raises:
        ValueError: unrecognized trace schema.
        OSError: unreadable trace or unwritable output directory.
    """
    trace = read_trace_jsonl(trace_path)
    source = Path(trace_path)
    base = Path(out_dir) if out_dir is not None else source.parent
    base.mkdir(parents=True, exist_ok=True)
    stem = source.stem

    written = []
    csv_path = base / f"{stem}.csv"
    csv_path.write_text(trace_to_csv(trace), encoding="utf-8")
    written.append(str(csv_path))

    if trace.records:
        written.append(_residual_figure(trace, base / f"{stem}_residuals.png"))
        if any(r.eig_min is not None for r in trace.records):
            written.append(_spectrum_figure(trace, base / f"{stem}_spectrum.png"))
        if any(r.matrix_delta is not None for r in trace.records):
            written.append(_delta_figure(trace, base / f"{stem}_matrix_delta.png"))
        if any(r.krylov_iters for r in trace.records):
            written.append(_krylov_figure(trace, base / f"{stem}_krylov.png"))
    return written
