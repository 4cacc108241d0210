"""Convergence tables: delimited output, aligned text, and a figure.

Errors are printed in scientific notation with three significant digits
and orders of convergence with two decimals, matching the usual table
style of convergence studies; the CSV holds the same formatted values so
it round-trips through parsing within formatting precision.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (needs the backend set first)

__all__ = [
    "ConvergenceRow",
    "emit_convergence_table",
    "write_convergence_csv",
    "read_convergence_csv",
    "render_convergence_figure",
]


@dataclass(frozen=True)
class ConvergenceRow:
    """One (refinement level, degree) entry of a convergence study."""

    level: int
    h: float
    num_elements: int
    p: int
    error: float
    eoc: Optional[float]      # None on the coarsest level of a degree


def _error_str(value: float) -> str:
    return f"{value:.2e}"


def _eoc_str(value: Optional[float], blank: str) -> str:
    return blank if value is None else f"{value:.2f}"


def emit_convergence_table(rows: Sequence[ConvergenceRow]) -> str:
    """Aligned text table over all rows (columns j, h, K, p, error, eoc)."""
    header = ("j", "h", "K", "p", "error", "eoc")
    cells = [header]
    for row in rows:
        cells.append((
            str(row.level),
            _error_str(row.h),
            str(row.num_elements),
            str(row.p),
            _error_str(row.error),
            _eoc_str(row.eoc, "---"),
        ))
    widths = [max(len(line[col]) for line in cells) for col in range(len(header))]
    out = io.StringIO()
    for line in cells:
        out.write("  ".join(text.rjust(w) for text, w in zip(line, widths)))
        out.write("\n")
    return out.getvalue()


def write_convergence_csv(rows: Sequence[ConvergenceRow], path) -> None:
    """CSV with header j,h,K,p,error,eoc; empty eoc on coarsest levels."""
    path = os.fspath(path)
    tmp = path + ".tmp"
    try:
        with open(tmp, "w", encoding="ascii", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["j", "h", "K", "p", "error", "eoc"])
            for row in rows:
                writer.writerow([
                    row.level,
                    _error_str(row.h),
                    row.num_elements,
                    row.p,
                    _error_str(row.error),
                    _eoc_str(row.eoc, ""),
                ])
        os.replace(tmp, path)
    except OSError:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def read_convergence_csv(path) -> list[ConvergenceRow]:
    with open(path, "r", encoding="ascii", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header != ["j", "h", "K", "p", "error", "eoc"]:
            raise ValueError(f"unexpected CSV header {header!r} in {path}")
        rows = []
        for record in reader:
            level, h, num_elements, p, error, eoc = record
            rows.append(ConvergenceRow(
                level=int(level),
                h=float(h),
                num_elements=int(num_elements),
                p=int(p),
                error=float(error),
                eoc=float(eoc) if eoc else None,
            ))
    return rows


def render_convergence_figure(rows: Sequence[ConvergenceRow], path,
                              title: str = "") -> None:
    """Log-log error-versus-h plot, one line per polynomial degree, with
    dashed reference slopes of order p + 1."""
    degrees = sorted({row.p for row in rows})
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for p in degrees:
        series = sorted(
            (r for r in rows if r.p == p), key=lambda r: r.h, reverse=True
        )
        hs = [r.h for r in series]
        errs = [r.error for r in series]
        (line,) = ax.loglog(hs, errs, "o-", label=f"p = {p}")
        if len(hs) >= 2:
            slope = p + 1
            ref = [errs[-1] * (h / hs[-1]) ** slope for h in hs]
            ax.loglog(hs, ref, "--", color=line.get_color(), alpha=0.4,
                      linewidth=1.0)
    ax.set_xlabel("mesh size h")
    ax.set_ylabel(r"$L^2$ error")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    path = os.fspath(path)
    tmp = path + ".tmp"
    try:
        fig.savefig(tmp, format=os.path.splitext(path)[1].lstrip(".") or "png",
                    dpi=150)
        os.replace(tmp, path)
    except OSError:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    finally:
        plt.close(fig)
