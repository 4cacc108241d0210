"""Run pipeline: configure, preprocess, initialize, time loop, postprocess.

`run` executes a single configuration and returns a report; `run_sweep`
repeats it over refinement levels and degrees and emits the convergence
table (CSV, aligned text, and a figure) into the output directory.
Identical configurations produce byte-identical outputs.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .assembly import SystemBlocks
from .basis import compute_bases_on_quad, integrate_reference_blocks
from .condensation import default_block_size
from .mesh import Mesh, generate_structured_mesh, read_mesh_file
from .problems import (
    ProblemDefinition,
    builtin_testcase,
    cells_for_level,
    compute_eoc,
    compute_l2_error,
    eval_solution,
    project_initial,
)
from .report import (
    ConvergenceRow,
    emit_convergence_table,
    render_convergence_figure,
    write_convergence_csv,
)
from .timestepping import dirk_step, dirk_tableau, solve_steady
from .vtkout import write_vtk

__all__ = ["RunConfig", "RunReport", "SweepResult", "PhaseError", "run",
           "run_sweep"]


class PhaseError(RuntimeError):
    """An error wrapped with the pipeline phase it occurred in."""

    def __init__(self, phase: str, cause: BaseException):
        super().__init__(f"{phase}: {cause}")
        self.phase = phase
        self.cause = cause


@dataclass
class RunConfig:
    """Everything one solver run needs; unset fields fall back to the
    test case's own defaults."""

    testcase: str = "steady"
    p: int = 1
    level: Optional[int] = None
    cells: Optional[int] = None
    dirk_order: Optional[int] = None
    dt: Optional[float] = None
    steps: Optional[int] = None
    t_end: Optional[float] = None
    alpha: Optional[float] = None
    block_size: Optional[int] = None
    out_dir: str = "."
    write_every: int = 0
    mesh_path: Optional[str] = None


@dataclass
class RunReport:
    """Outcome of one run: sizes, error (when an exact solution exists),
    solution range, timing, and the files written."""

    testcase: str
    p: int
    dirk_order: Optional[int]
    num_elements: int
    num_edges: int
    elem_dofs: int
    skeleton_dofs: int
    h: float
    dt: Optional[float]
    num_steps: int
    t_end: float
    error: Optional[float]
    solution_min: float
    solution_max: float
    wall_time: float
    output_files: list[str]
    coeffs: np.ndarray = field(repr=False, default=None)

    def summary(self) -> str:
        lines = [
            f"testcase      {self.testcase}",
            f"p / DIRK      {self.p} / {self.dirk_order if self.dirk_order else '-'}",
            f"elements      {self.num_elements} (h = {self.h:.4e})",
            f"dofs          {self.elem_dofs} element + {self.skeleton_dofs} skeleton",
            f"steps         {self.num_steps}"
            + (f" (dt = {self.dt:.4e})" if self.dt else ""),
            f"t_end         {self.t_end:.4e}",
            f"solution      [{self.solution_min:.4e}, {self.solution_max:.4e}]",
            f"wall time     {self.wall_time:.2f} s",
        ]
        if self.error is not None:
            lines.insert(6, f"L2 error      {self.error:.6e}")
        if self.output_files:
            lines.append("files         " + ", ".join(self.output_files))
        return "\n".join(lines)


def _configure(config: RunConfig):
    """Validate the configuration and resolve every open default."""
    problem = builtin_testcase(config.testcase)
    if not 0 <= config.p <= 4:
        raise ValueError(f"polynomial degree must be 0..4, got {config.p}")
    if config.write_every < 0:
        raise ValueError("output cadence (write_every) must be >= 0")
    if config.level is not None and config.cells is not None:
        raise ValueError("give either a refinement level or a cell count")
    if config.dt is not None and config.steps is not None:
        raise ValueError("give either a time step or a step count")
    if config.dt is not None and config.dt <= 0:
        raise ValueError("time step must be positive")
    if config.steps is not None and config.steps <= 0:
        raise ValueError("step count must be positive")

    cells = config.cells
    if cells is None:
        if config.level is not None:
            cells = cells_for_level(config.level)
        elif config.mesh_path is None:
            cells = (
                problem.default_cells
                if problem.default_cells is not None
                else cells_for_level(1)
            )
    if cells is not None and cells <= 0:
        raise ValueError(f"cells per side must be positive, got {cells}")

    dirk_order = config.dirk_order
    if dirk_order is None and not problem.steady:
        dirk_order = min(config.p + 1, 4)
    if dirk_order is not None and not 1 <= dirk_order <= 4:
        raise ValueError(f"DIRK order must be 1..4, got {dirk_order}")

    t_end = config.t_end if config.t_end is not None else problem.t_end
    dt, steps = config.dt, config.steps
    if not problem.steady:
        if t_end <= 0:
            raise ValueError(f"end time must be positive, got {t_end}")
        if dt is None and steps is None:
            dt = problem.default_dt(config.level, config.p)
            if dt is None:
                raise ValueError(
                    "no default time step for this configuration; give a "
                    "time step or a step count"
                )
        if steps is None:
            steps = int(round(t_end / dt))
            if steps < 1 or abs(steps * dt - t_end) > 1e-8 * t_end:
                raise ValueError(
                    f"time step {dt} does not divide the interval "
                    f"[0, {t_end}] into whole steps"
                )
        else:
            dt = t_end / steps
    else:
        dt, steps = None, 0
        dirk_order = None

    return problem, cells, dirk_order, dt, steps, t_end


def _load_mesh(config: RunConfig, cells: Optional[int]) -> Mesh:
    if config.mesh_path is not None:
        return read_mesh_file(config.mesh_path)
    return generate_structured_mesh(cells)


def run(config: RunConfig) -> RunReport:
    """Execute one configuration; every failure is reported with the
    pipeline phase it occurred in."""
    t_start = time.perf_counter()
    try:
        problem, cells, dirk_order, dt, steps, t_end = _configure(config)
    except (ValueError, TypeError) as exc:
        raise PhaseError("configure", exc) from exc

    try:
        mesh = _load_mesh(config, cells)
        basis = compute_bases_on_quad(config.p)
        ref = integrate_reference_blocks(basis)
        system = SystemBlocks(mesh, basis, ref, problem, alpha=config.alpha)
        block_size = (
            config.block_size
            if config.block_size is not None
            else default_block_size(config.p, basis.num_elem_dofs)
        )
    except OSError:
        raise
    except (ValueError, TypeError) as exc:
        raise PhaseError("preprocess", exc) from exc

    out_dir = Path(config.out_dir)
    output_files: list[str] = []

    def write_field(coeffs, step):
        name = f"{config.testcase}_p{config.p}_{step:06d}.vtk"
        out_dir.mkdir(parents=True, exist_ok=True)
        write_vtk(mesh, basis, coeffs, out_dir / name)
        output_files.append(name)

    try:
        if problem.steady:
            coeffs, _ = solve_steady(system, t=0.0, block_size=block_size)
            if config.write_every > 0:
                write_field(coeffs, 0)
            t_report = 0.0
        else:
            coeffs = project_initial(mesh, basis, problem.c0)
            if config.write_every > 0:
                write_field(coeffs, 0)
            tableau = dirk_tableau(dirk_order)
            solver_cache: dict = {}
            for n in range(steps):
                coeffs = dirk_step(
                    system, tableau, n * dt, dt, coeffs,
                    block_size=block_size, solver_cache=solver_cache,
                )
                if config.write_every > 0 and (n + 1) % config.write_every == 0:
                    write_field(coeffs, n + 1)
            t_report = steps * dt
        if not np.isfinite(coeffs).all():
            raise FloatingPointError("solution contains non-finite values")
    except OSError:
        raise
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        raise PhaseError("solve", exc) from exc

    try:
        error = None
        if problem.exact is not None:
            error = compute_l2_error(
                mesh, basis, coeffs, problem.exact, t_report
            )
        sample = np.concatenate([
            eval_solution(mesh, config.p, coeffs,
                          np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])).ravel(),
            eval_solution(mesh, config.p, coeffs, basis.quad2d.points).ravel(),
        ])
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        raise PhaseError("postprocess", exc) from exc

    return RunReport(
        testcase=config.testcase,
        p=config.p,
        dirk_order=dirk_order,
        num_elements=mesh.num_elements,
        num_edges=mesh.num_edges,
        elem_dofs=mesh.num_elements * basis.num_elem_dofs,
        skeleton_dofs=mesh.num_edges * basis.num_edge_dofs,
        h=float(mesh.edge_length.max()),
        dt=dt,
        num_steps=steps,
        t_end=t_report if not problem.steady else 0.0,
        error=error,
        solution_min=float(sample.min()),
        solution_max=float(sample.max()),
        wall_time=time.perf_counter() - t_start,
        output_files=output_files,
        coeffs=coeffs,
    )


@dataclass
class SweepResult:
    """Convergence study over levels and degrees plus the emitted files."""

    rows: list[ConvergenceRow]
    table: str
    csv_path: str
    table_path: str
    figure_path: str


def run_sweep(testcase: str, degrees: Sequence[int], levels: Sequence[int],
              out_dir=".", dirk_order: Optional[int] = None,
              alpha: Optional[float] = None,
              block_size: Optional[int] = None) -> SweepResult:
    """Run `testcase` over all (p, level) pairs, derive orders of
    convergence per degree, and write table, CSV, and figure."""
    degrees = sorted(set(int(p) for p in degrees))
    levels = sorted(set(int(j) for j in levels))
    if len(levels) < 2:
        raise PhaseError(
            "configure", ValueError("a sweep needs at least two levels")
        )

    rows: list[ConvergenceRow] = []
    for p in degrees:
        errors = []
        sizes = []
        reports = []
        for level in levels:
            report = run(RunConfig(
                testcase=testcase, p=p, level=level, dirk_order=dirk_order,
                alpha=alpha, block_size=block_size, out_dir=os.fspath(out_dir),
                write_every=0,
            ))
            if report.error is None:
                raise PhaseError(
                    "postprocess",
                    ValueError(f"testcase {testcase!r} has no exact solution "
                               "to sweep against"),
                )
            errors.append(report.error)
            sizes.append(1.0 / (3 * 2**level))
            reports.append(report)
        eocs = compute_eoc(errors, sizes)
        for idx, (level, report) in enumerate(zip(levels, reports)):
            rows.append(ConvergenceRow(
                level=level,
                h=sizes[idx],
                num_elements=report.num_elements,
                p=p,
                error=errors[idx],
                eoc=None if idx == 0 else float(eocs[idx - 1]),
            ))

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = emit_convergence_table(rows)
    csv_path = out / f"{testcase}_convergence.csv"
    table_path = out / f"{testcase}_convergence.txt"
    figure_path = out / f"{testcase}_convergence.png"
    write_convergence_csv(rows, csv_path)
    tmp = str(table_path) + ".tmp"
    with open(tmp, "w", encoding="ascii") as handle:
        handle.write(table)
    os.replace(tmp, table_path)
    render_convergence_figure(rows, figure_path, title=testcase)
    return SweepResult(
        rows=rows,
        table=table,
        csv_path=str(csv_path),
        table_path=str(table_path),
        figure_path=str(figure_path),
    )
