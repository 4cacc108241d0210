"""Field output, convergence reports, and the command-line front end."""

import numpy as np
import pytest

from hdgadvect.basis import compute_bases_on_quad
from hdgadvect.cli import main
from hdgadvect.driver import PhaseError, RunConfig, run, run_sweep
from hdgadvect.mesh import generate_structured_mesh, write_mesh_file
from hdgadvect.problems import project_initial
from hdgadvect.report import (
    ConvergenceRow,
    emit_convergence_table,
    read_convergence_csv,
    render_convergence_figure,
    write_convergence_csv,
)
from hdgadvect.vtkout import write_vtk


# --------------------------------------------------------------------------
# VTK field output


def write_linear_field(tmp_path, name="field.vtk"):
    mesh = generate_structured_mesh(1)
    basis = compute_bases_on_quad(1)
    coeffs = project_initial(mesh, basis, lambda x: x[..., 0])
    path = tmp_path / name
    write_vtk(mesh, basis, coeffs, path)
    return mesh, path


def parse_vtk(path):
    lines = path.read_text(encoding="ascii").splitlines()
    sections = {}
    i = 0
    while i < len(lines):
        token = lines[i].split()[0] if lines[i] else ""
        if token in ("POINTS", "CELLS", "CELL_TYPES", "POINT_DATA", "CELL_DATA"):
            sections[token] = i
        i += 1
    return lines, sections


def test_vtk_layout_and_values(tmp_path):
    mesh, path = write_linear_field(tmp_path)
    lines, sec = parse_vtk(path)
    k = mesh.num_elements

    assert lines[0] == "# vtk DataFile Version 3.0"
    assert lines[2] == "ASCII"
    assert lines[3] == "DATASET UNSTRUCTURED_GRID"
    assert lines[sec["POINTS"]] == f"POINTS {3 * k} double"
    assert lines[sec["CELLS"]] == f"CELLS {k} {4 * k}"
    assert lines[sec["CELL_TYPES"]] == f"CELL_TYPES {k}"
    assert lines[sec["CELL_TYPES"] + 1 : sec["CELL_TYPES"] + 1 + k] == ["5"] * k

    points = np.array(
        [list(map(float, lines[sec["POINTS"] + 1 + i].split())) for i in range(3 * k)]
    )
    assert np.allclose(points[:, 2], 0.0)
    # every element contributes its own three corners
    assert np.allclose(
        points[:, :2].reshape(k, 3, 2), mesh.vertices[mesh.triangles]
    )
    cells = [lines[sec["CELLS"] + 1 + c].split() for c in range(k)]
    assert cells == [["3", str(3 * c), str(3 * c + 1), str(3 * c + 2)] for c in range(k)]

    assert lines[sec["POINT_DATA"]] == f"POINT_DATA {3 * k}"
    assert lines[sec["POINT_DATA"] + 1] == "SCALARS c double 1"
    values = np.array(
        [float(lines[sec["POINT_DATA"] + 3 + i]) for i in range(3 * k)]
    )
    # the projected field is c = x1, so corner values equal the x coordinate
    assert np.max(np.abs(values - points[:, 0])) < 1e-12

    assert lines[sec["CELL_DATA"]] == f"CELL_DATA {k}"
    assert lines[sec["CELL_DATA"] + 1] == "SCALARS c_mean double 1"
    means = np.array([float(lines[sec["CELL_DATA"] + 3 + c]) for c in range(k)])
    centroids = points[:, 0].reshape(k, 3).mean(axis=1)
    assert np.max(np.abs(means - centroids)) < 1e-12


def test_vtk_constant_field_is_written_exactly(tmp_path):
    mesh = generate_structured_mesh(2)
    basis = compute_bases_on_quad(2)
    coeffs = project_initial(mesh, basis, lambda x: np.ones(x.shape[:-1]))
    path = tmp_path / "const.vtk"
    write_vtk(mesh, basis, coeffs, path, field_name="density")
    lines, sec = parse_vtk(path)
    k = mesh.num_elements
    assert lines[sec["POINT_DATA"] + 1] == "SCALARS density double 1"
    values = [float(lines[sec["POINT_DATA"] + 3 + i]) for i in range(3 * k)]
    means = [float(lines[sec["CELL_DATA"] + 3 + c]) for c in range(k)]
    assert np.allclose(values, 1.0, atol=1e-14)
    assert np.allclose(means, 1.0, atol=1e-14)


def test_vtk_output_is_deterministic(tmp_path):
    _, first = write_linear_field(tmp_path, "a.vtk")
    _, second = write_linear_field(tmp_path, "b.vtk")
    assert first.read_bytes() == second.read_bytes()


def test_vtk_write_failure_leaves_no_partial_file(tmp_path):
    mesh = generate_structured_mesh(1)
    basis = compute_bases_on_quad(1)
    coeffs = project_initial(mesh, basis, lambda x: x[..., 0])
    target = tmp_path / "missing_dir" / "field.vtk"
    with pytest.raises(OSError):
        write_vtk(mesh, basis, coeffs, target)
    assert not target.exists()
    assert list(tmp_path.iterdir()) == []


# --------------------------------------------------------------------------
# Convergence report


def sample_rows():
    return [
        ConvergenceRow(level=1, h=1.0 / 6, num_elements=72, p=1,
                       error=1.7512e-2, eoc=None),
        ConvergenceRow(level=2, h=1.0 / 12, num_elements=288, p=1,
                       error=4.3729e-3, eoc=2.0018),
        ConvergenceRow(level=1, h=1.0 / 6, num_elements=72, p=2,
                       error=9.1403e-4, eoc=None),
        ConvergenceRow(level=2, h=1.0 / 12, num_elements=288, p=2,
                       error=1.1747e-4, eoc=2.9601),
    ]


def test_csv_round_trip(tmp_path):
    rows = sample_rows()
    path = tmp_path / "table.csv"
    write_convergence_csv(rows, path)
    back = read_convergence_csv(path)
    assert len(back) == len(rows)
    for got, want in zip(back, rows):
        assert got.level == want.level
        assert got.num_elements == want.num_elements
        assert got.p == want.p
        assert got.h == pytest.approx(want.h, rel=5e-3)
        assert got.error == pytest.approx(want.error, rel=5e-3)
        if want.eoc is None:
            assert got.eoc is None
        else:
            assert got.eoc == pytest.approx(want.eoc, abs=5e-3)


def test_csv_header_is_validated(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n", encoding="ascii")
    with pytest.raises(ValueError, match="unexpected CSV header"):
        read_convergence_csv(path)


def test_text_table_alignment_and_blanks():
    table = emit_convergence_table(sample_rows())
    lines = table.splitlines()
    assert len(lines) == 5
    assert len({len(line) for line in lines}) == 1  # fully aligned block
    head = lines[0].split()
    assert head == ["j", "h", "K", "p", "error", "eoc"]
    assert lines[1].split()[-1] == "---"
    assert lines[2].split()[-1] == "2.00"
    assert "1.75e-02" in lines[1]


def test_figure_is_rendered_to_file(tmp_path):
    path = tmp_path / "convergence.png"
    render_convergence_figure(sample_rows(), path, title="study")
    data = path.read_bytes()
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    assert len(data) > 1000


# --------------------------------------------------------------------------
# Run pipeline


def test_run_report_contents(tmp_path):
    report = run(RunConfig(testcase="steady", p=1, cells=3,
                           out_dir=str(tmp_path)))
    assert report.num_elements == 18
    assert report.elem_dofs == 18 * 3
    assert report.skeleton_dofs == report.num_edges * 2
    assert report.h == pytest.approx(np.sqrt(2.0) / 3.0)
    assert report.num_steps == 0 and report.dt is None
    assert report.error is not None and report.error > 0.0
    assert report.solution_min < report.solution_max
    assert report.output_files == []
    text = report.summary()
    assert "L2 error" in text and "steady" in text


def test_vtk_cadence_writes_initial_and_every_nth_step(tmp_path):
    report = run(RunConfig(testcase="unsteady_ode", p=0, level=0, steps=10,
                           write_every=4, out_dir=str(tmp_path)))
    assert report.output_files == [
        "unsteady_ode_p0_000000.vtk",
        "unsteady_ode_p0_000004.vtk",
        "unsteady_ode_p0_000008.vtk",
    ]
    for name in report.output_files:
        assert (tmp_path / name).exists()


def test_invalid_configurations_fail_in_the_configure_phase():
    bad = [
        RunConfig(p=9),
        RunConfig(level=1, cells=4),
        RunConfig(testcase="unsteady_ode", level=0, dt=0.1, steps=5),
        RunConfig(testcase="unsteady_ode", level=0, dt=0.3),  # no whole steps
        RunConfig(testcase="unsteady_ode", level=0, dirk_order=7),
        RunConfig(write_every=-1),
    ]
    for config in bad:
        with pytest.raises(PhaseError) as info:
            run(config)
        assert info.value.phase == "configure"


def test_sweep_requires_two_levels(tmp_path):
    with pytest.raises(PhaseError, match="two levels"):
        run_sweep("steady", [1], [2], out_dir=str(tmp_path))


def test_sweep_emits_csv_table_and_figure(tmp_path):
    result = run_sweep("steady", [1], [1, 2], out_dir=str(tmp_path))
    assert [row.level for row in result.rows] == [1, 2]
    assert result.rows[0].eoc is None
    assert result.rows[1].eoc == pytest.approx(2.0, abs=0.25)
    back = read_convergence_csv(result.csv_path)
    assert len(back) == 2
    table_text = (tmp_path / "steady_convergence.txt").read_text("ascii")
    assert table_text == result.table
    assert (tmp_path / "steady_convergence.png").read_bytes()[:4] == b"\x89PNG"


# --------------------------------------------------------------------------
# Command line


def test_cli_single_run(tmp_path, capsys):
    code = main(["--testcase", "steady", "--p", "1", "--cells", "3",
                 "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "L2 error" in out
    assert "elements      18" in out


def test_cli_usage_errors_exit_1(capsys):
    assert main(["--no-such-flag"]) == 1
    assert main(["--testcase", "vortex"]) == 1
    assert main(["--p", "9"]) == 1  # rejected while configuring
    err = capsys.readouterr().err
    assert "error" in err


def test_cli_numerical_input_errors_exit_2(tmp_path, capsys):
    code = main(["--testcase", "steady", "--p", "1", "--cells", "3",
                 "--alpha", "-1.0", "--out", str(tmp_path)])
    assert code == 2
    assert "preprocess" in capsys.readouterr().err


def test_cli_missing_config_exits_3(tmp_path, capsys):
    code = main(["--config", str(tmp_path / "nope.cfg")])
    assert code == 3
    assert "I/O" in capsys.readouterr().err


def test_cli_missing_mesh_file_exits_3(tmp_path, capsys):
    code = main(["--testcase", "steady", "--mesh", str(tmp_path / "no.mesh")])
    assert code == 3


def test_cli_config_file_with_overrides(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# study configuration\n"
        "testcase = steady\n"
        "p = 2\n"
        "cells = 3\n",
        encoding="ascii",
    )
    assert main(["--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert "p / DIRK      2" in capsys.readouterr().out
    # explicit flags win over the file
    assert main(["--config", str(cfg), "--p", "1", "--out", str(tmp_path)]) == 0
    assert "p / DIRK      1" in capsys.readouterr().out


@pytest.mark.parametrize(
    "content, message",
    [
        ("p banana\n", "expected 'key = value'"),
        ("colour = red\n", "unknown option"),
        ("p = banana\n", "bad value"),
    ],
)
def test_cli_config_file_errors_exit_1(tmp_path, capsys, content, message):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(content, encoding="ascii")
    assert main(["--config", str(cfg)]) == 1
    assert message in capsys.readouterr().err


def test_cli_sweep_writes_the_study_files(tmp_path, capsys):
    code = main(["--testcase", "steady", "--sweep", "p=1", "levels=0-1",
                 "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0
    for suffix in (".csv", ".txt", ".png"):
        assert (tmp_path / f"steady_convergence{suffix}").exists()
        assert f"steady_convergence{suffix}" in out
    assert "---" in out  # coarsest level has no order yet


@pytest.mark.parametrize(
    "tokens",
    [["p=1"], ["levels=1-2"], ["p=1", "levels=x"], ["nonsense"],
     ["p=1", "levels=1-2", "q=3"]],
)
def test_cli_sweep_spec_errors_exit_1(tmp_path, capsys, tokens):
    assert main(["--sweep", *tokens, "--out", str(tmp_path)]) == 1
    assert "error" in capsys.readouterr().err


def test_cli_mesh_import(tmp_path, capsys):
    mesh = generate_structured_mesh(3)
    path = tmp_path / "grid.mesh"
    write_mesh_file(mesh, path)
    code = main(["--testcase", "steady", "--p", "1", "--mesh", str(path),
                 "--out", str(tmp_path)])
    assert code == 0
    assert "elements      18" in capsys.readouterr().out


def test_cli_config_file_can_request_a_sweep(tmp_path, capsys):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text(
        "testcase = steady\nsweep = p=1 levels=0-1\n"
        f"out = {tmp_path}\n",
        encoding="ascii",
    )
    assert main(["--config", str(cfg)]) == 0
    assert (tmp_path / "steady_convergence.csv").exists()
    capsys.readouterr()
