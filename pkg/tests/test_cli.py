import math

import numpy as np
import pytest

from cutadvect import cli, scheme
from cutadvect.cli import (ConvergenceRecord, RunConfig, format_csv_row, main,
                           parse_config, parse_u_old, read_convergence_csv,
                           run_convergence, run_single)
from cutadvect.cutgeom import DomainReconstruction, build_domain
from cutadvect.grid import CartesianGrid
from cutadvect.levelset import Affine1D, VelocityMode, interpolate
from cutadvect.scheme import DGSpace, SchemeParams, solve_step


class TestParseConfig:
    def test_flag_overrides_file(self, tmp_path):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text("tau = 0.5\nncells = 20\n")
        config = parse_config({"tau": 0.25}, str(cfg_file))
        assert config.tau == 0.25
        assert config.ncells == 20

    def test_unknown_key_rejected(self, tmp_path):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text("velocty = analytic\n")
        with pytest.raises(ValueError, match="unknown key"):
            parse_config({}, str(cfg_file))

    def test_step_past_time_zero_rejected(self):
        with pytest.raises(ValueError, match="t_star"):
            parse_config({"t_star": 0.5, "tau": 0.6})

    def test_defaults_match_reference_setup(self):
        config = parse_config({})
        assert config.case == "shrinking_circle"
        assert config.t_star == 0.5 and config.tau == 0.5
        assert config.k == 0
        grid = cli.make_grid(config)
        assert grid.origin == (-1.5, -1.5)
        assert (grid.origin[0] + grid.extent[0],
                grid.origin[1] + grid.extent[1]) == (2.0, 1.5)

    def test_comments_and_blank_lines(self, tmp_path):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text("# reference case\n\nncells = 10  # coarse\n")
        assert parse_config({}, str(cfg_file)).ncells == 10

    def test_velocity_mode_parsing(self):
        assert parse_config({"velocity": VelocityMode("lsdiff")}).velocity \
            is VelocityMode.LEVELSET_BACKWARD_DIFFERENCE

    def test_u_old_value_parsing(self):
        assert parse_u_old("const:2.5") == ("const", 2.5)
        assert parse_u_old("binary:0.6283:1.2566:1.0") == \
            ("binary", 0.6283, 1.2566, 1.0)
        with pytest.raises(ValueError):
            parse_u_old("step:1")
        with pytest.raises(ValueError):
            parse_u_old("binary:2:1:1")

    def test_shrinking_circle_time_bound(self):
        with pytest.raises(ValueError, match="t_star < 1"):
            parse_config({"t_star": 1.0, "tau": 0.5})


@pytest.fixture(scope="module")
def records(tmp_path_factory):
    path = tmp_path_factory.mktemp("conv") / "conv.csv"
    recs = run_convergence(RunConfig(), resolutions=[10, 20, 40],
                           out=str(path))
    return recs, path


class TestConvergence:
    def test_csv_columns_and_roundtrip(self, records):
        recs, path = records
        header = path.read_text().splitlines()[0]
        assert header == "ncells,h,dofs,mass,l1,eoc1,l2,eoc2,linf,eocinf"
        back = read_convergence_csv(str(path))
        assert back == recs

    def test_eoc_definition(self, records):
        recs, _ = records
        assert recs[0].eoc1 is None and recs[0].eoc2 is None
        for prev, cur in zip(recs, recs[1:]):
            expected = math.log(prev.l1 / cur.l1) / math.log(prev.h / cur.h)
            assert cur.eoc1 == pytest.approx(expected, rel=1e-13)

    def test_mass_matches_old_interface_mass(self, records):
        recs, _ = records
        for rec in recs:
            summary = run_single(RunConfig(ncells=rec.ncells))
            assert rec.mass == pytest.approx(summary.mass_old, rel=1e-10)

    def test_determinism(self, tmp_path):
        p1 = tmp_path / "a.csv"
        p2 = tmp_path / "b.csv"
        run_convergence(RunConfig(), resolutions=[10, 20], out=str(p1))
        run_convergence(RunConfig(), resolutions=[10, 20], out=str(p2))
        assert p1.read_bytes() == p2.read_bytes()

    def test_needs_increasing_resolutions(self):
        with pytest.raises(ValueError):
            run_convergence(RunConfig(), resolutions=[20, 20])
        with pytest.raises(ValueError):
            run_convergence(RunConfig(), resolutions=[40])

    def test_rejects_case_without_exact_solution(self):
        with pytest.raises(ValueError, match="exact"):
            run_convergence(RunConfig(case="translating_circle"),
                            resolutions=[10, 20])

    def test_deep_flag_extends_resolutions(self):
        assert cli.default_resolutions(False) == [10, 20, 40, 80, 160, 320]
        assert cli.default_resolutions(True)[-1] == 640


class TestExportFields:
    def test_empty_domain_writes_header_only(self, tmp_path):
        grid = CartesianGrid((0.0, 0.0), (1.0, 1.0), 2, 2)
        field = Affine1D()
        dls = interpolate(field, grid, 0.3, 0.1)
        empty = DomainReconstruction(
            grid=grid, dls=dls, field=field, cut_cells={}, skeleton=[],
            gamma_new=[], gamma_old=[], gamma_minus=0.0, gamma_plus=0.0,
            diagnostics={})
        space = DGSpace(empty, 0)
        path = tmp_path / "fields.txt"
        cli.export_fields(empty, space, np.zeros(0), str(path))
        assert path.read_text() == "# udg-field v1\n"

    def test_single_cell_constant(self, tmp_path):
        grid = CartesianGrid((0.0, 0.0), (1.0, 0.5), 1, 1)
        field = Affine1D(speed=1.0)
        dls = interpolate(field, grid, 1.0, 0.0)
        domain = build_domain(dls, grid, field)
        space = DGSpace(domain, 0)
        params = SchemeParams(tau=1.0, gamma=domain.gamma)
        u, _ = solve_step(domain, space, params, lambda x: 4.5)
        path = tmp_path / "fields.txt"
        cli.export_fields(domain, space, u, str(path))
        lines = path.read_text().splitlines()
        cells = [l for l in lines if l.startswith("cell ")]
        assert len(cells) == 1
        assert float(cells[0].split()[-1]) == pytest.approx(4.5, rel=1e-12)

    def test_interface_record_count_matches_geometry(self, tmp_path, circle_runs):
        summary = circle_runs(40)
        path = tmp_path / "fields.txt"
        cli.export_fields(summary.domain, summary.space, summary.solution,
                          str(path))
        lines = path.read_text().splitlines()
        new_records = [l for l in lines if l.startswith("iface new ")]
        old_records = [l for l in lines if l.startswith("iface old ")]
        assert len(new_records) == len(summary.domain.gamma_new)
        assert len(old_records) == len(summary.domain.gamma_old)


class TestMainEntry:
    def test_solve_subcommand(self, capsys, tmp_path):
        rc = main(["solve", "--ncells", "10",
                   "--dump-geometry", str(tmp_path / "g.txt"),
                   "--dump-fields", str(tmp_path / "f.txt"),
                   "--dump-matrix", str(tmp_path / "m.txt")])
        out = capsys.readouterr().out
        assert rc == 0
        assert "mass_old = " in out and "mass_new = " in out
        assert (tmp_path / "g.txt").exists()
        assert (tmp_path / "f.txt").exists()
        matrix_lines = (tmp_path / "m.txt").read_text().splitlines()
        assert all(len(l.split()) == 3 for l in matrix_lines)
        assert len(matrix_lines) > 42  # mass diagonal plus flux couplings

    def test_solve_with_config_file(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("ncells = 10\nu_old = const:2.0\n")
        rc = main(["solve", "--config", str(cfg)])
        assert rc == 0
        assert "solver = direct" in capsys.readouterr().out

    def test_invalid_config_exits_nonzero(self, capsys):
        rc = main(["solve", "--t-star", "0.5", "--tau", "0.6"])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_converge_subcommand_prints_csv(self, capsys, monkeypatch):
        monkeypatch.setattr(cli, "DEFAULT_RESOLUTIONS", [10, 20])
        rc = main(["converge"])
        out = capsys.readouterr().out
        assert rc == 0
        assert out.startswith("ncells,h,dofs,mass")
        assert len(out.strip().splitlines()) == 3

    def test_solve_renders_figure_when_requested(self, capsys, tmp_path):
        rc = main(["solve", "--ncells", "10", "--plot-dir", str(tmp_path)])
        out = capsys.readouterr().out
        assert rc == 0
        assert "figure = " in out
        pngs = list(tmp_path.glob("*.png"))
        assert len(pngs) == 1 and pngs[0].stat().st_size > 1000

    def test_oned_aligned_subcommand(self, capsys):
        rc = main(["oned-aligned", "--n", "5", "--w", "2.0", "--tau", "0.25",
                   "--gamma", "0.5", "--u-old-value", "1.0"])
        out = capsys.readouterr().out.splitlines()
        assert rc == 0
        assert out[0] == "cell solution reference"
        assert len(out) == 6
        assert float(out[-1].split()[1]) == pytest.approx(1.0)

    def test_oned_extended_subcommand(self, capsys):
        rc = main(["oned-extended", "--n", "8"])
        out = capsys.readouterr().out.splitlines()
        assert rc == 0
        last = out[-1].split()
        assert float(last[1]) > 1e6  # diverging outflow cell
        assert last[2] == "inf"

    def test_solve_oned_case_via_run_config(self, capsys):
        rc = main(["solve", "--case", "oned_aligned", "--ncells", "6",
                   "--t-star", "0.5", "--tau", "0.5"])
        out = capsys.readouterr().out.splitlines()
        assert rc == 0
        assert out[0] == "cell solution reference"


class TestPlots:
    def test_solution_and_convergence_figures(self, tmp_path, circle_runs):
        from cutadvect import plots
        summary = circle_runs(10)
        fig1 = plots.solution_figure(summary, str(tmp_path))
        recs = [ConvergenceRecord(10, 0.35, 42, 6.25, 0.17, None,
                                  0.11, None, 0.12, None),
                ConvergenceRecord(20, 0.175, 130, 6.27, 0.115, 0.5,
                                  0.08, 0.5, 0.08, 0.5)]
        fig2 = plots.convergence_figure(recs, str(tmp_path), "shrinking_circle")
        for fig in (fig1, fig2):
            p = tmp_path / fig.split("/")[-1]
            assert p.exists() and p.stat().st_size > 1000

    def test_format_csv_row_handles_missing_eoc(self):
        rec = ConvergenceRecord(10, 0.35, 42, 6.25, 0.17, None,
                                0.11, None, 0.12, None)
        fields = format_csv_row(rec).split(",")
        assert fields[5] == "" and fields[7] == "" and fields[9] == ""
