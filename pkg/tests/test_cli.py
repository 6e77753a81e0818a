import json

import numpy as np
import pytest

from backhaul_sim.cli import (
    ConfigFileError,
    csv_text,
    manifest_path_for,
    parse_config,
    parse_config_text,
    parse_distances,
    read_csv,
    read_manifest,
    run,
    write_csv,
    write_manifest,
)
from backhaul_sim.montecarlo import ResultTable, SweepCell, SweepSpec, run_sweep


class TestParseConfig:
    def test_empty_gives_table_defaults(self):
        config, spec = parse_config_text("")
        assert config.bandwidth_hz == 20e6
        assert config.num_cells == 8
        assert config.n_bs == 256
        assert config.n_sc == 4
        assert config.p_bs_w == 35.0
        assert config.p_sc_w == 0.25
        assert config.p_ue_w == 0.2
        assert (config.nf_bs_db, config.nf_sc_db, config.nf_ue_db) == (5.0, 8.0, 9.0)
        assert (config.gain_bs_dbi, config.gain_sc_dbi, config.gain_ue_dbi) == (2.0, 5.0, 0.0)
        assert config.frac_dl == config.frac_ul == 0.5
        assert spec.distances_m == tuple(float(d) for d in range(200, 1501, 100))
        assert spec.drops == 2000

    def test_comments_and_blank_lines(self):
        config, _ = parse_config_text("# a comment\n\nnum_cells = 4\n")
        assert config.num_cells == 4

    def test_unknown_key_cites_line(self):
        with pytest.raises(ConfigFileError, match=r":3: unknown key 'n_bss'"):
            parse_config_text("num_cells = 4\n\nn_bss = 7\n")

    def test_bad_value_cites_line(self):
        with pytest.raises(ConfigFileError, match=":1:"):
            parse_config_text("num_cells = four\n")

    def test_missing_equals(self):
        with pytest.raises(ConfigFileError, match="key = value"):
            parse_config_text("num_cells 4\n")

    def test_rejection_requirement_enforced(self):
        text = "n_bs = 10\nn_scr = 2\nstrategies = zdd_ir\n"
        with pytest.raises(ConfigFileError, match=r"n_bs >= num_cells\*\(n_ue\+n_scr\)"):
            parse_config_text(text)

    def test_zero_drops_rejected(self):
        with pytest.raises(ConfigFileError, match="drops"):
            parse_config_text("drops = 0\n")

    def test_distance_floor_rejected(self):
        with pytest.raises(ConfigFileError, match="floor"):
            parse_config_text("distances = 10,200\n")

    def test_pathloss_override(self):
        config, _ = parse_config_text(
            "pl_s2u_intercept_db = 145.4\npl_s2u_shadowing_db = 3\n"
        )
        assert config.pl_s2u.intercept_db == 145.4
        assert config.pl_s2u.shadowing_sigma_db == 3.0
        assert config.pl_s2u.slope_db_per_decade == 36.7
        assert config.pl_b2u.intercept_db == 128.1

    def test_full_round(self):
        text = (
            "bandwidth_hz = 10e6\nnum_cells = 4\nn_bs = 64\nn_sc = 2\n"
            "distances = 200:300:800\nstrategies = direct_zf,zdd\n"
            "directions = both\nrsi_points_db = 0,2\nmodes = conservative\n"
            "drops = 7\nseed = 13\nfreeze_geometry = true\n"
        )
        config, spec = parse_config_text(text)
        assert config.bandwidth_hz == 10e6
        assert config.freeze_geometry is True
        assert spec.distances_m == (200.0, 500.0, 800.0)
        assert spec.strategies == ("direct_zf", "zdd")
        assert spec.directions == ("dl", "ul")
        assert spec.rsi_points_db == (0.0, 2.0)
        assert spec.drops == 7
        assert spec.master_seed == 13
        assert config.seed == 13

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigFileError, match="not found"):
            parse_config(tmp_path / "nope.cfg")


class TestParseDistances:
    def test_range(self):
        assert parse_distances("200:100:500") == (200.0, 300.0, 400.0, 500.0)

    def test_range_not_overshooting(self):
        assert parse_distances("200:300:800") == (200.0, 500.0, 800.0)

    def test_comma_list(self):
        assert parse_distances("250, 750") == (250.0, 750.0)

    def test_bad_range(self):
        with pytest.raises(ValueError):
            parse_distances("500:100:200")


def tiny_table():
    rows = [
        SweepCell(200.0, "direct_zf", "dl", 0.0, "conservative", 12.3456789, 0.00123456, 50),
        SweepCell(300.0, "direct_zf", "dl", 0.0, "conservative", 11.1, 0.002, 50),
        SweepCell(200.0, "zdd", "ul", 2.0, "complete", 7.5, 0.01, 50),
    ]
    return ResultTable.from_cells(rows)


class TestCsv:
    def test_header_only_for_empty(self, tmp_path):
        path = tmp_path / "empty.csv"
        write_csv(ResultTable.from_cells([]), path)
        content = path.read_text()
        assert content == (
            "distance_m,strategy,direction,rsi_db,mode,mean_bps_per_hz,std_error,n_drops\n"
        )

    def test_six_significant_digits(self):
        text = csv_text(tiny_table())
        assert "12.3457" in text
        assert "0.00123456" in text

    def test_round_trip(self, tmp_path):
        path = tmp_path / "table.csv"
        table = tiny_table()
        write_csv(table, path)
        back = read_csv(path)
        assert len(back.rows) == len(table.rows)
        for a, b in zip(back.rows, table.rows):
            assert a.key() == b.key()
            assert a.mean_bps_per_hz == pytest.approx(b.mean_bps_per_hz, rel=1e-5)
            assert a.n_drops == b.n_drops

    def test_rows_sorted_by_key(self):
        lines = csv_text(tiny_table()).splitlines()[1:]
        assert lines[0].startswith("200,direct_zf")
        assert lines[1].startswith("300,direct_zf")
        assert lines[2].startswith("200,zdd,ul,2,complete")

    def test_final_newline(self):
        assert csv_text(tiny_table()).endswith("\n")


class TestManifest:
    def test_round_trip_regenerates_identical_csv(self, tmp_path):
        config, _ = parse_config_text("num_cells = 2\nn_bs = 16\nn_sc = 2\n")
        spec = SweepSpec(
            distances_m=(200.0, 600.0),
            strategies=("direct_zf", "ctdd_sub"),
            directions=("dl",),
            drops=4,
            master_seed=3,
        )
        out = tmp_path / "res.csv"
        table = run_sweep(spec, config)
        write_csv(table, out)
        write_manifest(config, spec, out)

        config2, spec2 = read_manifest(manifest_path_for(out))
        assert config2 == config
        assert spec2 == spec
        again = run_sweep(spec2, config2)
        assert csv_text(again) == out.read_text()

    def test_manifest_fields(self, tmp_path):
        config, spec = parse_config_text("")
        out = tmp_path / "r.csv"
        path = write_manifest(config, spec, out)
        data = json.loads(path.read_text())
        assert data["tool"] == "backhaul-sim"
        assert data["master_seed"] == spec.master_seed
        assert data["output_csv"] == str(out)
        assert data["system_config"]["n_bs"] == 256
        assert data["sweep_spec"]["drops"] == 2000


class TestRunCommand:
    def test_sweep_writes_csv_and_manifest(self, tmp_path, capsys):
        cfg = tmp_path / "sim.cfg"
        cfg.write_text("num_cells = 2\nn_bs = 16\nn_sc = 2\n")
        out = tmp_path / "out.csv"
        code = run(
            [
                "sweep", "--config", str(cfg), "--out", str(out),
                "--distances", "200:100:1500", "--direction", "dl",
                "--strategies", "direct_zf,ctdd_sub", "--drops", "2", "--seed", "5",
            ]
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 1 + 14 * 2
        assert manifest_path_for(out).exists()
        assert "wrote 28 rows" in capsys.readouterr().out

    def test_sweep_flags_round_trip_manifest(self, tmp_path):
        out = tmp_path / "o.csv"
        code = run(
            [
                "sweep", "--out", str(out), "--distances", "300,600",
                "--direction", "ul", "--strategies", "zdd", "--mode", "complete",
                "--rsi", "5", "--drops", "2", "--seed", "9",
            ]
        )
        assert code == 0
        config, spec = read_manifest(manifest_path_for(out))
        assert spec.distances_m == (300.0, 600.0)
        assert spec.directions == ("ul",)
        assert spec.strategies == ("zdd",)
        assert spec.modes == ("complete",)
        assert spec.rsi_points_db == (5.0,)
        assert spec.master_seed == 9
        assert config.seed == 9

    def test_drop_subcommand_deterministic(self, tmp_path, capsys):
        cfg = tmp_path / "sim.cfg"
        cfg.write_text("num_cells = 2\nn_bs = 16\nn_sc = 2\n")
        args = ["drop", "--config", str(cfg), "--seed", "7", "--distance", "400"]
        assert run(args) == 0
        first = capsys.readouterr().out
        assert run(args) == 0
        second = capsys.readouterr().out
        assert first == second
        assert "direct_zf" in first
        assert "link rates [zdd]" in first

    def test_bad_config_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("nonsense = 1\n")
        assert run(["sweep", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 2
        assert "unknown key" in capsys.readouterr().err

    def test_invalid_flag_combo(self, capsys):
        assert run(["sweep", "--distances", "10,20", "--out", "/tmp/never.csv"]) == 2
        assert "floor" in capsys.readouterr().err

    def test_error_cell_nonzero_exit(self, tmp_path, capsys):
        out = tmp_path / "err.csv"
        code = run(
            [
                "sweep", "--out", str(out), "--distances", "300",
                "--strategies", "zdd_ir", "--direction", "dl", "--drops", "1",
                "--config", str(_write(tmp_path, "n_bs = 15\nn_sc = 2\nnum_cells = 8\n")),
            ]
        )
        assert code == 2  # rejection requirement caught at validation time

    def test_selftest_command(self, capsys):
        assert run(["selftest"]) == 0
        out = capsys.readouterr().out
        assert out.count("PASS") >= 5
        assert "selftest passed" in out


def _write(tmp_path, text):
    path = tmp_path / "cfg.txt"
    path.write_text(text)
    return path
