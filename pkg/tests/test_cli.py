"""End-to-end tests for the crpower CLI, run in-process through main(argv)."""

from __future__ import annotations

import csv
import io

import pytest

from crpower.cli import (
    RADIUS_COLUMNS,
    RUN_COLUMNS,
    SLICE_COLUMNS,
    SUMMARY_COLUMNS,
    SURFACE_COLUMNS,
    main,
    sweep_scenarios,
)
from crpower.config import load_config
from crpower.models import FixedPower, OptimalControl


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

_SMALL_SURFACE = [
    "--set", "r2_min_km=46",
    "--set", "r2_max_km=54",
    "--set", "r2_step_km=1",
    "--set", "theta_step_deg=5",
]
_SMALL_SWEEP = [
    "--set", "seeds=2",
    "--set", "speeds_mps=10,30",
    "--set", "fixed_powers_w=30,90",
    "--set", "sim_time_s=100",
]


def _read(path):
    """Split a CSV into its echo header lines and its rows as dicts."""
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    echo = [line for line in lines if line.startswith("#")]
    body = [line for line in lines if not line.startswith("#")]
    return echo, list(csv.DictReader(io.StringIO("\n".join(body))))


def _run(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out), "--quiet"])
    return code, out


# ---------------------------------------------------------------------------
# Analytical subcommands
# ---------------------------------------------------------------------------


class TestSurface:

    def test_reference_cells(self, tmp_path):
        code, out = _run(tmp_path, "surface", *_SMALL_SURFACE)
        assert code == 0
        echo, rows = _read(out)
        assert "# seed=1" in echo
        assert tuple(rows[0]) == SURFACE_COLUMNS
        cells = {(float(r["r2_km"]), float(r["theta_deg"])): r for r in rows}

        reference = cells[(50.0, 60.0)]
        assert reference["feasibility"] == "optimal"
        assert float(reference["p_star_w"]) == pytest.approx(79.5, abs=0.1)
        assert reference["p_star_w"] == reference["p_star_unclamped_w"]

        clamped = cells[(50.0, 90.0)]
        assert clamped["feasibility"] == "max_power"
        assert float(clamped["p_star_w"]) == 100.0
        assert float(clamped["p_star_unclamped_w"]) > 100.0

        forbidden = cells[(50.0, 0.0)]
        assert forbidden["feasibility"] == "forbidden"
        assert forbidden["p_star_w"] == ""
        assert float(forbidden["f_km"]) > 0.0

    def test_rerun_is_byte_identical(self, tmp_path):
        _, first = _run(tmp_path, "surface", *_SMALL_SURFACE, name="a.csv")
        _, second = _run(tmp_path, "surface", *_SMALL_SURFACE, name="b.csv")
        assert first.read_bytes() == second.read_bytes()


class TestSlice:

    def test_matches_surface_and_reachability(self, tmp_path):
        _, surface = _run(tmp_path, "surface", *_SMALL_SURFACE, name="surface.csv")
        code, sliced = _run(tmp_path, "slice", *_SMALL_SURFACE, name="slice.csv")
        assert code == 0
        _, surface_rows = _read(surface)
        _, slice_rows = _read(sliced)
        assert tuple(slice_rows[0]) == SLICE_COLUMNS

        at_sixty = [r for r in surface_rows if float(r["theta_deg"]) == 60.0]
        assert len(at_sixty) == len(slice_rows)
        for surface_row, slice_row in zip(at_sixty, slice_rows):
            for column in SURFACE_COLUMNS:
                assert slice_row[column] == surface_row[column]

        feasible = {float(r["r2_km"]): r["feasible"] == "1" for r in slice_rows}
        assert feasible == {
            46.0: False,
            47.0: True,
            48.0: True,
            49.0: True,
            50.0: True,
            51.0: True,
            52.0: True,
            53.0: True,
            54.0: True,
        }
        row_47 = next(r for r in slice_rows if float(r["r2_km"]) == 47.0)
        assert float(row_47["r_max_km"]) == pytest.approx(3.73, abs=0.01)


class TestRadiusSweep:

    def test_peak_follows_optimal_power(self, tmp_path):
        code, out = _run(tmp_path, "radius-sweep")
        assert code == 0
        _, rows = _read(out)
        assert tuple(rows[0]) == RADIUS_COLUMNS
        assert len(rows) == 300
        at_50 = [r for r in rows if float(r["r2_km"]) == 50.0]
        peak = max(at_50, key=lambda r: float(r["r_ct_km"]))
        assert float(peak["p_ct_w"]) == pytest.approx(float(peak["p_star_w"]), abs=1.0)
        assert float(peak["r_ct_km"]) == pytest.approx(3.68, abs=0.01)


# ---------------------------------------------------------------------------
# Simulation subcommands
# ---------------------------------------------------------------------------


class TestPdr:

    def test_rows_and_summary(self, tmp_path):
        code, out = _run(tmp_path, "pdr", *_SMALL_SWEEP)
        assert code == 0
        _, rows = _read(out)
        assert tuple(rows[0]) == RUN_COLUMNS
        # (2 fixed powers + optimal) x 2 speeds x 2 seeds
        assert len(rows) == 12
        keys = [
            (r["policy"], float(r["p_fixed_w"] or 0), float(r["speed_mps"]), int(r["seed"]))
            for r in rows
        ]
        assert keys == sorted(keys)
        assert all(r["sigma_db"] == "0.0" for r in rows)

        _, summary = _read(tmp_path / "out_summary.csv")
        assert tuple(summary[0]) == SUMMARY_COLUMNS
        assert len(summary) == 6
        assert all(r["runs"] == "2" for r in summary)

    def test_workers_do_not_change_output(self, tmp_path):
        _, serial = _run(tmp_path, "pdr", *_SMALL_SWEEP, name="serial.csv")
        _, parallel = _run(tmp_path, "pdr", *_SMALL_SWEEP, "--workers", "2", name="parallel.csv")
        assert serial.read_bytes() == parallel.read_bytes()

    def test_shadow_variant(self, tmp_path):
        code, out = _run(tmp_path, "pdr-shadow", *_SMALL_SWEEP)
        assert code == 0
        echo, rows = _read(out)
        assert "# shadow_alpha_c=4" in echo
        assert {r["speed_mps"] for r in rows} == {"30.0"}
        assert all(r["sigma_db"] == "6.0" for r in rows)


class TestRun:

    def test_single_run_with_trajectory(self, tmp_path):
        track = tmp_path / "track.csv"
        code, out = _run(
            tmp_path, "run", "--set", "sim_time_s=20", "--seed", "5", "--trajectory-out", str(track)
        )
        assert code == 0
        _, rows = _read(out)
        assert len(rows) == 1
        assert rows[0]["policy"] == "optimal"
        assert rows[0]["seed"] == "5"
        lines = track.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "t_s,x_m,y_m,r_m,phi_rad"
        assert len(lines) == 22

    def test_stdout_output(self, capsys):
        assert main(["run", "--set", "sim_time_s=10", "--quiet"]) == 0
        captured = capsys.readouterr().out
        assert captured.startswith("# ")
        assert "policy,p_fixed_w" in captured


# ---------------------------------------------------------------------------
# Exit codes and sweep construction
# ---------------------------------------------------------------------------


class TestExitCodes:

    def test_config_error_exits_2(self, tmp_path, capsys):
        code, out = _run(tmp_path, "surface", "--set", "alpha_p=4")
        assert code == 2
        assert "alpha_p" in capsys.readouterr().err
        assert not out.exists()

    def test_bad_override_syntax_exits_2(self, tmp_path):
        code, _ = _run(tmp_path, "surface", "--set", "alpha_p")
        assert code == 2

    def test_missing_config_exits_2(self, tmp_path):
        code, _ = _run(tmp_path, "surface", "--config", str(tmp_path / "absent.conf"))
        assert code == 2

    def test_invalid_swept_speed_leaves_no_output(self, tmp_path, capsys):
        code, out = _run(tmp_path, "pdr", *_SMALL_SWEEP, "--set", "speeds_mps=-10")
        assert code == 2
        assert "speed" in capsys.readouterr().err.lower()
        assert not out.exists()
        assert not (tmp_path / "out_summary.csv").exists()

    def test_unwritable_output_exits_1(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("", encoding="utf-8")
        code = main(["slice", "--out", str(blocker / "out.csv"), "--quiet"])
        assert code == 1

    def test_subcommand_required(self):
        with pytest.raises(SystemExit):
            main([])


class TestSweepScenarios:

    def test_order_and_seeds(self):
        base = load_config(None, [("seed", "10")]).scenario
        scenarios = sweep_scenarios(base, [90.0, 30.0], [30.0, 10.0], 2)
        assert len(scenarios) == 12
        assert scenarios[0].policy == FixedPower(30.0)
        assert scenarios[-1].policy == OptimalControl()
        assert [s.seed for s in scenarios[:2]] == [10, 11]
        assert [s.mobility.mean_speed for s in scenarios[:4]] == [10.0, 10.0, 30.0, 30.0]
