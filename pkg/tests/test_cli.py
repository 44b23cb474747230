"""End-to-end checks of the command line driver and its disk artifacts."""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from junctionflow import ConfigError, DegenerateTensions
from junctionflow.cli import main, parse_config, resolve_weights

TRIOD_CFG = """\
# symmetric pinned triod, short run
scenario = triod
mesh = 48
weights.gamma = [1.0, 1.0, 1.0]
flow.dt = 2e-4
flow.t_end = 2e-3
"""

BUBBLE_VANISH_CFG = """\
scenario = double_bubble
mesh = 64
scenario.areas = [0.05, 0.05]
weights.gamma = [1.0, 1.0, 1.0]
flow.dt = 5e-4
flow.t_end = 1.0
flow.output_every = 5
outputs.snapshot_every = 50
"""

STIFF_CFG = """\
scenario = double_bubble
mesh = 48
weights.gamma = [1.0, 1.0, 1.0]
flow.dt = 1.0
flow.t_end = 2.0
flow.picard_max = 2
flow.max_retries = 0
"""


def write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def run_cli(capsys, argv):
    rc = main(argv)
    out = capsys.readouterr().out
    if not out.strip():
        return rc, None
    try:
        return rc, json.loads(out)
    except json.JSONDecodeError:
        # sweep runs print one line per failed job before the summary line
        return rc, json.loads(out.strip().splitlines()[-1])


def test_parse_config_types_and_comments(tmp_path):
    cfg = parse_config(write_cfg(tmp_path, """\
# leading comment
scenario = triod
mesh = 64   # trailing comment

weights.gamma = [1.0, 2.0, 1.5]
outputs.formats = csv
flow.picard_tol = 1e-8
"""))
    assert cfg["scenario"] == "triod"
    assert cfg["mesh"] == 64
    assert cfg["weights.gamma"] == [1.0, 2.0, 1.5]
    assert cfg["outputs.formats"] == "csv"
    assert cfg["flow.picard_tol"] == 1e-8


def test_parse_config_rejects_unknown_and_duplicate(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(write_cfg(tmp_path, "scenario = triod\nbogus.key = 1\n"))
    with pytest.raises(ConfigError):
        parse_config(write_cfg(tmp_path, "scenario = triod\nmesh = 8\nmesh = 9\n"))
    with pytest.raises(ConfigError):
        parse_config(write_cfg(tmp_path, "mesh = 16\n"))  # scenario missing


def test_resolve_weights_requires_exactly_one_parametrization(tmp_path):
    third = 2.0 * math.pi / 3.0
    cfg = parse_config(write_cfg(tmp_path, f"""\
scenario = triod
weights.theta = [{third}, {third}, {third}]
"""))
    w = resolve_weights(cfg)
    assert np.allclose(w.gamma, w.gamma[0])
    with pytest.raises(ConfigError):
        resolve_weights({"scenario": "triod"})
    with pytest.raises(ConfigError):
        resolve_weights({"scenario": "triod",
                         "weights.gamma": [1.0, 1.0, 1.0],
                         "weights.theta": [third, third, third]})


def test_validate_triod_reports_ok(tmp_path, capsys):
    cfg = write_cfg(tmp_path, TRIOD_CFG)
    rc, report = run_cli(capsys, ["validate", "--config", cfg])
    assert rc == 0
    assert report["ok"] is True
    assert report["geometry"]["ok"] is True
    assert report["compatibility"]["ok"] is True
    assert report["junction_curvature_sum"] <= 1e-6
    assert report["warnings"] == []


def test_validate_degenerate_tensions_exits_2(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "scenario = triod\nweights.gamma = [5.0, 1.0, 1.0]\n")
    rc, report = run_cli(capsys, ["validate", "--config", cfg])
    assert rc == 2
    assert report["ok"] is False
    assert report["failures"][0]["error"] == "DegenerateTensions"


def test_simulate_writes_contracted_artifacts(tmp_path, capsys):
    cfg = write_cfg(tmp_path, TRIOD_CFG)
    out = tmp_path / "run"
    rc, _ = run_cli(capsys, ["simulate", "--config", cfg, "--out", str(out)])
    assert rc == 0

    raw = (out / "trace.csv").read_bytes()
    assert b"\r" not in raw  # LF only, independent of platform and locale
    lines = raw.decode("utf-8").splitlines()
    header = ("t,energy,area_1,area_2,area_3,len_1,len_2,len_3,"
              "G2,G3,G_third,sum_gbH,picard_iters,dissipation_defect")
    assert lines[0] == header
    assert len(lines) == 1 + 11  # initial row plus ten steps
    for line in lines[1:]:
        cells = line.split(",")
        assert len(cells) == len(header.split(","))
        assert all(np.isfinite(float(c)) for c in cells)
    t_col = [float(line.split(",")[0]) for line in lines[1:]]
    assert t_col == sorted(t_col) and t_col[0] == 0.0

    meta = json.loads((out / "meta.json").read_text(encoding="utf-8"))
    assert set(meta) == {"config", "version", "dt", "dt_rule", "seed",
                         "reref_times", "final_status", "records",
                         "snapshot_every", "trace_columns", "warnings",
                         "energy_flags"}
    assert meta["final_status"]["kind"] == "Running"
    assert meta["records"] == 11
    assert meta["trace_columns"] == header.split(",")
    assert meta["dt"] == 2e-4

    snaps = sorted((out / "snapshots").iterdir())
    assert [p.name for p in snaps] == [f"{i:06d}.csv" for i in range(11)]
    snap_lines = snaps[0].read_text(encoding="utf-8").splitlines()
    assert snap_lines[0] == "chart_id,node,x,px,py,rho"
    cells = snap_lines[1].split(",")
    assert cells[0] == "0" and cells[1] == "0"
    assert 0.0 <= float(cells[2]) <= 1.0


def test_simulate_runs_are_byte_identical(tmp_path, capsys):
    cfg = write_cfg(tmp_path, TRIOD_CFG)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert run_cli(capsys, ["simulate", "--config", cfg, "--out", str(out_a)])[0] == 0
    assert run_cli(capsys, ["simulate", "--config", cfg, "--out", str(out_b)])[0] == 0
    for rel in ("trace.csv", "meta.json", "snapshots/000000.csv",
                "snapshots/000010.csv"):
        assert (out_a / rel).read_bytes() == (out_b / rel).read_bytes()


def test_simulate_snapshot_every_thins_output(tmp_path, capsys):
    cfg = write_cfg(tmp_path, TRIOD_CFG + "outputs.snapshot_every = 5\n")
    out = tmp_path / "run"
    rc, _ = run_cli(capsys, ["simulate", "--config", cfg, "--out", str(out)])
    assert rc == 0
    names = sorted(p.name for p in (out / "snapshots").iterdir())
    assert names == ["000000.csv", "000005.csv", "000010.csv"]


def test_simulate_area_vanishing_exits_3(tmp_path, capsys):
    cfg = write_cfg(tmp_path, BUBBLE_VANISH_CFG)
    out = tmp_path / "run"
    rc, _ = run_cli(capsys, ["simulate", "--config", cfg, "--out", str(out)])
    assert rc == 3
    meta = json.loads((out / "meta.json").read_text(encoding="utf-8"))
    assert meta["final_status"]["kind"] == "AreaVanishing"
    assert "chart" in meta["final_status"]["detail"]


def test_simulate_solver_failure_exits_4(tmp_path, capsys):
    cfg = write_cfg(tmp_path, STIFF_CFG)
    out = tmp_path / "run"
    rc, _ = run_cli(capsys, ["simulate", "--config", cfg, "--out", str(out)])
    assert rc == 4
    meta = json.loads((out / "meta.json").read_text(encoding="utf-8"))
    assert meta["final_status"]["kind"] in ("PicardDiverged", "FoldOver",
                                            "SingularSystem")


def test_simulate_requires_an_output_directory(tmp_path, capsys):
    cfg = write_cfg(tmp_path, TRIOD_CFG)
    rc, report = run_cli(capsys, ["simulate", "--config", cfg])
    assert rc == 2
    assert report["failures"][0]["error"] == "ConfigError"


def test_unknown_config_key_exits_2(tmp_path, capsys):
    cfg = write_cfg(tmp_path, TRIOD_CFG + "bogus.key = 3\n")
    rc, report = run_cli(capsys, ["validate", "--config", cfg])
    assert rc == 2
    assert report["failures"][0]["error"] == "ConfigError"
    assert "bogus.key" in report["failures"][0]["message"]


def test_areas_key_is_bubble_only(tmp_path, capsys):
    cfg = write_cfg(tmp_path, TRIOD_CFG + "scenario.areas = [1.0, 1.0]\n")
    rc, report = run_cli(capsys, ["validate", "--config", cfg])
    assert rc == 2
    assert report["failures"][0]["error"] == "ConfigError"


def test_seed_must_fit_in_64_bits(tmp_path, capsys):
    cfg = write_cfg(tmp_path, TRIOD_CFG)
    rc, report = run_cli(capsys, ["validate", "--config", cfg,
                                  "--seed", str(2 ** 64)])
    assert rc == 2
    assert report["ok"] is False


def test_sweep_fans_out_with_isolated_directories(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("JUNCTIONFLOW_THREADS", "1")
    cfg = write_cfg(tmp_path, TRIOD_CFG)
    sweep = tmp_path / "sweep.txt"
    sweep.write_text("flow.t_end=4e-4\nflow.t_end=6e-4 mesh=40\n",
                     encoding="utf-8")
    out = tmp_path / "fan"
    rc, report = run_cli(capsys, ["simulate", "--config", cfg,
                                  "--sweep", str(sweep), "--out", str(out)])
    assert rc == 0
    assert report == {"runs": 2, "exit_codes": [0, 0]}
    for i, rows in enumerate((3, 4)):
        trace = (out / f"sweep_{i:04d}" / "trace.csv").read_text(encoding="utf-8")
        assert len(trace.splitlines()) == 1 + rows


def test_sweep_exit_code_is_the_worst_run(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("JUNCTIONFLOW_THREADS", "1")
    cfg = write_cfg(tmp_path, TRIOD_CFG)
    sweep = tmp_path / "sweep.txt"
    sweep.write_text("flow.t_end=4e-4\nmesh=4\n", encoding="utf-8")
    rc, report = run_cli(capsys, ["simulate", "--config", cfg,
                                  "--sweep", str(sweep),
                                  "--out", str(tmp_path / "fan")])
    assert rc == 2
    # per-run failure lines precede the summary; keep only the last line
    assert report["exit_codes"] == [0, 2]


def test_sweep_rejects_malformed_lines_and_other_commands(tmp_path, capsys):
    cfg = write_cfg(tmp_path, TRIOD_CFG)
    bad = tmp_path / "bad.txt"
    bad.write_text("flow.t_end = 4e-4\n", encoding="utf-8")  # spaces split tokens
    rc, report = run_cli(capsys, ["simulate", "--config", cfg,
                                  "--sweep", str(bad),
                                  "--out", str(tmp_path / "fan")])
    assert rc == 2
    assert report["failures"][0]["error"] == "ConfigError"

    good = tmp_path / "good.txt"
    good.write_text("flow.t_end=4e-4\n", encoding="utf-8")
    rc, report = run_cli(capsys, ["eigs", "--config", cfg,
                                  "--sweep", str(good)])
    assert rc == 2
    assert "sweep" in report["failures"][0]["message"]


def test_eigs_reports_the_pinned_triod_spectrum(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "scenario = triod\nmesh = 128\n"
                              "weights.gamma = [1.0, 1.0, 1.0]\n")
    rc, report = run_cli(capsys, ["eigs", "--config", cfg])
    assert rc == 0
    assert report["ok"] is True and report["k"] == 6
    values = report["values"]
    quarter = math.pi ** 2 / 4.0
    assert abs(values[0] - quarter) <= 1e-4 * quarter
    assert abs(values[1] - quarter) <= 1e-4 * quarter
    assert abs(values[2] - math.pi ** 2) <= 1e-4 * math.pi ** 2


def test_lincheck_subcommand_passes_its_gates(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "scenario = double_bubble\n"
                              "weights.gamma = [1.0, 1.0, 1.0]\n"
                              "lincheck.n = 1200\n")
    rc, report = run_cli(capsys, ["lincheck", "--config", cfg])
    assert rc == 0
    assert report["ok"] is True
    assert set(report["checks"]) == {"velocity", "curvature", "angle_rows"}
    assert all(report["checks"].values())


def test_ls_check_subcommand_reports_margins(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "scenario = triod\n"
                              "weights.gamma = [1.0, 1.2, 0.9]\n"
                              "lscheck.samples = 2048\n"
                              "lscheck.ode_samples = 3\n")
    out = tmp_path / "ls"
    rc, report = run_cli(capsys, ["ls-check", "--config", cfg,
                                  "--out", str(out)])
    assert rc == 0
    assert report["ok"] is True
    assert report["min_neg_re"] > 0.0
    stats = report["sigma_min_stats"]
    assert stats["count"] == 3
    assert stats["min"] > 10.0 * stats["singular_floor"]
    assert stats["max_energy_defect"] <= 1e-10
    on_disk = json.loads((out / "report.json").read_text(encoding="utf-8"))
    assert on_disk == report


def test_ls_check_degenerate_tensions_exit_2(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "scenario = triod\n"
                              "weights.gamma = [5.0, 1.0, 1.0]\n")
    rc, report = run_cli(capsys, ["ls-check", "--config", cfg])
    assert rc == 2
    assert report["failures"][0]["error"] == "DegenerateTensions"


def test_module_entry_point_matches_in_process_driver(tmp_path):
    cfg = write_cfg(tmp_path, TRIOD_CFG)
    proc = subprocess.run([sys.executable, "-m", "junctionflow.cli",
                           "validate", "--config", cfg],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["ok"] is True
