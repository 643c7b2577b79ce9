import subprocess
import sys

import numpy as np
import pytest

from tempfreq.cli import build_parser, run
from tempfreq.grid import mass
from tempfreq.io_formats import read_result_json, read_series_csv, write_curve
from tempfreq.synthetic import wiggly_curve


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    curve = d / "wiggly.14c"
    write_curve(wiggly_curve(), curve)
    dates = d / "dates.csv"
    rows = ["id,c14_age,c14_error,site_id,site_area"]
    ages = [1760, 1620, 1700, 1655, 1810, 1580, 1735, 1690, 1500, 1540]
    rows += [f"D{i},{a},{20 + i},S{i},{100 + 50 * i}" for i, a in enumerate(ages)]
    dates.write_text("\n".join(rows) + "\n")
    return d, curve, dates


GRID_ARGS = ["--grid-start", "1000", "--grid-end", "2500"]


def test_calibrate_inline_dates(files):
    d, curve, _ = files
    out = d / "cal.csv"
    code = run(["calibrate", "--curve", str(curve), "--date", "1760,25", "--date", "1620,40",
                "--out", str(out)] + GRID_ARGS)
    assert code == 0
    series = read_series_csv(out)
    assert len(series) == 2
    for s in series.values():
        assert mass(s) == pytest.approx(1.0, abs=1e-9)


def test_ckde_repeat_is_byte_identical(files):
    d, curve, dates = files
    outs = []
    for threads in ("1", "4"):
        out = d / f"ckde{threads}.json"
        assert run(["ckde", "--curve", str(curve), "--dates", str(dates), "--guesses", "60", "--seed", "7",
                    "--threads", threads, "--out", str(out)] + GRID_ARGS) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_hoi_mass_is_area_sum(files):
    d, curve, dates = files
    out = d / "hoi.json"
    assert run(["hoi", "--curve", str(curve), "--dates", str(dates), "--guesses", "50", "--out", str(out)]
               + GRID_ARGS) == 0
    doc = read_result_json(out)
    s = next(iter(doc["series"].values()))
    areas = [100 + 50 * i for i in range(10)]
    assert mass(s) == pytest.approx(sum(a / 100 * 100 for a in areas), rel=1e-12)


@pytest.mark.parametrize("cmd,extra", [
    ("spd", ["--scale", "normalized"]),
    ("kde", ["--point-estimate", "median"]),
    ("wkde", []),
    ("wkde", ["--bandwidth", "fixed:30"]),
    ("pointest", []),
])
def test_other_subcommands(files, cmd, extra):
    d, curve, dates = files
    out = d / f"{cmd}.json"
    assert run([cmd, "--curve", str(curve), "--dates", str(dates), "--out", str(out)] + GRID_ARGS + extra) == 0
    doc = read_result_json(out)
    assert doc["method"] == cmd
    if cmd == "pointest":
        assert len(doc["table"]) == 10
    elif cmd != "spd":
        assert mass(next(iter(doc["series"].values()))) == pytest.approx(1.0, abs=1e-4)


def test_svg_output(files):
    d, curve, dates = files
    out = d / "spd.svg"
    assert run(["spd", "--curve", str(curve), "--dates", str(dates), "--out", str(out)] + GRID_ARGS) == 0
    assert out.read_text().startswith("<svg")


def test_parameters_recorded(files):
    d, curve, dates = files
    out = d / "p.json"
    run(["ckde", "--curve", str(curve), "--dates", str(dates), "--guesses", "5", "--threads", "3",
         "--out", str(out)] + GRID_ARGS)
    text = out.read_text()
    params = read_result_json(out)["parameters"]
    assert "threads" not in text
    assert len(params["curve"]["sha256"]) == 64


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["spd", "--curve", "x", "--no-such-flag"],
    ["kde", "--curve", "x", "--bandwidth", "iqr"],
    ["spd"],
])
def test_usage_errors_exit_1(files, argv):
    d, curve, dates = files
    argv = [str(curve) if a == "x" else a for a in argv]
    if "--dates" not in argv and argv[0] != "frobnicate":
        argv += ["--dates", str(dates)]
    assert run(argv) == 1


def test_validation_error_exit_1(files):
    d, curve, _ = files
    assert run(["calibrate", "--curve", str(curve), "--date", "1760,0"]) == 1


def test_io_error_exit_2(files):
    d, curve, dates = files
    assert run(["spd", "--curve", "/nonexistent.14c", "--dates", str(dates)]) == 2
    assert run(["spd", "--curve", str(curve), "--dates", str(dates), "--out", "/nonexistent/dir/x.csv"]
               + GRID_ARGS) == 2


def test_help_lists_flags():
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices
    assert set(sub) == {"calibrate", "spd", "kde", "ckde", "wkde", "hoi", "pointest"}
    text = sub["ckde"].format_help()
    for flag in ("--curve", "--dates", "--date", "--out", "--format", "--strict", "--skip-failed",
                 "--grid-start", "--grid-end", "--grid-step", "--threads", "--kernel", "--bandwidth",
                 "--guesses", "--seed"):
        assert flag in text
    assert "--window-half-width" in sub["hoi"].format_help()
    assert run(["--help"]) == 0


def test_module_entry_point(files):
    d, curve, _ = files
    res = subprocess.run([sys.executable, "-m", "tempfreq", "pointest", "--curve", str(curve),
                          "--date", "1760,25"] + GRID_ARGS, capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.splitlines()[1] == "id,mean,median,map"
