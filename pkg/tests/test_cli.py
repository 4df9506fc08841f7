import csv
import json

import pytest
from click.testing import CliRunner

from effcycle.cli import RunConfig, main


@pytest.fixture
def run(tmp_path):
    runner = CliRunner()

    def go(*args):
        return runner.invoke(main, ["--output-dir", str(tmp_path), *args])

    return go


def test_volume_figure8(run):
    res = run("volume")
    assert res.exit_code == 0
    assert "volume/v3 2.000000" in res.output


def test_volume_gieseking(run):
    res = run("--manifold", "gieseking", "volume")
    assert res.exit_code == 0 and "volume/v3 1.000000" in res.output


def test_tile_and_develop(run, tmp_path):
    assert run("tile", "--depth", "1").exit_code == 0
    data = json.loads((tmp_path / "tiling.json").read_text())
    assert data["schema"] == "tiling" and data["count"] == 5
    assert run("develop", "--radius", "1").exit_code == 0
    data = json.loads((tmp_path / "complex.json").read_text())
    assert data["schema"] == "developed-complex" and len(data["tiles"]) >= 2


def test_depth_limit_is_config_error(run):
    assert run("tile", "--depth", "99").exit_code == 2


def test_adapt(run, tmp_path):
    res = run("adapt")
    assert res.exit_code == 0
    data = json.loads((tmp_path / "triangulation.json").read_text())
    assert data["adapted"]["boundary"] == [[1, 3, 2]]
    assert len(data["adapted"]["residual"]) == 11


def test_tower_csv_deterministic(run, tmp_path):
    assert run("tower", "--imax", "3").exit_code == 0
    first = (tmp_path / "tower.csv").read_bytes()
    assert run("tower", "--imax", "3").exit_code == 0
    assert (tmp_path / "tower.csv").read_bytes() == first
    rows = list(csv.reader(first.decode().splitlines()))
    assert rows[1][:7] == ["1", "1", "6", "2", "3", "11", "11"]
    assert rows[3][6] == "2.66666666667"


def test_minimize_short(run, tmp_path):
    res = run("minimize", "--imax", "4", "--no-jitter")
    assert res.exit_code == 0, res.output
    rows = list(csv.DictReader((tmp_path / "convergence.csv").read_text().splitlines()))
    assert [r["l1Norm"] for r in rows] == ["13", "6.25", "4.66666666667", "3.9375"]
    assert all(r["relativeCycle"] == "1" for r in rows)
    assert len(rows[0]) == 11 + 48
    m = json.loads((tmp_path / "measure.json").read_text())
    assert m["schema"] == "measure" and len(m["atoms"]) == 48


def test_minimize_exit_status_reports_failed_check(run):
    # the atom error is still 1/24 at i = 2, so "final < first" fails
    res = run("minimize", "--imax", "2", "--no-jitter")
    assert res.exit_code == 1 and "FAIL" in res.output


def test_verify_suite(run):
    res = run("verify", "--suite", "measure", "--suite", "manifold")
    assert res.exit_code == 0
    assert "8 passed, 0 failed" in res.output


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[effcycle]\nimax = 2\nseed = 3\njitter = no\n")
    c = RunConfig.from_file(cfg)
    assert (c.imax, c.seed, c.jitter) == (2, 3, False)
    assert c.override(imax=5, seed=None).imax == 5
    res = CliRunner().invoke(main, ["--config", str(cfg), "--output-dir", str(tmp_path), "tower"])
    assert res.exit_code == 0
    assert len((tmp_path / "tower.csv").read_text().splitlines()) == 3
    res = CliRunner().invoke(main, ["--config", str(cfg), "--output-dir", str(tmp_path), "tower", "--imax", "3"])
    assert len((tmp_path / "tower.csv").read_text().splitlines()) == 4


@pytest.mark.parametrize("body", [
    "[effcycle]\nimax = 0\n",
    "[effcycle]\ntau_cls = -1\n",
    "[effcycle]\nbogus = 1\n",
    "[effcycle]\nimax = ten\n",
    "[other]\nimax = 2\n",
    "[effcycle]\nmc_samples = 20\nmc_budget = 10\n",
])
def test_config_errors(tmp_path, body):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(body)
    res = CliRunner().invoke(main, ["--config", str(cfg), "volume"])
    assert res.exit_code == 2
