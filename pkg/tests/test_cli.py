import json
from pathlib import Path

import pytest

from vecop.cli import (
    EXIT_INFEASIBLE,
    EXIT_LIMITS,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VALIDATION,
    main,
)
from vecop.lp_io import read_lp
from vecop.scenario import emit_scenario

from conftest import make_vehicle, small_scenario

REPO_ROOT = Path(__file__).resolve().parents[1]
GOLDEN = str(REPO_ROOT / "scenarios" / "parking-lot-8v2e.json")


@pytest.fixture()
def tiny_scenario_path(tmp_path):
    s = small_scenario(
        [make_vehicle("v1", 5, 20), make_vehicle("v2", 25, 20)], traffic=400.0, bins=8
    )
    p = tmp_path / "tiny.json"
    p.write_text(emit_scenario(s))
    return str(p)


@pytest.fixture()
def overload_scenario_path(tmp_path):
    s = small_scenario(
        [make_vehicle("v1", 5, 20), make_vehicle("v2", 25, 20)], traffic=2000.0, bins=8
    )
    p = tmp_path / "over.json"
    p.write_text(emit_scenario(s))
    return str(p)


def test_validate_ok(capsys):
    assert main(["validate", "--scenario", GOLDEN]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "ok"


def test_validate_missing_file():
    assert main(["validate", "--scenario", "/nonexistent.json"]) == EXIT_USAGE


def test_validate_bad_document(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{\"lot\": {}}")
    assert main(["validate", "--scenario", str(p)]) == EXIT_VALIDATION
    assert "error:" in capsys.readouterr().err


def test_usage_errors(capsys):
    assert main([]) == EXIT_USAGE
    assert main(["frobnicate"]) == EXIT_USAGE


def test_gen_matches_golden(tmp_path):
    out = tmp_path / "gen.json"
    assert main(["gen", "--seed", "42", "-o", str(out)]) == EXIT_OK
    assert out.read_text() == Path(GOLDEN).read_text()


def test_links_csv(tmp_path):
    out = tmp_path / "links.csv"
    assert main(["links", "--scenario", GOLDEN, "--csv", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "tx,rx,medium,distance_m,capacity_bps,radiated_mW,prop_ns,txdelay_us"
    assert len(lines) == 1 + 92
    assert any(",FIBER," in l for l in lines[1:])


def test_table_csv(tmp_path, capsys):
    out = tmp_path / "table.csv"
    assert main(["table", "--scenario", GOLDEN, "--link", "l000", "--csv", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "k,lambda_pps,delay_us"
    assert len(lines) == 1 + 64
    assert main(["table", "--scenario", GOLDEN, "--link", "nope"]) == EXIT_USAGE
    assert "unknown link" in capsys.readouterr().err


def test_export_lp_parses(tiny_scenario_path, tmp_path):
    out = tmp_path / "model.lp"
    assert main(["export", "--scenario", tiny_scenario_path, "-o", str(out)]) == EXIT_OK
    model = read_lp(out.read_text())
    assert model.minimize and model.constraints


def test_export_stats(tiny_scenario_path, capsys):
    assert main(["export", "--scenario", tiny_scenario_path, "--stats"]) == EXIT_OK
    census = json.loads(capsys.readouterr().out)
    assert set(census) == {"variables", "binaries", "constraints"}
    assert census["variables"] > census["binaries"] > 0


def test_solve_power(tiny_scenario_path, tmp_path):
    out = tmp_path / "result.json"
    assert (
        main(["solve", "--scenario", tiny_scenario_path, "--objective", "power", "-o", str(out)])
        == EXIT_OK
    )
    doc = json.loads(out.read_text())
    assert doc["status"] == "optimal"
    assert doc["total_power_w"] == pytest.approx(7.5, abs=1e-9)
    assert doc["allocation"]["d1"]["serving"] == ["v1"]
    assert "scenario_hash" in doc["provenance"]


def test_solve_joint_and_custom(tiny_scenario_path, tmp_path):
    out = tmp_path / "result.json"
    assert (
        main(["solve", "--scenario", tiny_scenario_path, "--objective", "joint", "-o", str(out)])
        == EXIT_OK
    )
    doc = json.loads(out.read_text())
    assert doc["weights"]["preset"] == "JOINT_EQUAL"
    assert (
        main(
            [
                "solve",
                "--scenario",
                tiny_scenario_path,
                "--objective",
                "custom:0.02,2000",
                "-o",
                str(out),
            ]
        )
        == EXIT_OK
    )
    doc = json.loads(out.read_text())
    assert doc["weights"] == {"preset": "CUSTOM", "w_power": 0.02, "w_delay": 2000.0}


def test_solve_objective_spelling(tiny_scenario_path):
    assert main(["solve", "--scenario", tiny_scenario_path, "--objective", "bogus"]) == EXIT_VALIDATION
    assert (
        main(["solve", "--scenario", tiny_scenario_path, "--objective", "custom:1"])
        == EXIT_VALIDATION
    )


def test_solve_infeasible_exit(overload_scenario_path, tmp_path):
    out = tmp_path / "result.json"
    code = main(
        ["solve", "--scenario", overload_scenario_path, "--objective", "power", "-o", str(out)]
    )
    assert code == EXIT_INFEASIBLE
    doc = json.loads(out.read_text())
    assert doc["status"] == "infeasible"
    assert doc["infeasible_reason"].startswith("C3")


def test_solve_limits_exit(tmp_path):
    nodes = [make_vehicle(f"v{i}", float(i), 0.0) for i in range(1, 14)]
    s = small_scenario(nodes, traffic=400.0, bins=8)
    p = tmp_path / "big.json"
    p.write_text(emit_scenario(s))
    assert main(["solve", "--scenario", str(p)]) == EXIT_LIMITS
    assert main(["solve", "--scenario", str(p), "--force", "-o", str(tmp_path / "r.json")]) == EXIT_OK


def test_sweep_csv_and_plotdata(tiny_scenario_path, tmp_path):
    csv = tmp_path / "sweep.csv"
    plot = tmp_path / "plot.csv"
    code = main(
        [
            "sweep",
            "--scenario",
            tiny_scenario_path,
            "--demands",
            "400",
            "800",
            "--settings",
            "VEHICLES_ONLY",
            "--objectives",
            "power",
            "--csv",
            str(csv),
            "--plotdata",
            str(plot),
        ]
    )
    assert code == EXIT_OK
    lines = [l for l in csv.read_text().splitlines() if not l.startswith("# ")]
    assert len(lines) == 1 + 2
    assert plot.read_text().splitlines()[-1].startswith("delay,")


def test_sweep_json(tiny_scenario_path, tmp_path):
    out = tmp_path / "sweep.json"
    code = main(
        [
            "sweep",
            "--scenario",
            tiny_scenario_path,
            "--demands",
            "400",
            "--settings",
            "VEHICLES_ONLY",
            "--objectives",
            "power",
            "--json",
            str(out),
        ]
    )
    assert code == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["rows"][0]["status"] == "optimal"
    assert doc["metadata"]["demands_kbps"] == [400.0]


def test_report_requires_cloud(tiny_scenario_path, capsys):
    code = main(
        [
            "report",
            "--scenario",
            tiny_scenario_path,
            "--demands",
            "400",
            "--settings",
            "VEHICLES_ONLY",
        ]
    )
    assert code == EXIT_VALIDATION
    assert "baseline absent" in capsys.readouterr().err
