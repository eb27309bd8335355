import csv
import json
import pathlib

import pytest

from ..cli import (
    EXIT_CONFIG,
    EXIT_GATE_FAIL,
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_PARTIAL,
    EXIT_VERIFY_FAIL,
    RDF_HEADER,
    SWEEP_HEADERS,
    build_parser,
    main,
)
from .conftest import stationary_af_section, write_config


def read_rows(path: pathlib.Path):
    with open(path, newline="") as fp:
        return list(csv.reader(fp))


def test_print_schema(capsys: pytest.CaptureFixture):
    assert main(["--print-schema"]) == EXIT_OK
    schema = json.loads(capsys.readouterr().out)
    assert schema["title"] == "ExperimentConfig"


def test_command_required(capsys: pytest.CaptureFixture):
    assert main([]) == EXIT_CONFIG
    assert "command is required" in capsys.readouterr().err


def test_parser_overrides():
    args = build_parser().parse_args(["sweep", "-c", "x.json", "--jobs", "3", "--svg", "-vv"])
    assert args.command == "sweep"
    assert args.config == "x.json"
    assert args.jobs == 3
    assert args.svg is True
    assert args.html is None
    assert args.verbose == 2


def test_rdf_stationary(tmp_path: pathlib.Path, capsys: pytest.CaptureFixture):
    path = write_config(tmp_path, af=stationary_af_section(), D=1.0)
    assert main(["rdf", "-c", str(path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "R=1.000000 bits/sample" in out
    assert "p_n=2" in out
    assert "gate=PASS" in out

    rows = read_rows(tmp_path / "out" / "rdf.csv")
    assert tuple(rows[0]) == RDF_HEADER
    assert rows[1][0] == "1"
    assert rows[1][-2:] == ["PASS", "ok"]

    guard = json.loads((tmp_path / "out" / "guard_plan.json").read_text())
    assert guard["l"] == 128
    assert 0.0 < guard["rate_factor"] <= 1.0
    assert guard["overall_rate"] == pytest.approx(guard["rate_factor"])


def test_rdf_inactive_constraint(tmp_path: pathlib.Path, capsys: pytest.CaptureFixture):
    path = write_config(tmp_path, af=stationary_af_section(), D=5.0)
    assert main(["rdf", "-c", str(path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "R=0.000000" in out
    assert "constraint inactive" in out
    assert "gate=FAIL" in out


def test_rdf_many_samples_per_period(tmp_path: pathlib.Path, capsys: pytest.CaptureFixture):
    path = write_config(tmp_path, sampling={"n": 100})
    assert main(["rdf", "-c", str(path), "--out", str(tmp_path / "n100")]) == EXIT_OK
    assert "p_n=244" in capsys.readouterr().out
    assert (tmp_path / "n100" / "rdf.csv").exists()


@pytest.mark.parametrize(
    "sections",
    [
        pytest.param({"sampling": {"n": "asynchronous"}}, id="asynchronous"),
        pytest.param({"extra": True}, id="unknown-key"),
        pytest.param({"af": {"t_dc": 0.995}}, id="pulse-does-not-tile"),
    ],
)
def test_rdf_configuration_errors(tmp_path: pathlib.Path, sections):
    path = write_config(tmp_path, **sections)
    assert main(["rdf", "-c", str(path)]) == EXIT_CONFIG


def test_missing_config(tmp_path: pathlib.Path):
    assert main(["rdf", "-c", str(tmp_path / "missing.json")]) == EXIT_CONFIG


def test_bad_override(tmp_path: pathlib.Path):
    path = write_config(tmp_path)
    assert main(["gate", "-c", str(path), "--jobs", "0"]) == EXIT_CONFIG


def test_rdf_memory_guard(tmp_path: pathlib.Path, capsys: pytest.CaptureFixture):
    path = write_config(tmp_path, sampling={"n": 100}, spectrum={"max_entries": 10.0})
    assert main(["rdf", "-c", str(path)]) == EXIT_NUMERIC
    assert "Numerical error" in capsys.readouterr().err


@pytest.mark.parametrize(
    "D, expected",
    [
        pytest.param(1.0, EXIT_OK, id="pass"),
        pytest.param(5.0, EXIT_GATE_FAIL, id="fail"),
    ],
)
def test_gate(tmp_path: pathlib.Path, D: float, expected: int):
    path = write_config(tmp_path, af=stationary_af_section(), D=D)
    assert main(["gate", "-c", str(path)]) == expected
    report = json.loads((tmp_path / "out" / "gate.json").read_text())
    assert report["gamma_c_estimate"] == pytest.approx(4.0)
    assert report["D"] == D
    assert report["model"]["base_var"] == 4.0


def test_n_sweep_partial(tmp_path: pathlib.Path, capsys: pytest.CaptureFixture):
    path = write_config(
        tmp_path,
        af=stationary_af_section(),
        D=1.0,
        sweep={"axis": "n", "n_values": [1, 2, 100], "phase_grid_size": 2, "max_cost": 1000},
    )
    assert main(["sweep", "-c", str(path)]) == EXIT_PARTIAL

    out = tmp_path / "out"
    rows = read_rows(out / "sweep_n_tdc0.4.csv")
    assert tuple(rows[0]) == SWEEP_HEADERS["n"]
    assert [row[0] for row in rows[1:]] == ["1", "2", "100"]
    assert [row[-1] for row in rows[1:]] == ["ok", "ok", "failed"]
    assert rows[3][4] == ""

    summary = json.loads((out / "sweep_n_summary.json").read_text())
    (curve,) = summary["curves"]
    assert curve["partial"]
    assert curve["file"] == "sweep_n_tdc0.4.csv"
    assert [failure["axis_value"] for failure in curve["failed"]] == [100]
    assert curve["gate"]["verdict"] == "PASS"
    assert curve["label"] == "certified"


def test_n_sweep_duty_curves(tmp_path: pathlib.Path):
    path = write_config(
        tmp_path,
        af={"base_var": 1.0, "lambda_c_seconds": 1e-9, "decay_rate_per_second": 1e300},
        sweep={
            "axis": "n",
            "n_values": [1, 2],
            "phase_grid_size": 4,
            "t_dc_values": [0.1, 0.7],
        },
    )
    assert main(["sweep", "-c", str(path)]) == EXIT_OK
    out = tmp_path / "out"
    low = read_rows(out / "sweep_n_tdc0.1.csv")
    high = read_rows(out / "sweep_n_tdc0.7.csv")
    for row_low, row_high in zip(low[1:], high[1:]):
        assert float(row_low[4]) < float(row_high[4])
    summary = json.loads((out / "sweep_n_summary.json").read_text())
    assert [curve["t_dc"] for curve in summary["curves"]] == [0.1, 0.7]
    assert all(curve["limsup_estimate"] is not None for curve in summary["curves"])


def test_phi_sweep(tmp_path: pathlib.Path):
    path = write_config(
        tmp_path,
        af=stationary_af_section(),
        D=1.0,
        sampling={"n": 2},
        sweep={"axis": "phi", "phi_values": [0.0, "1/4", 0.5]},
    )
    assert main(["sweep", "-c", str(path)]) == EXIT_OK
    rows = read_rows(tmp_path / "out" / "sweep_phi_tdc0.4_n2.csv")
    assert tuple(rows[0]) == SWEEP_HEADERS["phi"]
    assert [float(row[1]) for row in rows[1:]] == pytest.approx([1.0, 1.0, 1.0])


def test_distortion_sweep_figures_are_reproducible(tmp_path: pathlib.Path):
    path = write_config(
        tmp_path,
        D=0.15,
        sampling={"n": 1},
        sweep={"axis": "D", "D_values": [0.1, 0.2, 0.4], "n_values": [1, 2]},
    )
    outputs = []
    for name in ("first", "second"):
        out = tmp_path / name
        assert main(["sweep", "-c", str(path), "--out", str(out), "--svg"]) == EXIT_OK
        outputs.append(out)

    first, second = outputs
    for filename in ("sweep_D.svg", "sweep_D_tdc0.4_n1.csv", "sweep_D_tdc0.4_n2.csv"):
        assert (first / filename).read_bytes() == (second / filename).read_bytes()
    rates = [float(row[1]) for row in read_rows(first / "sweep_D_tdc0.4_n1.csv")[1:]]
    assert rates[0] > rates[1] > rates[2]
    summary = json.loads((first / "sweep_D_summary.json").read_text())
    assert [curve["n"] for curve in summary["curves"]] == [1, 2]
    assert summary["curves"][0]["gate"]["D"] == 0.4


def test_sweep_needs_section(tmp_path: pathlib.Path):
    path = write_config(tmp_path)
    assert main(["sweep", "-c", str(path)]) == EXIT_CONFIG


def test_verify_is_reproducible(tmp_path: pathlib.Path, capsys: pytest.CaptureFixture):
    path = write_config(
        tmp_path,
        af=stationary_af_section(),
        D=1.0,
        verify={
            "l": 4,
            "n_list": [10, 20],
            "phi_grid_size": 2,
            "moment_matrices": 20,
            "moment_max_dim": 6,
            "mc_cases": 2,
            "mc_samples": 1000,
            "sdd_matrices": 20,
            "info_l": 4,
            "info_blocks": 2,
            "info_samples": 1000,
            "finite_block_multiple": 4,
        },
    )
    reports, codes = [], []
    for name in ("first", "second"):
        out = tmp_path / name
        codes.append(main(["verify", "-c", str(path), "--out", str(out), "--seed", "3"]))
        reports.append((out / "verify.json").read_bytes())
    assert reports[0] == reports[1]
    assert codes[0] == codes[1]
    report = json.loads(reports[0])
    assert report["seed"] == 3
    assert len(report["checks"]) == 9
    statuses = {check["name"]: check["status"] for check in report["checks"]}
    # Two Monte Carlo cases give four intervals; one miss fails the coverage rule.
    monte_carlo = statuses.pop("moment_monte_carlo")
    assert "FAIL" not in statuses.values()
    expected = EXIT_OK if monte_carlo == "PASS" else EXIT_VERIFY_FAIL
    assert codes[0] == expected
    assert f"verify={report['status']}" in capsys.readouterr().out
