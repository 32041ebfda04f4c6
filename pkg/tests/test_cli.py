import csv
import io
import json
from pathlib import Path

import pytest

from rplab.cli import (
    EXIT_CONFIG,
    EXIT_FAIL,
    EXIT_PASS,
    EXIT_SOLVER,
    ConfigError,
    main,
    report_csv,
    run_experiment,
    validate_config,
    validate_report,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


def test_clifford_d4_passes(tmp_path):
    out = tmp_path / "r.json"
    code = main(["run", str(_write(tmp_path, {"experiment": "clifford-check", "study": {"dims": [4]}})),
                 "--output", str(out)])
    assert code == EXIT_PASS
    doc = json.loads(out.read_text())
    validate_report(doc)
    res = [c for c in doc["checks"] if c["name"] == "clifford_residual_d4"][0]
    assert res["passed"] and res["value"] <= 1e-13


def test_scalar_rp_16x16(tmp_path):
    cfg = {"experiment": "scalar-rp", "lattice": {"dims": 2, "extent": [16, 16]}, "mass": 1.0}
    code, doc = run_experiment(validate_config(cfg))
    assert code == EXIT_PASS
    mins = [c for c in doc["checks"] if c["name"] == "gram_min_eig"][0]
    assert mins["value"] >= -1e-8
    spec = doc["spectra"]["gram"]
    assert spec == sorted(spec)


def test_negative_mass_is_config_error(tmp_path, capsys):
    cfg = {"experiment": "scalar-rp", "lattice": {"dims": 1, "extent": [8]}, "mass": -1.0}
    path = _write(tmp_path, cfg)
    assert main(["validate", str(path)]) == EXIT_CONFIG
    assert "mass" in capsys.readouterr().err
    assert main(["run", str(path)]) == EXIT_CONFIG


@pytest.mark.parametrize("cfg,field", [
    ({"experiment": "scalar-rp", "lattice": {"dims": 1, "extent": [8]}, "mass": 1, "colour": 1}, "colour"),
    ({"experiment": "nope"}, "experiment"),
    ({"experiment": "scalar-rp", "lattice": {"dims": 1, "extent": [7]}, "mass": 1}, "lattice"),
    ({"experiment": "dn-compare", "mass": 1}, "lattice"),
    ({"experiment": "scalar-rp", "lattice": {"dims": 2, "extent": [8, 4]}, "mass": 1,
      "xi": -5, "metric": {"R_amplitude": 1.0}}, "xi"),
])
def test_config_errors_name_field(tmp_path, cfg, field):
    path = _write(tmp_path, cfg)
    with pytest.raises(ConfigError, match=field):
        from rplab.cli import load_config
        load_config(path)
        run_experiment(load_config(path))


def test_curvature_violation_exit_code(tmp_path, capsys):
    cfg = {"experiment": "scalar-rp", "lattice": {"dims": 2, "extent": [8, 4]}, "mass": 1,
           "xi": -5, "metric": {"R_amplitude": 1.0}}
    assert main(["run", str(_write(tmp_path, cfg))]) == EXIT_CONFIG
    assert "xi" in capsys.readouterr().err


def test_unreadable_and_malformed(tmp_path):
    assert main(["validate", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["validate", str(bad)]) == EXIT_CONFIG


def test_solver_failure_exit_code(tmp_path):
    cfg = {"experiment": "scalar-rp", "lattice": {"dims": 2, "extent": [16, 16]}, "mass": 0.01,
           "solver": {"tolerance": 1e-14, "max_iter": 2}}
    out = tmp_path / "r.json"
    assert main(["run", str(_write(tmp_path, cfg)), "-o", str(out)]) == EXIT_SOLVER
    doc = json.loads(out.read_text())
    validate_report(doc)
    assert not doc["passed"] and "error" in doc
    assert doc["checks"][-1]["name"] == "solver_converged" and not doc["checks"][-1]["passed"]


def test_failed_check_exit_code(tmp_path):
    cfg = {"experiment": "action-identity", "lattice": {"dims": 2, "extent": [8, 4]}, "mass": 1.0,
           "study": {"spacings": [0.5, 0.25], "min_factor": 100.0}}
    assert main(["run", str(_write(tmp_path, cfg)), "-o", str(tmp_path / "r.json")]) == EXIT_FAIL


def test_csv_rows_match_checks(tmp_path):
    cfg = {"experiment": "contour-check"}
    out = tmp_path / "r.csv"
    assert main(["run", str(_write(tmp_path, cfg)), "--format", "csv", "-o", str(out)]) == EXIT_PASS
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    code, doc = run_experiment(validate_config(cfg))
    assert len(rows) == len(doc["checks"])
    assert [r["name"] for r in rows] == [c["name"] for c in doc["checks"]]
    assert report_csv(doc).splitlines()[0] == "name,value,tolerance,comparison,passed"


def test_reproducible_given_seed():
    cfg = validate_config({"experiment": "dirac-rp", "lattice": {"dims": 2, "extent": [8, 4]}, "mass": 1.0,
                           "basis": {"max_functions": 6},
                           "study": {"spacings": [0.5, 0.25], "lapses": [1.0], "modes": 4}, "seed": 7})
    _, a = run_experiment(cfg)
    _, b = run_experiment(cfg)
    a.pop("timings"), b.pop("timings")
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_stdout_when_no_output(tmp_path, capsys):
    assert main(["run", str(_write(tmp_path, {"experiment": "contour-check"}))]) == EXIT_PASS
    doc = json.loads(capsys.readouterr().out)
    validate_report(doc)


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_validate(path):
    assert main(["validate", str(path)]) == EXIT_PASS


def test_quantize_and_dn_compare_run():
    for cfg in ({"experiment": "quantize", "lattice": {"dims": 1, "extent": [8]}, "mass": 1.0},
                {"experiment": "dn-compare", "lattice": {"dims": 1, "extent": [16]}, "mass": 1.0}):
        code, doc = run_experiment(validate_config(cfg))
        assert code == EXIT_PASS, doc["checks"]
        validate_report(doc)
