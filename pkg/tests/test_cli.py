import json
import math

import pytest
import yaml

from landau_breather.cli import execute, main, number, parse_config
from landau_breather.errors import ConfigError


def write(tmp_path, text, name="run.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


@pytest.mark.parametrize("expr, value", [("4*pi", 4 * math.pi), ("2**3", 8.0), (1, 1.0),
                                         ("sqrt(4)/2", 1.0), ("-0.5", -0.5)])
def test_number(expr, value):
    assert number(expr) == pytest.approx(value)


@pytest.mark.parametrize("expr", ["__import__('os')", "pi.real", "x", True])
def test_number_rejects_code(expr):
    with pytest.raises((ValueError, SyntaxError)):
        number(expr)


def test_defaults_are_filled():
    cfg = parse_config(text="command: wegner\nparameters:\n  b_field: 4*pi\n  coupling: 0.1\n")
    p = cfg.parameters
    assert p["box_multiples"] == [1, 2] and p["samples_per_cell"] == 50
    assert len(p["intervals"]) == 4
    assert p["e0"] == pytest.approx(max(b for _, b in p["intervals"]))
    assert cfg.base_seed == 0 and cfg.parallelism == 1


def test_unknown_potential_names_field_and_line():
    text = "command: verify-potential\nparameters:\n  omega_minus: 0.2\n  potential: gaussian\n"
    with pytest.raises(ConfigError) as err:
        parse_config(text=text)
    assert err.value.field == "parameters.potential" and err.value.line == 4
    assert "line 4" in str(err.value)


def test_coupling_above_lambda0_is_rejected():
    text = ("command: wegner\nparameters:\n  b_field: 4*pi\n  certified: true\n"
            "  c_tilde: 0.001\n  coupling: 1.0\n")
    with pytest.raises(ConfigError) as err:
        parse_config(text=text)
    assert err.value.field == "parameters.coupling"
    assert "lambda0" in str(err.value) and "32" in str(err.value)


@pytest.mark.parametrize("text, field", [
    ("command: nope\n", "command"),
    ("command: ucp\nparameters:\n  b_field: 4*pi\n  radius: 0.7\n", "parameters.radius"),
    ("command: ucp\nparameters:\n  radius: 0.1\n", "parameters.b_field"),
    ("command: ucp\nparameters:\n  b_field: 4*pi\n  grid_points_per_unit: 3\n",
     "parameters.grid_points_per_unit"),
    ("command: ucp\nparameters:\n  b_field: 4*pi\n  colour: red\n", "parameters.colour"),
    ("command: wegner\nparameters:\n  b_field: 4*pi\n  coupling: 0.1\n  intervals: [[0, 10]]\n",
     "parameters.intervals"),
    ("command: verify-potential\nparameters:\n  omega_minus: 0.3\n  omega_plus: 0.2\n",
     "parameters.omega_minus"),
])
def test_config_errors(text, field):
    with pytest.raises(ConfigError) as err:
        parse_config(text=text)
    assert err.value.field == field


def test_malformed_yaml_reports_line():
    with pytest.raises(ConfigError) as err:
        parse_config(text="command: ucp\nparameters:\n  b_field: [1,\n")
    assert err.value.line is not None


def test_verify_potential_run(tmp_path):
    cfg = write(tmp_path, "command: verify-potential\nparameters:\n  potential: hat\n")
    assert main(["--config", str(cfg), "--output", str(tmp_path / "o")]) == 0
    cert = json.loads((tmp_path / "o" / "certificate.json").read_text())
    assert set(cert) == {"c_u", "r", "centers"} and cert["c_u"] > 0
    resolved = yaml.safe_load((tmp_path / "o" / "resolved_config.yaml").read_text())
    assert resolved["parameters"]["omega_plus"] == 0.4
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["status"] == 0 and "numpy" in manifest["versions"]


def test_config_error_exit_code(tmp_path):
    cfg = write(tmp_path, "command: verify-potential\nparameters:\n  potential: square\n")
    assert main(["--config", str(cfg), "--output", str(tmp_path / "o")]) == 2
    err = json.loads((tmp_path / "o" / "error.json").read_text())
    assert err["error"] == "ConfigError" and err["field"] == "parameters.potential"


def test_module_error_exit_code(tmp_path):
    cfg = write(tmp_path, "command: ucp\nparameters:\n  b_field: 4*pi\n  level: 12\n"
                          "  box_multiples: [1]\n  samples: 1\n")
    assert main(["--config", str(cfg), "--output", str(tmp_path / "o")]) == 1
    err = json.loads((tmp_path / "o" / "error.json").read_text())
    assert err["error"] == "ClusterAmbiguous"


def test_spectrum_run_exports(tmp_path):
    cfg = write(tmp_path, "command: spectrum\nparameters:\n  b_field: 4*pi\n  grid_points_per_unit: 8\n"
                          "  levels: [1, 2]\n  export_matrix: true\n")
    assert main(["--config", str(cfg), "--output", str(tmp_path / "o")]) == 0
    out = tmp_path / "o"
    assert len((out / "spectrum.csv").read_text().splitlines()) == 257
    assert (out / "hamiltonian.bin").stat().st_size == 16 + 256 * 256 * 16
    assert (out / "projector_level2.bin").stat().st_size == 16 + 256 * 8 * 16
    levels = json.loads((out / "manifest.json").read_text())["result"]["levels"]
    assert levels["1"]["rank"] == 8


def _ucp_cfg(tmp_path, jobs):
    return write(tmp_path, f"command: ucp\nparallelism: {jobs}\nbase_seed: 5\nparameters:\n"
                           "  b_field: 4*pi\n  box_multiples: [1, 2]\n  samples: 2\n", f"u{jobs}.yaml")


def test_reruns_are_byte_identical(tmp_path):
    cfg = _ucp_cfg(tmp_path, 1)
    main(["--config", str(cfg), "--output", str(tmp_path / "a")])
    main(["--config", str(cfg), "--output", str(tmp_path / "b")])
    assert (tmp_path / "a" / "ucp.csv").read_bytes() == (tmp_path / "b" / "ucp.csv").read_bytes()


def test_parallelism_does_not_change_results(tmp_path):
    main(["--config", str(_ucp_cfg(tmp_path, 1)), "--output", str(tmp_path / "a")])
    main(["--config", str(_ucp_cfg(tmp_path, 2)), "--output", str(tmp_path / "b")])
    assert (tmp_path / "a" / "ucp.csv").read_bytes() == (tmp_path / "b" / "ucp.csv").read_bytes()


def test_seed_override_changes_results(tmp_path):
    cfg = _ucp_cfg(tmp_path, 1)
    main(["--config", str(cfg), "--output", str(tmp_path / "a")])
    main(["--config", str(cfg), "--output", str(tmp_path / "b"), "--seed", "6"])
    assert (tmp_path / "a" / "ucp.csv").read_bytes() != (tmp_path / "b" / "ucp.csv").read_bytes()


def test_trace_bound_run(tmp_path):
    cfg = parse_config(text="command: trace-bound\nparameters:\n  instances: 40\n  physical_instances: 2\n",
                       overrides={"output": str(tmp_path)})
    assert execute(cfg) == 0
    result = json.loads((tmp_path / "manifest.json").read_text())["result"]
    assert result["holds_rate"] == 1.0 and result["physical"]["holds"] == 2
    assert len((tmp_path / "trace_bound.csv").read_text().splitlines()) == 41


def test_ids_run(tmp_path):
    cfg = parse_config(text="command: ids\nparameters:\n  b_field: 4*pi\n  coupling: 0.0\n"
                            "  samples_per_cell: 1\n  energy_points: 11\n",
                       overrides={"output": str(tmp_path)})
    assert execute(cfg) == 0
    rows = (tmp_path / "ids.csv").read_text().splitlines()
    assert rows[0] == "energy,ids,stderr" and len(rows) == 12
