import copy
import hashlib
import io
import json
import subprocess
import sys

import pytest

from nonlinop import cli
from nonlinop.errors import ConfigError, ReportError
from nonlinop.experiment import (CSV_HEADER, config_from_dict, csv_text, decays,
                                 format_number, load_config, render_report, report_passed,
                                 run_sweep, write_csv, write_outputs)

BASE = {
    "families": ["box", "gauss_weierstrass"],
    "functions": ["constant", "linear", "quadratic"],
    "N_values": [1, 2],
    "domain": {"kind": "finite", "a": -1.0, "b": 1.0},
    "x0_points": [0.0, 0.3],
    "lambda_ladder": [10, 100, 1000, 10000],
}


def cfg_with(**changes):
    obj = copy.deepcopy(BASE)
    obj.update(changes)
    return config_from_dict(obj)


@pytest.fixture(scope="module")
def base_rows():
    return run_sweep(config_from_dict(BASE))


def test_row_count_and_order(base_rows):
    assert len(base_rows) == 96
    assert (base_rows[0].family, base_rows[0].function, base_rows[0].N) == \
        ("box", "constant", 1)
    assert [r.lam for r in base_rows[:4]] == [10.0, 100.0, 1000.0, 10000.0]
    assert base_rows[-1].family == "gauss_weierstrass" and base_rows[-1].x0 == 0.3
    for r in base_rows:
        assert r.error is None
        assert r.abs_error == abs(r.operator_value - r.target)


def test_gauss_quadratic_example(base_rows):
    errs = [r.abs_error for r in base_rows
            if (r.family, r.function, r.N, r.x0) == ("gauss_weierstrass", "quadratic", 1, 0.3)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-2


def test_csv_shape(base_rows, tmp_path):
    path = tmp_path / "sweep.csv"
    n = write_csv(base_rows, path)
    data = path.read_bytes()
    assert n == len(data)
    lines = data.decode("utf-8").split("\n")
    assert lines[0] == CSV_HEADER
    assert data.endswith(b"\n") and len(lines) == 98 and lines[-1] == ""
    # decomposition columns stay empty when disabled
    assert lines[1].endswith(",,,,,,,,,,,")


def test_empty_csv(tmp_path):
    assert csv_text([]) == CSV_HEADER + "\n"
    assert write_csv([], tmp_path / "e.csv") == len(CSV_HEADER) + 1


def test_number_format():
    assert format_number(1 / 3) == "3.33333333e-1"
    assert format_number(0.0) == "0.00000000e0"
    assert format_number(12345.0) == "1.23450000e4"
    assert format_number(None) == ""


def test_csv_write_error(tmp_path):
    with pytest.raises(OSError, match="cannot write"):
        write_csv([], tmp_path / "missing" / "x.csv")


def test_determinism(base_rows):
    again = run_sweep(config_from_dict(BASE))
    assert csv_text(base_rows) == csv_text(again)


def test_row_independence(base_rows):
    smaller = run_sweep(cfg_with(functions=["constant", "quadratic"]))
    kept = [r for r in base_rows if r.function != "linear"]
    assert csv_text(smaller) == csv_text(kept)


@pytest.mark.parametrize("change, message", [
    ({"famlies": ["box"]}, "unknown config keys"),
    ({"families": ["cauchy"]}, "cauchy"),
    ({"functions": []}, "non-empty"),
    ({"N_values": [0]}, "positive"),
    ({"N_values": [1.5]}, "integers"),
    ({"N_values": [9]}, "exceeds"),
    ({"lambda_ladder": [100, 10]}, "ascending"),
    ({"x0_points": [1.0]}, "interior"),
    ({"x0_points": "everywhere"}, "x0_points"),
    ({"domain": {"kind": "finite", "a": 1, "b": 0}}, "domain"),
    ({"decomposition": "yes"}, "true or false"),
    ({"quad_tol": -1}, "positive"),
    ({"functions": ["unit_step"], "domain": {"kind": "real_line"}}, "bounded/integrable"),
])
def test_config_errors(change, message):
    with pytest.raises(ConfigError, match=message):
        cfg_with(**change)


def test_missing_key():
    obj = copy.deepcopy(BASE)
    del obj["lambda_ladder"]
    with pytest.raises(ConfigError, match="missing"):
        config_from_dict(obj)


def test_load_config_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(bad)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.json")


def test_decays_with_noise_floor():
    assert decays([1.0, 0.1, 0.01], [0, 0, 0])
    assert not decays([1.0, 0.1, 0.1], [0, 0, 0])
    assert decays([1e-15, 2e-15, 1e-15], [1e-8] * 3)


def test_all_pass_report(base_rows):
    text, script = render_report(base_rows, config_from_dict(BASE))
    assert report_passed(text)
    assert "FAIL" not in text
    assert "sweep.csv" in script and "errors.png" in script


def test_bimodal_without_allow_invalid_fails_naming_b():
    cfg = cfg_with(families=["bimodal_control"], functions=["linear"], N_values=[1],
                   x0_points=[0.0])
    rows = run_sweep(cfg)
    assert all(r.error == "class_a:b+d" for r in rows)
    text, _ = render_report(rows, cfg)
    fail = [ln for ln in text.splitlines() if ln.startswith("FAIL validation")]
    assert len(fail) == 1 and "condition (b)" in fail[0] and '"t1"' in fail[0]
    assert not report_passed(text)
    assert "error:class_a:b+d" in csv_text(rows)


def test_step_control_report():
    cfg = cfg_with(families=["box", "gauss_weierstrass"], functions=["unit_step"],
                   N_values=[1], x0_points=[0.0])
    rows = run_sweep(cfg)
    for r in rows:
        assert r.verdict_point == "non_lebesgue"
        assert abs(r.abs_error - 0.5) <= 1e-3
    text, _ = render_report(rows, cfg)
    lines = [ln for ln in text.splitlines() if "expected non-convergence" in ln]
    assert len(lines) == 2 and all(ln.startswith("PASS") for ln in lines)
    assert report_passed(text)


def test_report_missing_columns():
    cfg = config_from_dict(BASE)
    with pytest.raises(ReportError):
        render_report([{"family": "box"}], cfg, validations={})


def test_decomposition_rows_and_ledger():
    cfg = cfg_with(families=["picard"], functions=["quadratic", "clipped_oscillator"],
                   N_values=[2], x0_points=[0.5], lambda_ladder=[10, 1000],
                   decomposition=True)
    rows = run_sweep(cfg)
    assert len(rows) == 2 * 2 * 2
    assert [r.delta for r in rows[:2]] == [0.05, 0.2]
    text, _ = render_report(rows, cfg)
    for name in ("partition identity", "triangle ledger", "bound_3", "bound_4", "bound_9"):
        assert f"PASS {name}: 8 rows" in text


def test_plot_script_runs(base_rows, tmp_path):
    pytest.importorskip("matplotlib")
    paths = write_outputs(base_rows, config_from_dict(BASE), tmp_path)
    subprocess.run([sys.executable, paths["plot"]], check=True, timeout=120)
    assert (tmp_path / "errors.png").stat().st_size > 0


# command line

def write_cfg(tmp_path, **changes):
    obj = copy.deepcopy(BASE)
    obj.update(changes)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(obj))
    return str(path)


SMALL = dict(families=["gauss_weierstrass"], functions=["quadratic"], N_values=[1],
             x0_points=[0.3])


def run_cli(*argv):
    buf = io.StringIO()
    code = cli.main(list(argv), out=buf)
    return code, buf.getvalue()


def test_cli_sweep(tmp_path):
    cfg = write_cfg(tmp_path, **SMALL)
    code, text = run_cli("sweep", cfg, "--out", str(tmp_path / "a"))
    assert code == 0 and text.startswith("sweep report")
    assert (tmp_path / "a" / "sweep.csv").exists()
    code, _ = run_cli("--quad-tol", "1e-10", "sweep", cfg, "--out", str(tmp_path / "b"))
    assert code == 0


def test_cli_sweep_fail(tmp_path):
    cfg = write_cfg(tmp_path, **dict(SMALL, families=["bimodal_control"]))
    assert run_cli("sweep", cfg, "--out", str(tmp_path / "o"))[0] == 1


def test_cli_validate_kernel(tmp_path):
    code, text = run_cli("validate-kernel", write_cfg(tmp_path, **SMALL))
    assert code == 0 and json.loads(text)["gauss_weierstrass"]["passed"]
    cfg = write_cfg(tmp_path, **dict(SMALL, families=["lambda_independent_control"]))
    code, text = run_cli("validate-kernel", cfg)
    assert code == 1 and "d" in json.loads(text)["lambda_independent_control"]["failed"]


def test_cli_decompose(tmp_path):
    cfg = write_cfg(tmp_path, **SMALL)
    code, text = run_cli("decompose", cfg, "--lambda", "100", "--x0", "0.3", "--delta", "0.2")
    assert code == 0
    doc = json.loads(text)
    assert doc[0]["checks"] == {k: True for k in doc[0]["checks"]}
    # x0 on the boundary is an argument error
    code, _ = run_cli("decompose", cfg, "--lambda", "100", "--x0", "1", "--delta", "0.2")
    assert code == 2


def test_cli_lebesgue_scan():
    code, text = run_cli("lebesgue-scan", "unit_step", "--x0", "0")
    assert code == 0 and json.loads(text)["verdict"] == "non_lebesgue"
    code, text = run_cli("lebesgue-scan", "linear", "--x0", "0", "--scan-tol", "1e-6")
    assert code == 1  # annotated lebesgue, but h/2 never drops below 1e-6
    assert run_cli("lebesgue-scan", "sawtooth", "--x0", "0")[0] == 2


@pytest.mark.parametrize("argv", [[], ["sweep"], ["frobnicate"], ["sweep", "/no/such.json"],
                                  ["decompose", "x.json", "--lambda", "abc"]])
def test_cli_usage_errors(argv):
    assert run_cli(*argv)[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "nonlinop", "lebesgue-scan", "linear",
                           "--x0", "0.3"], capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["verdict"] == "lebesgue"


def test_cli_csv_is_byte_stable(tmp_path):
    cfg = write_cfg(tmp_path, **SMALL)
    digests = []
    for name in ("r1", "r2"):
        assert run_cli("sweep", cfg, "--out", str(tmp_path / name))[0] == 0
        digests.append(hashlib.sha256((tmp_path / name / "sweep.csv").read_bytes()).hexdigest())
    assert digests[0] == digests[1]
