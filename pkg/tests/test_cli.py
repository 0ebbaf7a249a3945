import json
import subprocess
import sys

import numpy as np
import pytest

from bbw.cli import main

HATS = {
    "order": 2,
    "family": [{"kind": "power", "degree": 0}, {"kind": "power", "degree": 1}],
    "knots": {"coarse": [0.0, 0.5, 1.0], "levels": 1},
}


def write(tmp_path, name, data):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def read_csv(path):
    lines = open(path).read().splitlines()
    return lines[0].split(","), np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])


def test_basis_hats_partition(tmp_path):
    cfg = write(tmp_path, "hats.json", HATS)
    out = tmp_path / "b.csv"
    assert main(["basis", "--config", cfg, "--out", str(out), "--samples", "11"]) == 0
    header, data = read_csv(out)
    assert header == ["x", "phi_0", "phi_1", "phi_2"]
    np.testing.assert_allclose(data[:, 1:].sum(axis=1), 1.0, atol=1e-12)


def test_basis_figure_one_has_nine_columns(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["basis", "--config", "figure1", "--family", "bspline", "--out", str(out)]) == 0
    header, data = read_csv(out)
    assert len(header) == 10 and data.shape[0] == 1000


def test_wavelets_hats(tmp_path):
    cfg = write(tmp_path, "hats.json", HATS)
    out = tmp_path / "w.csv"
    assert main(["wavelets", "--config", cfg, "--out", str(out), "--samples", "4001"]) == 0
    header, data = read_csv(out)
    assert header == ["x", "psi_0", "psi_1"]
    for c in (1, 2):
        assert abs(np.trapezoid(data[:, c], data[:, 0])) < 1e-9


def test_project_reports_errors(tmp_path, capsys):
    out = tmp_path / "p.csv"
    assert main(["project", "--config", "figure1", "--out", str(out)]) == 0
    header, data = read_csv(out)
    assert header == ["x", "bspline:error", "trig:error"]
    assert 1e-3 <= np.max(np.abs(data[:, 1])) <= 1e-1
    assert np.max(np.abs(data[:, 2])) < 1e-8
    assert "max |error|" in capsys.readouterr().err
    assert main(["project", "--config", "figure1", "--target", '{"kind": "power", "degree": 0}', "--out", str(out)]) == 0
    _, data = read_csv(out)
    assert np.max(np.abs(data[:, 1:])) < 1e-10


def test_forward_inverse_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    s = rng.standard_normal(15)
    data = tmp_path / "s.csv"
    data.write_text("value\n" + "\n".join(f"{v:.17g}" for v in s) + "\n")
    pyr = tmp_path / "pyr.json"
    assert main(["forward", "--config", "figure2", "--family", "trig", "--data", str(data), "--out", str(pyr)]) == 0
    back = tmp_path / "back.csv"
    assert main(["inverse", "--config", "figure2", "--family", "trig", "--data", str(pyr), "--out", str(back)]) == 0
    _, rec = read_csv(back)
    assert np.max(np.abs(rec[:, 0] - s)) < 1e-9
    pyr_csv = tmp_path / "pyr.csv"
    assert main(["forward", "--config", "figure2", "--family", "trig", "--data", str(data), "--out", str(pyr_csv)]) == 0
    assert main(["inverse", "--config", "figure2", "--family", "trig", "--data", str(pyr_csv), "--out", str(back)]) == 0
    _, rec = read_csv(back)
    assert np.max(np.abs(rec[:, 0] - s)) < 1e-9


def test_constant_column_gives_zero_details(tmp_path):
    data = tmp_path / "one.csv"
    data.write_text("\n".join(["1.0"] * 15))
    pyr = tmp_path / "pyr.json"
    assert main(["forward", "--config", "figure2", "--family", "bspline", "--data", str(data), "--out", str(pyr)]) == 0
    details = json.loads(pyr.read_text())["details"]
    assert max(abs(v) for d in details for v in d) < 1e-12


def test_length_mismatch_names_expected_length(tmp_path, capsys):
    data = tmp_path / "short.csv"
    data.write_text("1\n2\n3\n")
    assert main(["forward", "--config", "figure2", "--family", "trig", "--data", str(data)]) == 2
    assert "15" in capsys.readouterr().err


def test_refine_dumps_matrix_and_scheme(tmp_path):
    out = tmp_path / "r.json"
    assert main(["refine", "--config", "figure2", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert set(data) == {"bspline", "trig"}
    assert data["trig"]["H"]["rows"] == 15
    assert [s["type"] for s in data["trig"]["scheme"]["steps"]] == ["U", "P", "D"]


def test_check_passes_on_figure_configs(capsys):
    assert main(["check", "--config", "figure2"]) == 0
    assert "all checks passed" in capsys.readouterr().out


@pytest.mark.parametrize(
    "patch, needle",
    [
        ({"order": 1, "family": [{"kind": "power", "degree": 0}]}, "order"),
        ({"knots": {"coarse": [0.0, 0.5, 0.5, 1.0], "levels": 1}}, "knot 2"),
        ({"family": [{"kind": "sin", "freq": 1}, {"kind": "power", "degree": 1}]}, "1 and x"),
        ({"family": [{"kind": "power", "degree": 0}]}, "members"),
    ],
)
def test_invalid_configs_exit_two(tmp_path, capsys, patch, needle):
    cfg = write(tmp_path, "bad.json", {**HATS, **patch})
    assert main(["check", "--config", cfg]) == 2
    assert needle in capsys.readouterr().err


def test_tolerance_scale_env(monkeypatch, capsys):
    monkeypatch.setenv("BBW_TOLERANCE_SCALE", "1e-30")
    assert main(["check", "--config", "figure2", "--family", "bspline"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["wavelets", "--config", "figure2", "--out", str(a), "--samples", "50"])
    main(["wavelets", "--config", "figure2", "--out", str(b), "--samples", "50"])
    assert a.read_bytes() == b.read_bytes()


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "bbw.cli", "basis", "--config", "figure1", "--samples", "3"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.startswith("x,bspline:phi_0")
