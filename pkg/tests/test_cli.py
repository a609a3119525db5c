import csv
import json
import subprocess
import sys
from importlib import resources

import pytest

from mechconvert.cli import main

DEVICE = str(resources.files("mechconvert").joinpath("data/reference_device.json"))


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_sweep_contains_headline_row(tmp_path):
    assert main(["sweep", "--device", DEVICE, "--c-total-min", "1", "--c-total-max", "3000", "--c-total", "1525", "--out", str(tmp_path)]) == 0
    table = rows(tmp_path / "sweep_cooperativity.csv")
    assert len(table) == 201
    (row,) = [r for r in table if float(r["c_total"]) == 1525]
    assert float(row["t_sq"]) == pytest.approx(0.949, abs=0.005)
    assert float(row["gamma_total_hz"]) == pytest.approx(14039.2)
    meta = json.loads((tmp_path / "sweep_cooperativity.json").read_text())
    assert meta["provenance"]["tool"] == "mechconvert" and len(meta["provenance"]["device_sha256"]) == 64


def test_sweep_modes(tmp_path):
    assert main(["sweep", "--device", DEVICE, "--mode", "ratio", "--c1-fixed", "400", "--points", "11", "--out", str(tmp_path)]) == 0
    assert len(rows(tmp_path / "sweep_ratio.csv")) == 11
    assert main(["sweep", "--device", DEVICE, "--mode", "detuning", "--c-total", "156", "--points", "21", "--out", str(tmp_path)]) == 0
    det = rows(tmp_path / "sweep_detuning.csv")
    assert len(det) == 21 and set(det[0]) == {"delta_hz", "t_sq", "r1_sq", "r2_sq"}


@pytest.mark.parametrize(
    "argv",
    [
        ["sweep", "--device", DEVICE, "--points", "0"],
        ["sweep", "--device", DEVICE, "--mode", "ratio"],
        ["sweep", "--device", DEVICE, "--eta1", "1.5"],
        ["sweep", "--device", DEVICE, "--nonsense"],
        ["spectrum", "--device", DEVICE],
        ["spectrum", "--device", DEVICE, "--c-total", "10", "--synthesize"],
        ["design", "--device", DEVICE],
        [],
    ],
)
def test_usage_errors_exit_1(argv, tmp_path):
    try:
        code = main(argv + ["--out", str(tmp_path)] if argv else argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 1


def test_missing_device_exits_3(tmp_path):
    assert main(["sweep", "--device", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 3


def test_spectrum_floor_and_fit(tmp_path):
    out = str(tmp_path)
    assert main(["spectrum", "--device", DEVICE, "--c-total", "160", "--out", out]) == 0
    meta = json.loads((tmp_path / "spectrum_c160.json").read_text())
    assert meta["floor_quanta"] == pytest.approx(21.8, abs=0.05)
    data = rows(tmp_path / "spectrum_c160.csv")
    assert len(data) == 4001 and set(data[0]) == {"delta_hz", "quanta"}
    assert main(["fit", str(tmp_path / "spectrum_c160.csv"), "--out", out]) == 0
    (row,) = rows(tmp_path / "fit_summary.csv")
    assert float(row["n_th"]) == pytest.approx(60, rel=1e-6)
    rec = json.loads((tmp_path / "fit_spectrum_c160.json").read_text())
    assert rec["fit"]["params"]["fwhm"]["value"] == pytest.approx(9.2 * 161, rel=1e-3)


def test_fit_continues_past_bad_file(tmp_path):
    out = str(tmp_path)
    main(["spectrum", "--device", DEVICE, "--c-total", "160", "--out", out])
    bad = tmp_path / "bad.csv"
    bad.write_text("delta_hz,quanta\n")
    assert main(["fit", str(bad), str(tmp_path / "spectrum_c160.csv"), "--out", out]) == 3
    assert (tmp_path / "fit_spectrum_c160.json").exists()


def test_design_exit_codes(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["design", "--device", DEVICE, "--bandwidth-hz", "14039.2", "--out", out]) == 0
    res = json.loads((tmp_path / "design.json").read_text())
    assert res["solutions"][0]["rates"]["C1"] == pytest.approx(762.5)
    assert main(["design", "--device", DEVICE, "--split-t-sq", "0.99", "--c1-fixed", "400", "--out", out]) == 2
    res = json.loads((tmp_path / "design.json").read_text())
    assert res["feasible"] is False and res["max_achievable"] == pytest.approx(0.96 * 0.99 * 400 / 401)
    target = tmp_path / "t.json"
    target.write_text(json.dumps({"split_t_sq": 0.5, "c1_fixed": 400}))
    assert main(["design", "--device", DEVICE, "--target", str(target), "--out", out]) == 0
    assert "[lesser]" in capsys.readouterr().out


def run_all(out):
    main(["sweep", "--device", DEVICE, "--points", "50", "--out", out])
    main(["spectrum", "--device", DEVICE, "--c-total", "160", "--c-total", "1525", "--synthesize", "--seed", "42", "--out", out])


def test_outputs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run_all(str(a))
    run_all(str(b))
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir()) and len(names) == 6
    for n in names:
        if n.endswith(".csv"):
            assert (a / n).read_bytes() == (b / n).read_bytes()


def test_console_script_entry(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "mechconvert.cli", "sweep", "--device", DEVICE, "--points", "3", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "sweep_cooperativity.csv").exists()
