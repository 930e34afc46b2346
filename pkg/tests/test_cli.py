import csv
import json
import subprocess
import sys

import pytest

from zkcyl import __version__
from zkcyl.cli import (
    EXIT_CONFIG,
    EXIT_NUMERIC,
    EXIT_OK,
    SCHEMA,
    ConfigError,
    load_config,
    main,
    parse_text,
    typed,
    validate,
    verify_manifest,
)

SMALL = """
scenario = conserve
grid.Lx = 2
grid.Mx = 64
grid.My = 16
integrator.dt = 0.01
integrator.Tend = 0.2
integrator.save_every = 5
data.width = 1.0
"""


def config(tmp_path, text=SMALL, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestConfig:
    """Parsing and validation of run configs."""

    def test_defaults_and_overrides(self):
        cfg = typed(parse_text("scenario = gwp_table\n", ["sweep.s=19/20, 24/25"]))
        assert cfg["grid.Mx"] == SCHEMA["grid.Mx"][1]
        assert [str(s) for s in cfg["sweep.s"]] == ["19/20", "24/25"]

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown key"):
            typed(parse_text("scenario = conserve\ngrid.Mz = 4\n"))

    def test_bad_value(self):
        with pytest.raises(ConfigError, match="grid.Mx"):
            typed(parse_text("scenario = conserve\ngrid.Mx = many\n"))

    def test_valid_config_has_no_diagnostics(self, tmp_path):
        cfg = load_config(config(tmp_path), [f"out={tmp_path / 'o'}"])
        assert validate(cfg) == []

    def test_band_beyond_nyquist_is_named(self, tmp_path):
        cfg = typed(parse_text("scenario = bilinear_suite\nsweep.bands = 1:1:64:1\n", [f"out={tmp_path}"]))
        diags = validate(cfg)
        assert len(diags) == 1 and "N=64" in diags[0] and "Nyquist" in diags[0]

    def test_threshold_regularity_is_infeasible(self, tmp_path):
        cfg = typed(parse_text("scenario = gwp_table\nsweep.s = 29/31\n", [f"out={tmp_path}"]))
        assert any("infeasible s" in d for d in validate(cfg))

    def test_other_diagnostics(self, tmp_path):
        cfg = typed(parse_text("scenario = scaling_suite\nsweep.lambda = 3\nimultiplier.s = 1.2\n", [f"out={tmp_path}"]))
        diags = validate(cfg)
        assert any("power of two" in d for d in diags) and any("imultiplier" in d for d in diags)

    def test_validation_has_no_side_effects(self, tmp_path):
        target = tmp_path / "never"
        validate(typed(parse_text("scenario = conserve\n", [f"out={target}"])))
        assert not target.exists()


class TestRun:
    """End-to-end runs through :func:`main`."""

    def test_conserve(self, tmp_path, capsys):
        out = tmp_path / "o"
        assert main(["run", str(config(tmp_path)), "--out", str(out)]) == EXIT_OK
        summary = json.loads(capsys.readouterr().out)
        # coarse dt: Runge-Kutta stages conserve mass only to O(dt^4)
        assert summary["mass_drift_rel"] <= 1e-7
        rows = list(csv.DictReader(open(out / "ledger.csv")))
        assert len(rows) == 5 and set(rows[0]) >= {"t", "M", "E", "EI", "mismatch"}
        manifest = json.loads((out / "manifest.json").read_text())
        assert set(manifest["files"]) == {"ledger.csv", "final.snap"}
        assert manifest["config"]["grid.Mx"] == 64

    def test_deterministic_outputs(self, tmp_path):
        cfg = config(tmp_path, "scenario = counting_suite\ncounting.instances = 40\nseed = 3\n")
        for name in ("a", "b"):
            assert main(["run", str(cfg), "--out", str(tmp_path / name)]) == EXIT_OK
        for f in ("counting.csv", "preimage.csv"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_bilinear_run_is_deterministic(self, tmp_path):
        text = "scenario = bilinear_suite\nsweep.seeds = 2\nsweep.bands = 1:1:4:1\nprobe.refine = false\n"
        cfg = config(tmp_path, text)
        for name in ("a", "b"):
            assert main(["run", str(cfg), "--out", str(tmp_path / name)]) == EXIT_OK
        assert (tmp_path / "a" / "bilinear.csv").read_bytes() == (tmp_path / "b" / "bilinear.csv").read_bytes()

    def test_empty_sweep_exits_with_config_error(self, tmp_path, capsys):
        cfg = config(tmp_path, "scenario = drift_vs_N\nsweep.N =\n")
        assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
        assert "empty sweep" in capsys.readouterr().err
        assert not (tmp_path / "o").exists()

    def test_missing_file(self, tmp_path):
        assert main(["validate", str(tmp_path / "nope.cfg")]) == EXIT_CONFIG

    def test_validate_command(self, tmp_path, capsys):
        assert main(["validate", str(config(tmp_path)), "--set", f"out={tmp_path}"]) == EXIT_OK
        assert main(["validate", str(config(tmp_path)), "--set", "integrator.dt=0.03"]) == EXIT_CONFIG
        assert "multiple of dt" in capsys.readouterr().out

    def test_blowup_exits_with_numeric_error(self, tmp_path, capsys):
        sets = ["data.amplitude=1e6", "integrator.scheme=strang", "integrator.dt=0.1",
                "integrator.Tend=5", "integrator.save_every=1"]
        out = tmp_path / "o"
        argv = ["run", str(config(tmp_path)), "--out", str(out)]
        for item in sets:
            argv += ["--set", item]
        with pytest.warns(RuntimeWarning):
            code = main(argv)
        assert code == EXIT_NUMERIC
        assert "numerical failure" in capsys.readouterr().err
        assert (out / "diagnostic_ledger.csv").exists()

    def test_manifest_detects_tampering(self, tmp_path):
        out = tmp_path / "o"
        cfg = config(tmp_path, "scenario = gwp_table\nsweep.s = 19/20, 97/100\n")
        assert main(["run", str(cfg), "--out", str(out)]) == EXIT_OK
        assert verify_manifest(out) == []
        rows = list(csv.reader(open(out / "gwp.csv")))
        assert rows[1][:5] == ["19/20", "True", "1/39", "130/3", "10/9"]
        with open(out / "gwp.csv", "a") as fh:
            fh.write("extra\n")
        assert verify_manifest(out) == ["gwp.csv"]

    def test_scaling_run(self, tmp_path, capsys):
        cfg = config(tmp_path, "scenario = scaling_suite\ngrid.Mx = 64\ngrid.My = 64\nimultiplier.N = 2\n")
        assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["l2_error"] <= 1e-12

    def test_version_entry_point(self):
        res = subprocess.run([sys.executable, "-m", "zkcyl.cli", "version"], capture_output=True, text=True)
        assert res.returncode == 0 and res.stdout.strip() == __version__
