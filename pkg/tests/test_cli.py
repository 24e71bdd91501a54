"""Command line interface: exit codes, file outputs, manifests."""

import csv
import json
import subprocess

import pytest

from stratawalk.cli import _CURVE_KINDS, main


def write_cfg(tmp_path, payload, name="env.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


@pytest.fixture
def homog_cfg(tmp_path):
    return write_cfg(tmp_path, {"d": 1, "family": {"name": "Homogeneous"}})


@pytest.fixture
def cp_cfg(tmp_path):
    return write_cfg(
        tmp_path,
        {"d": 1, "family": {"name": "CampaninoPetritis", "eps": "alternating"}},
        name="cp.json",
    )


@pytest.fixture
def antisym_cfg(tmp_path):
    return write_cfg(
        tmp_path,
        {"d": 1, "family": {"name": "AntisymPowerLaw", "alpha": 2.0}},
        name="antisym.json",
    )


@pytest.fixture
def table_cfg(tmp_path):
    return write_cfg(
        tmp_path,
        {
            "d": 1,
            "table": {
                "window": [0, 1],
                "rows": [
                    [0.30, 0.30, 0.40, [[1], 0.5], [[-1], 0.5]],
                    [0.25, 0.25, 0.50, [[1], 0.5], [[-1], 0.5]],
                ],
                "extension": "periodic",
            },
        },
        name="table.json",
    )


@pytest.fixture(autouse=True)
def no_ambient_out(monkeypatch):
    monkeypatch.delenv("STRATA_OUT", raising=False)
    monkeypatch.delenv("STRATA_SEED", raising=False)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestExitCodes:
    def test_missing_config_is_usage_error(self, tmp_path, capsys):
        rc = main(["classify", "--config", str(tmp_path / "nope.json")])
        assert rc == 2
        assert "config error" in capsys.readouterr().err

    def test_malformed_json_is_usage_error(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text("{")
        assert main(["classify", "--config", str(path)]) == 2
        assert "not valid JSON" in capsys.readouterr().err

    def test_unknown_family_is_usage_error(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, {"d": 1, "family": {"name": "NoSuch"}})
        assert main(["classify", "--config", cfg]) == 2
        assert "unknown family" in capsys.readouterr().err

    def test_config_root_must_be_object(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1, 2]")
        assert main(["validate", "--config", str(path)]) == 2

    def test_empty_window_is_domain_error(self, homog_cfg, capsys):
        rc = main(["validate", "--config", homog_cfg, "--window", "5", "-5"])
        assert rc == 1
        assert capsys.readouterr().err.startswith("error:")

    def test_frequency_outside_window_is_domain_error(self, homog_cfg, capsys):
        # every requested t sits at or beyond the 1/2 cutoff
        rc = main([
            "chi-compare", "--config", homog_cfg,
            "--t-min", "0.55", "--t-max", "0.6",
            "--t-points", "2", "--samples", "400", "--cap", "5000",
        ])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert "0.1.0" in capsys.readouterr().out

    def test_subcommand_required(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2


class TestValidate:
    def test_report_and_sidecar(self, homog_cfg, tmp_path, capsys):
        out = tmp_path / "report"
        rc = main([
            "validate", "--config", homog_cfg,
            "--window", "-8", "8", "--out", str(out),
        ])
        assert rc == 0
        stdout = capsys.readouterr().out
        assert "condition 1: ok" in stdout
        payload = json.loads((out / "validate.json").read_text())
        assert payload["passed"] is True
        assert payload["checked_range"] == [-8, 8]
        assert payload["condition1"] and payload["condition2"] and payload["condition3"]
        assert payload["group_full_rank"] is True
        manifest = json.loads((out / "validate_manifest.json").read_text())
        assert manifest["command"] == "validate"
        assert manifest["outputs"] == ["validate.json"]

    def test_table_config_validates(self, table_cfg, capsys):
        assert main(["validate", "--config", table_cfg]) == 0
        assert "validation on n in [-200, 200]" in capsys.readouterr().out


class TestClassify:
    def test_prints_verdict(self, cp_cfg, capsys):
        assert main(["classify", "--config", cp_cfg]) == 0
        stdout = capsys.readouterr().out
        assert "Recurrent (periodic-zero-drift)" in stdout
        assert "vertical walk:" in stdout

    def test_out_writes_terms_and_manifest(self, homog_cfg, tmp_path):
        out = tmp_path / "cls"
        rc = main([
            "classify", "--config", homog_cfg,
            "--n-max", "200", "--out", str(out),
        ])
        assert rc == 0
        rows = read_csv(out / "criterion_terms.csv")
        assert rows[0] == ["n", "term", "provable"]
        assert len(rows) > 5
        assert all(float(r[1]) > 0 for r in rows[1:])
        manifest = json.loads((out / "classify_manifest.json").read_text())
        assert manifest["verdict"] == "Recurrent"
        assert manifest["provenance"] == "periodic-zero-drift"
        assert manifest["outputs"] == ["criterion_terms.csv"]
        assert manifest["options"]["n_max"] == 200
        assert set(manifest) >= {"command", "version", "created", "options"}

    def test_terms_file_matches_curve_command(self, table_cfg, tmp_path):
        # both commands must emit byte-identical tables for equal settings
        a, b = tmp_path / "a", tmp_path / "b"
        assert main([
            "classify", "--config", table_cfg,
            "--n-max", "150", "--out", str(a),
        ]) == 0
        assert main([
            "curve", "--config", table_cfg, "--values", "criterion_terms",
            "--n-max", "150", "--out", str(b),
        ]) == 0
        left = (a / "criterion_terms.csv").read_bytes()
        right = (b / "criterion_terms.csv").read_bytes()
        assert left == right


class TestScan:
    def test_verdict_flips_across_threshold(self, antisym_cfg, tmp_path, capsys):
        out = tmp_path / "sweep"
        rc = main([
            "scan", "--config", antisym_cfg,
            "--param", "alpha", "--values", "0.5,1.0,1.5",
            "--out", str(out),
        ])
        assert rc == 0
        rows = read_csv(out / "scan.csv")
        assert rows[0] == ["alpha", "verdict", "provenance"]
        verdicts = [r[1] for r in rows[1:]]
        assert verdicts == ["Transient", "Recurrent", "Recurrent"]
        assert "alpha = 0.5: Transient" in capsys.readouterr().out

    def test_json_format(self, antisym_cfg, tmp_path):
        out = tmp_path / "sweep"
        main([
            "scan", "--config", antisym_cfg,
            "--param", "alpha", "--values", "0.5,2.0",
            "--out", str(out), "--format", "json",
        ])
        rows = json.loads((out / "scan.json").read_text())
        assert [set(r) for r in rows] == [{"alpha", "verdict", "provenance"}] * 2
        assert rows[0]["verdict"] == "Transient"
        assert rows[1]["verdict"] == "Recurrent"

    def test_bad_values_list(self, antisym_cfg):
        assert main([
            "scan", "--config", antisym_cfg, "--values", "1.0,oops",
        ]) == 2

    def test_table_config_rejected(self, table_cfg):
        assert main(["scan", "--config", table_cfg, "--values", "1.0"]) == 2


class TestCurve:
    def test_psi_prints_to_stdout(self, homog_cfg, capsys):
        rc = main(["curve", "--config", homog_cfg, "--values", "psi",
                   "--n-max", "120"])
        assert rc == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "# psi"
        assert lines[1] == "n,psi,psi_plus,psi_minus"
        assert len(lines) > 3

    def test_unknown_kind_is_usage_error(self, homog_cfg, capsys):
        assert main(["curve", "--config", homog_cfg, "--values", "psi,bogus"]) == 2
        err = capsys.readouterr().err
        assert "unknown curve kind" in err
        for kind in _CURVE_KINDS:
            assert kind in err

    def test_multiple_kinds_written(self, homog_cfg, tmp_path):
        out = tmp_path / "curves"
        rc = main([
            "curve", "--config", homog_cfg, "--values", "psi,phi_pp,phi_full",
            "--n-max", "150", "--out", str(out),
        ])
        assert rc == 0
        for kind in ("psi", "phi_pp", "phi_full"):
            assert (out / f"{kind}.csv").exists()
        manifest = json.loads((out / "curve_manifest.json").read_text())
        assert manifest["outputs"] == ["psi.csv", "phi_pp.csv", "phi_full.csv"]

    def test_json_rows_carry_named_fields(self, homog_cfg, tmp_path):
        out = tmp_path / "curves"
        main([
            "curve", "--config", homog_cfg, "--values", "psi",
            "--n-max", "150", "--format", "json", "--out", str(out),
        ])
        rows = json.loads((out / "psi.json").read_text())
        assert all(set(r) == {"n", "psi", "psi_plus", "psi_minus"} for r in rows)
        ns = [r["n"] for r in rows]
        assert ns == sorted(ns) and ns[0] >= 100
        assert all(isinstance(r["psi"], float) and r["psi"] > 0 for r in rows)


class TestChiCompare:
    def test_table_and_manifest(self, homog_cfg, tmp_path, capsys):
        out = tmp_path / "chi"
        rc = main([
            "chi-compare", "--config", homog_cfg,
            "--t-min", "0.1", "--t-max", "0.3", "--t-points", "3",
            "--samples", "1200", "--cap", "30000", "--seed", "3",
            "--out", str(out),
        ])
        assert rc == 0
        assert "worst |cf - mc|" in capsys.readouterr().out
        rows = read_csv(out / "chi_compare.csv")
        assert rows[0][:4] == ["t", "cf_re", "cf_im", "cf_tail"]
        assert len(rows) == 4
        manifest = json.loads((out / "chi-compare_manifest.json").read_text())
        assert isinstance(manifest["worst_ratio"], float)
        assert manifest["options"]["seed"] == 3


class TestEnvironmentOverrides:
    def test_out_dir_from_env(self, homog_cfg, tmp_path, monkeypatch):
        out = tmp_path / "envout"
        monkeypatch.setenv("STRATA_OUT", str(out))
        assert main(["classify", "--config", homog_cfg, "--n-max", "150"]) == 0
        assert (out / "classify_manifest.json").exists()

    def test_seed_from_env(self, homog_cfg, tmp_path, monkeypatch):
        out = tmp_path / "seeded"
        monkeypatch.setenv("STRATA_SEED", "7")
        main([
            "chi-compare", "--config", homog_cfg,
            "--t-min", "0.2", "--t-max", "0.3", "--t-points", "2",
            "--samples", "500", "--cap", "5000", "--out", str(out),
        ])
        manifest = json.loads((out / "chi-compare_manifest.json").read_text())
        assert manifest["options"]["seed"] == 7


def test_console_script_entry_point():
    proc = subprocess.run(
        ["stratawalk", "--version"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == "0.1.0"
