"""End-to-end CLI tests: commands, formats, config merging, manifests, exit codes."""

import hashlib
import json
import subprocess
import sys
from fractions import Fraction

import pytest

import localpurity.weingarten as weingarten
from localpurity import __version__
from localpurity.cli import main


@pytest.fixture(autouse=True)
def _isolate(tmp_path, monkeypatch):
    # manifests for stdout runs land in the output dir; keep them in tmp
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("LOCALPURITY_OUT_DIR", raising=False)


def run_cli(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def csv_rows(text):
    lines = [l for l in text.splitlines() if l and not l.startswith("#")]
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:]]


class TestExact:
    def test_csv_row_values(self, capsys):
        code, out, _ = run_cli(
            capsys, "exact", "--na", "2", "--nb", "2", "--x", "3/5"
        )
        assert code == 0
        assert out.splitlines()[0] == "# schema: localpurity.exact.v1"
        rows = csv_rows(out)
        assert rows[0]["quantity"] == "m1"
        assert (rows[0]["numerator"], rows[0]["denominator"]) == ("16", "25")
        assert rows[0]["decimal"] == "0.64"

    def test_fifteen_digit_decimals(self, capsys):
        code, out, _ = run_cli(
            capsys, "exact", "--na", "2", "--nb", "3", "--x", "pure"
        )
        assert code == 0
        assert csv_rows(out)[0]["decimal"] == "0.714285714285714"

    def test_second_moment_and_cumulant(self, capsys):
        code, out, _ = run_cli(
            capsys, "exact", "--na", "2", "--nb", "2", "--x", "3/10", "--k", "2",
            "--avg-p3", "1/10", "--avg-p4", "177/5000",
        )
        assert code == 0
        rows = {r["quantity"]: r for r in csv_rows(out)}
        assert rows["m2"]["numerator"] == "1353"
        assert rows["m2"]["denominator"] == "5000"
        assert Fraction(int(rows["k2"]["numerator"]), int(rows["k2"]["denominator"])) == (
            Fraction(1353, 5000) - Fraction(13, 25) ** 2
        )

    def test_beta_row_is_selfconsistent(self, capsys):
        code, out, _ = run_cli(
            capsys, "exact", "--na", "2", "--nb", "2", "--x", "pure", "--k", "2",
            "--beta", "1/2",
        )
        assert code == 0
        rows = {r["quantity"]: r for r in csv_rows(out)}
        frac = lambda r: Fraction(int(r["numerator"]), int(r["denominator"]))
        assert frac(rows["m1_beta"]) == frac(rows["m1"]) - Fraction(1, 2) * frac(rows["k2"])

    def test_jsonl_format(self, capsys):
        code, out, _ = run_cli(
            capsys, "exact", "--na", "2", "--nb", "2", "--x", "mixed",
            "--format", "jsonl",
        )
        assert code == 0
        lines = [json.loads(l) for l in out.splitlines()]
        assert lines[0]["schema"] == "localpurity.exact.v1"
        assert lines[1] == {
            "quantity": "m1", "numerator": "1", "denominator": "2", "decimal": "0.5",
        }

    def test_generic_x_needs_power_sums_for_k2(self, capsys):
        code, _, err = run_cli(
            capsys, "exact", "--na", "2", "--nb", "2", "--x", "1/2", "--k", "2"
        )
        assert code == 2
        assert "avg-p3" in err

    def test_swapped_dims_rejected(self, capsys):
        code, _, err = run_cli(capsys, "exact", "--na", "3", "--nb", "2", "--x", "1")
        assert code == 2
        assert "n_a <= n_b" in err

    def test_out_of_range_purity_rejected(self, capsys):
        code, _, _ = run_cli(capsys, "exact", "--na", "2", "--nb", "2", "--x", "1/9")
        assert code == 2

    def test_missing_required_flags(self, capsys):
        code, _, err = run_cli(capsys, "exact", "--na", "2", "--nb", "2")
        assert code == 2
        assert "--x" in err


class TestMc:
    def test_canonical_jsonl(self, capsys):
        code, out, _ = run_cli(
            capsys, "mc", "--na", "2", "--nb", "2", "--x", "0.6", "--seed", "5",
            "--samples", "500", "--burn-in", "200",
        )
        assert code == 0
        rec = json.loads(out.splitlines()[0])
        assert rec["schema"] == "localpurity.mc.v1"
        assert rec["estimator"] == "canonical"
        assert rec["seed"] == 5
        assert 0.5 < rec["mean"] < 0.75
        assert rec["stderr"] > 0

    def test_power_sums_estimator(self, capsys):
        code, out, _ = run_cli(
            capsys, "mc", "--na", "2", "--nb", "2", "--x", "0.6",
            "--estimator", "power-sums", "--seed", "5", "--samples", "500",
            "--burn-in", "200",
        )
        assert code == 0
        recs = [json.loads(l) for l in out.splitlines()]
        assert [r["quantity"] for r in recs] == ["avg_p3", "avg_p4"]

    def test_seed_autogenerated_and_recorded(self, capsys, tmp_path):
        code, out, _ = run_cli(
            capsys, "mc", "--na", "2", "--nb", "2", "--x", "mixed", "--samples", "50",
        )
        assert code == 0
        rec = json.loads(out.splitlines()[0])
        manifest = json.loads((tmp_path / "mc.manifest.json").read_text())
        assert manifest["seeds"] == [rec["seed"]]
        assert 0 <= rec["seed"] < 2**63

    def test_diagnostic_failure_exits_3(self, capsys):
        code, _, err = run_cli(
            capsys, "mc", "--na", "2", "--nb", "2", "--x", "0.999999",
            "--shell-eps", "1e-9", "--samples", "100", "--burn-in", "50",
            "--seed", "3",
        )
        assert code == 3
        assert "acceptance" in err

    def test_unknown_estimator_rejected(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["mc", "--na", "2", "--nb", "2", "--x", "0.6",
                  "--estimator", "bogus"])
        assert exc.value.code == 2


class TestSweepBeta:
    def test_csv_columns_and_prediction(self, capsys):
        code, out, _ = run_cli(
            capsys, "sweep-beta", "--na", "2", "--nb", "2", "--x", "pure",
            "--betas=-0.5,0,0.5", "--seed", "7", "--samples", "400",
            "--burn-in", "200",
        )
        assert code == 0
        rows = csv_rows(out)
        assert [r["beta"] for r in rows] == ["-0.5", "0.0", "0.5"]
        # x = 1 pins the spectrum, so the prediction base is exact: M1 = 4/5
        assert float(rows[1]["m1_prediction"]) == pytest.approx(0.8)
        for r in rows:
            assert r["beta_in_radius"] == "1"
            assert float(r["m1_stderr"]) > 0

    def test_radius_warning(self, capsys):
        code, out, err = run_cli(
            capsys, "sweep-beta", "--na", "2", "--nb", "2", "--x", "0.6",
            "--betas", "40", "--seed", "7", "--samples", "200", "--burn-in", "100",
        )
        assert code == 0
        assert "convergence radius" in err
        assert csv_rows(out)[0]["beta_in_radius"] == "0"


class TestScaling:
    def test_pure_second_moment_scan(self, capsys):
        code, out, _ = run_cli(
            capsys, "scaling", "--x", "pure", "--ns", "16,36,64", "--k", "2"
        )
        assert code == 0
        rows = csv_rows(out)
        assert [r["n_total"] for r in rows] == ["16", "36", "64"]
        devs = [float(r["rel_deviation"]) for r in rows]
        assert devs == sorted(devs, reverse=True)
        assert float(rows[0]["asymptote"]) == pytest.approx((2 / 4) ** 2)

    def test_mixed_first_moment_scan(self, capsys):
        code, out, _ = run_cli(
            capsys, "scaling", "--x", "mixed", "--ns", "4,16", "--k", "1"
        )
        assert code == 0
        rows = csv_rows(out)
        # at x = 1/N the moment is 1/sqrt(N) and the asymptote (1 + 1/N)/sqrt(N)
        assert float(rows[0]["moment"]) == pytest.approx(0.5)
        assert float(rows[0]["asymptote"]) == pytest.approx(1.25 / 2)

    def test_non_square_dimension_rejected(self, capsys):
        code, _, err = run_cli(capsys, "scaling", "--x", "pure", "--ns", "16,18")
        assert code == 2
        assert "perfect square" in err

    def test_generic_x_with_k2_rejected(self, capsys):
        code, _, err = run_cli(
            capsys, "scaling", "--x", "0.5", "--ns", "16", "--k", "2"
        )
        assert code == 2
        assert "mc command" in err


class TestConfigFile:
    def test_toml_defaults_and_flag_precedence(self, capsys, tmp_path):
        cfg = tmp_path / "run.toml"
        cfg.write_text('na = 2\nnb = 3\nx = "pure"\nformat = "jsonl"\n')
        code, out, _ = run_cli(capsys, "exact", "--config", str(cfg))
        assert code == 0
        assert json.loads(out.splitlines()[0])["schema"] == "localpurity.exact.v1"
        # explicit flag beats the config value
        code, out, _ = run_cli(
            capsys, "exact", "--config", str(cfg), "--format", "csv"
        )
        assert code == 0
        assert out.startswith("# schema:")

    def test_json_config(self, capsys, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"na": 2, "nb": 2, "x": "1/2"}))
        code, out, _ = run_cli(capsys, "exact", "--config", str(cfg))
        assert code == 0
        assert csv_rows(out)[0]["decimal"] == "0.6"

    def test_unknown_config_key_rejected(self, capsys, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"na": 2, "nb": 2, "x": "1/2", "typo": 1}))
        code, _, err = run_cli(capsys, "exact", "--config", str(cfg))
        assert code == 2
        assert "typo" in err

    def test_unsupported_suffix_rejected(self, capsys, tmp_path):
        cfg = tmp_path / "run.yaml"
        cfg.write_text("na: 2\n")
        code, _, _ = run_cli(capsys, "exact", "--config", str(cfg))
        assert code == 2


class TestManifest:
    def test_written_next_to_output_with_matching_checksum(self, capsys, tmp_path):
        out_file = tmp_path / "res.csv"
        code, _, _ = run_cli(
            capsys, "exact", "--na", "2", "--nb", "2", "--x", "1", "--out",
            str(out_file),
        )
        assert code == 0
        manifest = json.loads((tmp_path / "res.csv.manifest.json").read_text())
        digest = hashlib.sha256(out_file.read_bytes()).hexdigest()
        assert manifest["outputs"] == {str(out_file): "sha256:" + digest}
        assert manifest["version"] == __version__
        assert manifest["command"] == "exact"
        assert manifest["argv"][0] == "exact"
        assert manifest["resolved_config"]["x"] == "1"
        assert manifest["wall_time_s"] >= 0

    def test_stdout_manifest_honors_env_dir(self, capsys, tmp_path, monkeypatch):
        env_dir = tmp_path / "runs"
        monkeypatch.setenv("LOCALPURITY_OUT_DIR", str(env_dir))
        code, out, _ = run_cli(capsys, "exact", "--na", "2", "--nb", "2", "--x", "1")
        assert code == 0
        manifest = json.loads((env_dir / "exact.manifest.json").read_text())
        digest = hashlib.sha256(out.encode()).hexdigest()
        assert manifest["outputs"] == {"stdout": "sha256:" + digest}

    def test_rerun_reproduces_bytes(self, capsys, tmp_path):
        args = [
            "mc", "--na", "2", "--nb", "3", "--x", "0.5", "--seed", "9",
            "--samples", "400", "--burn-in", "200",
        ]
        a = tmp_path / "a.jsonl"
        b = tmp_path / "b.jsonl"
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        capsys.readouterr()
        assert a.read_bytes() == b.read_bytes()
        ma = json.loads((tmp_path / "a.jsonl.manifest.json").read_text())
        mb = json.loads((tmp_path / "b.jsonl.manifest.json").read_text())
        assert list(ma["outputs"].values()) == list(mb["outputs"].values())


class TestSelftest:
    def test_passes_and_reports(self, capsys):
        code, out, _ = run_cli(capsys, "selftest", "--seed", "1")
        assert code == 0
        assert "10/10 checks passed" in out
        assert all(l.startswith(("PASS", "#", "10/")) for l in out.splitlines())

    def test_fault_injection_names_the_failure(self, capsys, monkeypatch):
        real = weingarten.weingarten_coefficient

        def corrupted(mu, N):
            value = real(mu, N)
            if mu.weight == 4 and mu.parts == (2, 2):
                return value + Fraction(1, 1000)
            return value

        monkeypatch.setattr(weingarten, "weingarten_coefficient", corrupted)
        code, out, _ = run_cli(capsys, "selftest", "--seed", "1")
        assert code == 4
        assert "FAIL s4-closed-forms" in out
        assert "S4 coefficient mismatch" in out


class TestEntryPoints:
    def test_module_invocation(self):
        res = subprocess.run(
            [sys.executable, "-m", "localpurity.cli", "exact", "--na", "2",
             "--nb", "2", "--x", "1"],
            capture_output=True, text=True,
        )
        assert res.returncode == 0
        assert "m1,4,5,0.8" in res.stdout

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert __version__ in capsys.readouterr().out

    def test_bad_flag_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["exact", "--format", "xml"])
        assert exc.value.code == 2
