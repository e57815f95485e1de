"""CLI tests: validation reports, experiment runs, and reproducibility of
emitted artifacts from the resolved summary."""

import json

import pytest
import yaml

from assoclab.cli import main

GAUSS_GEO = {
    "family": "geometric",
    "rho": 0.5,
    "K": 20,
    "innovation": {"kind": "standard-gaussian"},
}
IID_GAUSS = {"family": "iid", "innovation": {"kind": "standard-gaussian"}}


def write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(payload))
    return str(path)


def run_cli(args):
    return main(args)


class TestValidation:
    def test_moddev_dependent_model_violates_e8(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "m.yaml",
            {"model": GAUSS_GEO, "n": 10_000, "lambda": 0.5, "replicates": 1000},
        )
        code = run_cli(["moddev", "--config", cfg, "--out", str(tmp_path / "out")])
        captured = capsys.readouterr()
        assert code == 2
        report = json.loads(captured.err)
        assert report["error"]["kind"] == "validation"
        assert any(v.startswith("E8") for v in report["error"]["violations"])

    def test_enforce_windows_false_allows_probe(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "m.yaml",
            {
                "model": GAUSS_GEO,
                "n": 10_000,
                "lambda": 0.2,
                "replicates": 30_000,
                "master_seed": 5,
                "enforce_windows": False,
            },
        )
        code = run_cli(["moddev", "--config", cfg, "--out", str(tmp_path / "out")])
        assert code == 0
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert 0.5 < summary["results"]["ratio"] < 1.5

    def test_explicit_alpha_outside_e10_window(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "m.yaml",
            {
                "model": IID_GAUSS,
                "n": 10_000,
                "lambda": 0.5,
                "alpha": 0.4,
                "replicates": 1000,
            },
        )
        code = run_cli(["moddev", "--config", cfg, "--out", str(tmp_path / "out")])
        captured = capsys.readouterr()
        assert code == 2
        assert any(v.startswith("E10") for v in json.loads(captured.err)["error"]["violations"])

    def test_moment_order_above_q_max_violates_a1(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "m.yaml",
            {
                "model": {
                    "family": "iid",
                    "innovation": {"kind": "centered-pareto", "tail_index": 2.5},
                },
                "n_grid": [256, 1024],
                "q": 3.0,
                "lambda": 0.3,
                "replicates": 100,
            },
        )
        code = run_cli(["frolov", "--config", cfg, "--out", str(tmp_path / "out")])
        captured = capsys.readouterr()
        assert code == 2
        assert any(v.startswith("A1") for v in json.loads(captured.err)["error"]["violations"])

    def test_validate_subcommand_prints_resolved_config(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "m.yaml",
            {"kind": "clt-rate", "model": IID_GAUSS, "n_grid": [64, 256], "replicates": 500},
        )
        code = run_cli(["validate", "--config", cfg])
        captured = capsys.readouterr()
        assert code == 0
        resolved = json.loads(captured.out)
        assert resolved["valid"] is True
        assert resolved["resolved_config"]["replicates"] == 500
        assert resolved["resolved_config"]["master_seed"] is not None

    def test_bad_scheme_reported(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "m.yaml",
            {"model": IID_GAUSS, "n_grid": [16, 64], "alpha": 0.05, "replicates": 100},
        )
        code = run_cli(["coupling", "--config", cfg, "--out", str(tmp_path / "out")])
        captured = capsys.readouterr()
        assert code == 2
        assert any("scheme" in v for v in json.loads(captured.err)["error"]["violations"])


class TestRuns:
    def test_rates_table(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "r.yaml",
            {"q_grid": [2.5, 3.0], "theta_grid": [1.0, 2.0]},
        )
        code = run_cli(["rates", "--config", cfg, "--out", str(tmp_path / "out")])
        assert code == 0
        lines = (tmp_path / "out" / "rates.csv").read_text().strip().splitlines()
        assert lines[0] == "q,theta,exponent,regime,alpha_star"
        assert len(lines) == 5
        row = dict(zip(lines[0].split(","), lines[2].split(",")))
        assert row["q"] == "3.0" and row["theta"] == "1.0"
        assert float(row["exponent"]) == pytest.approx(3 / 19)

    def test_clt_rate_iid_gaussian_flags_exact_normal(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "c.yaml",
            {"model": IID_GAUSS, "n_grid": [64, 256], "replicates": 4000, "master_seed": 7},
        )
        code = run_cli(["clt-rate", "--config", cfg, "--out", str(tmp_path / "out")])
        assert code == 0
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["results"]["flags"] == ["exact-normal"]
        csv_text = (tmp_path / "out" / "clt_rate.csv").read_text()
        assert csv_text.startswith("n,statistic,stderr,theory")

    def test_newman_run_holds(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "n.yaml",
            {
                "model": GAUSS_GEO,
                "n": 128,
                "alpha": 0.5,
                "t": 0.3,
                "replicates": 5000,
                "master_seed": 9,
            },
        )
        code = run_cli(["newman", "--config", cfg, "--out", str(tmp_path / "out")])
        assert code == 0
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["results"]["holds"] is True
        assert summary["results"]["rhs"] > 0

    def test_remainder_and_coupling_and_frolov(self, tmp_path):
        base = {
            "model": GAUSS_GEO,
            "n_grid": [100, 300],
            "alpha": 0.5,
            "replicates": 2000,
            "master_seed": 11,
        }
        for kind, extra in [
            ("remainder", {}),
            ("coupling", {}),
            ("frolov", {"q": 3.0, "lambda": 0.3}),
        ]:
            cfg = write_config(tmp_path, f"{kind}.yaml", {**base, **extra})
            code = run_cli([kind, "--config", cfg, "--out", str(tmp_path / kind)])
            assert code == 0, kind
            assert (tmp_path / kind / "summary.json").exists()

    def test_moddev_dump_replicates(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "m.yaml",
            {
                "model": IID_GAUSS,
                "n": 1000,
                "lambda": 0.1,
                "replicates": 2000,
                "master_seed": 13,
                "dump_replicates": True,
            },
        )
        code = run_cli(["moddev", "--config", cfg, "--out", str(tmp_path / "out")])
        assert code == 0
        dump = (tmp_path / "out" / "moddev_replicates.csv").read_text().splitlines()
        assert dump[0] == "replicate_id,value"
        assert len(dump) == 2001

    def test_unknown_family_rejected(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path, "bad.yaml", {"model": {"family": "arma"}, "n_grid": [64, 128]}
        )
        code = run_cli(["coupling", "--config", cfg, "--out", str(tmp_path / "out")])
        assert code == 2


class TestReproducibility:
    def test_rerun_from_summary_bit_identical_any_threads(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "m.yaml",
            {
                "model": GAUSS_GEO,
                "n_grid": [100, 300],
                "alpha": 0.5,
                "replicates": 3000,
                "master_seed": 17,
            },
        )
        assert run_cli(["coupling", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
        summary_path = str(tmp_path / "a" / "summary.json")
        for threads, sub in [("1", "b"), ("3", "c")]:
            code = run_cli(
                [
                    "coupling",
                    "--config",
                    summary_path,
                    "--out",
                    str(tmp_path / sub),
                    "--threads",
                    threads,
                ]
            )
            assert code == 0
            assert (tmp_path / sub / "coupling.csv").read_bytes() == (
                tmp_path / "a" / "coupling.csv"
            ).read_bytes()

    def test_seed_override_changes_results(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "m.yaml",
            {"model": GAUSS_GEO, "n_grid": [100, 300], "replicates": 2000, "master_seed": 1},
        )
        assert run_cli(["coupling", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
        assert (
            run_cli(["coupling", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "2"])
            == 0
        )
        assert (tmp_path / "a" / "coupling.csv").read_bytes() != (
            tmp_path / "b" / "coupling.csv"
        ).read_bytes()
