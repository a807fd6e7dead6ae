"""End-to-end command behavior: composition, exit codes, manifests."""

import json
import subprocess
import sys

import pytest

from pesignal.cli import main, resolve_config
from pesignal.errors import NumericalError, UsageError

SMALL = {
    "n_quarters": 24,
    "n_sectors": 2,
    "t": 6,
    "ne": 4,
    "max_iter": 200,
    "seed": 11,
}

SMALL_SCOPES = ["Market", "Commercial Services", "Communications"]


def write_config(tmp_path, settings, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(settings), encoding="utf-8")
    return str(path)


def run_pipeline(tmp_path, settings):
    config = write_config(tmp_path, settings)
    out = str(tmp_path / "out")
    for command in ("synth", "features", "backtest", "evaluate"):
        code = main([command, "--config", config, "--out", out, "--scopes", ",".join(SMALL_SCOPES)])
        assert code == 0, command
    return tmp_path / "out"


class TestSmokePath:
    def test_pipeline_completes_with_all_files(self, tmp_path):
        out = run_pipeline(tmp_path, SMALL)
        slugs = ["market", "commercial_services", "communications"]
        expected = ["deals.csv", "prices.csv", "pe.csv", "scores.jsonl"]
        expected += [f"manifest_{c}.json" for c in ("synth", "features", "backtest", "evaluate")]
        for slug in slugs:
            expected += [
                f"features_{slug}.csv",
                f"zscores_{slug}.csv",
                f"predictions_{slug}.csv",
                f"scatter_{slug}.csv",
            ]
        for name in expected:
            assert (out / name).is_file(), name

    def test_prediction_row_count_matches_schedule(self, tmp_path):
        out = run_pipeline(tmp_path, SMALL)
        lines = (out / "predictions_market.csv").read_text().splitlines()
        assert len(lines) - 1 == SMALL["n_quarters"] - SMALL["t"] - SMALL["ne"] + 1

    def test_scores_include_each_scope_and_pooled_all(self, tmp_path):
        out = run_pipeline(tmp_path, SMALL)
        names = [json.loads(line)["scope"] for line in (out / "scores.jsonl").read_text().splitlines()]
        assert names == SMALL_SCOPES + ["ALL"]
        assert (out / "roc_all.csv").is_file()
        assert not (out / "scatter_all.csv").exists()

    def test_rerun_is_byte_identical(self, tmp_path):
        out = run_pipeline(tmp_path, SMALL)
        before = {p.name: p.read_bytes() for p in out.iterdir()}
        run_pipeline(tmp_path, SMALL)
        after = {p.name: p.read_bytes() for p in out.iterdir()}
        assert after == before

    def test_rerun_from_manifests_is_byte_identical(self, tmp_path):
        out = run_pipeline(tmp_path, SMALL)
        before = {p.name: p.read_bytes() for p in out.iterdir()}
        for command in ("synth", "features", "backtest", "evaluate"):
            manifest = str(out / f"manifest_{command}.json")
            assert main([command, "--config", manifest]) == 0
        after = {p.name: p.read_bytes() for p in out.iterdir()}
        assert after == before

    def test_downstream_stage_can_use_its_own_out_dir(self, tmp_path):
        config = write_config(tmp_path, SMALL)
        data = tmp_path / "data"
        work = tmp_path / "work"
        assert main(["synth", "--config", config, "--out", str(data)]) == 0
        assert main(["features", "--config", str(data / "manifest_synth.json"), "--out", str(work)]) == 0
        assert (data / "deals.csv").is_file()
        assert (work / "features_market.csv").is_file()
        assert not (work / "deals.csv").exists()


class TestSynth:
    def test_scopes_recorded_in_manifest(self, tmp_path):
        out = str(tmp_path / "out")
        assert main(["synth", "--out", out, "--seed", "3", "--config", write_config(tmp_path, SMALL)]) == 0
        manifest = json.loads((tmp_path / "out" / "manifest_synth.json").read_text())
        assert manifest["command"] == "synth"
        assert manifest["config"]["scopes"] == SMALL_SCOPES
        assert manifest["config"]["seed"] == 3
        assert manifest["config"]["deals"] == str(tmp_path / "out" / "deals.csv")
        assert manifest["inputs"] == {}
        assert set(map(str, manifest["outputs"])) == {
            str(tmp_path / "out" / name) for name in ("deals.csv", "prices.csv", "pe.csv")
        }

    def test_flag_overrides_config_seed(self, tmp_path):
        config = write_config(tmp_path, dict(SMALL, seed=1))
        out_a = str(tmp_path / "a")
        out_b = str(tmp_path / "b")
        assert main(["synth", "--config", config, "--out", out_a]) == 0
        assert main(["synth", "--config", config, "--out", out_b, "--seed", "2"]) == 0
        deals_a = (tmp_path / "a" / "deals.csv").read_bytes()
        deals_b = (tmp_path / "b" / "deals.csv").read_bytes()
        assert deals_a != deals_b

    def test_bad_synth_settings_are_usage_errors(self, tmp_path, capsys):
        config = write_config(tmp_path, dict(SMALL, n_quarters=4))
        assert main(["synth", "--config", config, "--out", str(tmp_path / "out")]) == 1
        assert "usage error" in capsys.readouterr().err


class TestExitCodes:
    def test_insufficient_history_names_required_quarters(self, tmp_path, capsys):
        settings = dict(SMALL, n_quarters=10, t=8, ne=4)
        config = write_config(tmp_path, settings)
        out = str(tmp_path / "out")
        assert main(["synth", "--config", config, "--out", out]) == 0
        assert main(["features", "--config", config, "--out", out]) == 0
        capsys.readouterr()
        assert main(["backtest", "--config", config, "--out", out]) == 2
        err = capsys.readouterr().err
        assert "insufficient history" in err
        assert "at least 12 quarters" in err

    def test_missing_input_file_is_a_usage_error(self, tmp_path, capsys):
        assert main(["features", "--out", str(tmp_path / "nowhere")]) == 1
        assert "not found" in capsys.readouterr().err

    def test_unknown_config_key(self, tmp_path, capsys):
        config = write_config(tmp_path, {"windows": 9})
        assert main(["synth", "--config", config, "--out", str(tmp_path / "out")]) == 1
        assert "unknown config key" in capsys.readouterr().err

    def test_malformed_config_json(self, tmp_path, capsys):
        path = tmp_path / "config.json"
        path.write_text("{not json", encoding="utf-8")
        assert main(["synth", "--config", str(path), "--out", str(tmp_path / "out")]) == 1
        assert "not valid JSON" in capsys.readouterr().err

    def test_unknown_scope(self, tmp_path, capsys):
        config = write_config(tmp_path, SMALL)
        out = str(tmp_path / "out")
        assert main(["synth", "--config", config, "--out", out]) == 0
        assert main(["features", "--config", config, "--out", out, "--scopes", "Tulips"]) == 1
        assert "unknown scope" in capsys.readouterr().err

    def test_unknown_command(self, capsys):
        assert main(["replay"]) == 1
        assert "usage error" in capsys.readouterr().err

    def test_numerical_failure_maps_to_exit_3(self, monkeypatch, capsys):
        from pesignal import cli

        monkeypatch.setitem(cli._COMMANDS, "backtest", lambda config: (_ for _ in ()).throw(NumericalError("boom")))
        assert main(["backtest"]) == 3
        assert "numerical failure" in capsys.readouterr().err

    def test_help_exits_zero(self):
        with pytest.raises(SystemExit) as info:
            main(["--help"])
        assert info.value.code == 0


class TestStrictMode:
    def _break_a_row(self, out):
        path = out / "deals.csv"
        lines = path.read_text().splitlines()
        parts = lines[1].split(",")
        parts[2] = "Zeppelins"
        lines[1] = ",".join(parts)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    def test_lenient_run_skips_bad_rows(self, tmp_path):
        config = write_config(tmp_path, SMALL)
        out = str(tmp_path / "out")
        assert main(["synth", "--config", config, "--out", out]) == 0
        self._break_a_row(tmp_path / "out")
        assert main(["features", "--config", config, "--out", out]) == 0

    def test_strict_run_fails_on_bad_rows(self, tmp_path, capsys):
        config = write_config(tmp_path, SMALL)
        out = str(tmp_path / "out")
        assert main(["synth", "--config", config, "--out", out]) == 0
        self._break_a_row(tmp_path / "out")
        assert main(["features", "--config", config, "--out", out, "--strict"]) == 2
        assert "data error" in capsys.readouterr().err


class TestColumnMappings:
    def test_renamed_deal_columns_parse_identically(self, tmp_path):
        config = write_config(tmp_path, SMALL)
        out = tmp_path / "out"
        assert main(["synth", "--config", config, "--out", str(out)]) == 0
        assert main(["features", "--config", config, "--out", str(out)]) == 0
        baseline = (out / "features_market.csv").read_bytes()
        deals = out / "deals.csv"
        text = deals.read_text().splitlines()
        text[0] = "id,name,industry,first_investment_date,investor,investor_aum,investor_performance"
        deals.write_text("\n".join(text) + "\n", encoding="utf-8")
        remapped = write_config(
            tmp_path,
            dict(SMALL, deal_columns={"company_id": "id", "company_name": "name", "sector": "industry"}),
            name="remapped.json",
        )
        assert main(["features", "--config", remapped, "--out", str(out)]) == 0
        assert (out / "features_market.csv").read_bytes() == baseline

    def test_unknown_column_mapping_key(self, tmp_path, capsys):
        config = write_config(tmp_path, dict(SMALL, deal_columns={"ticker": "id"}))
        assert main(["synth", "--config", config, "--out", str(tmp_path / "out")]) == 1
        assert "deal_columns" in capsys.readouterr().err


class TestConfigResolution:
    def test_flags_beat_file_beats_defaults(self):
        config = resolve_config({"t": 9, "eta": 0.5}, {"t": 4})
        assert config.t == 4
        assert config.eta == 0.5
        assert config.ne == 7

    def test_scopes_string_splits(self):
        config = resolve_config({}, {"scopes": "Market, Finance"})
        assert config.scopes == ("Market", "Finance")

    def test_bad_values_rejected(self):
        with pytest.raises(UsageError):
            resolve_config({"t": "a dozen"}, {})
        with pytest.raises(UsageError):
            resolve_config({"strict": "yes"}, {})
        with pytest.raises(UsageError):
            resolve_config({"planted_w": "strong"}, {})


class TestPaperShapedRun:
    def test_68_quarters_yield_50_predictions_per_scope(self, tmp_path):
        settings = {
            "n_quarters": 68,
            "n_sectors": 1,
            "t": 12,
            "ne": 7,
            "max_iter": 60,
            "seed": 4,
        }
        config = write_config(tmp_path, settings)
        out = str(tmp_path / "out")
        scopes = "Market,Commercial Services"
        assert main(["synth", "--config", config, "--out", out]) == 0
        assert main(["features", "--config", config, "--out", out, "--scopes", scopes]) == 0
        assert main(["backtest", "--config", config, "--out", out, "--scopes", scopes]) == 0
        for slug in ("market", "commercial_services"):
            lines = (tmp_path / "out" / f"predictions_{slug}.csv").read_text().splitlines()
            rows = lines[1:]
            assert len(rows) == 50
            assert rows[0].split(",")[1] == "2004-09-30"
            assert rows[-1].split(",")[1] == "2016-12-31"


def test_module_entry_point_runs(tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "pesignal", "synth", "--out", str(tmp_path / "out"), "--seed", "2"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert result.returncode == 0, result.stderr
    assert (tmp_path / "out" / "deals.csv").is_file()
