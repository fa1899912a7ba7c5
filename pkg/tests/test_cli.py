"""Tests for the onebit-miso command line."""

import orjson
import pytest

from onebitmiso import cli
from onebitmiso.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main, parse_args, parse_grid
from onebitmiso.errors import UsageError
from onebitmiso.link.sim_engine import Scheme
from onebitmiso.utils.results import read_records

DESK_GRID = (-10.0, -7.5, -5.0, -2.5, 0.0, 2.5, 5.0, 7.5, 10.0)


class TestParseGrid:
    """Tests for the start:step:stop grid syntax."""

    def test_inclusive_stop(self):
        assert parse_grid("-10:2.5:10") == DESK_GRID

    def test_single_value(self):
        assert parse_grid("5") == (5.0,)

    @pytest.mark.parametrize("text", ["a:b:c", "1:2", "0:0:5", "5:1:0"])
    def test_invalid(self, text):
        with pytest.raises(UsageError):
            parse_grid(text)


class TestPresets:
    """Tests for figure presets and defaults."""

    def test_fig3_desk(self, tmp_path):
        manifest = parse_args(["--figure", "fig3", "--scale", "desk", "--out", str(tmp_path / "f.csv")])
        assert [c.scheme for c in manifest.configs] == [Scheme.MBER_SUP, Scheme.QWF]
        for config in manifest.configs:
            assert (config.n_antennas, config.n_users) == (150, 3)
            assert (config.n_channels, config.n_symbols_per_channel) == (10, 10_000)
            assert config.etx_grid == DESK_GRID

    def test_fig4_varies_users(self, tmp_path):
        manifest = parse_args(["--figure", "fig4", "--out", str(tmp_path / "f.csv")])
        assert sorted({c.n_users for c in manifest.configs}) == [2, 3, 4]
        assert len(manifest.configs) == 6

    def test_fig5_varies_antennas(self, tmp_path):
        manifest = parse_args(["--figure", "fig5", "--scheme", "qwf", "--out", str(tmp_path / "f.csv")])
        assert [c.n_antennas for c in manifest.configs] == [48, 96, 150]
        assert all(c.scheme is Scheme.QWF for c in manifest.configs)

    def test_paper_scale(self, tmp_path):
        manifest = parse_args(["--figure", "fig3", "--scale", "paper", "--out", str(tmp_path / "f.csv")])
        assert (manifest.configs[0].n_channels, manifest.configs[0].n_symbols_per_channel) == (100, 100_000)

    def test_gain_check(self, tmp_path):
        manifest = parse_args(["--figure", "g-check", "--out", str(tmp_path / "g.csv")])
        assert manifest.configs == ()
        assert manifest.gain_check.snr_grid == (0.0, 5.0, 10.0, 15.0)
        assert manifest.gain_check.n_symbols == 100_000

    def test_explicit_overrides(self, tmp_path):
        manifest = parse_args([
            "--scheme", "mber-sup", "--antennas", "48,96", "--users", "2", "--etx", "0:5:10",
            "--channels", "4", "--symbols", "500", "--seed", "9", "--out", str(tmp_path / "f.csv"),
        ])
        assert [(c.n_antennas, c.n_users) for c in manifest.configs] == [(48, 2), (96, 2)]
        assert manifest.configs[0].etx_grid == (0.0, 5.0, 10.0)
        assert manifest.configs[0].rng_seed == 9
        assert manifest.configs[0].n_symbols_per_channel == 500


class TestUsageErrors:
    """Misuse maps to exit code 1."""

    def test_more_users_than_antennas(self, tmp_path):
        with pytest.raises(UsageError):
            parse_args(["--users", "5", "--antennas", "3", "--out", str(tmp_path / "f.csv")])
        assert main(["--users", "5", "--antennas", "3", "--out", str(tmp_path / "f.csv")]) == EXIT_USAGE

    def test_unknown_flag(self):
        assert main(["--bogus"]) == EXIT_USAGE

    def test_bad_choice(self):
        assert main(["--figure", "fig9"]) == EXIT_USAGE

    def test_existing_output(self, tmp_path):
        out = tmp_path / "f.csv"
        out.write_text("x\n")
        assert main(["--figure", "fig3", "--out", str(out)]) == EXIT_USAGE
        assert out.read_text() == "x\n"

    def test_help_lists_defaults(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0
        text = capsys.readouterr().out
        for flag in ("--scheme", "--etx", "--channels", "--symbols", "--seed", "--scale"):
            assert flag in text
        assert "default: both" in text
        assert "-10:2.5:10" in text


class TestMain:
    """End-to-end runs at toy scale."""

    ARGS = ["--scheme", "qwf", "--antennas", "6", "--users", "2", "--etx", "0:5:5",
            "--channels", "2", "--symbols", "100"]

    def test_writes_csv_and_manifest(self, tmp_path):
        out = tmp_path / "run.csv"
        assert main(self.ARGS + ["--out", str(out)]) == EXIT_OK
        records = read_records(out)
        assert [r.etx_db for r in records] == [0.0, 5.0]
        manifest = orjson.loads((tmp_path / "run.csv.manifest.json").read_bytes())
        (entry,) = manifest["runs"]
        assert entry["configs"][0]["scheme"] == "qwf"
        assert entry["output"] == str(out)
        assert entry["rows"] == [0, 2]

    def test_append(self, tmp_path):
        out = tmp_path / "run.csv"
        assert main(self.ARGS + ["--out", str(out)]) == EXIT_OK
        assert main(self.ARGS + ["--out", str(out), "--append"]) == EXIT_OK
        assert len(read_records(out)) == 4
        manifest = orjson.loads((tmp_path / "run.csv.manifest.json").read_bytes())
        assert [run["rows"] for run in manifest["runs"]] == [[0, 2], [2, 4]]
        assert [run["append"] for run in manifest["runs"]] == [False, True]

    def test_unexpected_failure_is_runtime_error(self, tmp_path, monkeypatch):
        def boom(manifest):
            raise RuntimeError("worker died")

        monkeypatch.setattr(cli, "run", boom)
        out = tmp_path / "run.csv"
        assert main(self.ARGS + ["--out", str(out)]) == EXIT_RUNTIME
        assert not out.exists()

    def test_gain_check_run(self, tmp_path):
        out = tmp_path / "g.csv"
        assert main(["--figure", "g-check", "--etx", "10", "--channels", "1", "--symbols", "2000",
                     "--out", str(out)]) == EXIT_OK
        assert {r.scheme for r in read_records(out)} == {"g-est", "g-opt"}

    @pytest.mark.slow
    def test_paper_scale_smoke(self, tmp_path):
        out = tmp_path / "paper.csv"
        assert main(["--scheme", "mber-sup", "--scale", "paper", "--etx", "5", "--out", str(out)]) == EXIT_OK
        (record,) = read_records(out)
        assert record.bits_total == 100 * 100_000 * 3 * 4
