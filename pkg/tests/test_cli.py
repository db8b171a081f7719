import csv
import subprocess
import sys

import pytest

from ofdmpn import cli
from ofdmpn.harness import AGGREGATE_COLUMNS, OfdmScenario, run_monte_carlo

MINIMAL = """
n_c = 64
estimators = tqm
trials = 2
channel_length = 4
"""


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestParseConfig:
    def test_minimal(self):
        cfg = cli.parse_config(MINIMAL)
        assert cfg.n_c == [64] and cfg.estimators == ["tqm"]
        assert cfg.snr_db == [35.0] and cfg.sigma is None
        assert len(cfg.scenarios()) == 1

    def test_grid(self):
        cfg = cli.parse_config("n_c = 64, 128\nestimators = tqm, tqm-pct:32\nsnr_db = 15, 35 # cells\n"
                               "phase_model = wiener, gaussian\n")
        assert len(cfg.scenarios()) == 8
        assert cfg.estimators == ["tqm", "tqm-pct:32"]

    def test_divisibility_error_names_both(self):
        with pytest.raises(cli.ConfigError) as err:
            cli.parse_config("n_c = 1024\nestimators = tqm-pct:48\n")
        assert any("48" in e and "1024" in e for e in err.value.errors)

    def test_empty_estimators(self):
        with pytest.raises(cli.ConfigError) as err:
            cli.parse_config("n_c = 64\nestimators =\n")
        assert any("empty" in e for e in err.value.errors)

    def test_unknown_key_is_error(self):
        with pytest.raises(cli.ConfigError) as err:
            cli.parse_config(MINIMAL + "colour = blue\n")
        assert any("colour" in e for e in err.value.errors)

    def test_all_errors_reported(self):
        text = "n_c = 100\nestimators = tqm-pct:48, nope\nfoo = 1\nsnr_db = 10\nsigma = 0.1\n"
        with pytest.raises(cli.ConfigError) as err:
            cli.parse_config(text)
        msgs = " | ".join(err.value.errors)
        for needle in ("power of two", "nope", "foo", "not both", "N=48"):
            assert needle in msgs
        assert len(err.value.errors) >= 5

    def test_duplicate_key(self):
        with pytest.raises(cli.ConfigError):
            cli.parse_config(MINIMAL + "n_c = 128\n")

    def test_fixed_sigma(self):
        cfg = cli.parse_config(MINIMAL + "sigma = 0, 0.1\n")
        assert [s.sigma for s in cfg.scenarios()] == [0.0, 0.1]


class TestCsv:
    def test_round_trip_12_digits(self, tmp_path):
        cfg = cli.parse_config(MINIMAL)
        rows = run_monte_carlo(cfg.scenarios(), cfg.estimators)
        out = tmp_path / "agg.csv"
        cli.write_csv(str(out), AGGREGATE_COLUMNS, rows)
        back = read_csv(out)
        assert list(back[0]) == AGGREGATE_COLUMNS
        for mem, disk in zip(rows, back):
            for col in AGGREGATE_COLUMNS:
                v = mem[col]
                if v is None:
                    assert disk[col] == ""
                elif isinstance(v, str):
                    assert disk[col] == v
                else:
                    assert float(disk[col]) == pytest.approx(float(v), rel=1e-11, abs=0)

    def test_quoting(self, tmp_path):
        out = tmp_path / "q.csv"
        cli.write_csv(str(out), ["a", "b"], [{"a": "x,y", "b": 'say "hi"'}])
        assert out.read_text() == 'a,b\n"x,y","say ""hi"""\n'


class TestMain:
    def test_sweep(self, tmp_path):
        out = tmp_path / "o.csv"
        code = cli.main(["sweep", "--config", write(tmp_path, MINIMAL), "--out", str(out)])
        assert code == 0
        rows = read_csv(out)
        assert len(rows) == 1 and rows[0]["estimator"] == "tqm" and rows[0]["trials"] == "2"

    def test_seed_override(self, tmp_path):
        cfgp = write(tmp_path, MINIMAL)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        cli.main(["sweep", "--config", cfgp, "--out", str(a), "--seed", "1"])
        cli.main(["sweep", "--config", cfgp, "--out", str(b), "--seed", "2"])
        assert read_csv(a)[0]["phase_mse_mean"] != read_csv(b)[0]["phase_mse_mean"]

    def test_estimator_filter(self, tmp_path):
        out = tmp_path / "o.csv"
        cfgp = write(tmp_path, MINIMAL.replace("estimators = tqm", "estimators = tqm, ignore-phn"))
        assert cli.main(["sweep", "--config", cfgp, "--out", str(out), "--estimators", "ignore-phn"]) == 0
        assert [r["estimator"] for r in read_csv(out)] == ["ignore-phn"]

    def test_config_error_exit(self, tmp_path, capsys):
        cfgp = write(tmp_path, "n_c = 1024\nestimators = tqm-pct:48\n")
        assert cli.main(["sweep", "--config", cfgp]) == 2
        assert "N=48 does not divide n_c=1024" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert cli.main(["sweep", "--config", str(tmp_path / "nope.cfg")]) == 2

    def test_trial_error_exit(self, tmp_path, monkeypatch):
        def boom(*a, **k):
            raise RuntimeError("solver blew up")
        monkeypatch.setattr(cli, "run_monte_carlo", boom)
        assert cli.main(["sweep", "--config", write(tmp_path, MINIMAL)]) == 1

    def test_trace(self, tmp_path):
        out = tmp_path / "t.csv"
        cfgp = write(tmp_path, MINIMAL.replace("estimators = tqm", "estimators = tqm, lqm"))
        assert cli.main(["trace", "--config", cfgp, "--out", str(out)]) == 0
        rows = read_csv(out)
        assert list(rows[0]) == cli.TRACE_COLUMNS
        tqm = [r for r in rows if r["estimator"] == "tqm"]
        assert tqm[0]["iteration"] == "0" and tqm[0]["delta_u_norm"] == ""
        objs = [float(r["objective"]) for r in tqm]
        assert all(b <= a + 1e-9 * objs[0] for a, b in zip(objs, objs[1:]))

    def test_trace_needs_single_cell(self, tmp_path):
        cfgp = write(tmp_path, MINIMAL + "snr_db = 10, 20\n")
        assert cli.main(["trace", "--config", cfgp]) == 2

    def test_single(self, tmp_path):
        out = tmp_path / "s.csv"
        cfgp = write(tmp_path, MINIMAL.replace("estimators = tqm", "estimators = tqm, tqm-pct:16"))
        assert cli.main(["single", "--config", cfgp, "--out", str(out), "--trial", "1"]) == 0
        rows = read_csv(out)
        assert len(rows) == 64
        assert list(rows[0]) == ["index", "theta_true", "theta_hat_tqm", "theta_hat_tqm-pct:16"]
        assert float(rows[0]["theta_true"]) == 0.0

    def test_module_entry_point(self, tmp_path):
        out = tmp_path / "m.csv"
        proc = subprocess.run([sys.executable, "-m", "ofdmpn", "sweep", "--config", write(tmp_path, MINIMAL),
                               "--out", str(out)], capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        assert out.exists()
