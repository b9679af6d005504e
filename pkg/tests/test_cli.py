import csv
import math

import numpy as np
import pytest

from leocluster import DEFAULTS, analysis, cli, config
from leocluster.errors import ConfigError
from conftest import make_scenario


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "empty.cfg"
    path.write_text("")
    with pytest.warns(UserWarning):
        s = config.load_config(str(path))
    ref = make_scenario()
    assert s == ref


def test_file_values_and_comments(tmp_path):
    path = tmp_path / "a.cfg"
    path.write_text("# comment line\n"
                    "gamma_th_db = -6   # trailing comment\n"
                    "\n"
                    "n_followers = 20\n")
    with pytest.warns(UserWarning):
        s = config.load_config(str(path))
    assert s.gamma_th_db == -6.0
    assert s.cfg.n_followers == 20


def test_override_applies():
    with pytest.warns(UserWarning):
        s = config.load_config(overrides={"gamma_th_db": -6.0})
    assert s.gamma_th_db == -6.0


def test_malformed_line_names_position(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("altitude_km = 600\nn_followers = ten\n")
    with pytest.raises(ConfigError, match=r"bad\.cfg:2"):
        config.load_config(str(path))
    path.write_text("altitude_km 600\n")
    with pytest.raises(ConfigError, match=r"bad\.cfg:1"):
        config.load_config(str(path))


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("warp_factor = 9\n")
    with pytest.raises(ConfigError, match="warp_factor"):
        config.load_config(str(path))
    with pytest.raises(ConfigError):
        config.load_config(overrides={"warp_factor": 9})


def test_missing_file_is_config_error():
    with pytest.raises(ConfigError):
        config.load_config("/nonexistent/path.cfg")


def test_range_violation_is_config_error():
    with pytest.raises(ConfigError):
        config.load_config(overrides={"n_leaders": 0})
    with pytest.raises(ConfigError):
        config.load_config(overrides={"max_contact_angle_deg": 95.0})


def test_out_of_regime_contact_angle_warns_not_fails():
    with pytest.warns(UserWarning, match="line-of-sight"):
        s = config.load_config()
    assert s.cfg.max_contact_angle_rad == pytest.approx(math.pi / 4)


def test_values_round_trip():
    s = make_scenario(gamma_th_db=-7.5, n_followers=13)
    values = config.scenario_to_values(s)
    assert config.scenario_from_values(values) == s
    assert set(values) == set(DEFAULTS)


def test_parse_override_strings():
    assert config.parse_override("gamma_th_db=-6") == ("gamma_th_db", -6.0)
    assert config.parse_override("n_followers=4") == ("n_followers", 4)
    with pytest.raises(ConfigError):
        config.parse_override("gamma_th_db")
    with pytest.raises(ConfigError):
        config.parse_override("n_followers=4.5")


def test_parse_sweep():
    key, grid = cli.parse_sweep("gamma_th_db=-10:-6:2")
    assert key == "gamma_th_db"
    assert grid == [-10.0, -8.0, -6.0]
    with pytest.raises(ConfigError):
        cli.parse_sweep("gamma_th_db=-10:-6")
    with pytest.raises(ConfigError):
        cli.parse_sweep("unknown=0:1:1")
    with pytest.raises(ConfigError):
        cli.parse_sweep("gamma_th_db=0:-1:1")


# ---------------------------------------------------------------------------
# commands end to end
# ---------------------------------------------------------------------------

def _read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_outage_sweep_csv(tmp_path):
    out = tmp_path / "o.csv"
    rc = cli.main(["outage-sweep", "--out", str(out), "--trials", "5000",
                   "--seed", "1", "--sweep", "gamma_th_db=-8:-4:2"])
    assert rc == 0
    rows = _read(out)
    assert [r["sweep_var"] for r in rows] == ["-8", "-6", "-4"]
    for r in rows:
        assert 0.0 <= float(r["p_out_lower"]) <= float(r["p_out_upper"]) <= 1.0
        assert 0.0 <= float(r["p_out_mc"]) <= 1.0
    assert list(rows[0]) == ["sweep_var", "p_out_leader", "p_out_cluster",
                             "p_out_lower", "p_out_upper", "p_out_mc", "mc_ci"]


def test_rate_sweep_csv(tmp_path):
    out = tmp_path / "r.csv"
    rc = cli.main(["rate-sweep", "--out", str(out), "--trials", "5000",
                   "--seed", "1", "--sweep", "altitude_km=500:700:100"])
    assert rc == 0
    rows = _read(out)
    assert len(rows) == 3
    assert list(rows[0]) == ["sweep_var", "rate_leader", "rate_cluster_lower",
                             "rate_cluster_upper", "rate_cluster_mid",
                             "rate_mc", "mc_ci"]
    for r in rows:
        assert float(r["rate_cluster_lower"]) <= float(r["rate_cluster_upper"])


def test_casestudy_csv(tmp_path):
    out = tmp_path / "c.csv"
    rc = cli.main(["casestudy", "--out", str(out),
                   "--sweep", "n_followers=0:4:2"])
    assert rc == 0
    rows = _read(out)
    assert list(rows[0]) == ["sweep_var", "rate_nf", "rate_lf", "rho_lf_dbw",
                             "rho_lf_w", "n_followers_effective"]
    assert rows[0]["rate_nf"] == rows[0]["rate_lf"]


def test_validate_exit_zero_and_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["validate", "--out", str(a), "--trials", "20000",
                     "--seed", "42"]) == 0
    assert cli.main(["validate", "--out", str(b), "--trials", "20000",
                     "--seed", "42"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_validate_detects_mismatch(tmp_path, monkeypatch):
    def wrong(s, tol=1e-6):
        return analysis.PerformanceEstimate(0.5, "analytic")
    monkeypatch.setattr(analysis, "outage_leader", wrong)
    rc = cli.run(cli.ExperimentSpec(command="validate", trials=5000, seed=1,
                                    output_path=str(tmp_path / "v.csv")))
    assert rc == 3


def test_lemmas_csv(tmp_path):
    out = tmp_path / "l.csv"
    rc = cli.main(["lemmas", "--out", str(out), "--trials", "20000",
                   "--seed", "3"])
    assert rc == 0
    rows = _read(out)
    assert [r["law"] for r in rows] == [
        "leader_contact", "follower_conditional", "follower_conditional",
        "extreme_min_contact", "extreme_max_contact"]


def test_config_error_exit_code(capsys):
    assert cli.main(["outage-sweep", "--set", "bogus=1"]) == 1
    assert "config error" in capsys.readouterr().err


def test_numeric_failure_exit_code(tmp_path, capsys):
    # fading parameters whose series cannot converge within the term cap
    rc = cli.main(["validate", "--out", str(tmp_path / "x.csv"),
                   "--trials", "100", "--set", "sr_omega=1e6",
                   "--set", "sr_b0=1e-9", "--set", "sr_m=1.0"])
    assert rc == 2
    assert "numeric failure" in capsys.readouterr().err


def test_csv_17_digit_format(tmp_path):
    out = tmp_path / "f.csv"
    cli.main(["outage-sweep", "--out", str(out), "--trials", "1000",
              "--seed", "1", "--sweep", "gamma_th_db=-5:-5:1"])
    text = out.read_text()
    assert "\r" not in text
    row = text.splitlines()[1].split(",")
    # probabilities carry full precision
    assert any(len(cell.replace("-", "").replace(".", "").lstrip("0")) >= 15
               for cell in row[1:5])
