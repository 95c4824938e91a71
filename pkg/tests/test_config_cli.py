import csv
import math
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nfext.cli import run
from nfext.config import ScenarioConfig, from_mapping, load, parse_text, serialize
from nfext.constants import C
from nfext.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


# -- configuration -----------------------------------------------------------------

def test_defaults_are_reference_scenario():
    c = ScenarioConfig()
    assert (c.n, c.spacing, c.l2i0, c.bandwidth, c.fc) == (13, 0.125, 1.0, 100e6, 77e9)
    assert (c.d_y, c.d_z, c.rho, c.range_m, c.azimuth, c.elevation) == (0.8, 1.75, 1.24, 4.0, 0, 0)
    assert c.k == pytest.approx(2 * math.pi * c.fc / C, rel=1e-15)


def test_shipped_config_matches_defaults():
    assert load(CONFIGS / "reference.cfg") == ScenarioConfig()


@given(fc=st.floats(1e9, 2e11), n=st.integers(1, 40), rho=st.floats(0.01, 50),
       target=st.sampled_from(["plate", "sphere", "cylinder"]), seed=st.integers(0, 2**32))
def test_round_trip(fc, n, rho, target, seed):
    c = ScenarioConfig().replace(fc=fc, n=n, rho=rho, target=target, seed=seed)
    assert parse_text(serialize(c)) == c
    assert serialize(parse_text(serialize(c))) == serialize(c)


@pytest.mark.parametrize("bad", [{"fc": -1.0}, {"n": 0}, {"target": "cone"}, {"oversample": 1},
                                 {"noise_var": -1.0}, {"flux": 1}])
def test_invalid_values_rejected(bad):
    with pytest.raises(ConfigError):
        from_mapping(bad)


def test_malformed_line():
    with pytest.raises(ConfigError):
        parse_text("fc 77e9")


def test_comments_and_overrides():
    c = parse_text("# comment\nfc = 3.5e9  # low band\n", ScenarioConfig().replace(n=5))
    assert c.fc == 3.5e9 and c.n == 5


# -- command line ---------------------------------------------------------------------

def test_unknown_subcommand_is_usage_error(capsys):
    assert run(["teleport"]) == 2


def test_unknown_flag_is_usage_error(capsys):
    assert run(["profile", "--warp", "9"]) == 2


def test_invalid_config_value_is_usage_error(tmp_path, capsys):
    assert run(["profile", "--n", "0", "--output-dir", str(tmp_path)]) == 2
    assert "ConfigError" in capsys.readouterr().err


def test_computational_failure_exit_code(tmp_path, capsys):
    # a profile window that misses the -3 dB crossings
    code = run(["profile", "--rmin", "3.9999", "--rmax", "4.0001", "--output-dir", str(tmp_path)])
    assert code == 1
    assert "MetricsError" in capsys.readouterr().err


def test_profile_command(tmp_path):
    assert run(["profile", "--target", "sphere", "--model", "extended", "--rmin", "3",
                "--rmax", "5", "--output-dir", str(tmp_path)]) == 0
    m = rows(tmp_path / "metrics.csv")[0]
    assert float(m["argmax"]) == pytest.approx(4.0, abs=ScenarioConfig().range_step)
    man = (tmp_path / "profile.manifest.txt").read_text()
    assert "version = " in man and "wall_time_s = " in man and "[config]" in man


def test_stationary_points_command(tmp_path):
    assert run(["stationary-points", "--config", str(CONFIGS / "reference.cfg"), "--array", "10x10",
                "--spacing", "0.1", "--output-dir", str(tmp_path)]) == 0
    r = rows(tmp_path / "stationary_points.csv")
    assert len(r) == 3 * 100 * 100
    assert {x["target"] for x in r} == {"plate", "sphere", "cylinder"}


def test_equipotential_command(tmp_path):
    assert run(["equipotential", "--alpha", "0.01", "--delta-grid", "0.1,0.2",
                "--output-dir", str(tmp_path)]) == 0
    r = rows(tmp_path / "equipotential.csv")
    assert float(r[1]["R"]) == pytest.approx(4 * float(r[0]["R"]))


def test_mismatch_sweep_command(tmp_path):
    assert run(["mismatch-sweep", "--config", str(CONFIGS / "low_band.cfg"), "--axis1", "R",
                "--grid1", "2:4:3", "--output-dir", str(tmp_path)]) == 0
    b = [float(x["bias_m"]) for x in rows(tmp_path / "mismatch.csv")]
    assert len(b) == 3 and b[0] > b[1] > b[2] > 0


def test_mismatch_sweep_needs_second_grid(tmp_path, capsys):
    assert run(["mismatch-sweep", "--axis1", "R", "--grid1", "2,3", "--axis2", "rho",
                "--output-dir", str(tmp_path)]) == 1


def test_synthesize_command(tmp_path):
    assert run(["synthesize", "--n", "3", "--noise-var", "0.1", "--seed", "4",
                "--output-dir", str(tmp_path)]) == 0
    r = rows(tmp_path / "signals.csv")
    assert {(x["pair_tx"], x["pair_rx"]) for x in r} == {(str(a), str(b)) for a in range(3)
                                                         for b in range(3)}


def test_quick_validate_passes(tmp_path):
    assert run(["validate", "--quick", "--output-dir", str(tmp_path)]) == 0
    r = rows(tmp_path / "validate.csv")
    assert r and all(x["passed"] == "1" for x in r)


@pytest.mark.parametrize("argv", [
    ["profile", "--rmin", "3.9", "--rmax", "4.1"],
    ["synthesize", "--n", "4", "--noise-var", "0.5", "--seed", "9"],
    ["stationary-points", "--n", "5"],
])
def test_outputs_are_byte_identical(tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(argv + ["--output-dir", str(a)]) == 0
    assert run(argv + ["--output-dir", str(b)]) == 0
    for f in sorted(a.glob("*.csv")):
        assert f.read_bytes() == (b / f.name).read_bytes()
