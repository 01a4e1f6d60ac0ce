import json

import numpy as np
import pytest

from vortex_spectra import cli


def run(tmp_path, *args):
    return cli.main(list(args) + ["--out-dir", str(tmp_path)])


def test_parse_range():
    assert np.allclose(cli.parse_range("0:1:5"), [0, 0.25, 0.5, 0.75, 1.0])
    assert np.allclose(cli.parse_range("1:100:log3"), [1, 10, 100])
    assert np.allclose(cli.parse_range("0,5,10"), [0, 5, 10])
    assert np.allclose(cli.parse_range("3"), [3])
    for bad in ("a:b:3", "0:1:logx", "0:1:log3", "1,x"):
        with pytest.raises(cli.InputError):
            cli.parse_range(bad)


def test_parse_triples():
    assert cli.parse_triples("1,2,0.5;2,1,0.25") == [(1, 2, 0.5), (2, 1, 0.25)]
    assert len(cli.parse_triples(cli.DEFAULT_TRIPLES)) == 15
    with pytest.raises(cli.InputError):
        cli.parse_triples("1,2")


@pytest.mark.parametrize("profile,code", [("uniform", 0), ("coriolis_example", 0)])
def test_profile_check_exit(tmp_path, profile, code):
    assert run(tmp_path, "profile-check", "--profile", profile) == code
    rep = json.loads((tmp_path / "profile_check.json").read_text())
    assert rep["config"]["profile"] == profile


def test_malformed_profile_exit(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("r,u\n0,1\n1,x\n")
    assert run(tmp_path, "profile-check", "--profile", str(bad)) == 2
    assert run(tmp_path, "profile-check", "--profile", "nosuchkind") == 2


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nprofile = uniform\nrmax = 50\n")
    assert run(tmp_path, "profile-check", "--config", str(cfg)) == 0
    rep = json.loads((tmp_path / "profile_check.json").read_text())
    assert rep["config"]["profile"] == "uniform"
    assert rep["config"]["rmax"] == 50.0
    # flags given on the command line win over the file
    assert run(tmp_path, "profile-check", "--config", str(cfg), "--rmax", "60") == 0
    rep = json.loads((tmp_path / "profile_check.json").read_text())
    assert rep["config"]["rmax"] == 60.0


@pytest.mark.parametrize("text", ["nosuchkey = 1\n", "profile uniform\n", "out_dir = x\n"])
def test_bad_config(tmp_path, text):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    assert run(tmp_path, "profile-check", "--config", str(cfg)) == 2


def test_bad_arguments(tmp_path):
    assert run(tmp_path, "basis", "--profile", "uniform", "--c", "1.5") == 2
    assert run(tmp_path, "nosuchcommand") == 2


def test_basis(tmp_path):
    assert run(tmp_path, "basis", "--profile", "uniform", "--n", "50") == 0
    meta = json.loads((tmp_path / "basis.json").read_text())
    assert abs(meta["absW"] - 4.0 / np.sqrt(2.0 * np.pi)) < 1e-6
    data = np.genfromtxt(tmp_path / "basis.csv", delimiter=",", names=True)
    assert data.size == 50


def test_evolve_identity(tmp_path):
    assert run(tmp_path, "evolve", "--profile", "uniform", "--k", "1", "--t", "0",
               "--r-max", "6", "--h", "0.05") == 0
    s0 = np.loadtxt(tmp_path / "initial_state.csv", delimiter=",", skiprows=1)
    s1 = np.loadtxt(tmp_path / "state_000.csv", delimiter=",", skiprows=1)
    assert np.max(np.abs(s1 - s0)) <= 1e-10


def test_deterministic(tmp_path):
    args = ["wronskian-scan", "--profile", "coriolis_example",
            "--c", "0.3,0.7", "--xi", "0.5,5"]
    assert run(tmp_path / "a", *args) == 0
    assert run(tmp_path / "b", *args) == 0
    for name in ("wronskian_scan.csv", "regime_map.csv", "wronskian_scan.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
