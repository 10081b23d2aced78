import json

import numpy as np
import pytest

from ssmp_williams import cli


def _run(tmp_path, *args):
    return cli.main([*args, "--out", str(tmp_path), "--threads", "1"])


def test_no_subcommand(capsys):
    assert cli.main([]) == cli.EXIT_USAGE
    assert "subcommand" in capsys.readouterr().err


def test_unknown_flag():
    assert cli.main(["cone", "--bogus", "1"]) == cli.EXIT_USAGE


def test_williams_needs_model(tmp_path, capsys):
    assert _run(tmp_path, "williams") == cli.EXIT_USAGE
    assert "--model" in capsys.readouterr().err


def test_malformed_config(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"paths": 10,\n "mu": }\n')
    assert _run(tmp_path, "map-fluct", "--config", str(cfg)) == cli.EXIT_USAGE
    err = capsys.readouterr().err
    assert "line 2" in err and "column" in err


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"phi1": 0.3}))
    assert _run(tmp_path, "cone", "--config", str(cfg)) == cli.EXIT_USAGE


@pytest.mark.parametrize("args", [["cone", "--phi0", "3.5"], ["cone", "--phi", "2.0"],
                                  ["stable", "--alpha", "2.5"], ["stable", "--shell", "1.0,3.0"],
                                  ["map-fluct", "--dt", "0"], ["williams", "--model", "bm", "--mu", "-1"],
                                  ["selftest", "--only", "12"]])
def test_invalid_parameters(tmp_path, args):
    assert _run(tmp_path, *args) == cli.EXIT_USAGE


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"paths": 300, "phi": 0.1}))
    ns = cli.build_parser().parse_args(["cone", "--config", str(cfg), "--paths", "400"])
    ec = cli.resolve_config(ns)
    assert ec.params["paths"] == 400
    assert ec.params["phi"] == 0.1
    assert ec.overridden == ["paths"]


def test_map_fluct_outputs_and_determinism(tmp_path):
    args = ["map-fluct", "--paths", "400", "--checks", "depth", "--seed", "3"]
    rc = _run(tmp_path / "a", *args)
    assert rc in (cli.EXIT_OK, cli.EXIT_FAIL)
    assert _run(tmp_path / "b", *args) == rc
    for name in ("config.json", "report.json", "run_info.json", "plot_data.csv"):
        assert (tmp_path / "a" / name).exists()
    a = (tmp_path / "a" / "report.json").read_bytes()
    assert a == (tmp_path / "b" / "report.json").read_bytes()
    rep = json.loads(a)
    assert rep[0]["name"].startswith("depth")
    conf = json.loads((tmp_path / "a" / "config.json").read_text())
    assert conf["params"]["paths"] == 400


def test_figures_opt_in(tmp_path):
    args = ["cone", "--paths", "400", "--checks", "ladder", "--seed", "2"]
    _run(tmp_path / "plain", *args)
    assert not (tmp_path / "plain" / "figures").exists()
    _run(tmp_path / "fig", *args, "--figures")
    pngs = list((tmp_path / "fig" / "figures").glob("*.png"))
    assert len(pngs) == 1 and pngs[0].stat().st_size > 0


def test_stable_harmonicity_run(tmp_path):
    rc = _run(tmp_path, "stable", "--checks", "harmonicity", "--paths", "300", "--shell", "1.0,2.0",
              "--harmonic-start", "3.0,0.5")
    assert rc in (cli.EXIT_OK, cli.EXIT_FAIL)
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep[0]["name"] == "harmonicity_hdown"
    assert rep[0]["details"]["disk"] > 0


def test_write_table_round_trip(tmp_path):
    x = np.array([0.1, 1 / 3, 1e-300])
    cli.write_table(tmp_path / "t.csv", {"x": x, "k": [1, 2, 3]})
    back = np.genfromtxt(tmp_path / "t.csv", delimiter=",", names=True)
    assert np.array_equal(back["x"], x)
