from dataclasses import replace

import pytest

from rational_trust.cli import EXIT_CONFIG, EXIT_OK, EXIT_USAGE, main
from rational_trust.config import CONFIG_HEADER, parse_config


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(
        CONFIG_HEADER
        + "\n[market]\nrounds = 15\nbuyers_per_round = 4\n"
        "[seller:attacker]\nstrategy = re_entry\n[seller:honest]\ncount = 2\n"
    )
    return path


def test_pd(capsys):
    assert main(["analyze-game", "--game", "pd"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "pure nash: {(D,D)}" in out
    assert "player 1 C: strict" in out


def test_sellers_f2(capsys):
    argv = "analyze-game --game sellers --variant f2 --mu 0.05 --sigma 0.01 --rho 0.01 --lifetime 1"
    assert main(argv.split()) == EXIT_OK
    assert "pure nash: {(C,C)}" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [
        "analyze-game --game sellers --variant f1",
        "analyze-game",
        "analyze-game --game chess",
        "analyze-game --game sellers --variant f2 --mu 0.05 --sigma 0.01",
        "frobnicate",
    ],
)
def test_usage_errors(argv, capsys):
    assert main(argv.split()) == EXIT_USAGE
    assert capsys.readouterr().err


def test_simulate_stdout(small_cfg, capsys):
    assert main(["simulate", str(small_cfg), "--seed", "3", "--out", "-"]) == EXIT_OK
    cap = capsys.readouterr()
    lines = cap.out.splitlines()
    assert lines[0] == "# rational-trust trace v1"
    assert lines[1].startswith("round,persistent_id,identity_id")
    assert len(lines) == 2 + 15 * 3
    # echoed effective config goes to stderr with stdout taken by the trace
    echoed = cap.err.split("# rational-trust summary")[0]
    assert parse_config(echoed).rng_seed == 3


def test_simulate_files_deterministic(small_cfg, tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", str(small_cfg), "--seed", "9", "--out", str(a)]) == EXIT_OK
    assert main(["simulate", str(small_cfg), "--seed", "9", "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert a.with_suffix(".summary.txt").read_text().startswith("# rational-trust summary v1")
    echoed = a.with_suffix(".config.cfg").read_text()
    assert parse_config(echoed) == replace(parse_config(small_cfg.read_text()), rng_seed=9)


def test_out_dir_env(small_cfg, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("RATIONAL_TRUST_OUT", str(tmp_path / "env"))
    assert main(["simulate", str(small_cfg)]) == EXIT_OK
    assert (tmp_path / "env" / "trace.csv").exists()


def test_simulate_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text(CONFIG_HEADER + "\n[market]\nrounds = 0\n[seller:h]\n")
    assert main(["simulate", str(bad), "--out", "-"]) == EXIT_CONFIG
    assert "market" in capsys.readouterr().err


def test_eval_attacks_one_seed(small_cfg, capsys):
    argv = ["eval-attacks", str(small_cfg), "--attacks", "re-entry", "--variants", "f1,f2", "--seeds", "1"]
    assert main(argv) == EXIT_OK
    rows = capsys.readouterr().out.splitlines()
    assert rows[0] == "attack,variant,mean_delta,stddev,seeds"
    assert [r.split(",")[:2] for r in rows[1:]] == [["re-entry", "f1"], ["re-entry", "f2"]]
    assert all(r.split(",")[3] == "NA" for r in rows[1:])


def test_eval_attacks_all(small_cfg, capsys):
    argv = ["eval-attacks", str(small_cfg), "--attacks", "all", "--variants", "f2", "--seeds", "2"]
    assert main(argv) == EXIT_OK
    rows = capsys.readouterr().out.splitlines()[1:]
    assert len(rows) == 7


def test_eval_attacks_default_calibration(capsys):
    argv = ["eval-attacks", "--attacks", "re-entry", "--variants", "f1,f2", "--seeds", "15"]
    assert main(argv) == EXIT_OK
    rows = [r.split(",") for r in capsys.readouterr().out.splitlines()[1:]]
    assert float(rows[0][2]) > 0 > float(rows[1][2])


def test_eval_attacks_unknown(small_cfg, capsys):
    assert main(["eval-attacks", str(small_cfg), "--attacks", "phishing"]) == EXIT_USAGE
    assert "re-entry" in capsys.readouterr().err


def test_sweep_single_point(tmp_path, capsys):
    out = tmp_path / "s.csv"
    argv = ["sweep", "--rl-min", "0.01", "--rl-max", "0.01", "--sigma-min", "0.01",
            "--sigma-max", "0.01", "--points", "1", "--out", str(out)]
    assert main(argv) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[2:] == ["0.01,0.01,CC,CC"]


def test_sweep_zero_lifetime(capsys):
    argv = ["sweep", "--rl-min", "0", "--rl-max", "0", "--points", "1", "--out", "-"]
    assert main(argv) == EXIT_OK
    labels = {line.split(",")[2] for line in capsys.readouterr().out.splitlines()[2:]}
    assert labels == {"DD"}


def test_sweep_default(tmp_path, capsys):
    assert main(["sweep", "--out", str(tmp_path / "m.csv")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "misclassified: 0" in out
    assert "analytic boundary: sigma = 1.5 * rho*l" in out


def test_sweep_degenerate(capsys):
    assert main(["sweep", "--rl-min", "0.1", "--rl-max", "0.01"]) == EXIT_USAGE


def test_help(capsys):
    assert main(["--help"]) == EXIT_OK
    assert "[seller:NAME]" in capsys.readouterr().out
