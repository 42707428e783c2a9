import pytest

from jamgame.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_VERIFY,
    ConfigError,
    main,
    parse_config,
    parse_config_text,
)
from jamgame.core_model import BASELINE


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_empty_config_is_baseline(tmp_path):
    cfg = parse_config(write(tmp_path, ""))
    assert cfg.params == BASELINE
    assert cfg.sweep is None


def test_override_and_comments():
    cfg = parse_config_text("# reward sweep\nG_m = 120   # trailing\n\n")
    assert cfg.params.G_m == 120 and cfg.params.G_s == BASELINE.G_s


@pytest.mark.parametrize("text,where", [
    ("sweep = G_s\nfrom = 1\nto = 2\nsteps = 1\n", "steps"),
    ("G_x = 3\n", "line 1"),
    ("n_m = ten\n", "line 1"),
    ("\nG_m 5\n", "line 2"),
    ("n_s = 2.5\n", "line 1"),
    ("sweep = Q\nfrom = 0\nto = 1\nsteps = 3\n", "sweep"),
    ("sweep = n_m\nfrom = 1\nto = 2\nsteps = 3\n", "integers"),
    ("n_s = 80\n", "n_s"),
    ("steps = 4\n", "without sweep"),
    ("mode = fancy\n", "mode"),
    ("G_m = 1\nG_m = 2\n", "duplicate"),
])
def test_config_errors(text, where):
    with pytest.raises(ConfigError, match=where):
        parse_config_text(text)


def test_missing_file(tmp_path):
    assert main(["equilibrium", "--config", str(tmp_path / "nope.cfg")]) == EXIT_CONFIG


def test_equilibrium_command(tmp_path, capsys):
    assert main(["equilibrium", "--config", write(tmp_path, "")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "P_ad" in out and "91.5789473684" in out


def test_equilibrium_without_jammers(tmp_path, capsys):
    assert main(["equilibrium", "--config", write(tmp_path, "n_m = 0\n")]) == EXIT_OK
    assert "U_m       0.0000000000" in capsys.readouterr().out


def test_malformed_config_exit(tmp_path):
    assert main(["equilibrium", "--config", write(tmp_path, "junk\n")]) == EXIT_CONFIG


def test_sweep_csv(tmp_path):
    cfg = write(tmp_path, "sweep = G_s\nfrom = 10\nto = 150\nsteps = 5\n")
    out = tmp_path / "s.csv"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == EXIT_OK
    lines = out.read_bytes().split(b"\n")
    assert lines[0] == b"param_value,P_ad,P_bd,P_cd,P_AD,P_BD,P_CD,U_s,U_m,degenerate_flags"
    assert len(lines) == 7 and lines[-1] == b""
    assert lines[1].startswith(b"10,")


def test_sweep_parallel_matches_serial(tmp_path, monkeypatch):
    cfg = write(tmp_path, "sweep = C_m\nfrom = 0\nto = 20\nsteps = 11\n")
    serial, parallel = tmp_path / "a.csv", tmp_path / "b.csv"
    monkeypatch.setenv("JAMGAME_THREADS", "0")
    main(["sweep", "--config", cfg, "--out", str(serial)])
    monkeypatch.setenv("JAMGAME_THREADS", "4")
    main(["sweep", "--config", cfg, "--out", str(parallel)])
    assert serial.read_bytes() == parallel.read_bytes()


def test_sweep_needs_descriptor(tmp_path):
    assert main(["sweep", "--config", write(tmp_path, "")]) == EXIT_CONFIG


def test_simulate_csv(tmp_path):
    cfg = write(tmp_path, "slots = 1\nseed = 3\n")
    out = tmp_path / "t.csv"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].split(",")[:3] == ["slot", "n_1", "n_2"]
    assert lines[0].endswith("left_network")
    assert len(lines) == 2


def test_simulate_reproducible(tmp_path):
    cfg = write(tmp_path, "slots = 25\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["simulate", "--config", cfg, "--seed", "8", "--out", str(a)])
    main(["simulate", "--config", cfg, "--seed", "8", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_verify_commands(tmp_path, capsys):
    cfg = write(tmp_path, "")
    assert main(["verify", "--config", cfg]) == EXIT_OK
    assert main(["verify", "--config", cfg, "--perturb"]) == EXIT_VERIFY
    assert main(["verify", "--config", write(tmp_path, "n_m = 0\n", "z.cfg")]) == EXIT_OK
    assert "empty" in capsys.readouterr().out
