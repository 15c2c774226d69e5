import csv
import filecmp
import shutil
import struct
from pathlib import Path

import numpy as np
import pytest

from bhlab.artifacts import read_summary
from bhlab.cli import main
from bhlab.config import ConfigError, dump_config, load_config, parse_config
from bhlab.errors import PreconditionError
from bhlab.hilbert import SpectralGrid
from bhlab.solver import Field, read_checkpoint, write_checkpoint

SCEN = Path(__file__).resolve().parents[1] / "scenarios"


def test_unknown_key_reports_file_line_section():
    text = "[grid]\nn = 256\n\n[physics]\nsource = zero\ncolour = blue\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text, "x.cfg")
    err = info.value
    assert (err.line, err.section, err.key) == (6, "physics", "colour")
    assert str(err).startswith("x.cfg:6: [physics] colour: unknown key")


@pytest.mark.parametrize("text,line,key", [
    ("[grid]\nn = 1000\n", 2, "n"),
    ("[scheme]\ncfl = 1.5\n", 2, "cfl"),
    ("[physics]\nsource = maybe\n", 2, "source"),
    ("[perturbation]\nseed = -1\n", 2, "seed"),
    ("[reference]\n\ns0 = 9.0\n", 3, "s0"),
    ("[reference]\ndelta = 5\n", 2, "delta"),
    ("[run]\nkind = riemann\n[riemann]\nu_left = 20\n", 4, "u_left"),
])
def test_bad_values_are_located(text, line, key):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line and info.value.key == key


def test_structural_errors():
    with pytest.raises(ConfigError, match="outside any"):
        parse_config("n = 3\n")
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config("[mesh]\nn = 4\n")
    with pytest.raises(ConfigError) as info:
        parse_config("[grid]\nn = 256\nn = 512\n")
    assert info.value.line == 3
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("/nonexistent/file.cfg")


@pytest.mark.parametrize("name", ["default_bh", "sweep_bh", "ablation_bh", "riemann_burgers",
                                  "zero_perturbation"])
def test_round_trip(name):
    cfg = load_config(SCEN / f"{name}.cfg")
    again = parse_config(dump_config(cfg))
    assert again == cfg
    assert dump_config(again) == dump_config(cfg)


def test_seed_override():
    cfg = load_config(SCEN / "default_bh.cfg").with_seed(2 ** 64 - 1)
    assert cfg.scenario.seed == 2 ** 64 - 1


def test_checkpoint_layout(tmp_path):
    grid = SpectralGrid(32)
    state = Field(np.linspace(-1, 1, 32), grid, 0.75)
    p = tmp_path / "c.bhlb"
    write_checkpoint(p, state)
    blob = p.read_bytes()
    assert len(blob) == 32 + 8 * 32
    assert struct.unpack_from("<4sIQd", blob) == (b"BHLB", 1, 32, 0.75)
    back = read_checkpoint(p)
    assert np.array_equal(back.values, state.values) and back.time == 0.75
    p.write_bytes(b"XXXX" + blob[4:])
    with pytest.raises(PreconditionError):
        read_checkpoint(p)
    p.write_bytes(blob[:-8])
    with pytest.raises(PreconditionError):
        read_checkpoint(p)


def test_validate_only_writes_nothing(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["run", str(SCEN / "default_bh.cfg"), "--validate-only", "--out", str(out)]) == 0
    assert not out.exists()
    assert main(["run", str(SCEN / "bad.cfg"), "--validate-only", "--out", str(out)]) == 1
    assert not out.exists()
    assert "bad.cfg:3: [grid] n:" in capsys.readouterr().err


def test_usage_errors_exit_one(capsys):
    assert main(["verify", "nosuch"]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["run", str(SCEN / "default_bh.cfg"), "--jobs", "0"]) == 1
    capsys.readouterr()


def _small_riemann(tmp_path):
    text = (SCEN / "riemann_burgers.cfg").read_text().replace("n = 512", "n = 128")
    p = tmp_path / "r.cfg"
    p.write_text(text.replace("t_end = 4.0", "t_end = 2.0"))
    return p


def test_riemann_run_artifacts(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", str(_small_riemann(tmp_path)), "--out", str(out)]) == 0
    summary = read_summary(out / "summary.txt")
    assert summary["status"] == "ok" and summary["verdict"] == "pass"
    assert load_config(out / "config.cfg") == load_config(_small_riemann(tmp_path))
    with open(out / "field.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "u", "u_exact"] and len(rows) == 129
    final = read_checkpoint(out / "final.bhlb")
    assert final.time == pytest.approx(2.0)
    assert "PASS" in capsys.readouterr().out


def test_zero_perturbation_run_is_silent_and_deterministic(tmp_path, capsys):
    text = (SCEN / "zero_perturbation.cfg").read_text().replace("n = 512", "n = 128")
    cfg = tmp_path / "z.cfg"
    cfg.write_text(text)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(cfg), "--out", str(a), "--seed", "7"]) == 0
    assert main(["run", str(cfg), "--out", str(b), "--seed", "7"]) == 0
    with open(a / "ledger.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert all(float(r["E"]) == 0.0 for r in rows)
    for name in ("ledger.csv", "E.dat", "final.bhlb", "summary.txt"):
        assert filecmp.cmp(a / name, b / name, shallow=False), name
    assert read_summary(a / "summary.txt")["seed"] == "7"
    capsys.readouterr()


def test_unwritable_output(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", str(_small_riemann(tmp_path)), "--out", str(blocker / "sub")]) == 1
    assert "cannot write" in capsys.readouterr().err
    shutil.rmtree(tmp_path, ignore_errors=True)
