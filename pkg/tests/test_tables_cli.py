import subprocess
import sys

import numpy as np
import pytest

from cfmarc import cli
from cfmarc.analysis import outage_prob, throughput
from cfmarc.channel import scenario
from cfmarc.montecarlo import run_sweep
from cfmarc.tables import (
    STRATEGY_COLUMNS,
    config_from_mapping,
    config_hash,
    config_text,
    parse_config,
    parse_grid,
    points_from_table,
    read_table,
    strategy_rows,
    write_table,
)

CFG = """# scenario 2, short run
M=2
R=2
seed=7
scenario=scen2
snr_grid_db=10:20:5
trials=3000
components=yes
"""


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_grid():
    assert parse_grid("5:40:2.5")[:3] == (5.0, 7.5, 10.0) and parse_grid("5:40:2.5")[-1] == 40.0
    assert parse_grid("25, 30 35") == (25.0, 30.0, 35.0)
    for bad in ("5:40", "40:5:5", "5:41:5", "5:40:0"):
        with pytest.raises(ValueError):
            parse_grid(bad)


def test_config_parsing_and_hash():
    cfg, opts = config_from_mapping(parse_config(CFG))
    assert (cfg.M, cfg.R, cfg.seed, cfg.delta_sr, cfg.name) == (2, 2.0, 7, 0.5, "scen2")
    assert cfg.snr_grid_db == (10.0, 15.0, 20.0) and opts["components"] is True
    text = config_text(cfg, opts)
    assert config_from_mapping(parse_config(text))[0] == cfg
    assert config_hash(text) == config_hash(config_text(*config_from_mapping(parse_config(text))))
    assert config_hash(text) != config_hash(config_text(cfg.with_(seed=8), opts))


@pytest.mark.parametrize("text, msg", [
    ("R=2\nseed=1\nscenario=scen2\nsnr_grid_db=10\ntrials=5\n", "missing required"),
    ("M=2\nR=2\nseed=1\nscenario=scen2\nsnr_grid_db=10\ntrials=5\ncolour=red\n", "unknown key"),
    ("M=2\nM=3\nR=2\nseed=1\n", "duplicate"),
    ("M=2\nR=2\nseed=1\nscenario=scen2\ndelta_sr=0.5\nsnr_grid_db=10\ntrials=5\n", "not both"),
    ("M=2\nR=2\nseed=1\nscenario=scen2\nsnr_grid_db=10\n", "trials"),
    ("M=2\nR=2\nseed=1\nscenario=scen2\nsnr_grid_db=10\ntrials=5\nadaptive_target=9\n", "go together"),
    ("M=2.5\nR=2\nseed=1\nscenario=scen2\nsnr_grid_db=10\ntrials=5\n", "integer"),
    ("just words\n", "key=value"),
])
def test_config_errors(text, msg):
    with pytest.raises(ValueError, match=msg):
        config_from_mapping(parse_config(text))


def test_table_round_trip(tmp_path):
    res = run_sweep(scenario("scen1", M=2, R=2.0, snr_grid_db=(12.5, 20.0), trials=2000, seed=3), workers=1)
    path = tmp_path / "lim.dat"
    write_table(path, STRATEGY_COLUMNS, strategy_rows(res.points["lim_fb"]))
    text = path.read_text()
    assert text.splitlines()[0] == " ".join(STRATEGY_COLUMNS)
    assert "  " not in text and text.isascii()
    back = points_from_table(path)
    for snr, pc in res.points["lim_fb"].items():
        assert vars(back[snr]) == vars(pc)
        # estimators from the file equal the in-memory ones bit for bit
        assert outage_prob(back[snr]) == outage_prob(res, "lim_fb", snr)
        assert throughput(back[snr], "lim_fb", M=2) == throughput(res, "lim_fb", snr)
    with pytest.raises(ValueError):
        write_table(path, ["a", "b"], [(1,)])
    (tmp_path / "bad.dat").write_text("a b\n1\n")
    with pytest.raises(ValueError):
        read_table(tmp_path / "bad.dat")


def test_sweep_reruns_are_byte_identical(tmp_path, capsys):
    (tmp_path / "s2.cfg").write_text(CFG)
    code, out, _ = run(["sweep", "--config", str(tmp_path / "s2.cfg"), "--out", str(tmp_path / "a"),
                        "--workers", "1"], capsys)
    assert code == 0
    assert "seed=7" in out and "config=" in out and "cfmarc " in out
    code, _, _ = run(["sweep", "--config", str(tmp_path / "s2.cfg"), "--out", str(tmp_path / "b"),
                      "--workers", "2"], capsys)
    assert code == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "scen2_lim_fb.dat" in names and "scen2_components.dat" in names and "scen2_manifest.txt" in names
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes(), n
    code, out, _ = run(["analyze", "--throughput", str(tmp_path / "a" / "scen2_lim_fb.dat"), "--M", "2"], capsys)
    assert code == 0 and len(out.splitlines()) == 3
    code, out, _ = run(["analyze", "--bounds", str(tmp_path / "a" / "scen2_components.dat"),
                        "--lim", str(tmp_path / "a" / "scen2_lim_fb.dat")], capsys)
    assert code == 0 and out.startswith("sd_snrdb lim_bound")
    code, out, _ = run(["analyze", "--summary", str(tmp_path / "a" / "scen2_soussi.dat")], capsys)
    assert code == 0 and "[" in out


def test_analyze_slope_on_exact_power_law(tmp_path, capsys):
    rows = []
    for snr in (25, 30, 35, 40):
        n = 10**12
        rows.append((str(snr), n, round(n * 10 ** (-2 * snr / 10)), n, 0, 2 * n))
    write_table(tmp_path / "out.dat", STRATEGY_COLUMNS, rows)
    code, out, _ = run(["analyze", "--slope", str(tmp_path / "out.dat"), "--window", "25:40"], capsys)
    assert code == 0 and out.strip() == "2.00"


def test_user_errors_exit_1(tmp_path, capsys):
    assert run(["sweep", "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path)], capsys)[0] == 1
    (tmp_path / "bad.cfg").write_text("M=2\nR=2\n")
    code, _, err = run(["sweep", "--config", str(tmp_path / "bad.cfg"), "--out", str(tmp_path)], capsys)
    assert code == 1 and "seed" in err
    (tmp_path / "ok.cfg").write_text(CFG)
    blocker = tmp_path / "file"
    blocker.write_text("")
    code, _, err = run(["sweep", "--config", str(tmp_path / "ok.cfg"), "--out", str(blocker / "sub")], capsys)
    assert code == 1 and "output directory" in err
    assert run(["figure", "fig9", "--seed", "1", "--out", str(tmp_path)], capsys)[0] == 1
    assert run(["figure", "fig8", "--out", str(tmp_path)], capsys)[0] == 1  # seed is mandatory
    assert run(["analyze", "--throughput", str(tmp_path / "none.dat"), "--M", "2"], capsys)[0] == 1
    assert run([], capsys)[0] == 1


def test_internal_error_exit_2(monkeypatch, capsys):
    def boom(args):
        raise RuntimeError("kaput")

    monkeypatch.setattr(cli, "cmd_analyze", boom)
    code, _, err = run(["analyze", "--summary", "x.dat"], capsys)
    assert code == 2 and "internal error" in err


def test_figure_fig8_small(tmp_path, capsys):
    code, out, _ = run(["figure", "fig8", "--seed", "7", "--out", str(tmp_path), "--trials", "4096",
                        "--grid", "30:40:10", "--workers", "1"], capsys)
    assert code == 0
    lines = [ln for ln in out.splitlines() if "40 dB" in ln]
    tp = {ln.split()[0]: float(ln.split("throughput=")[1]) for ln in lines}
    assert tp["lim_fb"] > 1.9 and tp["suf_fb"] > 1.9
    assert 0.95 <= tp["soussi"] <= 1.0 and 0.95 <= tp["insausti"] <= 1.0
    assert (tmp_path / "fig8_scen2_lim_fb.dat").exists()


@pytest.mark.parametrize("name", ["fig3", "fig4"])
def test_other_figures_small(tmp_path, capsys, name):
    code, out, _ = run(["figure", name, "--seed", "2", "--out", str(tmp_path), "--trials", "2000",
                        "--grid", "10:20:10", "--samples", "50", "--workers", "1"], capsys)
    assert code == 0 and out.strip()
    tables = [p for p in tmp_path.iterdir() if p.suffix == ".dat"]
    assert tables
    for p in tables:
        target = ["analyze", "--summary", str(p)] + (["--grid", "10:20:10"] if "thresholds" in p.name else [])
        assert run(target, capsys)[0] == 0


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "cfmarc.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("cfmarc ")
