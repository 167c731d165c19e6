import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from phstriplet.cli_io import Flags, load_config, main, parse_config, run_command, write_csv
from phstriplet.errors import ConfigError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def transport_doc(**overrides):
    doc = json.loads((CONFIGS / "transport.json").read_text())
    doc.update(overrides)
    return doc


def test_parse_transport_fixture():
    cfg = load_config(CONFIGS / "transport.json")
    assert cfg.system.d == 1
    np.testing.assert_array_equal(cfg.system.W, [[1.0, 1.0]])
    assert cfg.simulate.n == 200 and cfg.simulate.dt == 1e-3 and cfg.simulate.T == 2.0


def test_parse_wave_fixture():
    cfg = load_config(CONFIGS / "wave.json")
    assert cfg.system.d == 2
    assert cfg.system.H.kind == "cells"


def test_truncated_json_reports_byte_offset():
    text = (CONFIGS / "transport.json").read_bytes()[:40]
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.offset is not None
    assert 0 <= info.value.offset <= 40
    assert "byte offset" in str(info.value)


def test_offset_counts_bytes_not_characters():
    with pytest.raises(ConfigError) as info:
        parse_config('{"é": 1,}'.encode("utf-8"))
    # the stray brace sits after 9 bytes but 8 characters
    assert info.value.offset == 9


def test_invalid_utf8():
    with pytest.raises(ConfigError) as info:
        parse_config(b'{"d": \xff}')
    assert info.value.offset == 6


def test_wrong_w_columns_names_key():
    doc = transport_doc(W=[[[1.0, 0.0]]])
    with pytest.raises(ConfigError) as info:
        parse_config(json.dumps(doc))
    assert info.value.path.startswith("W")


@pytest.mark.parametrize(
    "override, path",
    [
        ({"d": 0}, "d"),
        ({"interval": [1.0, 0.0]}, "interval"),
        ({"P1": [[[1.0, 0.0, 3.0]]]}, "P1[0][0]"),
        ({"P0": [[["x", 0.0]]]}, "P0[0][0][0]"),
        ({"hamiltonian": {"kind": "nodes", "values": [], "m": 1, "M": 1}}, "hamiltonian.kind"),
        ({"simulate": {"n": 3}}, "simulate.n"),
        ({"simulate": {"initial": {"kind": "square"}}}, "simulate.initial.kind"),
    ],
)
def test_semantic_errors_carry_paths(override, path):
    with pytest.raises(ConfigError) as info:
        parse_config(json.dumps(transport_doc(**override)))
    assert info.value.path == path


def test_missing_key():
    doc = transport_doc()
    del doc["P0"]
    with pytest.raises(ConfigError) as info:
        parse_config(json.dumps(doc))
    assert info.value.path == "P0"


def test_bare_real_is_complex_shorthand():
    cfg = parse_config(json.dumps(transport_doc(W=[[1, 0.5]])))
    np.testing.assert_array_equal(cfg.system.W, [[1.0, 0.5]])


def test_check_transport():
    rec = run_command("check", load_config(CONFIGS / "transport.json"))
    assert rec.verdicts["rank_ok"] and rec.verdicts["psd_ok"]
    assert rec.data["K"] == [[[0.0, 0.0]]]
    assert rec.scalars["norm_K"] == 0.0
    assert rec.scalars["margin"] <= 1e-10


def test_check_inadmissible():
    rec = run_command("check", load_config(CONFIGS / "transport_inadmissible.json"))
    assert not rec.verdicts["psd_ok"]
    assert rec.scalars["margin"] > 0
    assert rec.verdicts["discrete_dissipative"] is False


def test_deficiency_transport():
    rec = run_command("deficiency", load_config(CONFIGS / "transport.json"))
    assert rec.scalars["dim_plus"] == rec.scalars["dim_minus"] == 1
    assert rec.scalars["residual_plus"] <= 1e-9 and rec.scalars["residual_minus"] <= 1e-9
    assert rec.data["endpoints_plus"][1][0][0] == pytest.approx(np.exp(-1))


def test_green_command():
    rec = run_command("green", load_config(CONFIGS / "wave.json"), Flags(n=32, pairs=3))
    assert rec.settings["n"] == 32 and rec.settings["pairs"] == 3
    assert 3.2 <= rec.scalars["ratio"] <= 4.8


def test_simulate_writes_csv(tmp_path):
    out = tmp_path / "traj.csv"
    flags = Flags(n=32, dt=0.05, T=0.15, out=str(out))
    rec = run_command("simulate", load_config(CONFIGS / "transport.json"), flags)
    lines = out.read_bytes().split(b"\n")
    assert lines[0] == b"t,energy,boundary_power"
    assert lines[-1] == b"" and b"\r" not in out.read_bytes()
    rows = list(csv.reader(out.read_text().splitlines()[1:]))
    assert len(rows) == 4
    assert rec.settings["dt"] == 0.05 and rec.settings["T"] == 0.15 and rec.settings["seed"] == 0
    assert rec.outputs == [str(out)]


def test_simulate_with_states(tmp_path):
    out = tmp_path / "traj.csv"
    flags = Flags(n=8, dt=0.1, T=0.2, out=str(out), states=True)
    run_command("simulate", load_config(CONFIGS / "wave.json"), flags)
    header = out.read_text().splitlines()[0].split(",")
    assert len(header) == 3 + 2 * 2 * 9


def test_spectrum_csv(tmp_path):
    out = tmp_path / "spec.csv"
    rec = run_command("spectrum", load_config(CONFIGS / "transport_conservative.json"), Flags(n=16, out=str(out)))
    rows = out.read_text().splitlines()
    assert rows[0] == "re,im"
    assert len(rows) == 1 + rec.scalars["count"]
    assert rec.verdicts["spectrum_in_left_half_plane"]


def test_write_csv_examples(tmp_path):
    path = tmp_path / "a.csv"
    write_csv(["t", "energy"], [[0.0, 1.0], [0.1, 0.9], [0.2, 0.8]], path)
    assert len(path.read_text().splitlines()) == 4
    write_csv(["t", "energy"], [], path)
    assert path.read_text() == "t,energy\n"
    with pytest.raises(ValueError):
        write_csv(["t", "energy"], [[0.0, 1.0], [0.1]], path)
    with pytest.raises(OSError, match="missing"):
        write_csv(["t"], [[1.0]], tmp_path / "missing" / "x.csv")


def test_write_csv_round_trips_doubles(tmp_path):
    path = tmp_path / "a.csv"
    values = [0.1, 1 / 3, np.pi * 1e-300, -2.5e17]
    write_csv(["v"], [[v] for v in values], path)
    back = [float(s) for s in path.read_text().splitlines()[1:]]
    assert back == values


def test_determinism(tmp_path):
    cfg = load_config(CONFIGS / "wave.json")
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}.csv"
        rec = run_command("simulate", cfg, Flags(n=16, dt=0.05, T=0.2, out=str(out)))
        rec.outputs = []
        outs.append((out.read_bytes(), rec.to_json()))
    assert outs[0] == outs[1]
    g1 = run_command("green", cfg, Flags(n=16, pairs=2, seed=5)).to_json()
    g2 = run_command("green", cfg, Flags(n=16, pairs=2, seed=5)).to_json()
    assert g1 == g2


def test_json_keys_sorted():
    text = run_command("check", load_config(CONFIGS / "wave.json"), Flags(n=16)).to_json()
    doc = json.loads(text)
    assert list(doc) == sorted(doc)
    assert json.dumps(doc, sort_keys=True, indent=2) == text


def test_main_exit_codes(tmp_path, capsys):
    assert main(["check", str(CONFIGS / "transport.json"), "--n", "16"]) == 0
    assert json.loads(capsys.readouterr().out)["command"] == "check"

    bad = tmp_path / "bad.json"
    bad.write_text('{"d": 1,')
    assert main(["check", str(bad)]) == 1
    assert "byte offset" in capsys.readouterr().err

    assert main(["check", str(tmp_path / "absent.json")]) == 1

    with pytest.raises(SystemExit) as info:
        main(["frobnicate", str(CONFIGS / "transport.json")])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["check", str(CONFIGS / "transport.json"), "--tol-eq", "-1"])
    assert info.value.code == 2


def test_tolerance_flags_echoed(capsys):
    main(["check", str(CONFIGS / "transport.json"), "--n", "16", "--tol-psd", "1e-7", "--seed", "3"])
    settings = json.loads(capsys.readouterr().out)["settings"]
    assert settings["tol"]["psd_abs"] == 1e-7
    assert settings["seed"] == 3 and settings["n"] == 16


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "phstriplet", "check", str(CONFIGS / "transport_conservative.json"), "--n", "16"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["verdicts"]["admissible"] is True
