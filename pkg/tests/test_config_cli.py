import json
import subprocess
import sys

import pytest

from dstcsim.cli import CSV_COLUMNS, emit_results, main
from dstcsim.config import ConfigError, SimConfig, parse_config, parse_snr_grid
from dstcsim.protocol import run_sweep

FAST = "users=2 relays=4 gain=8 symbols=20 packets=2"


def test_empty_config_yields_default_scenario():
    cfg = parse_config("")
    assert (cfg.users, cfg.relays, cfg.gain) == (3, 6, 16)
    assert cfg.symbols == 1000
    assert cfg.capacity == 6
    assert cfg.snr_db == tuple(float(v) for v in range(0, 17, 2))
    assert cfg.scheme == "buffered"


def test_zero_users_error_names_the_key():
    with pytest.raises(ConfigError) as err:
        parse_config("users=0")
    assert err.value.key == "users"


def test_unknown_key_rejected():
    with pytest.raises(ConfigError) as err:
        parse_config("frobnicate=1")
    assert err.value.key == "frobnicate"


def test_dynamic_greedy_line_parses():
    cfg = parse_config("policy=greedy buffer=dynamic-snr d1=2 d2=2")
    assert cfg.policy == "greedy"
    assert cfg.buffer_mode == "dynamic-snr"
    assert (cfg.d1, cfg.d2) == (2.0, 2)


def test_comments_and_multiline():
    cfg = parse_config("# a comment\nusers=2\nrelays=4 # trailing\n\ngain=8\n")
    assert (cfg.users, cfg.relays, cfg.gain) == (2, 4, 8)


def test_snr_grid_forms():
    assert parse_snr_grid("0:16:2") == tuple(float(v) for v in range(0, 17, 2))
    assert parse_snr_grid("6,8,10") == (6.0, 8.0, 10.0)
    assert parse_snr_grid("8") == (8.0,)
    with pytest.raises(ConfigError):
        parse_snr_grid("8:4:2")
    with pytest.raises(ConfigError):
        parse_snr_grid("a:b:c")


def test_validation_catches_structural_problems():
    with pytest.raises(ConfigError):
        parse_config("relays=5 scheme=no-selection")
    with pytest.raises(ConfigError):
        parse_config("relays=5 policy=fixed-pairs")
    with pytest.raises(ConfigError):
        parse_config("symbols=7")
    with pytest.raises(ConfigError):
        parse_config("capacity=99")
    with pytest.raises(ConfigError):
        parse_config("scheme=non-buffered policy=fixed-pairs")
    with pytest.raises(ConfigError):
        parse_config("users=x")
    with pytest.raises(ConfigError):
        parse_config("relays=0")
    cfg = parse_config("relays=0 scheme=direct")
    assert cfg.scheme == "direct"


def test_csv_rows_match_grid():
    cfg = parse_config(FAST, snr_db=(4.0,))
    payload = emit_results(run_sweep(cfg), "csv").decode()
    lines = payload.strip().split("\n")
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 2

    cfg3 = parse_config(FAST, snr_db=(0.0, 4.0, 8.0))
    lines3 = emit_results(run_sweep(cfg3), "csv").decode().strip().split("\n")
    assert len(lines3) == 4


def test_identical_runs_are_byte_identical():
    cfg = parse_config(FAST, snr_db=(0.0, 8.0))
    first = emit_results(run_sweep(cfg), "csv")
    second = emit_results(run_sweep(cfg), "csv")
    assert first == second


def test_json_round_trips_result_values():
    cfg = parse_config(FAST, snr_db=(0.0, 8.0))
    sweep = run_sweep(cfg)
    payload = json.loads(emit_results(sweep, "json").decode())
    assert payload["manifest"]["seed"] == cfg.seed
    assert payload["manifest"]["config"]["users"] == 2
    assert len(payload["results"]) == 2
    for row, point in zip(payload["results"], sweep.points):
        assert row["snr_db"] == point.snr_db
        assert row["ber"] == point.ber
        assert row["avg_delay_epochs"] == point.avg_delay
        assert row["avg_buffer_size"] == point.avg_capacity
        assert row["residual_blocks"] == point.residual
        assert row["mults"] == point.mults
        assert row["adds"] == point.adds


def test_emit_rejects_unknown_format():
    cfg = parse_config(FAST, snr_db=(4.0,))
    with pytest.raises(ValueError):
        emit_results(run_sweep(cfg), "xml")


def test_cli_writes_csv_file(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text(FAST + "\n")
    out = tmp_path / "result.csv"
    code = main(["--config", str(conf), "--snr", "4:8:4", "--seed", "11", "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 3
    assert lines[0].startswith("snr_db,scheme")


def test_cli_is_reproducible_bytewise(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text(FAST + "\n")
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    assert main(["--config", str(conf), "--snr", "4", "--seed", "11", "--out", str(out_a)]) == 0
    assert main(["--config", str(conf), "--snr", "4", "--seed", "11", "--out", str(out_b)]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()


def test_cli_scheme_override_and_json(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text(FAST + "\n")
    out = tmp_path / "result.json"
    code = main([
        "--config", str(conf), "--snr", "4", "--scheme", "non-buffered",
        "--format", "json", "--out", str(out),
    ])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["manifest"]["config"]["scheme"] == "non-buffered"


def test_cli_error_paths(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "missing.conf")]) == 2
    err = capsys.readouterr().err
    assert "cannot read config" in err

    conf = tmp_path / "bad.conf"
    conf.write_text("users=0\n")
    assert main(["--config", str(conf)]) == 2
    err = capsys.readouterr().err
    assert "users" in err

    assert main(["--scheme", "teleport", "--snr", "4"]) == 2
    err = capsys.readouterr().err
    assert "scheme" in err


def test_cli_module_entry_point(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text(FAST + "\n")
    result = subprocess.run(
        [sys.executable, "-m", "dstcsim.cli", "--config", str(conf), "--snr", "4", "--seed", "3"],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0
    assert result.stdout.startswith("snr_db,scheme")


def test_config_dataclass_direct_validation():
    with pytest.raises(ConfigError):
        SimConfig(seed=-1)
    with pytest.raises(ConfigError):
        SimConfig(snr_db=())
    with pytest.raises(ConfigError):
        SimConfig(relays=1)
