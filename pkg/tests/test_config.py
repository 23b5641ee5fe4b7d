import pytest

from graphpulse.cli import main
from graphpulse.config import RunConfig, load_config


def test_load_config_overrides(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text(
        "# comment line\n"
        "world_size = 4\n"
        "buffersz_bytes = 4096   # trailing comment\n"
        "passes = reorder, pulses\n"
        "short_circuit = false\n"
        "sync_mode = legacy\n"
        "max_pulses = 99\n",
        encoding="utf-8",
    )
    cfg = load_config(str(cfg_file))
    assert cfg.world_size == 4
    assert cfg.buffersz_bytes == 4096
    assert cfg.passes == ("reorder", "pulses")
    assert cfg.short_circuit is False
    assert cfg.sync_mode == "legacy"
    assert cfg.max_pulses == 99


def test_load_config_keeps_defaults(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("seed = 7\n", encoding="utf-8")
    cfg = load_config(str(cfg_file))
    assert cfg.seed == 7
    assert cfg.world_size == RunConfig().world_size
    assert cfg.get_epoch_cost == RunConfig().get_epoch_cost


def test_load_config_rejects_unknown_key(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("wat = 3\n", encoding="utf-8")
    with pytest.raises(ValueError) as err:
        load_config(str(cfg_file))
    assert "unknown config key" in str(err.value)


def test_load_config_rejects_bare_line(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("just words\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_config(str(cfg_file))


def test_pulse_limit_default_is_4n():
    assert RunConfig().pulse_limit(100) == 400
    assert RunConfig(max_pulses=7).pulse_limit(100) == 7


def test_cli_reads_config_file(tmp_path, capsys):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("world_size = 3\npasses = reorder,pulses,bypass,cache\n", encoding="utf-8")
    out_file = tmp_path / "res.txt"
    code = main(["run", "sssp", "path:9", "--config", str(cfg_file), "--out", str(out_file),
                 "--metrics", str(tmp_path / "m.json")])
    capsys.readouterr()
    assert code == 0
    import json

    payload = json.loads((tmp_path / "m.json").read_text(encoding="utf-8"))
    assert payload["config"]["world_size"] == 3
    assert payload["config"]["passes"] == ["reorder", "pulses", "bypass", "cache"]


def test_cli_flag_overrides_config_file(tmp_path, capsys):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("world_size = 3\n", encoding="utf-8")
    code = main(["run", "sssp", "path:9", "--config", str(cfg_file), "--np", "2",
                 "--metrics", str(tmp_path / "m.json")])
    capsys.readouterr()
    assert code == 0
    import json

    payload = json.loads((tmp_path / "m.json").read_text(encoding="utf-8"))
    assert payload["config"]["world_size"] == 2
