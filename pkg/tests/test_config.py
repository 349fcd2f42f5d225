import os

import yaml

from config.config_handler import ConfigHandler


def test_defaults_written_when_missing(tmp_path):
    cfg = ConfigHandler()
    assert cfg.get('solver', 'method') == 'RK45'
    assert cfg.get('oracle', 'seed') == 42
    with open(tmp_path / "config.yaml") as f:
        written = yaml.safe_load(f)
    assert written['cli']['time_grid'] == 'log:0.01:1000:200'


def test_partial_file_falls_back_per_key(tmp_path):
    with open(tmp_path / "config.yaml", "w") as f:
        yaml.safe_dump({'oracle': {'seed': 7}}, f)
    cfg = ConfigHandler()
    assert cfg.get('oracle', 'seed') == 7
    assert cfg.get('oracle', 'mc_batches') == 20
    assert cfg.get('solver', 'rtol') == 1.0e-9


def test_singleton_until_reset(tmp_path):
    first = ConfigHandler()
    assert ConfigHandler() is first
    with open(tmp_path / "config.yaml", "w") as f:
        yaml.safe_dump({'cli': {'precision': 12}}, f)
    assert ConfigHandler().get('cli', 'precision') == 17
    ConfigHandler.reset()
    assert ConfigHandler().get('cli', 'precision') == 12


def test_workers_environment_override(monkeypatch):
    monkeypatch.setenv("CSDECAY_WORKERS", "3")
    assert ConfigHandler().get('cli', 'workers') == 3


def test_zero_workers_means_all_cores(monkeypatch):
    monkeypatch.delenv("CSDECAY_WORKERS")
    assert ConfigHandler().get('cli', 'workers') == (os.cpu_count() or 1)


def test_log_records_go_to_stderr_and_file(tmp_path, capsys):
    from utils import logging
    log_file = tmp_path / "run.log"
    with open(tmp_path / "config.yaml", "w") as f:
        yaml.safe_dump({'logging': {'enable_logging': True, 'to_file': True, 'log_file': str(log_file)}}, f)
    logging.set_context("scan")
    try:
        logging.log_warning("grid too coarse")
    finally:
        logging.set_context("csdecay")
    captured = capsys.readouterr()
    assert captured.out == ""
    assert "[scan]" in captured.err and "[WARNING] grid too coarse" in captured.err
    assert "[WARNING] grid too coarse" in log_file.read_text()


def test_logging_disabled_by_default(capsys):
    from utils import logging
    logging.log_error("not shown")
    assert capsys.readouterr().err == ""
