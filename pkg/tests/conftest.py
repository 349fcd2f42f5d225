import pytest

from config.config_handler import ConfigHandler


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """Every test reads its own config.yaml (written with defaults) and runs single-process."""
    monkeypatch.setenv("CSDECAY_CONFIG", str(tmp_path / "config.yaml"))
    monkeypatch.setenv("CSDECAY_WORKERS", "1")
    ConfigHandler.reset()
    yield
    ConfigHandler.reset()
