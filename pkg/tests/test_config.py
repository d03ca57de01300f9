"""
配置读取测试。
"""

from pathlib import Path

from config import get_settings


def test_defaults(monkeypatch):
    for name in ("PLURIFLOW_POLYGON_ORDER", "PLURIFLOW_PHASE_COUNT", "PLURIFLOW_SEED"):
        monkeypatch.delenv(name, raising=False)
    get_settings.cache_clear()
    settings = get_settings()
    assert settings.polygon_order == 16
    assert settings.phase_count == 32
    assert settings.log_level == "INFO"


def test_env_overrides(monkeypatch, tmp_path):
    monkeypatch.setenv("PLURIFLOW_OUTPUT_DIR", str(tmp_path / "out"))
    monkeypatch.setenv("PLURIFLOW_REFINE_ROUNDS", "5")
    monkeypatch.setenv("PLURIFLOW_SANDWICH_SLACK", "0.2")
    monkeypatch.setenv("PLURIFLOW_LOG_LEVEL", "debug")
    get_settings.cache_clear()
    settings = get_settings()
    assert settings.output_dir == (tmp_path / "out").resolve()
    assert settings.refine_rounds == 5
    assert settings.sandwich_slack == 0.2
    assert settings.log_level == "DEBUG"


def test_polygon_order_floor(monkeypatch):
    monkeypatch.setenv("PLURIFLOW_POLYGON_ORDER", "4")
    get_settings.cache_clear()
    assert get_settings().polygon_order == 8


def test_bad_numbers_fall_back(monkeypatch):
    monkeypatch.setenv("PLURIFLOW_PHASE_COUNT", "many")
    monkeypatch.setenv("PLURIFLOW_COEF_BOUND", "huge")
    get_settings.cache_clear()
    settings = get_settings()
    assert settings.phase_count == 32
    assert settings.coef_bound == 1e9


def test_log_dir(monkeypatch, tmp_path):
    monkeypatch.setenv("PLURIFLOW_LOG_DIR", "")
    get_settings.cache_clear()
    assert get_settings().log_dir is None

    monkeypatch.setenv("PLURIFLOW_LOG_DIR", str(tmp_path / "logs"))
    get_settings.cache_clear()
    assert get_settings().log_dir == Path(tmp_path / "logs").resolve()

    monkeypatch.delenv("PLURIFLOW_LOG_DIR")
    get_settings.cache_clear()
    settings = get_settings()
    assert settings.log_dir == settings.output_dir / "logs"
