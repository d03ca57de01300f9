"""测试公共夹具：项目根目录加入 sys.path，每个用例前后清空配置缓存。"""

import sys
from pathlib import Path

import pytest

PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))
sys.path.insert(0, str(PROJECT_ROOT / "scripts"))

from config import get_settings  # noqa: E402


@pytest.fixture(autouse=True)
def _fresh_settings(monkeypatch, tmp_path):
    monkeypatch.setenv("PLURIFLOW_OUTPUT_DIR", str(tmp_path / "output"))
    monkeypatch.setenv("PLURIFLOW_LOG_DIR", "")
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def data_dir() -> Path:
    return PROJECT_ROOT / "data" / "samples"
