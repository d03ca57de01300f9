"""
pluriflow 项目配置模块。

数值容差、线性规划参数、输出目录等均可通过环境变量（或 .env）覆盖。
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

_project_root = Path(__file__).resolve().parent

try:
    from dotenv import load_dotenv
    load_dotenv(_project_root / ".env")
except ImportError:
    pass


@dataclass(frozen=True)
class Settings:
    """全局配置对象。"""

    output_dir: Path
    log_dir: Path | None = None
    log_level: str = "INFO"
    polygon_order: int = 16
    phase_count: int = 32
    refine_rounds: int = 40
    coef_bound: float = 1e9
    root_test_delta: float = 1e-6
    sphere_tol: float = 1e-10
    null_threshold: float = 1e-8
    witness_tol: float = 1e-8
    region_margin: float = 1e-3
    truncation_order: int = 64
    sandwich_slack: float = 0.05
    hull_margin: float = 1e-6
    seed: int = 0
    max_workers: int = 1


def _int_from_env(name: str, default: int) -> int:
    value = os.getenv(name)
    if value is None:
        return default
    try:
        return int(value)
    except ValueError:
        return default


def _float_from_env(name: str, default: float) -> float:
    value = os.getenv(name)
    if value is None:
        return default
    try:
        return float(value)
    except ValueError:
        return default


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """读取配置并缓存。"""
    project_root = Path(__file__).resolve().parent

    out_env = os.getenv("PLURIFLOW_OUTPUT_DIR")
    if out_env:
        output_dir = Path(out_env).expanduser().resolve()
    else:
        output_dir = (project_root / "data" / "output").resolve()

    log_dir_env = os.getenv("PLURIFLOW_LOG_DIR")
    if log_dir_env is None:
        log_dir: Path | None = (output_dir / "logs").resolve()
    elif log_dir_env.strip():
        log_dir = Path(log_dir_env).expanduser().resolve()
    else:
        log_dir = None

    # 多边形阶数过低时外逼近误差过大
    polygon_order = max(8, _int_from_env("PLURIFLOW_POLYGON_ORDER", 16))

    return Settings(
        output_dir=output_dir,
        log_dir=log_dir,
        log_level=(os.getenv("PLURIFLOW_LOG_LEVEL") or "INFO").strip().upper(),
        polygon_order=polygon_order,
        phase_count=max(1, _int_from_env("PLURIFLOW_PHASE_COUNT", 32)),
        refine_rounds=max(0, _int_from_env("PLURIFLOW_REFINE_ROUNDS", 40)),
        coef_bound=_float_from_env("PLURIFLOW_COEF_BOUND", 1e9),
        root_test_delta=_float_from_env("PLURIFLOW_ROOT_TEST_DELTA", 1e-6),
        sphere_tol=_float_from_env("PLURIFLOW_SPHERE_TOL", 1e-10),
        null_threshold=_float_from_env("PLURIFLOW_NULL_THRESHOLD", 1e-8),
        witness_tol=_float_from_env("PLURIFLOW_WITNESS_TOL", 1e-8),
        region_margin=_float_from_env("PLURIFLOW_REGION_MARGIN", 1e-3),
        truncation_order=max(1, _int_from_env("PLURIFLOW_TRUNCATION_ORDER", 64)),
        sandwich_slack=_float_from_env("PLURIFLOW_SANDWICH_SLACK", 0.05),
        hull_margin=_float_from_env("PLURIFLOW_HULL_MARGIN", 1e-6),
        seed=_int_from_env("PLURIFLOW_SEED", 0),
        max_workers=max(1, _int_from_env("PLURIFLOW_MAX_WORKERS", 1)),
    )


__all__ = ["Settings", "get_settings"]
