"""
pluriflow 程序入口。

配置日志后把命令行参数交给 scripts/pluriflow_cli.py 处理。
"""

from __future__ import annotations

import logging
import sys
from pathlib import Path

try:
    from dotenv import load_dotenv
    _project_root = Path(__file__).resolve().parent
    load_dotenv(_project_root / ".env")
except ImportError:
    pass

from config import get_settings


def setup_logging() -> None:
    """配置日志格式与级别。标准输出留给 JSON 结果，日志写到 stderr。"""
    log_fmt = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
    date_fmt = "%Y-%m-%d %H:%M:%S"

    settings = get_settings()
    level = getattr(logging, settings.log_level, logging.INFO)

    root = logging.getLogger()
    root.setLevel(level)
    for h in root.handlers[:]:
        root.removeHandler(h)

    sh = logging.StreamHandler(sys.stderr)
    sh.setLevel(level)
    sh.setFormatter(logging.Formatter(log_fmt, datefmt=date_fmt))
    root.addHandler(sh)

    if settings.log_dir:
        try:
            settings.log_dir.mkdir(parents=True, exist_ok=True)
        except OSError:
            pass
        if settings.log_dir.exists():
            app_log = settings.log_dir / "pluriflow.log"
            fh = logging.FileHandler(app_log, encoding="utf-8")
            fh.setLevel(logging.INFO)
            fh.setFormatter(logging.Formatter(log_fmt, datefmt=date_fmt))
            root.addHandler(fh)
            err_log = settings.log_dir / "pluriflow_error.log"
            eh = logging.FileHandler(err_log, encoding="utf-8")
            eh.setLevel(logging.ERROR)
            eh.setFormatter(logging.Formatter(log_fmt, datefmt=date_fmt))
            root.addHandler(eh)


def bootstrap() -> None:
    """初始化日志，记录本次运行的关键参数。"""
    setup_logging()
    logger = logging.getLogger(__name__)
    settings = get_settings()
    logger.info(
        "输出目录: %s, polygon_order=%d, phase_count=%d, seed=%d",
        settings.output_dir,
        settings.polygon_order,
        settings.phase_count,
        settings.seed,
    )


def main() -> None:
    """命令行入口：bootstrap 后执行子命令，退出码由 CLI 决定。"""
    bootstrap()
    sys.path.insert(0, str(Path(__file__).resolve().parent / "scripts"))
    from pluriflow_cli import run

    sys.exit(run())


if __name__ == "__main__":
    main()
