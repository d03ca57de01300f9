"""
输入文件读取与产物写出。

JSON 产物固定缩进与键顺序，CSV 浮点统一 %.17g，同样的输入得到逐字节相同的文件。
"""

from __future__ import annotations

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from pydantic import TypeAdapter

from core.errors import PreconditionError
from core.qhpoly import MixedPolynomial
from core.schemas import DescriptorModel, LambdaModel, PolynomialModel, SeriesModel, SetModel
from core.sets import SampledSet, parse_grid_spec, sampled_set_from_json
from core.weights import Lambda

logger = logging.getLogger(__name__)

_DESCRIPTOR_ADAPTER = TypeAdapter(DescriptorModel)


def read_json(path: str | Path) -> Any:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"文件不存在: {p}")
    with open(p, "r", encoding="utf-8") as f:
        return json.load(f)


def load_lambda(path: str | Path) -> Lambda:
    """两种写法：完整 schema，或 {"weights": ["1", "tau"], "basis": {"tau": 1.618}}。"""
    data = read_json(path)
    if isinstance(data, list):
        return Lambda.parse(data)
    if "weights" in data:
        return Lambda.parse(data["weights"], data.get("basis"))
    LambdaModel.model_validate(data)
    return Lambda.from_json(data)


def load_polynomial(path: str | Path) -> MixedPolynomial:
    data = read_json(path)
    PolynomialModel.model_validate(data)
    return MixedPolynomial.from_json(data)


def load_set(path: str | Path, seed: int | None = None) -> SampledSet:
    data = read_json(path)
    if isinstance(data, dict) and "type" in data:
        _DESCRIPTOR_ADAPTER.validate_python(data)
    else:
        model = SetModel.model_validate(data)
        if model.points is None and model.descriptor is None:
            raise PreconditionError(f"集合文件既没有 points 也没有 descriptor: {path}")
    return sampled_set_from_json(data, seed)


def load_series_data(path: str | Path) -> dict[str, Any]:
    data = read_json(path)
    SeriesModel.model_validate(data)
    return data


def load_grid(spec: str, n: int, seed: int | None = None) -> SampledSet:
    """``builtin:sphere:500`` / ``sphere:500`` 走内置网格，其余按文件读取。"""
    text = spec.strip()
    if text.startswith("builtin:") or not Path(text).exists():
        if ":" not in text:
            raise PreconditionError(f"网格既不是文件也不是内置名称: {spec!r}")
        return parse_grid_spec(text, n, seed)
    return load_set(text, seed)


def to_jsonable(obj: Any) -> Any:
    """numpy 标量/数组、复数、非有限浮点转换成 JSON 可写的形式。"""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(float(obj.real)), to_jsonable(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return obj


def dumps(payload: Any) -> str:
    return json.dumps(to_jsonable(payload), ensure_ascii=False, indent=2)


def write_json(out_dir: str | Path, name: str, payload: Any) -> Path:
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    path = target / name
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dumps(payload))
        f.write("\n")
    logger.info("写出 %s", path)
    return path


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def write_csv(out_dir: str | Path, name: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    path = target / name
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    logger.info("写出 %s（%d 行）", path, len(rows))
    return path


__all__ = [
    "dumps",
    "load_grid",
    "load_lambda",
    "load_polynomial",
    "load_series_data",
    "load_set",
    "read_json",
    "to_jsonable",
    "write_csv",
    "write_json",
]
