#!/usr/bin/env python3
"""
pluriflow 命令行工具。

每个子命令读入 λ、集合、多项式或级数文件，调用 core 中的计算，
结果以 JSON 打印到标准输出；给出 --out 时同时写入产物文件。
退出码：0 成功，2 输入解析/前置条件错误，3 数值失败（如线性规划无界）。
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np
from pydantic import ValidationError

PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from config import get_settings
from core.artifacts import (
    dumps,
    load_grid,
    load_lambda,
    load_polynomial,
    load_series_data,
    load_set,
    write_csv,
    write_json,
)
from core.errors import DimensionError, NumericFailure, PreconditionError
from core.extremal import (
    capacity,
    green_estimate,
    hull_membership,
    l_regularity_estimate,
    psi_estimate,
    sandwich_check,
)
from core.gallery import EXAMPLES, run_example
from core.qhpoly import (
    bidegree_decompose,
    flow_map,
    series_decompose,
    taylor_to_asymptotic,
)
from core.schemas import ARTIFACT_MODELS, JobSpec
from core.series import (
    FormalSeries,
    build_divergent_series,
    builtin_divergent_family,
    convergence_region,
    dirichlet_eval,
    omega_from_capacity,
    omega_hat,
    omega_prime,
)
from core.sets import SampledSet
from core.suspension import direction_set, forelli_obstruction, sparseness_scan
from core.weights import Lambda, count_below, enumerate_rho, is_z_dependent

logger = logging.getLogger("pluriflow.cli")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3


# ---------------------------------------------------------------- 参数解析


def _parse_basis(text: str | None) -> dict[str, float] | None:
    if not text:
        return None
    out = {}
    for item in text.split(","):
        name, _, value = item.partition("=")
        if not value:
            raise PreconditionError(f"--basis 需要 name=value 形式: {item!r}")
        out[name.strip()] = float(value)
    return out


def _lambda(args: argparse.Namespace) -> Lambda:
    """--lambda 可以是文件，也可以直接写 "1,2" 或 "1,tau"（配合 --basis tau=1.618）。"""
    spec = getattr(args, "lambda_file", None)
    if not spec:
        raise PreconditionError("缺少 --lambda")
    if Path(spec).is_file():
        return load_lambda(spec)
    return Lambda.parse([s.strip() for s in spec.split(",")], _parse_basis(getattr(args, "basis", None)))


def _seed(args: argparse.Namespace) -> int:
    seed = getattr(args, "seed", None)
    return get_settings().seed if seed is None else int(seed)


def _set(args: argparse.Namespace, attr: str = "set_file") -> SampledSet:
    path = getattr(args, attr, None)
    if not path:
        raise PreconditionError(f"缺少 --{attr.removesuffix('_file').replace('_', '-')}")
    return load_set(path, _seed(args))


def _point(text: str | None, n: int) -> np.ndarray:
    if text is None:
        raise PreconditionError("缺少 --point")
    try:
        values = [complex(s.strip().replace(" ", "")) for s in text.split(",")]
    except ValueError as e:
        raise PreconditionError(f"无法解析点坐标: {text!r}") from e
    if len(values) != n:
        raise DimensionError(f"点的维数 {len(values)} 与 n={n} 不一致")
    return np.array(values, dtype=complex)


def _floats(text: str | None) -> list[float]:
    if not text:
        return []
    return [float(s) for s in text.split(",")]


def _solver(args: argparse.Namespace) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for key in ("polygon_order", "phase_count", "refine_rounds"):
        value = getattr(args, key, None)
        if value is not None:
            out[key] = int(value)
    if getattr(args, "mode", "sample") == "certified":
        if getattr(args, "mesh", None) is None:
            raise PreconditionError("certified 模式需要 --mesh")
    return out


def _estimate_kwargs(args: argparse.Namespace) -> dict[str, Any]:
    return {"mode": getattr(args, "mode", "sample"), "mesh": getattr(args, "mesh", None), **_solver(args)}


def _emit(args: argparse.Namespace, name: str, payload: dict[str, Any]) -> dict[str, Any]:
    out = getattr(args, "out", None)
    if out:
        path = write_json(out, f"{name}.json", payload)
        payload = {**payload, "artifact": str(path)}
    return {"ok": True, **payload}


def _grid_csv(args: argparse.Namespace, name: str, points: np.ndarray, columns: dict[str, list[float]]) -> None:
    out = getattr(args, "out", None)
    if not out:
        return
    n = points.shape[1]
    header = [f"{part}{i + 1}" for i in range(n) for part in ("re_z", "im_z")] + list(columns)
    rows = []
    for j, p in enumerate(points):
        coords: list[Any] = []
        for c in p:
            coords.extend([float(c.real), float(c.imag)])
        rows.append(coords + [columns[c][j] for c in columns])
    write_csv(out, f"{name}.csv", header, rows)


# ---------------------------------------------------------------- 子命令


def cmd_rho(args: argparse.Namespace) -> dict[str, Any]:
    lam = _lambda(args)
    seq = enumerate_rho(lam, args.cap if args.cap is not None else "4")
    payload: dict[str, Any] = {"lambda": lam.to_json(), "cap": seq.cap.to_json(), "rho": seq.to_json()}
    if args.count_below is not None:
        payload["count_below"] = count_below(lam, int(args.count_below)).to_json()
    return _emit(args, "rho", payload)


def cmd_deps(args: argparse.Namespace) -> dict[str, Any]:
    lam = _lambda(args)
    return _emit(args, "deps", {"lambda": lam.to_json(), "dependence": is_z_dependent(lam).to_json()})


def cmd_decompose(args: argparse.Namespace) -> dict[str, Any]:
    lam = _lambda(args)
    poly = load_polynomial(args.poly_file)
    if args.series:
        blocks = series_decompose(poly, lam)
        series = FormalSeries(lam, tuple(blocks), len(blocks))
        return _emit(args, "decompose", {"series": series.to_json()})
    payload: dict[str, Any] = {"components": [c.to_json() for c in bidegree_decompose(poly, lam)]}
    if args.asymptotic_at:
        z = _point(args.asymptotic_at, lam.n)
        payload["asymptotic"] = [b.to_json() for b in taylor_to_asymptotic(poly, lam, z)]
    return _emit(args, "decompose", payload)


def cmd_flow(args: argparse.Namespace) -> dict[str, Any]:
    lam = _lambda(args)
    z = _point(args.point, lam.n)
    t = complex(str(args.t).replace(" ", ""))
    image = flow_map(lam, z, t)
    return _emit(args, "flow", {"point": z, "t": t, "image": image})


def cmd_direction_set(args: argparse.Namespace) -> dict[str, Any]:
    lam = _lambda(args)
    ds = direction_set(_set(args), lam)
    return _emit(
        args,
        "direction_set",
        {"single_point": ds.is_single_point(), "spread": ds.spread(), "direction_set": ds.to_json()},
    )


def cmd_sparseness(args: argparse.Namespace) -> dict[str, Any]:
    lam = _lambda(args)
    F = _set(args)
    center = _point(args.center, lam.n) if args.center else None
    report = sparseness_scan(F, lam, args.cap if args.cap is not None else "4", center=center, radius=args.radius)
    return _emit(args, "sparseness", report.to_json())


def cmd_obstruction(args: argparse.Namespace) -> dict[str, Any]:
    lam = _lambda(args)
    report = forelli_obstruction(load_polynomial(args.poly_file), _set(args), lam)
    return _emit(args, "obstruction", report.to_json())


def _require_finite(args: argparse.Namespace, estimates: list[Any]) -> None:
    """--require-finite 时 LP 无界按数值失败处理（退出码 3）。"""
    if not getattr(args, "require_finite", False):
        return
    bad = sum(1 for e in estimates if e.status == "unbounded")
    if bad:
        raise NumericFailure(f"线性规划无界: {bad}/{len(estimates)} 个点的估计为 +inf")


def _sweep(
    args: argparse.Namespace, name: str, n: int, fn: Callable[[np.ndarray], Any]
) -> dict[str, Any]:
    """--grid 给出时对网格逐点求值并写 CSV，否则只在 --point 处求值。"""
    if args.grid:
        grid = load_grid(args.grid, n, _seed(args))
        estimates = [fn(p) for p in grid.points]
        _require_finite(args, estimates)
        _grid_csv(args, name, grid.points, {"value": [e.value for e in estimates]})
        return _emit(args, name, {"grid_size": grid.size, "estimates": [e.to_json() for e in estimates]})
    est = fn(_point(args.point, n))
    _require_finite(args, [est])
    return _emit(args, name, {"estimate": est.to_json()})


def cmd_psi(args: argparse.Namespace) -> dict[str, Any]:
    lam = _lambda(args)
    E = _set(args)
    cap = args.cap if args.cap is not None else "4"
    kwargs = _estimate_kwargs(args)
    return _sweep(args, "psi", lam.n, lambda p: psi_estimate(E, lam, p, cap, **kwargs))


def cmd_green(args: argparse.Namespace) -> dict[str, Any]:
    E = _set(args)
    kwargs = _estimate_kwargs(args)
    return _sweep(args, "green", E.n, lambda p: green_estimate(E, p, args.degree_cap, **kwargs))


def cmd_capacity(args: argparse.Namespace) -> dict[str, Any]:
    lam = _lambda(args)
    E = _set(args)
    grid = load_grid(args.grid or "sphere:200", lam.n, _seed(args))
    est = capacity(E, lam, grid, args.cap if args.cap is not None else "4", **_solver(args))
    _grid_csv(args, "capacity", grid.points, {"psi": list(est.values)})
    return _emit(args, "capacity", est.to_json())


def cmd_hull(args: argparse.Namespace) -> dict[str, Any]:
    lam = _lambda(args)
    K = _set(args)
    verdict = hull_membership(
        K,
        lam,
        _point(args.point, lam.n),
        args.cap if args.cap is not None else "4",
        check_circular=not args.no_circular_check,
        **_solver(args),
    )
    return _emit(args, "hull", verdict.to_json())


def cmd_sandwich(args: argparse.Namespace) -> dict[str, Any]:
    lam = _lambda(args)
    E = _set(args)
    grid = load_grid(args.grid or "sphere:50", lam.n, _seed(args))
    report = sandwich_check(
        E,
        lam,
        grid,
        args.cap if args.cap is not None else "4",
        args.degree_cap,
        check_circular=not args.no_circular_check,
        **_solver(args),
    )
    _grid_csv(
        args,
        "sandwich",
        grid.points,
        {"psi": [r.psi for r in report.rows], "phi": [r.phi for r in report.rows], "ok": [r.ok for r in report.rows]},
    )
    return _emit(args, "sandwich", report.to_json())


def cmd_lreg(args: argparse.Namespace) -> dict[str, Any]:
    E = _set(args)
    report = l_regularity_estimate(
        E, _point(args.point, E.n), _floats(args.radii) or [0.5], args.degree_cap, **_solver(args)
    )
    return _emit(args, "lreg", report.to_json())


def _series(args: argparse.Namespace, lam: Lambda) -> FormalSeries:
    if args.series_file:
        return FormalSeries.from_json(load_series_data(args.series_file))
    if args.poly_file:
        return FormalSeries.from_polynomial(load_polynomial(args.poly_file), lam)
    raise PreconditionError("convergence 区域需要 --series 或 --poly")


def cmd_region(args: argparse.Namespace) -> dict[str, Any]:
    lam = _lambda(args)
    seed = _seed(args)
    kind = args.kind
    if kind == "capacity_ball":
        grid = load_grid(args.grid or "sphere:200", lam.n, seed)
        ball = omega_from_capacity(_set(args), lam, args.cap if args.cap is not None else "4", sphere_grid=grid)
        return _emit(args, "region", {"kind": kind, **ball.to_json()})
    grid = load_grid(args.grid or "ball:200", lam.n, seed)
    if kind == "convergence":
        region = convergence_region(_series(args, lam), grid)
    elif kind == "omega_prime":
        region = omega_prime(_set(args), lam, grid, args.degree_cap, **_solver(args))
    elif kind == "omega_hat":
        extra = _set(args, "extra_file") if args.extra_file else None
        region = omega_hat(_set(args), extra, lam, grid, args.cap if args.cap is not None else "4", **_solver(args))
    else:
        raise PreconditionError(f"未知的区域类型: {kind}")
    out = getattr(args, "out", None)
    if out:
        header, rows = region.csv_rows()
        write_csv(out, "region.csv", header, rows)
    return _emit(args, "region", region.to_json())


def cmd_divergent(args: argparse.Namespace) -> dict[str, Any]:
    p_seq, a, K_family, lam = builtin_divergent_family(args.count)
    built = build_divergent_series(p_seq, a, K_family, lam, kmax=args.kmax)
    b1 = built.points[0]
    sums = built.series.partial_sums(b1)
    payload: dict[str, Any] = {
        **built.to_json(),
        "partial_sums_at_b1": [abs(s) for s in sums],
        "sup_on_K": float(np.abs([blk.poly.evaluate_many(K_family[0].points) for blk in built.series.blocks]).max()),
    }
    if args.t is not None:
        payload["dirichlet"] = dirichlet_eval(built.series, b1, complex(str(args.t).replace(" ", ""))).verdict.to_json()
    return _emit(args, "divergent", payload)


def cmd_examples(args: argparse.Namespace) -> dict[str, Any]:
    params: dict[str, Any] = {}
    if args.example_id == "ex5.6":
        params.update(m=args.m, n=args.n)
    elif args.example_id in ("ex3.5", "ex7.2", "ex7.3") and args.lambda2:
        params["lambda2"] = args.lambda2
    report = run_example(args.example_id, **params)
    return _emit(args, f"example_{args.example_id}", report.to_json())


def cmd_schemas(args: argparse.Namespace) -> dict[str, Any]:
    out = Path(args.out or get_settings().output_dir) / "schemas"
    written = [str(write_json(out, f"{name}.schema.json", model.model_json_schema())) for name, model in ARTIFACT_MODELS.items()]
    return {"ok": True, "schemas": written}


HANDLERS: dict[str, Callable[[argparse.Namespace], dict[str, Any]]] = {
    "rho": cmd_rho,
    "deps": cmd_deps,
    "decompose": cmd_decompose,
    "flow": cmd_flow,
    "direction-set": cmd_direction_set,
    "sparseness": cmd_sparseness,
    "obstruction": cmd_obstruction,
    "psi": cmd_psi,
    "green": cmd_green,
    "capacity": cmd_capacity,
    "hull": cmd_hull,
    "sandwich": cmd_sandwich,
    "lreg": cmd_lreg,
    "region": cmd_region,
    "divergent": cmd_divergent,
    "examples": cmd_examples,
    "schemas": cmd_schemas,
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lambda_file", help="λ 文件，或直接写 1,2 / 1,tau")
    p.add_argument("--basis", help="内联 λ 的无理基，如 tau=1.618")
    p.add_argument("--set", dest="set_file", help="集合文件（点列或描述符）")
    p.add_argument("--cap", help="ρ 上界，如 4、7/2、2+tau")
    p.add_argument("--grid", help="网格文件或 builtin:sphere:N / ball:N / line:N / torus:N")
    p.add_argument("--out", help="产物输出目录")
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=("sample", "certified"), default="sample")
    p.add_argument("--mesh", type=float, help="certified 模式下的样本网格尺寸 h")
    p.add_argument("--polygon-order", type=int)
    p.add_argument("--phase-count", type=int)
    p.add_argument("--refine-rounds", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pluriflow", description="λ-多复位势计算工具")
    parser.add_argument("--json", help="JSON 格式参数（JobSpec）")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("rho", help="枚举 ρ 序列")
    _common(p)
    p.add_argument("--count-below", type=int)

    _common(sub.add_parser("deps", help="λ 的 ℤ-线性相关性"))

    p = sub.add_parser("decompose", help="按双次数分解多项式")
    _common(p)
    p.add_argument("--poly", dest="poly_file", required=True)
    p.add_argument("--series", action="store_true", help="输出形式级数块（仅全纯）")
    p.add_argument("--asymptotic-at")

    p = sub.add_parser("flow", help="流映射 Φ(z, t)")
    _common(p)
    p.add_argument("--point", required=True)
    p.add_argument("--t", default="0")

    _common(sub.add_parser("direction-set", help="λ-方向集"))

    p = sub.add_parser("sparseness", help="稀疏性扫描")
    _common(p)
    p.add_argument("--center")
    p.add_argument("--radius", type=float)

    p = sub.add_parser("obstruction", help="Forelli 障碍")
    _common(p)
    p.add_argument("--poly", dest="poly_file", required=True)

    p = sub.add_parser("psi", help="Ψ_{E,λ} 下估计")
    _common(p)
    p.add_argument("--point")
    p.add_argument(
        "--require-finite",
        action="store_true",
        help="LP 无界时以退出码 3 结束；默认输出 inf 并以 0 结束",
    )

    p = sub.add_parser("green", help="Φ_E 下估计")
    _common(p)
    p.add_argument("--point")
    p.add_argument(
        "--require-finite",
        action="store_true",
        help="LP 无界时以退出码 3 结束；默认输出 inf 并以 0 结束",
    )
    p.add_argument("--degree-cap", type=int, default=4)

    _common(sub.add_parser("capacity", help="λ-射影容量"))

    p = sub.add_parser("hull", help="λ-凸包成员")
    _common(p)
    p.add_argument("--point", required=True)
    p.add_argument("--no-circular-check", action="store_true")

    p = sub.add_parser("sandwich", help="夹逼不等式检查")
    _common(p)
    p.add_argument("--degree-cap", type=int)
    p.add_argument("--no-circular-check", action="store_true")

    p = sub.add_parser("lreg", help="L-正则诊断")
    _common(p)
    p.add_argument("--point", required=True)
    p.add_argument("--radii")
    p.add_argument("--degree-cap", type=int, default=4)

    p = sub.add_parser("region", help="收敛区域估计")
    _common(p)
    p.add_argument("--kind", choices=("convergence", "omega_prime", "omega_hat", "capacity_ball"), default="convergence")
    p.add_argument("--series", dest="series_file")
    p.add_argument("--poly", dest="poly_file")
    p.add_argument("--extra", dest="extra_file")
    p.add_argument("--degree-cap", type=int, default=4)

    p = sub.add_parser("divergent", help="内置发散级数构造")
    _common(p)
    p.add_argument("--count", type=int, default=25)
    p.add_argument("--kmax", type=int, default=10)
    p.add_argument("--t")

    p = sub.add_parser("examples", help="复现经典例子")
    _common(p)
    p.add_argument("example_id", choices=sorted(EXAMPLES))
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--lambda2")

    _common(sub.add_parser("schemas", help="写出产物 JSON Schema"))
    return parser


def _from_job(parser: argparse.ArgumentParser, raw: str) -> argparse.Namespace:
    job = JobSpec.model_validate(json.loads(raw))
    argv = [job.command]
    if job.command == "examples":
        argv.append(str(getattr(job, "example_id", "") or ""))
    if job.command in ("decompose", "obstruction") and job.poly_file:
        argv += ["--poly", job.poly_file]
    if job.command in ("flow", "hull", "lreg") and getattr(job, "point", None):
        argv += ["--point", str(job.point)]
    args = parser.parse_args(argv)
    for key, value in job.model_dump(exclude_none=True).items():
        setattr(args, key, value)
    return args


def run(argv: list[str] | None = None) -> int:
    """解析参数并执行子命令，返回退出码。"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    try:
        if args.json:
            args = _from_job(parser, args.json)
        if not args.command:
            parser.print_help(sys.stderr)
            return EXIT_INPUT
        handler = HANDLERS.get(args.command)
        if handler is None:
            result = {"ok": False, "error": f"未知命令: {args.command}"}
            print(dumps(result))
            return EXIT_INPUT
        result = handler(args)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    except NumericFailure as e:
        logger.error("数值失败: %s", e)
        print(f"pluriflow: 数值失败: {e}", file=sys.stderr)
        print(dumps({"ok": False, "error": str(e), "kind": "numeric"}))
        return EXIT_NUMERIC
    except (PreconditionError, DimensionError, ValidationError, json.JSONDecodeError, FileNotFoundError, ValueError) as e:
        logger.error("输入错误: %s", e)
        print(f"pluriflow: 输入错误: {e}", file=sys.stderr)
        print(dumps({"ok": False, "error": str(e), "kind": "input"}))
        return EXIT_INPUT
    print(dumps(result))
    return EXIT_OK


def main() -> None:
    from main import setup_logging

    setup_logging()
    sys.exit(run())


if __name__ == "__main__":
    main()
