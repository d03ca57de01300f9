"""
Chebyshev 型线性规划与极值函数下估计。

给定样本 {x_i} 与单项式基，求 max Re(e^{iθ} q_c(z₀))，约束为正 p 边形外逼近的
模约束 Re(e^{iφ_j} q_c(x_i)) ≤ 1。对最优相位再用割平面细化，最后按见证多项式
在样本上的精确最大模归一化，保证 max|q(x_i)| ≤ 1。

所有估计都是上确界的下界（受采样偏差影响），不提供上界。
"""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Literal, Sequence, TypeVar

import numpy as np
from scipy.optimize import linprog

from config import get_settings
from core.errors import DimensionError, NumericFailure, PreconditionError, UnboundedProblemError
from core.qhpoly import MixedPolynomial, as_point, monomial_matrix
from core.sets import SampledSet, is_lambda_circular
from core.sets import sphere_grid as make_sphere_grid
from core.weights import Lambda, MultiIndex, WeightedDegree, enumerate_rho

logger = logging.getLogger(__name__)

Mode = Literal["sample", "certified"]
T = TypeVar("T")

_FEAS_TOL = 1e-9
_MAX_ACTIVE_ROUNDS = 60
DEFAULT_SPHERE_COUNT = 200


def _parallel_map(fn: Callable[[Any], T], items: Sequence[Any], max_workers: int | None) -> list[T]:
    """按下标顺序合并结果。"""
    workers = get_settings().max_workers if max_workers is None else max_workers
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True, eq=False)
class ChebyshevProblem:
    target: np.ndarray
    constraints: np.ndarray
    basis: tuple[MultiIndex, ...]
    polygon_order: int | None = None
    phase_count: int | None = None
    refine_rounds: int | None = None
    coef_bound: float | None = None
    level: WeightedDegree | int | None = None

    def __post_init__(self) -> None:
        settings = get_settings()
        target = np.asarray(self.target, dtype=complex).reshape(-1)
        constraints = np.asarray(self.constraints, dtype=complex)
        if constraints.ndim != 2 or constraints.shape[0] == 0:
            raise PreconditionError("约束样本集不能为空")
        if constraints.shape[1] != target.shape[0]:
            raise DimensionError("目标点与约束样本维数不一致")
        if not self.basis:
            raise PreconditionError("单项式基不能为空")
        if any(len(k) != target.shape[0] for k in self.basis):
            raise DimensionError("单项式指标长度与维数不一致")
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "constraints", constraints)
        object.__setattr__(self, "basis", tuple(tuple(int(v) for v in k) for k in self.basis))
        for name in ("polygon_order", "phase_count", "refine_rounds", "coef_bound"):
            if getattr(self, name) is None:
                object.__setattr__(self, name, getattr(settings, name))
        if self.polygon_order < 8:
            raise PreconditionError(f"polygon_order 至少为 8，实际 {self.polygon_order}")
        if self.phase_count < 1:
            raise PreconditionError("phase_count 至少为 1")

    @property
    def n(self) -> int:
        return int(self.target.shape[0])


@dataclass(frozen=True, eq=False)
class ExtremalEstimate:
    """value 为下估计；witness 在约束样本上的最大模 ≤ 1（certified 模式下为真上确界 ≤ 1）。"""

    value: float
    witness: MixedPolynomial
    level: WeightedDegree | int | None
    mode: Literal["SampleEstimate", "CertifiedLower"] = "SampleEstimate"
    status: Literal["optimal", "unbounded", "zero_target", "no_levels"] = "optimal"
    mesh: float | None = None
    gradient_bound: float | None = None
    diagnostics: dict[str, Any] = field(default_factory=dict)
    per_level: tuple["ExtremalEstimate", ...] = ()

    @property
    def is_unbounded(self) -> bool:
        return self.status == "unbounded"

    def to_json(self) -> dict[str, Any]:
        level: Any = self.level
        if isinstance(level, WeightedDegree):
            level = level.to_json()
        return {
            "value": self.value if math.isfinite(self.value) else "inf",
            "level": level,
            "mode": self.mode,
            "status": self.status,
            "mesh": self.mesh,
            "gradient_bound": self.gradient_bound,
            "witness": self.witness.to_json(),
            "diagnostics": self.diagnostics,
        }


# ---------------------------------------------------------------- 线性规划


def _polygon_rows(a: np.ndarray, phis: np.ndarray) -> np.ndarray:
    """a: (S, B) 复数；返回 Re(e^{iφ} a·c) 对 [Re c, Im c] 的系数行。"""
    rot = (np.exp(1j * phis)[None, :, None] * a[:, None, :]).reshape(-1, a.shape[1])
    return np.hstack([rot.real, -rot.imag])


def _directional_rows(a: np.ndarray, angles: np.ndarray) -> np.ndarray:
    rot = np.exp(1j * angles)[:, None] * a
    return np.hstack([rot.real, -rot.imag])


def _objective(v: np.ndarray, theta: float) -> np.ndarray:
    rot = np.exp(1j * theta) * v
    return -np.concatenate([rot.real, -rot.imag])


def _solve(c_obj: np.ndarray, rows: np.ndarray, bound: float) -> tuple[np.ndarray, float, int]:
    res = linprog(
        c_obj,
        A_ub=rows,
        b_ub=np.ones(rows.shape[0]),
        bounds=[(-bound, bound)] * c_obj.shape[0],
        method="highs",
    )
    if res.status != 0 or res.x is None:
        raise NumericFailure(f"HiGHS 求解失败: status={res.status} {res.message}")
    return np.asarray(res.x, dtype=float), float(-res.fun), int(getattr(res, "nit", 0) or 0)


def _polygon_violation(w: np.ndarray, phis: np.ndarray) -> np.ndarray:
    return (np.exp(1j * phis)[None, :] * w[:, None]).real.max(axis=1)


def _initial_active(count: int, basis_size: int) -> np.ndarray:
    size = min(count, max(8 * basis_size, 64))
    return np.unique(np.linspace(0, count - 1, size).round().astype(int))


def _solve_phase(
    A: np.ndarray,
    v: np.ndarray,
    theta: float,
    phis: np.ndarray,
    bound: float,
    refine_rounds: int,
    stats: dict[str, int],
) -> tuple[np.ndarray, float]:
    """活动集 + 割平面：只保留被违反的样本约束，直到全体样本满足。"""
    N, B = A.shape
    active = _initial_active(N, B)
    cuts_idx: list[int] = []
    cuts_ang: list[float] = []
    c_obj = _objective(v, theta)
    x = np.zeros(2 * B)
    val = 0.0
    rounds_left = refine_rounds
    for _ in range(_MAX_ACTIVE_ROUNDS + refine_rounds):
        rows = _polygon_rows(A[active], phis)
        if cuts_idx:
            rows = np.vstack([rows, _directional_rows(A[cuts_idx], np.asarray(cuts_ang))])
        x, val, nit = _solve(c_obj, rows, bound)
        stats["lp_solves"] += 1
        stats["iterations"] += nit
        c = x[:B] + 1j * x[B:]
        w = A @ c
        poly_viol = _polygon_violation(w, phis)
        missing = np.setdiff1d(np.flatnonzero(poly_viol > 1 + _FEAS_TOL), active)
        if missing.size:
            worst = missing[np.argsort(-poly_viol[missing], kind="stable")][: max(B, 32)]
            active = np.union1d(active, worst)
            continue
        if rounds_left <= 0:
            break
        mods = np.abs(w)
        over = np.flatnonzero(mods > 1 + _FEAS_TOL)
        if over.size == 0:
            break
        rounds_left -= 1
        stats["refine_rounds"] += 1
        worst = over[np.argsort(-mods[over], kind="stable")][: max(B, 16)]
        cuts_idx.extend(int(i) for i in worst)
        cuts_ang.extend(float(-np.angle(w[i])) for i in worst)
    return x, val


def _representative_phases(phase_count: int, polygon_order: int) -> list[float]:
    # 约束关于旋转 2π/p 不变，相位只需取模 2π/p 的代表
    period = 2 * np.pi / polygon_order
    reps = sorted({round((2 * np.pi * l / phase_count) % period, 12) for l in range(phase_count)})
    return [float(t) for t in reps]


def _gradient_bound(q: MixedPolynomial, radius: float) -> float:
    total = 0.0
    for (k, _), c in q.terms.items():
        d = sum(k)
        if d:
            total += abs(c) * d * radius ** (d - 1)
    return total


def cheby_maximize(
    problem: ChebyshevProblem,
    *,
    mode: Mode = "sample",
    mesh: float | None = None,
    radius_bound: float | None = None,
) -> ExtremalEstimate:
    """max |q_c(z₀)|，约束 |q_c(x_i)| ≤ 1（p 边形外逼近 + 割平面 + 精确归一化）。"""
    n = problem.n
    zeros = (0,) * n
    basis_terms = [(k, zeros) for k in problem.basis]
    A_raw = monomial_matrix(problem.constraints, basis_terms)
    v_raw = monomial_matrix(problem.target.reshape(1, -1), basis_terms)[0]

    scale = np.abs(A_raw).max(axis=0)
    dead = np.flatnonzero(scale == 0)
    for j in dead:
        if abs(v_raw[j]) > 0:
            direction = MixedPolynomial.monomial(problem.basis[j])
            raise UnboundedProblemError(
                f"单项式 {problem.basis[j]} 在全部样本上为零但在目标点非零",
                direction=direction,
                sampled_norm=0.0,
            )
    keep = np.flatnonzero(scale > 0)
    A = A_raw[:, keep] / scale[keep][None, :]
    v = v_raw[keep] / scale[keep]
    kept_basis = [problem.basis[j] for j in keep]
    B = len(keep)

    diagnostics: dict[str, Any] = {
        "lp_solves": 0,
        "iterations": 0,
        "refine_rounds": 0,
        "polygon_order": problem.polygon_order,
        "phase_count": problem.phase_count,
        "constraints": int(A.shape[0]),
        "basis_size": len(problem.basis),
    }
    mode_label = "CertifiedLower" if mode == "certified" else "SampleEstimate"
    if B == 0 or float(np.abs(v).max()) == 0.0:
        return ExtremalEstimate(
            value=0.0,
            witness=MixedPolynomial.zero(n),
            level=problem.level,
            mode=mode_label,
            status="zero_target",
            diagnostics=diagnostics,
        )

    phis = 2 * np.pi * np.arange(problem.polygon_order) / problem.polygon_order
    best: tuple[float, float, np.ndarray] | None = None
    for theta in _representative_phases(problem.phase_count, problem.polygon_order):
        x, val = _solve_phase(A, v, theta, phis, problem.coef_bound, problem.refine_rounds, diagnostics)
        if best is None or val > best[0]:
            best = (val, theta, x)
    assert best is not None
    lp_value, theta, x = best
    diagnostics["lp_value"] = lp_value
    diagnostics["phase"] = theta

    c = x[:B] + 1j * x[B:]
    if np.abs(x).max() >= 0.5 * problem.coef_bound:
        w = A @ c
        direction = MixedPolynomial.from_vector(n, [(k, zeros) for k in kept_basis], c / scale[keep])
        raise UnboundedProblemError(
            "系数达到箱约束上限，线性规划无界",
            direction=direction.normalized(),
            sampled_norm=float(np.abs(w).max()) / float(np.linalg.norm(c)),
        )

    w = A @ c
    sampled = float(np.abs(w).max())
    if sampled == 0.0:
        raise NumericFailure("见证多项式在样本上恒为零")
    coeffs = np.exp(1j * theta) * c / scale[keep] / sampled
    witness = MixedPolynomial.from_vector(n, [(k, zeros) for k in kept_basis], coeffs)
    value = abs(complex(v @ c)) / sampled
    diagnostics["sampled_norm"] = sampled
    diagnostics["cos_bound"] = math.cos(math.pi / problem.polygon_order)

    gradient = None
    if mode == "certified":
        if mesh is None or mesh < 0:
            raise PreconditionError("certified 模式需要非负的网格尺寸 mesh")
        radius = radius_bound
        if radius is None:
            radius = float(np.linalg.norm(problem.constraints, axis=1).max())
        gradient = _gradient_bound(witness, radius)
        factor = 1.0 + gradient * mesh
        witness = witness / factor
        value = value / factor
    return ExtremalEstimate(
        value=value,
        witness=witness,
        level=problem.level,
        mode=mode_label,
        status="optimal",
        mesh=mesh if mode == "certified" else None,
        gradient_bound=gradient,
        diagnostics=diagnostics,
    )


# ---------------------------------------------------------------- Ψ 与 Φ


def _solver_kwargs(kwargs: dict[str, Any]) -> dict[str, Any]:
    return {k: kwargs[k] for k in ("polygon_order", "phase_count", "refine_rounds", "coef_bound") if k in kwargs}


def _unbounded_estimate(err: UnboundedProblemError, n: int, level: Any, mode: Mode) -> ExtremalEstimate:
    witness = err.direction if isinstance(err.direction, MixedPolynomial) else MixedPolynomial.zero(n)
    return ExtremalEstimate(
        value=math.inf,
        witness=witness,
        level=level,
        mode="CertifiedLower" if mode == "certified" else "SampleEstimate",
        status="unbounded",
        diagnostics={"reason": str(err), "sampled_norm": err.sampled_norm},
    )


def psi_estimate(
    E: SampledSet,
    lam: Lambda,
    z0: Any,
    rho_cap: Any,
    *,
    mode: Mode = "sample",
    mesh: float | None = None,
    **solver: Any,
) -> ExtremalEstimate:
    """Ψ_{E,λ}(z₀) ≈ max_{0 < ρ_m ≤ cap} max |q(z₀)|^{1/ρ_m}，q 取 (ρ_m, 0) 型全纯拟齐次。

    线性规划无界时（E 落在某个 q 的零点集中）返回 value = +inf。
    """
    if E.is_empty:
        raise PreconditionError("E 不能为空")
    if E.n != lam.n:
        raise DimensionError(f"集合维数 {E.n} 与 λ 维数 {lam.n} 不一致")
    z = as_point(z0, lam.n)
    seq = enumerate_rho(lam, rho_cap)
    levels = [entry for entry in seq.entries if not entry.rho.is_zero]
    mode_label = "CertifiedLower" if mode == "certified" else "SampleEstimate"
    if not levels:
        return ExtremalEstimate(0.0, MixedPolynomial.zero(lam.n), None, mode_label, "no_levels")
    if not np.any(z):
        return ExtremalEstimate(0.0, MixedPolynomial.zero(lam.n), levels[0].rho, mode_label, "zero_target")

    per_level: list[ExtremalEstimate] = []
    best: ExtremalEstimate | None = None
    best_root = -1.0
    for entry in levels:
        problem = ChebyshevProblem(
            target=z, constraints=E.points, basis=entry.multiindices, level=entry.rho, **_solver_kwargs(solver)
        )
        try:
            est = cheby_maximize(problem, mode=mode, mesh=mesh)
        except UnboundedProblemError as err:
            logger.warning("ρ=%s 处线性规划无界，Ψ 估计记为 +inf", entry.rho)
            unbounded = _unbounded_estimate(err, lam.n, entry.rho, mode)
            return ExtremalEstimate(
                value=math.inf,
                witness=unbounded.witness,
                level=entry.rho,
                mode=unbounded.mode,
                status="unbounded",
                diagnostics=unbounded.diagnostics,
                per_level=tuple(per_level) + (unbounded,),
            )
        per_level.append(est)
        root = est.value ** (1.0 / entry.rho.value) if est.value > 0 else 0.0
        if root > best_root:
            best, best_root = est, root
    assert best is not None
    return ExtremalEstimate(
        value=best_root,
        witness=best.witness,
        level=best.level,
        mode=best.mode,
        status=best.status,
        mesh=best.mesh,
        gradient_bound=best.gradient_bound,
        diagnostics={
            **best.diagnostics,
            "levels": [
                {"rho": e.level.to_json(), "value": e.value} for e in per_level if isinstance(e.level, WeightedDegree)
            ],
        },
        per_level=tuple(per_level),
    )


def holomorphic_basis(n: int, degree: int) -> tuple[MultiIndex, ...]:
    """|k| ≤ degree 的全部全纯单项式。"""
    return tuple(
        k for d in range(degree + 1) for k in sorted(
            (c for c in itertools.product(range(d + 1), repeat=n) if sum(c) == d), reverse=True
        )
    )


def green_estimate(
    E: SampledSet,
    z0: Any,
    degree_cap: int,
    *,
    mode: Mode = "sample",
    mesh: float | None = None,
    **solver: Any,
) -> ExtremalEstimate:
    """Φ_E(z₀) ≈ max(1, max_{d ≤ cap} max |q(z₀)|^{1/d})，q 取次数 ≤ d 的全纯多项式。"""
    if E.is_empty:
        raise PreconditionError("E 不能为空")
    if degree_cap < 1:
        raise PreconditionError("degree_cap 至少为 1")
    z = as_point(z0, E.n)
    per_level: list[ExtremalEstimate] = []
    best: ExtremalEstimate | None = None
    best_root = 1.0
    for d in range(1, int(degree_cap) + 1):
        problem = ChebyshevProblem(
            target=z, constraints=E.points, basis=holomorphic_basis(E.n, d), level=d, **_solver_kwargs(solver)
        )
        try:
            est = cheby_maximize(problem, mode=mode, mesh=mesh)
        except UnboundedProblemError as err:
            logger.warning("次数 %d 处线性规划无界，Φ 估计记为 +inf", d)
            unbounded = _unbounded_estimate(err, E.n, d, mode)
            return ExtremalEstimate(
                value=math.inf,
                witness=unbounded.witness,
                level=d,
                mode=unbounded.mode,
                status="unbounded",
                diagnostics=unbounded.diagnostics,
                per_level=tuple(per_level) + (unbounded,),
            )
        per_level.append(est)
        root = est.value ** (1.0 / d) if est.value > 0 else 0.0
        if best is None or root > best_root:
            best = est
            best_root = max(best_root, root)
    assert best is not None
    return ExtremalEstimate(
        value=best_root,
        witness=best.witness,
        level=best.level,
        mode=best.mode,
        status=best.status,
        mesh=best.mesh,
        gradient_bound=best.gradient_bound,
        diagnostics={**best.diagnostics, "levels": [{"degree": e.level, "value": e.value} for e in per_level]},
        per_level=tuple(per_level),
    )


# ---------------------------------------------------------------- 容量与壳


@dataclass(frozen=True, eq=False)
class CapacityEstimate:
    rho_lambda: float
    psi_sup: float
    argmax: np.ndarray
    grid_size: int
    rho_cap: WeightedDegree
    values: np.ndarray

    @property
    def is_zero(self) -> bool:
        return self.rho_lambda == 0.0

    def to_json(self) -> dict[str, Any]:
        return {
            "rho_lambda": self.rho_lambda,
            "psi_sup": self.psi_sup if math.isfinite(self.psi_sup) else "inf",
            "argmax": [[z.real, z.imag] for z in self.argmax],
            "grid_size": self.grid_size,
            "rho_cap": self.rho_cap.to_json(),
        }


def capacity(
    E: SampledSet,
    lam: Lambda,
    sphere_grid: SampledSet,
    rho_cap: Any,
    *,
    max_workers: int | None = None,
    **solver: Any,
) -> CapacityEstimate:
    """ρ_λ(E) ≈ 1 / max_{球面网格} Ψ̂；Ψ̂ 为 +inf 时容量为 0。"""
    if not sphere_grid.on_sphere:
        raise PreconditionError("sphere_grid 必须标记为球面网格")
    if sphere_grid.is_empty:
        raise PreconditionError("sphere_grid 不能为空")
    cap_wd = lam.degree(rho_cap)

    def one(point: np.ndarray) -> float:
        return psi_estimate(E, lam, point, cap_wd, **solver).value

    values = np.array(_parallel_map(one, list(sphere_grid.points), max_workers), dtype=float)
    idx = int(np.argmax(values))
    psi_sup = float(values[idx])
    if math.isinf(psi_sup):
        rho = 0.0
    elif psi_sup <= 0:
        raise NumericFailure("球面网格上 Ψ 估计全为零")
    else:
        rho = 1.0 / psi_sup
    logger.info("容量估计 ρ̂=%.6g（网格 %d 点, cap=%s）", rho, sphere_grid.size, cap_wd)
    return CapacityEstimate(
        rho_lambda=rho,
        psi_sup=psi_sup,
        argmax=sphere_grid.points[idx].copy(),
        grid_size=sphere_grid.size,
        rho_cap=cap_wd,
        values=values,
    )


@dataclass(frozen=True, eq=False)
class HullVerdict:
    inside: bool
    estimate: ExtremalEstimate
    ratio: float
    witness: MixedPolynomial | None

    def to_json(self) -> dict[str, Any]:
        return {
            "verdict": "Inside" if self.inside else "Outside",
            "ratio": self.ratio if math.isfinite(self.ratio) else "inf",
            "witness": self.witness.to_json() if self.witness is not None else None,
            "estimate": self.estimate.to_json(),
        }


def hull_membership(
    K: SampledSet,
    lam: Lambda,
    z0: Any,
    rho_cap: Any,
    *,
    check_circular: bool = True,
    margin: float | None = None,
    **solver: Any,
) -> HullVerdict:
    """多项式 λ-凸包成员判定：Ψ̂(z₀) > 1 + margin 时给出分离见证。"""
    margin = get_settings().hull_margin if margin is None else margin
    if check_circular and not is_lambda_circular(K, lam):
        raise PreconditionError("K 在样本上不满足 λ-圆性")
    est = psi_estimate(K, lam, z0, rho_cap, **solver)
    if est.value <= 1 + margin:
        ratio = max((e.value for e in est.per_level), default=0.0)
        return HullVerdict(inside=True, estimate=est, ratio=ratio, witness=None)
    # 取原始比值 |q(z₀)|/‖q‖_K 最大的层作为分离见证
    if est.is_unbounded:
        return HullVerdict(inside=False, estimate=est, ratio=math.inf, witness=est.witness)
    strongest = max(est.per_level, key=lambda e: e.value)
    z = as_point(z0, lam.n)
    sampled = float(np.abs(strongest.witness.evaluate_many(K.points)).max())
    ratio = abs(strongest.witness.evaluate(z)) / sampled
    return HullVerdict(inside=False, estimate=est, ratio=ratio, witness=strongest.witness)


# ---------------------------------------------------------------- 夹逼与诊断


@dataclass(frozen=True)
class SandwichRow:
    point: tuple[complex, ...]
    psi: float
    phi: float
    lower_gap: float
    upper_gap: float
    ok: bool

    def to_json(self) -> dict[str, Any]:
        return {
            "point": [[z.real, z.imag] for z in self.point],
            "psi": self.psi,
            "phi": self.phi,
            "lower_gap": self.lower_gap,
            "upper_gap": self.upper_gap,
            "ok": self.ok,
        }


@dataclass(frozen=True)
class SandwichReport:
    rows: tuple[SandwichRow, ...]
    slack: float
    rho_cap: WeightedDegree
    degree_cap: int

    @property
    def violations(self) -> int:
        return sum(not r.ok for r in self.rows)

    def to_json(self) -> dict[str, Any]:
        return {
            "violations": self.violations,
            "slack": self.slack,
            "rho_cap": self.rho_cap.to_json(),
            "degree_cap": self.degree_cap,
            "rows": [r.to_json() for r in self.rows],
        }


def sandwich_check(
    E: SampledSet,
    lam: Lambda,
    grid: Any,
    rho_cap: Any,
    degree_cap: int | None = None,
    *,
    slack: float | None = None,
    check_circular: bool = True,
    max_workers: int | None = None,
    **solver: Any,
) -> SandwichReport:
    """单侧检查 φ̂ ≥ max(1,ψ̂)^{min λ} − slack 与 max(1,ψ̂) ≥ φ̂^{1/max λ} − slack。

    degree_cap 默认取 ⌈rho_cap / min λ⌉，使 Ψ 的见证都落在 Φ 的多项式空间内。
    """
    slack = get_settings().sandwich_slack if slack is None else slack
    if check_circular and not is_lambda_circular(E, lam):
        raise PreconditionError("E 在样本上不满足 λ-圆性")
    cap_wd = lam.degree(rho_cap)
    if degree_cap is None:
        degree_cap = max(1, math.ceil(cap_wd.value / lam.min_weight - 1e-12))
    pts = grid.points if isinstance(grid, SampledSet) else np.asarray(grid, dtype=complex).reshape(-1, lam.n)
    lo, hi = lam.min_weight, lam.max_weight

    def one(point: np.ndarray) -> SandwichRow:
        psi = psi_estimate(E, lam, point, cap_wd, **solver).value
        phi = green_estimate(E, point, degree_cap, **solver).value
        base = max(1.0, psi)
        if math.isinf(base) or math.isinf(phi):
            lower_gap = 0.0 if math.isinf(phi) else -math.inf
            upper_gap = 0.0 if math.isinf(base) else -math.inf
        else:
            lower_gap = phi - base ** lo
            upper_gap = base - phi ** (1.0 / hi)
        ok = lower_gap >= -slack and upper_gap >= -slack
        return SandwichRow(tuple(complex(v) for v in point), psi, phi, lower_gap, upper_gap, ok)

    rows = _parallel_map(one, list(pts), max_workers)
    report = SandwichReport(tuple(rows), slack, cap_wd, int(degree_cap))
    if report.violations:
        logger.warning("夹逼检查有 %d 个点超出容差 %.3g", report.violations, slack)
    return report


@dataclass(frozen=True)
class LRegularityRow:
    radius: float
    sample_count: int
    v_half: float
    v_full: float
    verdict: str

    def to_json(self) -> dict[str, Any]:
        def fin(x: float) -> Any:
            return x if math.isfinite(x) else "inf"

        return {
            "radius": self.radius,
            "sample_count": self.sample_count,
            "v_half": fin(self.v_half),
            "v_full": fin(self.v_full),
            "verdict": self.verdict,
        }


@dataclass(frozen=True)
class LRegularityReport:
    rows: tuple[LRegularityRow, ...]
    degree_cap: int

    @property
    def verdict(self) -> str:
        verdicts = {r.verdict for r in self.rows}
        if not verdicts:
            return "undetermined"
        if "pluripolar_signature" in verdicts:
            return "pluripolar_signature"
        if verdicts == {"consistent_with_L_regularity"}:
            return "consistent_with_L_regularity"
        return "undetermined"

    def to_json(self) -> dict[str, Any]:
        return {"verdict": self.verdict, "degree_cap": self.degree_cap, "rows": [r.to_json() for r in self.rows]}


def _probe_ring(a: np.ndarray, radius: float, probes: int) -> np.ndarray:
    rows = []
    for coord in range(a.shape[0]):
        for j in range(probes):
            p = a.copy()
            p[coord] += radius * np.exp(2j * np.pi * j / probes)
            rows.append(p)
    return np.array(rows, dtype=complex)


def _mean_log_green(E: SampledSet, probes: np.ndarray, cap: int, solver: dict[str, Any]) -> float:
    logs = []
    for p in probes:
        value = green_estimate(E, p, cap, **solver).value
        if math.isinf(value):
            return math.inf
        logs.append(math.log(value))
    return float(np.mean(logs))


def l_regularity_estimate(
    E: SampledSet,
    a: Any,
    radii: Sequence[float],
    degree_cap: int,
    *,
    probes: int = 8,
    threshold: float = 0.1,
    growth: float = 0.05,
    anchor_tol: float = 1e-6,
    **solver: Any,
) -> LRegularityReport:
    """v(r) = 探针圆环（半径 r/10）上 log Φ̂ 的平均；只做诊断，不是证明。

    a 必须是 E 的样本点（距离不超过 anchor_tol）。
    """
    point = as_point(a, E.n)
    if E.is_empty:
        raise PreconditionError("E 不能为空")
    nearest = float(np.linalg.norm(E.points - point[None, :], axis=1).min())
    if nearest > anchor_tol:
        raise PreconditionError(f"a 不是 E 的样本点: 最近距离 {nearest:.3g}")
    rows = []
    half_cap = max(1, degree_cap // 2)
    for r in radii:
        local = E.restrict_ball(point, r)
        if local.is_empty:
            logger.warning("B(a, %.3g) 内没有样本点，跳过该半径", r)
            continue
        ring = _probe_ring(point, r / 10.0, probes)
        v_half = _mean_log_green(local, ring, half_cap, solver)
        v_full = _mean_log_green(local, ring, degree_cap, solver)
        if math.isinf(v_full) or (v_full - v_half > growth and v_full >= threshold):
            verdict = "pluripolar_signature"
        elif v_full < threshold:
            verdict = "consistent_with_L_regularity"
        else:
            verdict = "undetermined"
        rows.append(LRegularityRow(float(r), local.size, v_half, v_full, verdict))
    return LRegularityReport(tuple(rows), int(degree_cap))


@dataclass(frozen=True)
class TrendReport:
    caps: tuple[WeightedDegree, ...]
    capacities: tuple[float, ...]
    signature: Literal["lambda_pluripolar_signature", "nonpluripolar_signature", "undetermined"]

    def to_json(self) -> dict[str, Any]:
        return {
            "signature": self.signature,
            "trend": [{"cap": c.to_json(), "capacity": v} for c, v in zip(self.caps, self.capacities)],
        }


def pluripolar_diagnostic(
    E: SampledSet,
    lam: Lambda,
    caps: Sequence[Any],
    sphere_grid: SampledSet | None = None,
    *,
    decay: float = 0.9,
    flat: float = 0.1,
    **solver: Any,
) -> TrendReport:
    """容量随 cap 的变化：衰减到 0 为 λ-多极信号，远离 0 的平稳为非多极信号。"""
    if E.is_empty:
        raise PreconditionError("E 不能为空")
    if sphere_grid is None:
        sphere_grid = make_sphere_grid(lam.n, DEFAULT_SPHERE_COUNT, get_settings().seed)
    cap_list = sorted(lam.degree(c) for c in caps)
    values = tuple(capacity(E, lam, sphere_grid, c, **solver).rho_lambda for c in cap_list)
    if any(v == 0.0 for v in values):
        signature = "lambda_pluripolar_signature"
    elif all(b < a for a, b in zip(values, values[1:])) and values[-1] < decay * values[0]:
        signature = "lambda_pluripolar_signature"
    elif max(values) - min(values) <= flat * max(values):
        signature = "nonpluripolar_signature"
    else:
        signature = "undetermined"
    return TrendReport(tuple(cap_list), values, signature)


__all__ = [
    "CapacityEstimate",
    "ChebyshevProblem",
    "ExtremalEstimate",
    "HullVerdict",
    "LRegularityReport",
    "LRegularityRow",
    "SandwichReport",
    "SandwichRow",
    "TrendReport",
    "capacity",
    "cheby_maximize",
    "green_estimate",
    "holomorphic_basis",
    "hull_membership",
    "l_regularity_estimate",
    "pluripolar_diagnostic",
    "psi_estimate",
    "sandwich_check",
]
