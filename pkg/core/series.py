"""
拟齐次块组成的形式级数：沿叶的 Dirichlet 型求值、收敛区域估计与发散级数构造。
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Literal, Mapping, Sequence

import numpy as np

from config import get_settings
from core.errors import DimensionError, PreconditionError
from core.extremal import CapacityEstimate, capacity, green_estimate, psi_estimate
from core.qhpoly import HoloQHPolynomial, MixedPolynomial, as_point, as_points, series_decompose
from core.sets import CircleFamily, SampledSet, sphere_grid as make_sphere_grid
from core.suspension import DEFAULT_RE_GRID, Suspension
from core.weights import ConvergenceVerdict, Lambda, WeightedDegree, fraction_pair, root_test

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FormalSeries:
    """S = Σ q_m，q_m 的双次数为 (ρ_m, 0)，ρ_m 严格递增。"""

    lam: Lambda
    blocks: tuple[HoloQHPolynomial, ...]
    truncation: int | None = None

    def __post_init__(self) -> None:
        for b in self.blocks:
            if b.lam.n != self.lam.n:
                raise DimensionError("块的维数与 λ 不一致")
            if not b.d2.is_zero:
                raise PreconditionError("形式级数的块必须是全纯拟齐次多项式")
        for prev, cur in zip(self.blocks, self.blocks[1:]):
            if not prev.d1 < cur.d1:
                raise PreconditionError(f"块的 ρ 必须严格递增: {prev.d1} !< {cur.d1}")
        if self.truncation is None:
            object.__setattr__(self, "truncation", len(self.blocks))

    @classmethod
    def from_polynomial(cls, f: MixedPolynomial, lam: Lambda, truncation: int | None = None) -> "FormalSeries":
        limit = get_settings().truncation_order if truncation is None else truncation
        blocks = series_decompose(f, lam)[:limit]
        return cls(lam, tuple(blocks), limit)

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "FormalSeries":
        lam = Lambda.from_json(data["lambda"])
        blocks = []
        for item in data.get("blocks", []):
            poly = MixedPolynomial.from_json(item["poly"])
            if "rho_coords" in item:
                rho = WeightedDegree(tuple(item["rho_coords"]), lam.basis)
                blocks.append(HoloQHPolynomial(poly, rho, lam.zero(), lam))
            else:
                blocks.append(HoloQHPolynomial.build(poly, lam))
        return cls(lam, tuple(blocks), data.get("truncation"))

    def to_json(self) -> dict[str, Any]:
        return {
            "lambda": self.lam.to_json(),
            "truncation": self.truncation,
            "blocks": [
                {
                    "rho_coords": [fraction_pair(c) for c in b.d1.coords],
                    "rho_approx": b.d1.value,
                    "poly": b.poly.to_json(),
                }
                for b in self.blocks
            ],
        }

    def __len__(self) -> int:
        return len(self.blocks)

    @property
    def rhos(self) -> list[WeightedDegree]:
        return [b.d1 for b in self.blocks]

    def truncated(self, count: int) -> "FormalSeries":
        return FormalSeries(self.lam, self.blocks[:count], count)

    def block_values(self, z: Any) -> np.ndarray:
        pt = as_point(z, self.lam.n)
        return np.array([b.poly.evaluate(pt) for b in self.blocks], dtype=complex)

    def partial_sums(self, z: Any, t: complex = 0j) -> np.ndarray:
        rho = np.array([r.value for r in self.rhos], dtype=float)
        terms = self.block_values(z) * np.exp(-rho * complex(t))
        return np.cumsum(terms)


@dataclass(frozen=True, eq=False)
class DirichletResult:
    terms: np.ndarray
    partial_sums: np.ndarray
    verdict: ConvergenceVerdict

    def to_json(self) -> dict[str, Any]:
        return {
            "verdict": self.verdict.to_json(),
            "terms": [[c.real, c.imag] for c in self.terms],
            "partial_sums": [[c.real, c.imag] for c in self.partial_sums],
        }


def dirichlet_eval(
    S: FormalSeries,
    z: Any,
    t: complex,
    *,
    window: int | None = None,
    delta: float | None = None,
) -> DirichletResult:
    """Σ q_m(z) e^{−ρ_m t} 的部分和与根判别结论，要求 Re t > 0。"""
    t = complex(t)
    if t.real <= 0:
        raise PreconditionError(f"要求 Re t > 0，实际 t={t}")
    if not S.blocks:
        raise PreconditionError("空级数")
    rho = np.array([r.value for r in S.rhos], dtype=float)
    terms = S.block_values(z) * np.exp(-rho * t)
    sums = np.cumsum(terms)
    verdict = root_test(list(zip(S.rhos, terms)), window=window, delta=delta)
    if sum(1 for r in S.rhos if not r.is_zero) < 2:
        # 有限和，没有尾部
        verdict = ConvergenceVerdict(kind="Converges", r_hat=verdict.r_hat, window=verdict.window)
    return DirichletResult(terms, sums, verdict)


def leaf_coefficient_bound(S: FormalSeries, z: Any, t_values: Sequence[complex]) -> tuple[float, np.ndarray]:
    """M = max_t |Σ q_m(z) e^{−ρ_m t}|（Re t ≥ 0），返回 M 与 |q_m(z)|/M。"""
    if any(complex(t).real < 0 for t in t_values):
        raise PreconditionError("t 网格要求 Re t ≥ 0")
    values = S.block_values(z)
    rho = np.array([r.value for r in S.rhos], dtype=float)
    sums = [abs(complex(np.sum(values * np.exp(-rho * complex(t))))) for t in t_values]
    M = float(max(sums)) if sums else 0.0
    ratios = np.abs(values) / M if M > 0 else np.full(values.shape, math.inf)
    return M, ratios


# ---------------------------------------------------------------- 区域估计


@dataclass(frozen=True, eq=False)
class RegionEstimate:
    kind: Literal["convergence", "omega_prime", "omega_hat", "capacity_ball"]
    grid: np.ndarray
    values: np.ndarray
    inside: np.ndarray
    ball_radius: float | None = None
    truncation: int | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "ball_radius": self.ball_radius,
            "truncation": self.truncation,
            "points": [
                {
                    "z": [[c.real, c.imag] for c in p],
                    "value": float(v) if math.isfinite(v) else "inf",
                    "inside": bool(flag),
                }
                for p, v, flag in zip(self.grid, self.values, self.inside)
            ],
            **self.extra,
        }

    def csv_rows(self) -> tuple[list[str], list[list[Any]]]:
        n = self.grid.shape[1] if self.grid.ndim == 2 else 0
        header = [f"{part}{i + 1}" for i in range(n) for part in ("re_z", "im_z")] + ["value", "inside"]
        rows = []
        for p, v, flag in zip(self.grid, self.values, self.inside):
            coords: list[Any] = []
            for c in p:
                coords.extend([c.real, c.imag])
            rows.append(coords + [float(v), int(bool(flag))])
        return header, rows


def _grid_points(grid: Any, n: int) -> np.ndarray:
    if isinstance(grid, SampledSet):
        return grid.points
    return as_points(grid, n)


def convergence_region(
    S: FormalSeries,
    grid: Any,
    *,
    window: int | None = None,
    margin: float | None = None,
) -> RegionEstimate:
    """逐点取尾部窗口内 max |q_m(z)|^{1/ρ_m}；inside 为 value < 1 − δ。"""
    if len(S.blocks) < 4:
        raise PreconditionError("收敛区域估计至少需要 4 个块")
    margin = get_settings().region_margin if margin is None else margin
    pts = _grid_points(grid, S.lam.n)
    rho = np.array([r.value for r in S.rhos], dtype=float)
    positive = np.flatnonzero(rho > 0)
    w = window if window is not None else max(1, len(S.blocks) // 2)
    tail = positive[-min(w, positive.size):]
    values = np.zeros(pts.shape[0])
    for i, p in enumerate(pts):
        mags = np.abs(S.block_values(p))[tail]
        with np.errstate(divide="ignore"):
            roots = np.where(mags > 0, mags ** (1.0 / rho[tail]), 0.0)
        values[i] = float(roots.max()) if roots.size else 0.0
    return RegionEstimate(
        kind="convergence",
        grid=pts,
        values=values,
        inside=values < 1 - margin,
        truncation=S.truncation,
        extra={"window": int(tail.size)},
    )


@dataclass(frozen=True, eq=False)
class OmegaBall:
    radius: float
    capacity: CapacityEstimate
    re_t: float = 0.0

    def to_json(self) -> dict[str, Any]:
        return {"radius": self.radius, "re_t": self.re_t, "capacity": self.capacity.to_json()}


def omega_from_capacity(
    F: SampledSet,
    lam: Lambda,
    rho_cap: Any,
    *,
    sphere_grid: SampledSet | None = None,
    grid_size: int = 200,
    re_grid: Sequence[float] = DEFAULT_RE_GRID,
    extrapolate: bool = True,
    seed: int | None = None,
    **solver: Any,
) -> OmegaBall:
    """球 Bⁿ(0, ρ̂_λ(S_0(F))^{max λ})。

    全纯拟齐次约束在整片叶上的上确界是 Re t → 0⁺ 的极限，extrapolate=True 时直接用这个极限；
    extrapolate=False 时用 Re t = min(re_grid) 的叶点，半径约偏小 e^{−min(re_grid)} 倍。
    """
    grid = sphere_grid if sphere_grid is not None else make_sphere_grid(lam.n, grid_size, seed)
    susp = Suspension(lam, F, tuple(re_grid))
    samples = susp.dominant_samples(limit=extrapolate)
    cap = capacity(samples, lam, grid, rho_cap, **solver)
    radius = cap.rho_lambda ** lam.max_weight if cap.rho_lambda > 0 else 0.0
    return OmegaBall(radius=radius, capacity=cap, re_t=0.0 if extrapolate else float(min(re_grid)))


def lambda_normalize(lam: Lambda, z: Any) -> np.ndarray:
    """z_λ = (z_i ‖z‖^{−λ_i / max λ})；λ 各分量相等时就是 z/‖z‖。"""
    pt = as_point(z, lam.n)
    norm = float(np.linalg.norm(pt))
    if norm == 0:
        raise PreconditionError("z = 0 处 z_λ 没有定义")
    powers = np.asarray(lam.approx, dtype=float) / lam.max_weight
    return pt * norm ** (-powers)


def omega_prime(
    F: SampledSet,
    lam: Lambda,
    grid: Any,
    degree_cap: int,
    *,
    re_grid: Sequence[float] = DEFAULT_RE_GRID,
    im_count: int = 16,
    **solver: Any,
) -> RegionEstimate:
    """Ω′ = {‖z‖^{min λ/max λ} · Φ̂(z_λ) < 1}，Φ̂ 取悬挂样本上的 Green 函数估计。

    extra["limsup_bound"] 给出 ‖z‖^{1/max λ} · Φ̂(z_λ)^{1/min λ}。
    """
    pts = _grid_points(grid, lam.n)
    if np.any(np.linalg.norm(pts, axis=1) == 0):
        raise PreconditionError("网格中不能含原点（原点按约定在区域内）")
    samples = Suspension(lam, F, tuple(re_grid), im_count).samples()
    lo, hi = lam.min_weight, lam.max_weight
    values = np.zeros(pts.shape[0])
    bounds = np.zeros(pts.shape[0])
    for i, p in enumerate(pts):
        norm = float(np.linalg.norm(p))
        phi = green_estimate(samples, lambda_normalize(lam, p), degree_cap, **solver).value
        values[i] = norm ** (lo / hi) * phi
        bounds[i] = norm ** (1.0 / hi) * phi ** (1.0 / lo)
    return RegionEstimate(
        kind="omega_prime",
        grid=pts,
        values=values,
        inside=values < 1,
        extra={"limsup_bound": [float(b) if math.isfinite(b) else "inf" for b in bounds]},
    )


def omega_hat(
    base: SampledSet,
    extra: SampledSet | None,
    lam: Lambda,
    grid: Any,
    rho_cap: Any,
    *,
    margin: float | None = None,
    **solver: Any,
) -> RegionEstimate:
    """{z : Ψ̂_{base ∪ extra}(z) < 1}；受约束的样本点 Ψ̂ ≤ 1，按 1 + δ 判定。"""
    margin = get_settings().region_margin if margin is None else margin
    union = base if extra is None or extra.is_empty else base.union(extra)
    pts = _grid_points(grid, lam.n)
    values = np.array([psi_estimate(union, lam, p, rho_cap, **solver).value for p in pts], dtype=float)
    return RegionEstimate(kind="omega_hat", grid=pts, values=values, inside=values < 1 + margin)


# ---------------------------------------------------------------- 发散级数


@dataclass(frozen=True, eq=False)
class DivergentSeries:
    series: FormalSeries
    points: np.ndarray
    indices: tuple[int, ...]
    dropped: tuple[int, ...]
    max_relative_error: float

    def to_json(self) -> dict[str, Any]:
        return {
            "series": self.series.to_json(),
            "points": [[[c.real, c.imag] for c in p] for p in self.points],
            "indices": list(self.indices),
            "dropped": list(self.dropped),
            "max_relative_error": self.max_relative_error,
        }


def divergence_points(lam: Lambda, a: Any, count: int) -> np.ndarray:
    """b_k = (a₁/k^{λ₁}, …, a_n/k^{λ_n})，k = 1..count。"""
    pt = as_point(a, lam.n)
    weights = np.asarray(lam.approx, dtype=float)
    return np.array([pt / float(k) ** weights for k in range(1, count + 1)], dtype=complex)


def build_divergent_series(
    p_seq: Sequence[HoloQHPolynomial],
    a: Any,
    K_family: Sequence[SampledSet],
    lam: Lambda,
    *,
    kmax: int = 10,
) -> DivergentSeries:
    """选子列 p_{n_m}：p(a) ≠ 0 且 sup_{K_m} |p|^{1/ρ} ≤ 1/m²；q_m = m^{ρ} p/p(a)。"""
    if not K_family:
        raise PreconditionError("K_family 不能为空")
    point = as_point(a, lam.n)
    blocks: list[HoloQHPolynomial] = []
    indices: list[int] = []
    dropped: list[int] = []
    last_bound = None
    for idx, p in enumerate(p_seq):
        m = len(blocks) + 1
        if blocks and not blocks[-1].d1 < p.d1:
            dropped.append(idx)
            continue
        K = K_family[min(m - 1, len(K_family) - 1)]
        pa = p.poly.evaluate(point)
        rho = p.d1.value
        sup = float(np.abs(p.poly.evaluate_many(K.points)).max()) if K.size else 0.0
        bound = sup ** (1.0 / rho) if sup > 0 else 0.0
        last_bound = (idx, bound, 1.0 / m**2)
        if abs(pa) == 0 or bound > 1.0 / m**2:
            logger.warning("丢弃 p_%d: |p(a)|=%.3g, sup^{1/ρ}=%.3g > 1/m²=%.3g", idx, abs(pa), bound, 1.0 / m**2)
            dropped.append(idx)
            continue
        q = p.poly * (float(m) ** rho / pa)
        blocks.append(HoloQHPolynomial(q, p.d1, p.d2, lam, verify=False))
        indices.append(idx)
    if not blocks:
        detail = f"p_{last_bound[0]}: {last_bound[1]:.3g} > {last_bound[2]:.3g}" if last_bound else "p_seq 为空"
        raise PreconditionError(f"找不到满足界的子列（{detail}）")

    series = FormalSeries(lam, tuple(blocks), len(blocks))
    points = divergence_points(lam, point, kmax)
    max_err = 0.0
    for m, block in enumerate(blocks, start=1):
        for k, b in enumerate(points, start=1):
            expected = (m / k) ** block.d1.value
            got = block.poly.evaluate(b)
            max_err = max(max_err, abs(got - expected) / expected)
    if max_err > 1e-9:
        logger.warning("q_m(b_k) 与 (m/k)^ρ 的最大相对误差 %.3e 超过 1e-9", max_err)
    return DivergentSeries(series, points, tuple(indices), tuple(dropped), max_err)


def builtin_divergent_family(count: int = 25) -> tuple[list[HoloQHPolynomial], np.ndarray, list[SampledSet], Lambda]:
    """λ = (1,1)，p_m = (z₁ − z₂)^m，a = (1, 0)，K 为 {(e^{iθ}/√2, e^{iθ}/√2)} 的样本。"""
    lam = Lambda.rational(1, 1)
    diff = MixedPolynomial.coordinate(2, 0) - MixedPolynomial.coordinate(2, 1)
    p_seq = [HoloQHPolynomial.build(diff**m, lam) for m in range(1, count + 1)]
    r = 1.0 / math.sqrt(2.0)
    K = SampledSet.from_descriptor(CircleFamily(radii=(r, r), frequencies=(1, 1), count=64))
    return p_seq, np.array([1.0, 0.0], dtype=complex), [K], lam


__all__ = [
    "DirichletResult",
    "DivergentSeries",
    "FormalSeries",
    "OmegaBall",
    "RegionEstimate",
    "build_divergent_series",
    "builtin_divergent_family",
    "convergence_region",
    "dirichlet_eval",
    "divergence_points",
    "lambda_normalize",
    "leaf_coefficient_bound",
    "omega_from_capacity",
    "omega_hat",
    "omega_prime",
]
