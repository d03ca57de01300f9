"""
点样本集合与生成描述符。

描述符（显式列表、圆族、实切片、乘积、并）既能产生样本，也能给出 sympy 的
精确参数化：多项式拉回到参数上之后，在有理参数点上精确求值并整体展开，
展开式为零当且仅当多项式在整个族上恒为零。
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence, Union

import numpy as np
import sympy
from scipy.spatial import cKDTree

from config import get_settings
from core.errors import DimensionError, PreconditionError
from core.qhpoly import MixedPolynomial, as_points, flow_map_many
from core.weights import Lambda

logger = logging.getLogger(__name__)

EXACT_DENOMINATOR = 64
EXACT_CHECK_POINTS = 8

# (参数符号, "circle" | "real", 圆参数的频率绝对值之和)
Param = tuple[sympy.Symbol, str, int]
Chart = tuple[list[tuple[sympy.Expr, sympy.Expr]], list[Param]]


def _rng(seed: int | None) -> np.random.Generator:
    return np.random.default_rng(get_settings().seed if seed is None else seed)


def _complex_pair(value: Any) -> complex:
    if isinstance(value, (list, tuple)):
        return complex(float(value[0]), float(value[1]))
    return complex(value)


def _snap_real(x: float, tol: float) -> sympy.Expr:
    if abs(x) <= tol:
        return sympy.Integer(0)
    return sympy.nsimplify(float(x), tolerance=tol)


def _snap_complex(c: complex, tol: float) -> sympy.Expr:
    return _snap_real(c.real, tol) + sympy.I * _snap_real(c.imag, tol)


def _circle_point(s: sympy.Rational) -> sympy.Expr:
    """单位圆上的有理点 (1 − s² + 2is)/(1 + s²)。"""
    return (1 - s**2 + 2 * sympy.I * s) / (1 + s**2)


# ---------------------------------------------------------------- 描述符


@dataclass(frozen=True)
class ExplicitList:
    """显式点列，没有符号参数化。"""

    points: tuple[tuple[complex, ...], ...]
    type: str = field(default="explicit", init=False)

    @property
    def n(self) -> int:
        return len(self.points[0]) if self.points else 0

    def sample(self, seed: int | None = None) -> np.ndarray:
        return np.array(self.points, dtype=complex).reshape(len(self.points), self.n)

    def parametrize(self, tag: str) -> Chart | None:
        return None

    def to_json(self) -> dict[str, Any]:
        return {
            "type": self.type,
            "points": [[[z.real, z.imag] for z in p] for p in self.points],
        }


@dataclass(frozen=True)
class CircleFamily:
    """θ ↦ (r₁e^{i(f₁θ+φ₁)}, …, r_n e^{i(f_nθ+φ_n)})，θ 在 [0, 2π) 等距取样。"""

    radii: tuple[float, ...]
    frequencies: tuple[int, ...]
    phases: tuple[float, ...] = ()
    count: int = 64
    type: str = field(default="circle_family", init=False)

    def __post_init__(self) -> None:
        phases = self.phases or (0.0,) * len(self.radii)
        object.__setattr__(self, "phases", tuple(float(p) for p in phases))
        if not (len(self.radii) == len(self.frequencies) == len(self.phases)):
            raise DimensionError("圆族的半径、频率、相位长度必须一致")

    @property
    def n(self) -> int:
        return len(self.radii)

    def point(self, theta: float) -> np.ndarray:
        r = np.asarray(self.radii, dtype=float)
        f = np.asarray(self.frequencies, dtype=float)
        phi = np.asarray(self.phases, dtype=float)
        return r * np.exp(1j * (f * theta + phi))

    def sample(self, seed: int | None = None) -> np.ndarray:
        thetas = 2 * np.pi * np.arange(self.count) / self.count
        return np.array([self.point(t) for t in thetas], dtype=complex)

    def parametrize(self, tag: str) -> Chart | None:
        # z_i = c_i w^{f_i}，z̄_i = c̄_i w^{−f_i}，w = e^{iθ}
        w = sympy.Symbol(f"w{tag}")
        coords = []
        for r, f, phi in zip(self.radii, self.frequencies, self.phases):
            c = _snap_real(r, 1e-12) * sympy.exp(sympy.I * sympy.pi * _snap_real(phi / math.pi, 1e-12))
            coords.append((c * w**f, sympy.conjugate(c) * w ** (-f)))
        return coords, [(w, "circle", sum(abs(f) for f in self.frequencies))]

    def to_json(self) -> dict[str, Any]:
        return {
            "type": self.type,
            "radii": list(self.radii),
            "frequencies": list(self.frequencies),
            "phases": list(self.phases),
            "count": self.count,
        }


@dataclass(frozen=True)
class RealSlice:
    """指定坐标取实值的切片（默认与单位球面相交）。"""

    n: int
    real_coords: tuple[int, ...]
    count: int = 200
    on_sphere: bool = True
    type: str = field(default="real_slice", init=False)

    def __post_init__(self) -> None:
        if any(not 0 <= i < self.n for i in self.real_coords):
            raise DimensionError(f"实坐标下标越界: {self.real_coords}")

    def sample(self, seed: int | None = None) -> np.ndarray:
        rng = _rng(seed)
        re = rng.standard_normal((self.count, self.n))
        im = rng.standard_normal((self.count, self.n))
        im[:, list(self.real_coords)] = 0.0
        pts = re + 1j * im
        if self.on_sphere:
            pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
        return pts

    def parametrize(self, tag: str) -> Chart | None:
        # 实坐标上 z_i = z̄_i = x_i，其余坐标 z_i = a_i + i b_i
        coords: list[tuple[sympy.Expr, sympy.Expr]] = []
        params: list[Param] = []
        for i in range(self.n):
            if i in self.real_coords:
                x = sympy.Symbol(f"x{tag}_{i}", real=True)
                coords.append((x, x))
                params.append((x, "real", 0))
            else:
                a = sympy.Symbol(f"a{tag}_{i}", real=True)
                b = sympy.Symbol(f"b{tag}_{i}", real=True)
                coords.append((a + sympy.I * b, a - sympy.I * b))
                params += [(a, "real", 0), (b, "real", 0)]
        return coords, params

    def to_json(self) -> dict[str, Any]:
        return {
            "type": self.type,
            "n": self.n,
            "real_coords": list(self.real_coords),
            "count": self.count,
            "on_sphere": self.on_sphere,
        }


@dataclass(frozen=True)
class ProductSet:
    """各因子坐标块的笛卡尔积。"""

    factors: tuple["Descriptor", ...]
    type: str = field(default="product", init=False)

    @property
    def n(self) -> int:
        return sum(f.n for f in self.factors)

    def sample(self, seed: int | None = None) -> np.ndarray:
        blocks = [f.sample(seed) for f in self.factors]
        pts = blocks[0]
        for block in blocks[1:]:
            left = np.repeat(pts, block.shape[0], axis=0)
            right = np.tile(block, (pts.shape[0], 1))
            pts = np.hstack([left, right])
        return pts

    def parametrize(self, tag: str) -> Chart | None:
        coords: list[tuple[sympy.Expr, sympy.Expr]] = []
        params: list[Param] = []
        for j, f in enumerate(self.factors):
            chart = f.parametrize(f"{tag}_{j}")
            if chart is None:
                return None
            coords += chart[0]
            params += chart[1]
        return coords, params

    def to_json(self) -> dict[str, Any]:
        return {"type": self.type, "factors": [f.to_json() for f in self.factors]}


@dataclass(frozen=True)
class UnionSet:
    parts: tuple["Descriptor", ...]
    type: str = field(default="union", init=False)

    def __post_init__(self) -> None:
        if len({p.n for p in self.parts}) > 1:
            raise DimensionError("并集各部分维数必须一致")

    @property
    def n(self) -> int:
        return self.parts[0].n if self.parts else 0

    def sample(self, seed: int | None = None) -> np.ndarray:
        return np.vstack([p.sample(seed) for p in self.parts])

    def parametrize(self, tag: str) -> Chart | None:
        return None

    def to_json(self) -> dict[str, Any]:
        return {"type": self.type, "parts": [p.to_json() for p in self.parts]}


Descriptor = Union[ExplicitList, CircleFamily, RealSlice, ProductSet, UnionSet]


def descriptor_from_json(data: Mapping[str, Any]) -> Descriptor:
    kind = data.get("type")
    if kind == "explicit":
        return ExplicitList(tuple(tuple(_complex_pair(z) for z in p) for p in data["points"]))
    if kind == "circle_family":
        return CircleFamily(
            radii=tuple(float(r) for r in data["radii"]),
            frequencies=tuple(int(f) for f in data["frequencies"]),
            phases=tuple(float(p) for p in data.get("phases", [])),
            count=int(data.get("count", 64)),
        )
    if kind == "real_slice":
        return RealSlice(
            n=int(data["n"]),
            real_coords=tuple(int(i) for i in data["real_coords"]),
            count=int(data.get("count", 200)),
            on_sphere=bool(data.get("on_sphere", True)),
        )
    if kind == "product":
        return ProductSet(tuple(descriptor_from_json(f) for f in data["factors"]))
    if kind == "union":
        return UnionSet(tuple(descriptor_from_json(p) for p in data["parts"]))
    raise PreconditionError(f"未知的集合描述符类型: {kind!r}")


def vanishes_identically(q: MixedPolynomial, descriptor: Descriptor, tol: float | None = None) -> bool | None:
    """q 在描述符的整个参数化上是否恒为零；显式点列无法判断时返回 None。

    系数先除以模最大的系数，再在容差 tol 内化成精确数（有理数或根式）。
    拉回的表达式先在分母不超过 64 的有理参数点上精确求值，任一点非零即返回 False；
    全部为零时再把拉回的 Laurent 多项式整体展开，逐个系数核对。
    对拟齐次 q，实切片上的判断与"在切片 ∩ 球面上为零"等价（沿实流伸缩）。
    """
    if tol is None:
        tol = get_settings().witness_tol
    if isinstance(descriptor, UnionSet):
        results = [vanishes_identically(q, p, tol) for p in descriptor.parts]
        if any(r is False for r in results):
            return False
        return None if any(r is None for r in results) else True
    if descriptor.n != q.n:
        raise DimensionError(f"描述符维数 {descriptor.n} 与多项式维数 {q.n} 不一致")
    if q.is_zero:
        return True
    chart = descriptor.parametrize("")
    if chart is None:
        return None
    coords, params = chart
    expr = _pullback(q, coords, tol)
    for sub in rational_parameters(params, EXACT_CHECK_POINTS):
        if not _is_exact_zero(expr.xreplace(sub)):
            logger.debug("有理参数点 %s 上不为零", sub)
            return False
    shift = sympy.Mul(*[sym ** (weight * q.degree) for sym, _, weight in params if weight])
    expanded = sympy.expand(expr * shift)
    if expanded == 0:
        return True
    poly = sympy.Poly(expanded, *[sym for sym, _, _ in params])
    return all(_is_exact_zero(c) for c in poly.coeffs())


def _pullback(q: MixedPolynomial, coords: list[tuple[sympy.Expr, sympy.Expr]], tol: float) -> sympy.Expr:
    lead = max(q.terms.values(), key=abs)
    terms = []
    for (k, m), c in q.terms.items():
        coef = _snap_complex(c / lead, tol)
        if coef == 0:
            continue
        factors = [coef]
        for (z, zb), a, b in zip(coords, k, m):
            factors.append(z**a * zb**b)
        terms.append(sympy.Mul(*factors))
    return sympy.Add(*terms)


def rational_parameters(params: Sequence[Param], count: int) -> Iterable[dict[sympy.Symbol, sympy.Expr]]:
    """第 p 个点上第 j 个参数取 s = ((p+1)(j+2) mod 127 − 63)/64；圆参数取单位圆有理点。"""
    for p in range(count):
        sub = {}
        for j, (sym, kind, _) in enumerate(params):
            s = sympy.Rational((p + 1) * (j + 2) % 127 - 63, EXACT_DENOMINATOR)
            sub[sym] = _circle_point(s) if kind == "circle" else s
        yield sub


def _is_exact_zero(value: sympy.Expr) -> bool:
    value = sympy.expand(value)
    if value == 0:
        return True
    return sympy.simplify(value) == 0


# ---------------------------------------------------------------- 样本集合


@dataclass(frozen=True, eq=False)
class SampledSet:
    """ℂⁿ 中的有限点样本，可附带生成描述符。"""

    points: np.ndarray
    descriptor: Descriptor | None = None
    on_sphere: bool = False
    sphere_tol: float | None = None

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=complex)
        if pts.ndim != 2:
            raise DimensionError("样本点必须是二维数组 (N, n)")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        tol = get_settings().sphere_tol if self.sphere_tol is None else self.sphere_tol
        object.__setattr__(self, "sphere_tol", tol)
        if self.on_sphere and pts.shape[0]:
            dev = np.abs(np.linalg.norm(pts, axis=1) - 1.0)
            if dev.max() > tol:
                raise PreconditionError(f"标记在球面上的样本偏离球面 {dev.max():.3e} > {tol:.1e}")

    @classmethod
    def from_points(cls, points: Any, n: int | None = None, *, on_sphere: bool = False) -> "SampledSet":
        arr = np.asarray(points, dtype=complex)
        if arr.size == 0:
            if n is None:
                raise DimensionError("空样本集需要显式给出维数 n")
            return cls(np.zeros((0, n), dtype=complex), on_sphere=on_sphere)
        return cls(as_points(arr, n), on_sphere=on_sphere)

    @classmethod
    def from_descriptor(cls, descriptor: Descriptor, seed: int | None = None) -> "SampledSet":
        pts = descriptor.sample(seed)
        norms = np.linalg.norm(pts, axis=1) if pts.size else np.zeros(0)
        tol = get_settings().sphere_tol
        on_sphere = bool(pts.size) and bool(np.all(np.abs(norms - 1.0) <= max(tol, 1e-12)))
        return cls(pts, descriptor=descriptor, on_sphere=on_sphere, sphere_tol=max(tol, 1e-12))

    @property
    def n(self) -> int:
        return int(self.points.shape[1])

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    def __len__(self) -> int:
        return self.size

    @property
    def is_empty(self) -> bool:
        return self.size == 0

    def union(self, other: "SampledSet") -> "SampledSet":
        if other.n != self.n:
            raise DimensionError(f"样本集维数不一致: {self.n} vs {other.n}")
        descriptor = None
        if self.descriptor is not None and other.descriptor is not None:
            descriptor = UnionSet((self.descriptor, other.descriptor))
        return SampledSet(
            np.vstack([self.points, other.points]),
            descriptor=descriptor,
            on_sphere=self.on_sphere and other.on_sphere,
            sphere_tol=max(self.sphere_tol, other.sphere_tol),
        )

    def restrict_ball(self, center: Any, radius: float) -> "SampledSet":
        c = np.asarray(center, dtype=complex).reshape(-1)
        mask = np.linalg.norm(self.points - c[None, :], axis=1) <= radius
        return SampledSet(self.points[mask], on_sphere=self.on_sphere, sphere_tol=self.sphere_tol)

    def flowed(self, lam: Lambda, t: complex) -> "SampledSet":
        """Φ(·, t) 作用后的样本（纯虚 t 时仍在球面上）。"""
        moved = flow_map_many(lam, self.points, t)
        stays = self.on_sphere and abs(complex(t).real) == 0.0
        return SampledSet(moved, on_sphere=stays, sphere_tol=self.sphere_tol)

    def radius_bound(self) -> float:
        return float(np.linalg.norm(self.points, axis=1).max()) if self.size else 0.0

    def to_json(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "on_sphere": self.on_sphere,
            "points": [[[z.real, z.imag] for z in p] for p in self.points],
            "descriptor": self.descriptor.to_json() if self.descriptor is not None else None,
        }


def sampled_set_from_json(data: Mapping[str, Any], seed: int | None = None) -> SampledSet:
    """读取 {"descriptor": {...}} 或 {"points": [...]}，也接受裸描述符。"""
    if "type" in data:
        return SampledSet.from_descriptor(descriptor_from_json(data), seed)
    if data.get("descriptor"):
        return SampledSet.from_descriptor(descriptor_from_json(data["descriptor"]), seed)
    n = data.get("n")
    pts = [[_complex_pair(z) for z in p] for p in data.get("points", [])]
    return SampledSet.from_points(pts, n, on_sphere=bool(data.get("on_sphere", False)))


# ---------------------------------------------------------------- 内置网格


def sphere_grid(n: int, count: int, seed: int | None = None) -> SampledSet:
    rng = _rng(seed)
    pts = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return SampledSet(pts, on_sphere=True)


def ball_grid(n: int, count: int, seed: int | None = None) -> SampledSet:
    """一半点在单位球面上，另一半在球内均匀分布。"""
    rng = _rng(seed)
    shell = count // 2
    pts = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    radii = np.ones(count)
    radii[shell:] = rng.random(count - shell) ** (1.0 / (2 * n))
    return SampledSet(pts * radii[:, None])


def line_grid(count: int, half_width: float = 1.0, n: int = 1) -> SampledSet:
    """实线段 [-w, w] 放在第一个坐标上，其余坐标为 0。"""
    pts = np.zeros((count, n), dtype=complex)
    pts[:, 0] = np.linspace(-half_width, half_width, count)
    return SampledSet(pts)


def circle_grid(count: int, radius: float = 1.0, center: complex = 0j) -> SampledSet:
    thetas = 2 * np.pi * np.arange(count) / count
    pts = complex(center) + radius * np.exp(1j * thetas)
    return SampledSet(pts.reshape(-1, 1))


def disc_grid(count: int, radius: float = 1.0, center: complex = 0j, rings: int = 8) -> SampledSet:
    """同心圆环上的点，含圆心。"""
    per_ring = max(4, count // rings)
    pts = [complex(center)]
    for j in range(1, rings + 1):
        r = radius * j / rings
        thetas = 2 * np.pi * np.arange(per_ring) / per_ring
        pts.extend(complex(center) + r * np.exp(1j * thetas))
    return SampledSet(np.array(pts, dtype=complex).reshape(-1, 1))


def torus_grid(count: int, n: int = 2, radius: float | None = None) -> SampledSet:
    """每个坐标圆取 count 个等距角；默认半径 1/√n（落在单位球面上）。"""
    r = 1.0 / math.sqrt(n) if radius is None else radius
    factor = CircleFamily(radii=(r,), frequencies=(1,), count=count)
    desc = ProductSet(tuple(factor for _ in range(n)))
    return SampledSet.from_descriptor(desc)


def parse_grid_spec(spec: str, n: int, seed: int | None = None) -> SampledSet:
    """解析 ``sphere:500``、``builtin:ball:2000`` 这类内置网格名称。"""
    text = spec.strip()
    if text.startswith("builtin:"):
        text = text[len("builtin:"):]
    name, _, arg = text.partition(":")
    try:
        count = int(arg) if arg else 200
    except ValueError as e:
        raise PreconditionError(f"网格规模无法解析: {spec!r}") from e
    if name == "sphere":
        return sphere_grid(n, count, seed)
    if name == "ball":
        return ball_grid(n, count, seed)
    if name == "line":
        return line_grid(count, n=n)
    if name == "circle":
        return circle_grid(count)
    if name == "disc":
        return disc_grid(count)
    if name == "torus":
        return torus_grid(count, n=n)
    raise PreconditionError(f"未知的内置网格: {spec!r}")


# ---------------------------------------------------------------- 有理球面点


def inverse_stereographic(u: Sequence[Fraction]) -> tuple[Fraction, ...]:
    """ℚ^{m} → S^{m} ∩ ℚ^{m+1}：(2u, |u|² − 1) / (|u|² + 1)。"""
    s = sum((x * x for x in u), Fraction(0))
    return tuple(2 * x / (s + 1) for x in u) + ((s - 1) / (s + 1),)


def rational_sphere_points(
    n: int,
    count: int,
    *,
    max_denominator: int = 64,
    center: Sequence[float] | None = None,
    spread: float = 1.0,
    seed: int | None = None,
) -> tuple[SampledSet, list[tuple[Fraction, ...]]]:
    """S^{2n−1} 上坐标全为有理数的点（Gauss 有理点），同时返回精确坐标。

    参数 u 在 center 附近、边长 2·spread 的方框里取分母不超过 max_denominator 的有理数。
    """
    rng = _rng(seed)
    dim = 2 * n - 1
    c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    exact: list[tuple[Fraction, ...]] = []
    seen: set[tuple[Fraction, ...]] = set()
    attempts = 0
    while len(exact) < count and attempts < 50 * count:
        attempts += 1
        den = int(rng.integers(1, max_denominator + 1))
        u = tuple(
            Fraction(int(round((c[i] + spread * (2 * rng.random() - 1)) * den)), den)
            for i in range(dim)
        )
        x = inverse_stereographic(u)
        if x in seen:
            continue
        seen.add(x)
        exact.append(x)
    pts = np.array(
        [[complex(float(x[2 * i]), float(x[2 * i + 1])) for i in range(n)] for x in exact],
        dtype=complex,
    )
    return SampledSet(pts.reshape(len(exact), n), on_sphere=True, sphere_tol=1e-12), exact


# ---------------------------------------------------------------- λ-圆性


def circular_closure(F: SampledSet, lam: Lambda, count: int = 16) -> SampledSet:
    """并入 Φ(z, iθ)，θ = 2πj/count，得到（近似）λ-圆集合。"""
    if F.n != lam.n:
        raise DimensionError(f"集合维数 {F.n} 与 λ 维数 {lam.n} 不一致")
    blocks = [flow_map_many(lam, F.points, 1j * 2 * np.pi * j / count) for j in range(count)]
    pts = np.vstack(blocks) if blocks else F.points
    return SampledSet(pts, on_sphere=F.on_sphere, sphere_tol=max(F.sphere_tol, 1e-12))


def _embed(points: np.ndarray) -> np.ndarray:
    return np.hstack([points.real, points.imag])


def is_lambda_circular(
    F: SampledSet, lam: Lambda, *, tol: float | None = None, angles: int = 8
) -> bool:
    """在样本上检查沿虚轴流的闭性：每个 Φ(x, iθ) 到样本的距离不超过 tol。

    tol 默认取最大最近邻距离的两倍。
    """
    if F.size < 2:
        return F.size == 0 or bool(np.allclose(F.points, 0))
    tree = cKDTree(_embed(F.points))
    if tol is None:
        dist, _ = tree.query(_embed(F.points), k=2)
        tol = 2.0 * float(dist[:, 1].max())
    for j in range(1, angles):
        moved = flow_map_many(lam, F.points, 1j * 2 * np.pi * j / angles)
        dist, _ = tree.query(_embed(moved), k=1)
        if float(dist.max()) > tol:
            logger.debug("λ-圆性检查失败: θ=2π·%d/%d 最大偏离 %.3e > %.3e", j, angles, dist.max(), tol)
            return False
    return True


__all__ = [
    "CircleFamily",
    "Descriptor",
    "ExplicitList",
    "ProductSet",
    "RealSlice",
    "SampledSet",
    "UnionSet",
    "ball_grid",
    "circle_grid",
    "circular_closure",
    "descriptor_from_json",
    "disc_grid",
    "inverse_stereographic",
    "is_lambda_circular",
    "line_grid",
    "parse_grid_spec",
    "rational_parameters",
    "rational_sphere_points",
    "sampled_set_from_json",
    "sphere_grid",
    "torus_grid",
    "vanishes_identically",
]
