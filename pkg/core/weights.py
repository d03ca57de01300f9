"""
权重向量与加权次数的精确算术。

λ 的每个分量是 ℚ-向量空间 span(1, τ₁, …, τ_r) 中的元素，τ_i 由用户声明为
ℚ-线性无关的正无理数，只提供浮点近似用于排序和数值计算。相等判断永远只看
有理坐标。
"""

from __future__ import annotations

import itertools
import logging
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import total_ordering
from typing import Any, Iterable, Literal, Mapping, Sequence, Union

import sympy

from config import get_settings
from core.errors import DimensionError, PreconditionError

logger = logging.getLogger(__name__)

MultiIndex = tuple[int, ...]
Scalar = Union[int, Fraction]

_TERM_RE = re.compile(
    r"^(?P<coef>\d+(?:/\d+)?)?\s*(?:\*?\s*(?P<name>[A-Za-z_][A-Za-z0-9_]*))?$"
)


def to_fraction(value: Any) -> Fraction:
    """把 int / "p/q" / [p, q] / Fraction 转成 Fraction。浮点数不接受。"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise PreconditionError(f"无法解析为有理数: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return Fraction(int(value[0]), int(value[1]))
    raise PreconditionError(f"无法解析为有理数: {value!r}")


def fraction_pair(value: Fraction) -> list[int]:
    return [value.numerator, value.denominator]


@dataclass(frozen=True)
class Basis:
    """声明的无理基 τ₁..τ_r（名称 + 浮点近似）。"""

    names: tuple[str, ...] = ()
    approx: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if len(self.names) != len(self.approx):
            raise DimensionError("无理基名称与近似值个数不一致")
        if len(set(self.names)) != len(self.names):
            raise PreconditionError(f"无理基名称重复: {self.names}")
        for name, value in zip(self.names, self.approx):
            if not value > 0:
                raise PreconditionError(f"无理基元素必须为正: {name}={value}")

    @property
    def r(self) -> int:
        return len(self.names)

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, float] | None) -> "Basis":
        if not mapping:
            return cls()
        names = tuple(mapping.keys())
        return cls(names=names, approx=tuple(float(mapping[k]) for k in names))


RATIONAL_BASIS = Basis()


@total_ordering
@dataclass(frozen=True, eq=False)
class WeightedDegree:
    """ℚ-坐标 (有理部分, τ₁ 系数, …, τ_r 系数) 表示的精确加权次数。

    排序：先按浮点值，浮点值相同再按坐标字典序；相等只看坐标。
    """

    coords: tuple[Fraction, ...]
    basis: Basis = field(default=RATIONAL_BASIS)

    def __post_init__(self) -> None:
        coords = tuple(to_fraction(c) for c in self.coords)
        if len(coords) != self.basis.r + 1:
            raise DimensionError(
                f"坐标个数 {len(coords)} 与无理基维数 {self.basis.r} 不匹配"
            )
        object.__setattr__(self, "coords", coords)

    @classmethod
    def constant(cls, value: Scalar, basis: Basis = RATIONAL_BASIS) -> "WeightedDegree":
        return cls((to_fraction(value),) + (Fraction(0),) * basis.r, basis)

    @classmethod
    def zero(cls, basis: Basis = RATIONAL_BASIS) -> "WeightedDegree":
        return cls.constant(0, basis)

    @property
    def value(self) -> float:
        total = float(self.coords[0])
        for c, a in zip(self.coords[1:], self.basis.approx):
            if c:
                total += float(c) * a
        return total

    @property
    def is_rational(self) -> bool:
        return all(c == 0 for c in self.coords[1:])

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)

    def as_fraction(self) -> Fraction:
        if not self.is_rational:
            raise PreconditionError(f"{self} 不是有理数")
        return self.coords[0]

    def _coerce(self, other: Any) -> "WeightedDegree | None":
        if isinstance(other, WeightedDegree):
            if other.basis.names == self.basis.names:
                return other
            if other.is_rational:
                return WeightedDegree.constant(other.coords[0], self.basis)
            if self.is_rational:
                return None
            raise PreconditionError("加权次数属于不同的无理基")
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return WeightedDegree.constant(other, self.basis)
        return None

    def __eq__(self, other: object) -> bool:
        other_wd = self._coerce(other)
        if other_wd is None:
            if isinstance(other, WeightedDegree):
                return False
            return NotImplemented
        return self.coords == other_wd.coords

    def __hash__(self) -> int:
        if self.is_rational:
            return hash(self.coords[0])
        return hash(self.coords)

    def __lt__(self, other: object) -> bool:
        if (
            isinstance(other, WeightedDegree)
            and self.basis.names != other.basis.names
            and self.is_rational
            and not other.is_rational
        ):
            # 有理值对另一组基下的元素：交给对方做转换
            return not (other == self or other < self)
        other_wd = self._coerce(other)
        if other_wd is None:
            return NotImplemented
        if self.coords == other_wd.coords:
            return False
        return (self.value, self.coords) < (other_wd.value, other_wd.coords)

    def __add__(self, other: object) -> "WeightedDegree":
        other_wd = self._coerce(other)
        if other_wd is None:
            return NotImplemented
        return WeightedDegree(tuple(a + b for a, b in zip(self.coords, other_wd.coords)), self.basis)

    __radd__ = __add__

    def __sub__(self, other: object) -> "WeightedDegree":
        other_wd = self._coerce(other)
        if other_wd is None:
            return NotImplemented
        return WeightedDegree(tuple(a - b for a, b in zip(self.coords, other_wd.coords)), self.basis)

    def __mul__(self, scalar: object) -> "WeightedDegree":
        if isinstance(scalar, bool) or not isinstance(scalar, (int, Fraction)):
            return NotImplemented
        return WeightedDegree(tuple(c * scalar for c in self.coords), self.basis)

    __rmul__ = __mul__

    def __neg__(self) -> "WeightedDegree":
        return self * -1

    def __str__(self) -> str:
        parts: list[str] = []
        if self.coords[0] or self.is_zero:
            parts.append(str(self.coords[0]))
        for c, name in zip(self.coords[1:], self.basis.names):
            if not c:
                continue
            parts.append(name if c == 1 else f"{c}*{name}")
        return "+".join(parts).replace("+-", "-")

    def __repr__(self) -> str:
        return f"WeightedDegree({self})"

    def to_json(self) -> dict[str, Any]:
        return {"approx": self.value, "coords": [fraction_pair(c) for c in self.coords]}


def _parse_exact(text: str, basis: Basis) -> tuple[Fraction, ...]:
    """解析 "2+3*tau"、"1/2*sqrt2"、"sqrt3" 这类 ℚ-线性组合。"""
    coords = [Fraction(0)] * (basis.r + 1)
    cleaned = text.replace(" ", "")
    if not cleaned:
        raise PreconditionError("空的权重表达式")
    for sign, token in re.findall(r"([+-]?)([^+-]+)", cleaned):
        match = _TERM_RE.match(token)
        if not match or (match.group("coef") is None and match.group("name") is None):
            raise PreconditionError(f"无法解析权重项: {token!r}")
        coef = Fraction(match.group("coef")) if match.group("coef") else Fraction(1)
        if sign == "-":
            coef = -coef
        name = match.group("name")
        if name is None:
            coords[0] += coef
        elif name in basis.names:
            coords[basis.names.index(name) + 1] += coef
        else:
            raise PreconditionError(f"未声明的无理基元素: {name}")
    return tuple(coords)


@dataclass(frozen=True)
class Lambda:
    """权重向量 λ，λ₁ = 1，其余分量为正。"""

    entries: tuple[WeightedDegree, ...]
    basis: Basis = field(default=RATIONAL_BASIS)

    def __post_init__(self) -> None:
        if not self.entries:
            raise DimensionError("λ 至少需要一个分量")
        for e in self.entries:
            if e.basis.names != self.basis.names:
                raise PreconditionError("λ 分量与声明的无理基不一致")
        if self.entries[0] != WeightedDegree.constant(1, self.basis):
            raise PreconditionError(f"λ₁ 必须精确等于 1，实际为 {self.entries[0]}")
        for i, e in enumerate(self.entries):
            if not e.value > 0:
                raise PreconditionError(f"λ_{i + 1} 必须为正，实际为 {e}")

    @classmethod
    def rational(cls, *values: Any) -> "Lambda":
        return cls(tuple(WeightedDegree.constant(to_fraction(v)) for v in values))

    @classmethod
    def parse(cls, items: Sequence[Any], basis: Mapping[str, float] | None = None) -> "Lambda":
        """从字符串/有理数构造，例如 ``Lambda.parse(["1", "tau"], {"tau": 2 ** 0.5})``。"""
        b = Basis.from_mapping(basis)
        entries = []
        for item in items:
            if isinstance(item, str):
                entries.append(WeightedDegree(_parse_exact(item, b), b))
            else:
                entries.append(WeightedDegree.constant(to_fraction(item), b))
        return cls(tuple(entries), b)

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "Lambda":
        basis = Basis(
            names=tuple(str(item["name"]) for item in data.get("irrational_basis", [])),
            approx=tuple(float(item["approx"]) for item in data.get("irrational_basis", [])),
        )
        rational = [to_fraction(v) for v in data["rational"]]
        n = int(data.get("n", len(rational)))
        if len(rational) != n:
            raise DimensionError(f"rational 长度 {len(rational)} 与 n={n} 不一致")
        coords = data.get("coords") or [[0] * basis.r for _ in range(n)]
        if len(coords) != n:
            raise DimensionError(f"coords 长度 {len(coords)} 与 n={n} 不一致")
        entries = []
        for q, row in zip(rational, coords):
            row = [to_fraction(c) for c in row]
            if len(row) != basis.r:
                raise DimensionError("coords 每行长度必须等于无理基个数")
            entries.append(WeightedDegree((q, *row), basis))
        return cls(tuple(entries), basis)

    def to_json(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "rational": [fraction_pair(e.coords[0]) for e in self.entries],
            "irrational_basis": [
                {"name": name, "approx": a} for name, a in zip(self.basis.names, self.basis.approx)
            ],
            "coords": [[fraction_pair(c) for c in e.coords[1:]] for e in self.entries],
        }

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def approx(self) -> tuple[float, ...]:
        return tuple(e.value for e in self.entries)

    @property
    def min_weight(self) -> float:
        return min(self.approx)

    @property
    def max_weight(self) -> float:
        return max(self.approx)

    @property
    def exact_min(self) -> WeightedDegree:
        return min(self.entries)

    @property
    def exact_max(self) -> WeightedDegree:
        return max(self.entries)

    @property
    def is_rational(self) -> bool:
        return all(e.is_rational for e in self.entries)

    @property
    def is_integral(self) -> bool:
        return self.is_rational and all(e.coords[0].denominator == 1 for e in self.entries)

    def degree(self, value: Any) -> WeightedDegree:
        """把 int / Fraction / 字符串 / WeightedDegree 统一成本基下的加权次数。"""
        if isinstance(value, WeightedDegree):
            return value if value.basis.names == self.basis.names else WeightedDegree.constant(
                value.as_fraction(), self.basis
            )
        if isinstance(value, str):
            return WeightedDegree(_parse_exact(value, self.basis), self.basis)
        if isinstance(value, float):
            frac = Fraction(value).limit_denominator(10**6)
            return WeightedDegree.constant(frac, self.basis)
        return WeightedDegree.constant(to_fraction(value), self.basis)

    def zero(self) -> WeightedDegree:
        return WeightedDegree.zero(self.basis)


def weighted_degree(lam: Lambda, k: Sequence[int]) -> WeightedDegree:
    """(λ, k) = Σ λ_i k_i，精确计算。"""
    if len(k) != lam.n:
        raise DimensionError(f"多重指标长度 {len(k)} 与 λ 维数 {lam.n} 不一致")
    if any(int(ki) < 0 for ki in k):
        raise PreconditionError(f"多重指标必须非负: {tuple(k)}")
    total = lam.zero()
    for ki, e in zip(k, lam.entries):
        if ki:
            total = total + e * int(ki)
    return total


@dataclass(frozen=True)
class RhoEntry:
    rho: WeightedDegree
    multiindices: tuple[MultiIndex, ...]

    def to_json(self) -> dict[str, Any]:
        return {
            "rho_approx": self.rho.value,
            "rho_coords": [fraction_pair(c) for c in self.rho.coords],
            "multiindices": [list(k) for k in self.multiindices],
        }


@dataclass(frozen=True)
class RhoSequence:
    """ρ₀ = 0 < ρ₁ < … ≤ cap，以及每个值对应的全部多重指标。"""

    lam: Lambda
    cap: WeightedDegree
    entries: tuple[RhoEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def values(self) -> list[WeightedDegree]:
        return [e.rho for e in self.entries]

    def multiindices_for(self, rho: WeightedDegree) -> tuple[MultiIndex, ...]:
        for e in self.entries:
            if e.rho == rho:
                return e.multiindices
        return ()

    def to_json(self) -> list[dict[str, Any]]:
        return [e.to_json() for e in self.entries]


def _bounded_indices(approx: Sequence[float], cap_value: float) -> Iterable[MultiIndex]:
    """枚举 Σ λ_i k_i ≤ cap（浮点略放宽）的全部 k，之后再做精确过滤。"""
    slack = 1e-9 * max(1.0, cap_value)
    n = len(approx)

    def rec(i: int, budget: float, prefix: list[int]) -> Iterable[MultiIndex]:
        if i == n:
            yield tuple(prefix)
            return
        top = int(math.floor((budget + slack) / approx[i]))
        for ki in range(max(top, 0) + 1):
            prefix.append(ki)
            yield from rec(i + 1, budget - ki * approx[i], prefix)
            prefix.pop()

    yield from rec(0, cap_value, [])


def enumerate_rho(lam: Lambda, cap: Any) -> RhoSequence:
    """枚举所有 (λ,k) ≤ cap 的值，按 ρ 递增分组。每个 k_i ≤ cap/λ_i。"""
    cap_wd = lam.degree(cap)
    if cap_wd < 0:
        raise PreconditionError(f"cap 不能为负: {cap_wd}")
    groups: dict[WeightedDegree, list[MultiIndex]] = {}
    for k in _bounded_indices(lam.approx, cap_wd.value):
        rho = weighted_degree(lam, k)
        if rho <= cap_wd:
            groups.setdefault(rho, []).append(k)
    entries = tuple(
        RhoEntry(rho=rho, multiindices=tuple(sorted(groups[rho]))) for rho in sorted(groups)
    )
    logger.debug("ρ 序列: λ=%s cap=%s 共 %d 个值", lam.approx, cap_wd, len(entries))
    return RhoSequence(lam=lam, cap=cap_wd, entries=entries)


def degree_bracket_ok(lam: Lambda, rho: WeightedDegree, deg: int) -> bool:
    """deg·min(λ) ≤ ρ ≤ deg·max(λ)；有理 λ 时精确判断。"""
    lo = lam.exact_min * int(deg)
    hi = lam.exact_max * int(deg)
    if lam.is_rational and rho.is_rational:
        return lo.coords[0] <= rho.coords[0] <= hi.coords[0]
    tol = 1e-12 * max(1.0, abs(hi.value))
    return lo.value - tol <= rho.value <= hi.value + tol


@dataclass(frozen=True)
class CountBelow:
    count: int
    bound: int

    def to_json(self) -> dict[str, int]:
        return {"count": self.count, "bound": self.bound}


def count_below(lam: Lambda, j: int) -> CountBelow:
    """#{k : (λ,k) ≤ j} 以及增长上界 Π(j·m_k + j + 1)，m_k = ⌊1/λ_k⌋。"""
    j = int(j)
    if j < 1:
        raise PreconditionError(f"j 必须为正整数: {j}")
    count = sum(len(e.multiindices) for e in enumerate_rho(lam, j))
    bound = 1
    for e in lam.entries:
        if e.is_rational:
            m1 = math.floor(1 / e.coords[0])
        else:
            m1 = math.floor(1.0 / e.value)
        bound *= j * m1 + j + 1
    return CountBelow(count=count, bound=bound)


@dataclass(frozen=True)
class DependenceVerdict:
    """ℤ-相关性判定。Dependent 时 Σ α_i λ_i = Σ β_j λ_j = γ。"""

    dependent: bool
    alpha: tuple[int, ...] = ()
    beta: tuple[int, ...] = ()
    gamma: WeightedDegree | None = None
    permutation: tuple[int, ...] = ()

    @property
    def group1(self) -> tuple[int, ...]:
        return tuple(i for i, a in enumerate(self.alpha) if a)

    @property
    def group2(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.beta) if b)

    def to_json(self) -> dict[str, Any]:
        if not self.dependent:
            return {"verdict": "Independent"}
        return {
            "verdict": "Dependent",
            "alpha": list(self.alpha),
            "beta": list(self.beta),
            "gamma": self.gamma.to_json() if self.gamma is not None else None,
            "permutation": list(self.permutation),
        }


def _integer_relation(vec: Sequence[sympy.Rational]) -> tuple[int, ...]:
    den = sympy.ilcm(*[sympy.Rational(v).q for v in vec]) if vec else 1
    ints = [int(sympy.Rational(v) * den) for v in vec]
    g = 0
    for v in ints:
        g = math.gcd(g, abs(v))
    ints = [v // g for v in ints] if g else ints
    first = next((v for v in ints if v), 0)
    if first < 0:
        ints = [-v for v in ints]
    return tuple(ints)


def is_z_dependent(lam: Lambda) -> DependenceVerdict:
    """在 λ 的 ℚ-坐标上做整数线性代数，判定 λ 是否 ℤ-线性相关。"""
    if lam.n < 2:
        return DependenceVerdict(dependent=False)
    matrix = sympy.Matrix(
        [[sympy.Rational(e.coords[row].numerator, e.coords[row].denominator) for e in lam.entries]
         for row in range(lam.basis.r + 1)]
    )
    null = matrix.nullspace()
    if not null:
        return DependenceVerdict(dependent=False)

    candidates = [list(v) for v in null]
    # 两两组合，尽量找到 γ 更小的关系
    for a, b in itertools.combinations(null, 2):
        for s in (1, -1):
            combo = list(a + s * b)
            if any(c != 0 for c in combo):
                candidates.append(combo)

    best: tuple[float, tuple[int, ...]] | None = None
    for vec in candidates:
        rel = _integer_relation(vec)
        alpha = tuple(max(v, 0) for v in rel)
        gamma = weighted_degree(lam, alpha)
        key = (gamma.value, rel)
        if best is None or key < best:
            best = key
    assert best is not None
    rel = best[1]
    alpha = tuple(max(v, 0) for v in rel)
    beta = tuple(max(-v, 0) for v in rel)
    gamma = weighted_degree(lam, alpha)
    if gamma != weighted_degree(lam, beta):
        raise AssertionError("整数关系两侧加权次数不相等")
    g1 = [i for i, a in enumerate(alpha) if a]
    g2 = [i for i, b in enumerate(beta) if b]
    rest = [i for i in range(lam.n) if i not in g1 and i not in g2]
    return DependenceVerdict(
        dependent=True,
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        permutation=tuple(g1 + g2 + rest),
    )


@dataclass(frozen=True)
class ConvergenceVerdict:
    kind: Literal["Converges", "Diverges", "Inconclusive"]
    r_hat: float
    window: int

    def to_json(self) -> dict[str, Any]:
        return {"verdict": self.kind, "r_hat": self.r_hat, "window": self.window}


def _rho_value(rho: Any) -> float:
    return rho.value if isinstance(rho, WeightedDegree) else float(rho)


def root_test(
    terms: Sequence[tuple[Any, complex]],
    *,
    window: int | None = None,
    delta: float | None = None,
) -> ConvergenceVerdict:
    """尾部窗口内 max |a_j|^{1/ρ_j} 的根判别法。ρ_j = 0 的项不参与。"""
    if not terms:
        raise PreconditionError("root_test 需要非空的项序列")
    if delta is None:
        delta = get_settings().root_test_delta
    rhos = [rho for rho, _ in terms]
    for prev, cur in zip(rhos, rhos[1:]):
        if not prev < cur:
            raise PreconditionError(f"ρ 必须严格递增: {prev} !< {cur}")

    usable = [(_rho_value(rho), complex(a)) for rho, a in terms if _rho_value(rho) > 0]
    if not usable:
        return ConvergenceVerdict(kind="Converges", r_hat=0.0, window=0)
    w = window if window is not None else max(1, len(terms) // 2)
    w = max(1, min(w, len(usable)))
    r_hat = 0.0
    for rho, a in usable[-w:]:
        mag = abs(a)
        if mag > 0:
            r_hat = max(r_hat, mag ** (1.0 / rho))
    if r_hat < 1 - delta:
        kind = "Converges"
    elif r_hat > 1 + delta:
        kind = "Diverges"
    else:
        kind = "Inconclusive"
    return ConvergenceVerdict(kind=kind, r_hat=r_hat, window=w)


__all__ = [
    "Basis",
    "ConvergenceVerdict",
    "CountBelow",
    "DependenceVerdict",
    "Lambda",
    "MultiIndex",
    "RhoEntry",
    "RhoSequence",
    "WeightedDegree",
    "count_below",
    "degree_bracket_ok",
    "enumerate_rho",
    "is_z_dependent",
    "root_test",
    "to_fraction",
    "weighted_degree",
]
