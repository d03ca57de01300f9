"""
z 与 z̄ 的混合多项式、λ 型拟齐次分解、流映射与渐近展开分组。

系数是双精度复数；精确性只保存在多重指标和加权次数里。
所有求值都按 (k, m) 字典序逐项累加，保证结果可逐位复现。
"""

from __future__ import annotations

import logging
from dataclasses import InitVar, dataclass, field
from typing import Any, Iterable, Iterator, Mapping, Sequence

import numpy as np

from core.errors import DimensionError, PreconditionError
from core.weights import Lambda, MultiIndex, WeightedDegree, weighted_degree

logger = logging.getLogger(__name__)

Term = tuple[MultiIndex, MultiIndex]


def as_point(z: Any, n: int | None = None) -> np.ndarray:
    """把序列转成复数坐标向量，并检查维数。"""
    arr = np.asarray(z, dtype=complex).reshape(-1)
    if n is not None and arr.shape[0] != n:
        raise DimensionError(f"点的维数 {arr.shape[0]} 与期望的 {n} 不一致")
    return arr


def as_points(points: Any, n: int | None = None) -> np.ndarray:
    arr = np.asarray(points, dtype=complex)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if n is None or arr.shape[0] == n else arr.reshape(-1, 1)
    if n is not None and arr.shape[1] != n:
        raise DimensionError(f"样本点维数 {arr.shape[1]} 与期望的 {n} 不一致")
    return arr


def monomial_matrix(points: np.ndarray, basis: Sequence[Term]) -> np.ndarray:
    """返回 A[i, j] = x_i^{k_j} · conj(x_i)^{m_j}。"""
    pts = np.asarray(points, dtype=complex)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if not basis:
        return np.zeros((pts.shape[0], 0), dtype=complex)
    ks = np.array([k for k, _ in basis], dtype=int)
    ms = np.array([m for _, m in basis], dtype=int)
    z = pts[:, None, :]
    zc = np.conj(z)
    return np.prod(z ** ks[None, :, :] * zc ** ms[None, :, :], axis=2)


@dataclass(frozen=True, eq=False)
class MixedPolynomial:
    """有限支撑映射 (k, m) → 复系数，表示 Σ c · z^k · z̄^m。"""

    n: int
    terms: Mapping[Term, complex] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DimensionError("多项式维数必须为正")
        clean: dict[Term, complex] = {}
        for (k, m), c in self.terms.items():
            k = tuple(int(v) for v in k)
            m = tuple(int(v) for v in m)
            if len(k) != self.n or len(m) != self.n:
                raise DimensionError(f"多重指标长度与维数 {self.n} 不一致: {(k, m)}")
            if any(v < 0 for v in k + m):
                raise PreconditionError(f"多重指标必须非负: {(k, m)}")
            c = complex(c)
            if c != 0:
                clean[(k, m)] = clean.get((k, m), 0j) + c
        object.__setattr__(
            self, "terms", {key: clean[key] for key in sorted(clean) if clean[key] != 0}
        )

    # ---- 构造 ----

    @classmethod
    def zero(cls, n: int) -> "MixedPolynomial":
        return cls(n, {})

    @classmethod
    def constant(cls, n: int, c: complex = 1.0) -> "MixedPolynomial":
        return cls(n, {((0,) * n, (0,) * n): c})

    @classmethod
    def monomial(
        cls, k: Sequence[int], m: Sequence[int] | None = None, coeff: complex = 1.0
    ) -> "MixedPolynomial":
        k = tuple(k)
        m = tuple(m) if m is not None else (0,) * len(k)
        return cls(len(k), {(k, m): coeff})

    @classmethod
    def coordinate(cls, n: int, i: int, conj: bool = False) -> "MixedPolynomial":
        e = tuple(1 if j == i else 0 for j in range(n))
        zero = (0,) * n
        return cls(n, {(zero, e) if conj else (e, zero): 1.0})

    @classmethod
    def from_terms(cls, n: int, items: Iterable[tuple[Sequence[int], Sequence[int], complex]]) -> "MixedPolynomial":
        acc: dict[Term, complex] = {}
        for k, m, c in items:
            key = (tuple(k), tuple(m))
            acc[key] = acc.get(key, 0j) + complex(c)
        return cls(n, acc)

    @classmethod
    def from_vector(cls, n: int, basis: Sequence[Term], coeffs: Sequence[complex]) -> "MixedPolynomial":
        if len(basis) != len(coeffs):
            raise DimensionError("系数向量长度与基不一致")
        return cls.from_terms(n, ((k, m, c) for (k, m), c in zip(basis, coeffs)))

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "MixedPolynomial":
        n = int(data["n"])
        items = []
        for t in data.get("terms", []):
            m = t.get("m") or [0] * n
            items.append((t["k"], m, complex(float(t.get("re", 0.0)), float(t.get("im", 0.0)))))
        return cls.from_terms(n, items)

    def to_json(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "terms": [
                {"k": list(k), "m": list(m), "re": c.real, "im": c.imag}
                for (k, m), c in self.terms.items()
            ],
        }

    # ---- 基本属性 ----

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[Term, complex]]:
        return iter(self.terms.items())

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_holomorphic(self) -> bool:
        return all(not any(m) for (_, m) in self.terms)

    @property
    def degree(self) -> int:
        return max((sum(k) + sum(m) for (k, m) in self.terms), default=0)

    @property
    def coefficient_norm(self) -> float:
        return float(np.sqrt(sum(abs(c) ** 2 for c in self.terms.values())))

    def coefficient(self, k: Sequence[int], m: Sequence[int] | None = None) -> complex:
        m = tuple(m) if m is not None else (0,) * self.n
        return self.terms.get((tuple(k), m), 0j)

    def support(self) -> list[Term]:
        return list(self.terms)

    # ---- 代数运算 ----

    def _check_same_n(self, other: "MixedPolynomial") -> None:
        if other.n != self.n:
            raise DimensionError(f"多项式维数不一致: {self.n} vs {other.n}")

    def __add__(self, other: Any) -> "MixedPolynomial":
        if isinstance(other, (int, float, complex)):
            other = MixedPolynomial.constant(self.n, other)
        if not isinstance(other, MixedPolynomial):
            return NotImplemented
        self._check_same_n(other)
        acc = dict(self.terms)
        for key, c in other.terms.items():
            acc[key] = acc.get(key, 0j) + c
        return MixedPolynomial(self.n, acc)

    __radd__ = __add__

    def __neg__(self) -> "MixedPolynomial":
        return MixedPolynomial(self.n, {key: -c for key, c in self.terms.items()})

    def __sub__(self, other: Any) -> "MixedPolynomial":
        if isinstance(other, (int, float, complex)):
            other = MixedPolynomial.constant(self.n, other)
        if not isinstance(other, MixedPolynomial):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other: Any) -> "MixedPolynomial":
        if isinstance(other, (int, float, complex, np.number)):
            return MixedPolynomial(self.n, {key: c * complex(other) for key, c in self.terms.items()})
        if not isinstance(other, MixedPolynomial):
            return NotImplemented
        self._check_same_n(other)
        acc: dict[Term, complex] = {}
        for (k1, m1), c1 in self.terms.items():
            for (k2, m2), c2 in other.terms.items():
                key = (
                    tuple(a + b for a, b in zip(k1, k2)),
                    tuple(a + b for a, b in zip(m1, m2)),
                )
                acc[key] = acc.get(key, 0j) + c1 * c2
        return MixedPolynomial(self.n, acc)

    def __rmul__(self, other: Any) -> "MixedPolynomial":
        return self.__mul__(other)

    def __truediv__(self, scalar: Any) -> "MixedPolynomial":
        return self * (1.0 / complex(scalar))

    def __pow__(self, power: int) -> "MixedPolynomial":
        if int(power) < 0:
            raise PreconditionError("多项式幂次必须非负")
        result = MixedPolynomial.constant(self.n, 1.0)
        base = self
        p = int(power)
        while p:
            if p & 1:
                result = result * base
            base = base * base
            p >>= 1
        return result

    def conjugate(self) -> "MixedPolynomial":
        """返回 conj(q)：z^k z̄^m 的系数共轭后交换 k 与 m。"""
        return MixedPolynomial(
            self.n, {(m, k): c.conjugate() for (k, m), c in self.terms.items()}
        )

    def imag_part(self) -> "MixedPolynomial":
        """Im q = (q − conj q) / 2i，结果取值恒为实数。"""
        return (self - self.conjugate()) * (-0.5j)

    def normalized(self) -> "MixedPolynomial":
        """单位系数范数，且最大模系数为正实数。"""
        norm = self.coefficient_norm
        if norm == 0:
            return self
        lead = max(self.terms.values(), key=lambda c: (abs(c), c.real, c.imag))
        phase = abs(lead) / lead
        return self * (phase / norm)

    def as_vector(self, basis: Sequence[Term]) -> np.ndarray:
        return np.array([self.terms.get(key, 0j) for key in basis], dtype=complex)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MixedPolynomial):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.n, tuple(self.terms.items())))

    def __repr__(self) -> str:
        return f"MixedPolynomial(n={self.n}, terms={len(self.terms)})"

    # ---- 求值 ----

    def evaluate(self, z: Any) -> complex:
        pt = as_point(z, self.n)
        pc = np.conj(pt)
        total = 0j
        for (k, m), c in self.terms.items():
            term = complex(c)
            for i in range(self.n):
                if k[i]:
                    term *= complex(pt[i]) ** k[i]
                if m[i]:
                    term *= complex(pc[i]) ** m[i]
            total += term
        return total

    def __call__(self, z: Any) -> complex:
        return self.evaluate(z)

    def evaluate_many(self, points: Any) -> np.ndarray:
        pts = as_points(points, self.n)
        if not self.terms:
            return np.zeros(pts.shape[0], dtype=complex)
        basis = list(self.terms)
        return monomial_matrix(pts, basis) @ self.as_vector(basis)


class TaylorJet(MixedPolynomial):
    """原点处形式 Taylor 级数的有限截断，a_{km} 为系数。"""

    @classmethod
    def from_polynomial(cls, p: MixedPolynomial) -> "TaylorJet":
        return cls(p.n, dict(p.terms))


@dataclass(frozen=True)
class QHComponent:
    """λ 型拟齐次分量，双次数 (d1, d2)。"""

    poly: MixedPolynomial
    d1: WeightedDegree
    d2: WeightedDegree
    lam: Lambda
    verify: InitVar[bool] = True

    def __post_init__(self, verify: bool) -> None:
        if self.poly.n != self.lam.n:
            raise DimensionError(f"多项式维数 {self.poly.n} 与 λ 维数 {self.lam.n} 不一致")
        if not verify:
            return
        for k, m in self.poly.terms:
            if weighted_degree(self.lam, k) != self.d1 or weighted_degree(self.lam, m) != self.d2:
                raise PreconditionError(
                    f"单项式 {(k, m)} 的双次数与声明的 ({self.d1}, {self.d2}) 不符"
                )

    @property
    def bidegree(self) -> tuple[WeightedDegree, WeightedDegree]:
        return self.d1, self.d2

    @property
    def rho(self) -> WeightedDegree:
        return self.d1 + self.d2

    def evaluate(self, z: Any) -> complex:
        return self.poly.evaluate(z)

    def to_json(self) -> dict[str, Any]:
        return {"d1": self.d1.to_json(), "d2": self.d2.to_json(), "poly": self.poly.to_json()}


@dataclass(frozen=True)
class HoloQHPolynomial(QHComponent):
    """全纯拟齐次多项式：双次数 (ρ, 0)，不含 z̄。"""

    def __post_init__(self, verify: bool) -> None:
        super().__post_init__(verify)
        if not self.d2.is_zero or not self.poly.is_holomorphic:
            raise PreconditionError("全纯拟齐次多项式不能含 z̄")

    @classmethod
    def build(cls, poly: MixedPolynomial, lam: Lambda) -> "HoloQHPolynomial":
        """从单一 ρ 的全纯多项式构造，ρ 由第一个单项式推出。"""
        if poly.is_zero:
            raise PreconditionError("零多项式没有确定的次数")
        k, _ = next(iter(poly.terms))
        return cls(poly, weighted_degree(lam, k), lam.zero(), lam)


def flow_map(lam: Lambda, z: Any, t: complex) -> np.ndarray:
    """Φ(z, t) = (z₁e^{−λ₁t}, …, z_n e^{−λ_n t})。"""
    pt = as_point(z, lam.n)
    return pt * np.exp(-np.asarray(lam.approx, dtype=float) * complex(t))


def flow_map_many(lam: Lambda, points: Any, t: complex) -> np.ndarray:
    pts = as_points(points, lam.n)
    return pts * np.exp(-np.asarray(lam.approx, dtype=float) * complex(t))[None, :]


def evaluate(p: MixedPolynomial, z: Any) -> complex:
    return p.evaluate(z)


def bidegree_decompose(p: MixedPolynomial, lam: Lambda) -> list[QHComponent]:
    """按精确双次数 ((λ,k), (λ,m)) 划分 p 的各项，按双次数排序。"""
    if p.n != lam.n:
        raise DimensionError(f"多项式维数 {p.n} 与 λ 维数 {lam.n} 不一致")
    groups: dict[tuple[WeightedDegree, WeightedDegree], dict[Term, complex]] = {}
    for (k, m), c in p.terms.items():
        key = (weighted_degree(lam, k), weighted_degree(lam, m))
        groups.setdefault(key, {})[(k, m)] = c
    return [
        QHComponent(MixedPolynomial(p.n, groups[key]), key[0], key[1], lam, verify=False)
        for key in sorted(groups)
    ]


def reassemble(components: Iterable[QHComponent], n: int) -> MixedPolynomial:
    acc: dict[Term, complex] = {}
    for comp in components:
        for key, c in comp.poly.terms.items():
            acc[key] = acc.get(key, 0j) + c
    return MixedPolynomial(n, acc)


def flow_equivariance_residual(q: QHComponent, z: Any, t: complex) -> float:
    """|q(Φ(z,t)) − e^{−d₁t−d₂t̄} q(z)|。"""
    t = complex(t)
    moved = flow_map(q.lam, z, t)
    factor = np.exp(-q.d1.value * t - q.d2.value * t.conjugate())
    return float(abs(q.poly.evaluate(moved) - factor * q.poly.evaluate(z)))


def equivariance_tolerance(q: QHComponent, z: Any, t: complex, rel: float = 1e-9) -> float:
    """随 e^{(|d₁|+|d₂|)|Re t|} 放大的容差。"""
    scale = np.exp((abs(q.d1.value) + abs(q.d2.value)) * abs(complex(t).real))
    return float(rel * (1 + abs(q.poly.evaluate(z))) * scale)


@dataclass(frozen=True)
class AsymptoticRow:
    mu: WeightedDegree
    nu: WeightedDegree
    coeff: complex

    def to_json(self) -> dict[str, Any]:
        return {
            "mu": self.mu.to_json(),
            "nu": self.nu.to_json(),
            "re": self.coeff.real,
            "im": self.coeff.imag,
        }


@dataclass(frozen=True)
class AsymptoticBlock:
    rho: WeightedDegree
    rows: tuple[AsymptoticRow, ...]

    def to_json(self) -> dict[str, Any]:
        return {"rho": self.rho.to_json(), "rows": [r.to_json() for r in self.rows]}


def taylor_to_asymptotic(jet: MixedPolynomial, lam: Lambda, z: Any) -> list[AsymptoticBlock]:
    """把 a_{km} z^k z̄^m 按 ρ = (λ,k)+(λ,m) 分组，每行对应一个 (μ, ν)。"""
    pt = as_point(z, lam.n)
    rows: dict[tuple[WeightedDegree, WeightedDegree], complex] = {}
    for comp in bidegree_decompose(jet, lam):
        rows[(comp.d1, comp.d2)] = comp.poly.evaluate(pt)
    by_rho: dict[WeightedDegree, list[AsymptoticRow]] = {}
    for (mu, nu), value in sorted(rows.items(), key=lambda item: item[0]):
        by_rho.setdefault(mu + nu, []).append(AsymptoticRow(mu, nu, complex(value)))
    return [AsymptoticBlock(rho, tuple(by_rho[rho])) for rho in sorted(by_rho)]


def series_decompose(f: MixedPolynomial, lam: Lambda) -> list[HoloQHPolynomial]:
    """全纯多项式 f = Σ q_m，q_m 的双次数为 (ρ_m, 0)。"""
    if not f.is_holomorphic:
        raise PreconditionError("series_decompose 的输入不能含 z̄ 项")
    return [
        HoloQHPolynomial(comp.poly, comp.d1, comp.d2, lam, verify=False)
        for comp in bidegree_decompose(f, lam)
    ]


def bernstein_walsh_residual(q: MixedPolynomial, r: float, norm_k: float, z: Any) -> float:
    """|q(z)| − ‖q‖_K · max(1, ‖z‖/r)^{deg q}；‖q‖_K 是真上确界时非正。"""
    if not r > 0:
        raise PreconditionError(f"半径必须为正: {r}")
    if not q.is_holomorphic:
        raise PreconditionError("Bernstein–Walsh 不等式只适用于全纯多项式")
    pt = as_point(z, q.n)
    growth = max(1.0, float(np.linalg.norm(pt)) / r) ** q.degree
    return float(abs(q.evaluate(pt)) - norm_k * growth)


__all__ = [
    "AsymptoticBlock",
    "AsymptoticRow",
    "HoloQHPolynomial",
    "MixedPolynomial",
    "QHComponent",
    "TaylorJet",
    "Term",
    "as_point",
    "as_points",
    "bernstein_walsh_residual",
    "bidegree_decompose",
    "equivariance_tolerance",
    "evaluate",
    "flow_equivariance_residual",
    "flow_map",
    "flow_map_many",
    "monomial_matrix",
    "reassemble",
    "series_decompose",
    "taylor_to_asymptotic",
]
