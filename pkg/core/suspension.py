"""
悬挂 S_0(F)、λ-方向集、消没线性方程组与稀疏性扫描。

稀疏性只在样本上判定；若 F 带符号描述符，见证多项式会在参数化上
再做一次精确复核（见 core.sets.vanishes_identically）。
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Literal, Sequence

import numpy as np
from scipy import linalg

from config import get_settings
from core.errors import DimensionError, PreconditionError
from core.qhpoly import (
    MixedPolynomial,
    Term,
    as_point,
    bidegree_decompose,
    flow_map_many,
    monomial_matrix,
)
from core.sets import SampledSet, vanishes_identically
from core.weights import (
    DependenceVerdict,
    Lambda,
    RhoSequence,
    WeightedDegree,
    enumerate_rho,
    is_z_dependent,
)

logger = logging.getLogger(__name__)

DEFAULT_RE_GRID: tuple[float, ...] = tuple(2.0**e for e in range(-4, 4))
DEFAULT_IM_COUNT = 16
ZERO_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Suspension:
    """F 与 λ 配对；叶上的样本按 t 网格 Φ(z, t) 按需生成，Re t > 0。"""

    lam: Lambda
    F: SampledSet
    re_grid: tuple[float, ...] = DEFAULT_RE_GRID
    im_count: int = DEFAULT_IM_COUNT

    def __post_init__(self) -> None:
        if self.F.n != self.lam.n:
            raise DimensionError(f"集合维数 {self.F.n} 与 λ 维数 {self.lam.n} 不一致")
        if not self.re_grid or min(self.re_grid) <= 0:
            raise PreconditionError("叶采样要求 Re t > 0")
        if self.im_count < 1:
            raise PreconditionError("im_count 至少为 1")

    def t_grid(self) -> np.ndarray:
        ims = 2 * np.pi * np.arange(self.im_count) / self.im_count
        return np.array([re + 1j * im for re in self.re_grid for im in ims], dtype=complex)

    def leaf_points(self, z: Any) -> np.ndarray:
        pt = as_point(z, self.lam.n)
        scales = np.exp(-np.outer(self.t_grid(), np.asarray(self.lam.approx, dtype=float)))
        return pt[None, :] * scales

    def samples(self) -> SampledSet:
        if self.F.is_empty:
            return SampledSet(np.zeros((0, self.lam.n), dtype=complex))
        blocks = [flow_map_many(self.lam, self.F.points, t) for t in self.t_grid()]
        return SampledSet(np.vstack(blocks))

    def dominant_samples(self, *, limit: bool = False) -> SampledSet:
        """Φ(z, min Re t)，z ∈ F；limit=True 时取 Re t → 0⁺ 的极限，即 F 本身。

        对全纯拟齐次 q 有 |q(Φ(z,t))| = e^{−ρ Re t}|q(z)|，整片叶上的上确界是 Re t → 0⁺ 的极限，
        取 min Re t 会把上确界压低 e^{−ρ min Re t} 倍。
        """
        re_t = 0.0 if limit else min(self.re_grid)
        return SampledSet(flow_map_many(self.lam, self.F.points, re_t))


# ---------------------------------------------------------------- 方向集


@dataclass(frozen=True, eq=False)
class DirectionSet:
    """F′_{λ,1} 与 F′_{λ,2}，以及每个像点对应的源点下标。"""

    branch1: np.ndarray
    branch2: np.ndarray
    provenance1: tuple[int, ...]
    provenance2: tuple[int, ...]

    @property
    def dim(self) -> int:
        return int(self.branch1.shape[1])

    def points(self) -> np.ndarray:
        return np.vstack([self.branch1, self.branch2])

    def as_sampled_set(self) -> SampledSet:
        return SampledSet(self.points())

    def spread(self) -> float:
        pts = self.points()
        if pts.shape[0] == 0:
            return 0.0
        return float(np.linalg.norm(pts - pts[0][None, :], axis=1).max())

    def is_single_point(self, tol: float = 1e-9) -> bool:
        return self.points().shape[0] > 0 and self.spread() <= tol

    def to_json(self) -> dict[str, Any]:
        def rows(arr: np.ndarray) -> list:
            return [[[z.real, z.imag] for z in p] for p in arr]

        return {
            "branch1": rows(self.branch1),
            "branch2": rows(self.branch2),
            "provenance": [{"source": i, "branch": 1} for i in self.provenance1]
            + [{"source": i, "branch": 2} for i in self.provenance2],
        }


def _log_branch(z1: complex, branch: int) -> complex:
    if branch == 1:
        return complex(np.log(z1))
    arg = float(np.angle(z1)) % (2 * np.pi)
    return complex(np.log(abs(z1)), arg)


def _on_cut(z1: complex, branch: int, tol: float) -> bool:
    if abs(z1.imag) > tol:
        return False
    return z1.real <= 0 if branch == 1 else z1.real >= 0


def direction_set(F: SampledSet, lam: Lambda, *, cut_tol: float = ZERO_TOL) -> DirectionSet:
    """(z₂/z₁^{λ₂}, …, z_n/z₁^{λ_n})，z₁^{λ_k} = exp(λ_k · Log_i z₁)。

    Log₁ 为主值（割线为非正实轴），Log₂ 的辐角取 (0, 2π)（割线为非负实轴）。
    """
    if F.n != lam.n:
        raise DimensionError(f"集合维数 {F.n} 与 λ 维数 {lam.n} 不一致")
    if lam.n < 2:
        raise PreconditionError("n = 1 时方向集没有定义")
    weights = np.asarray(lam.approx[1:], dtype=float)
    out: dict[int, list[np.ndarray]] = {1: [], 2: []}
    prov: dict[int, list[int]] = {1: [], 2: []}
    for idx, p in enumerate(F.points):
        z1 = complex(p[0])
        if abs(z1) <= ZERO_TOL:
            continue
        for branch in (1, 2):
            if _on_cut(z1, branch, cut_tol):
                continue
            log = _log_branch(z1, branch)
            out[branch].append(p[1:] / np.exp(weights * log))
            prov[branch].append(idx)
    dim = lam.n - 1

    def stack(rows: list[np.ndarray]) -> np.ndarray:
        return np.array(rows, dtype=complex).reshape(len(rows), dim)

    return DirectionSet(
        branch1=stack(out[1]),
        branch2=stack(out[2]),
        provenance1=tuple(prov[1]),
        provenance2=tuple(prov[2]),
    )


# ---------------------------------------------------------------- 消没方程组


def bidegree_basis(seq: RhoSequence, d1: WeightedDegree, d2: WeightedDegree) -> list[Term]:
    """双次数 (d1, d2) 的完整单项式基 z^k z̄^m。"""
    ks = seq.multiindices_for(d1)
    ms = seq.multiindices_for(d2)
    return [(k, m) for k in ks for m in ms]


@dataclass(frozen=True, eq=False)
class VanishingSystem:
    lam: Lambda
    d1: WeightedDegree
    d2: WeightedDegree
    basis: tuple[Term, ...]
    matrix: np.ndarray
    singular_values: np.ndarray
    nullspace: np.ndarray
    status: Literal["ok", "empty_basis"] = "ok"

    @property
    def null_dim(self) -> int:
        return int(self.nullspace.shape[1])

    def polynomial(self, vector: np.ndarray) -> MixedPolynomial:
        return MixedPolynomial.from_vector(self.lam.n, self.basis, vector)

    def witness(self) -> MixedPolynomial | None:
        """零空间中奇异值最小的方向，单位系数范数。"""
        if self.null_dim == 0:
            return None
        return self.polynomial(self.nullspace[:, 0]).normalized()

    def residual(self, q: MixedPolynomial) -> float:
        if self.matrix.shape[0] == 0:
            return 0.0
        return float(np.abs(self.matrix @ q.as_vector(self.basis)).max())


def _system(
    points: np.ndarray,
    lam: Lambda,
    d1: WeightedDegree,
    d2: WeightedDegree,
    basis: list[Term],
    null_threshold: float,
) -> VanishingSystem:
    if not basis:
        empty = np.zeros((points.shape[0], 0), dtype=complex)
        return VanishingSystem(
            lam, d1, d2, (), empty, np.zeros(0), np.zeros((0, 0), dtype=complex), status="empty_basis"
        )
    A = monomial_matrix(points, basis)
    B = len(basis)
    if A.shape[0] == 0:
        return VanishingSystem(lam, d1, d2, tuple(basis), A, np.zeros(0), np.eye(B, dtype=complex))
    _, s, vh = linalg.svd(A, full_matrices=True)
    smax = float(s.max()) if s.size else 0.0
    sigma = np.zeros(B)
    sigma[: s.size] = s
    null_idx = [j for j in range(B) if sigma[j] <= null_threshold * smax]
    # 奇异值最小的方向排在最前
    null_idx.sort(key=lambda j: (sigma[j], -j))
    null = vh[null_idx].conj().T if null_idx else np.zeros((B, 0), dtype=complex)
    return VanishingSystem(lam, d1, d2, tuple(basis), A, s, null)


def vanishing_system(
    F: SampledSet,
    lam: Lambda,
    d1: Any,
    d2: Any,
    *,
    null_threshold: float | None = None,
) -> VanishingSystem:
    """在 F 的样本上建立 {q(z) = 0} 并用 SVD 求数值零空间（σ ≤ 阈值·σ_max）。"""
    if F.n != lam.n:
        raise DimensionError(f"集合维数 {F.n} 与 λ 维数 {lam.n} 不一致")
    d1 = lam.degree(d1)
    d2 = lam.degree(d2)
    if d2.is_zero:
        raise PreconditionError("消没方程组要求 d2 ≠ 0")
    if null_threshold is None:
        null_threshold = get_settings().null_threshold
    seq = enumerate_rho(lam, max(d1, d2))
    basis = bidegree_basis(seq, d1, d2)
    system = _system(F.points, lam, d1, d2, basis, null_threshold)
    if system.status == "empty_basis":
        logger.info("双次数 (%s, %s) 没有单项式", d1, d2)
    return system


@dataclass(frozen=True, eq=False)
class BidegreeRecord:
    d1: WeightedDegree
    d2: WeightedDegree
    basis_size: int
    null_dim: int
    min_singular: float | None
    witness: MixedPolynomial | None = None
    residual: float | None = None
    symbolic: bool | None = None

    def to_json(self) -> dict[str, Any]:
        return {
            "d1": self.d1.to_json(),
            "d2": self.d2.to_json(),
            "basis_size": self.basis_size,
            "null_dim": self.null_dim,
            "min_singular": self.min_singular,
            "witness": self.witness.to_json() if self.witness is not None else None,
            "residual": self.residual,
            "symbolic": self.symbolic,
        }


@dataclass(frozen=True, eq=False)
class ScanReport:
    """verdict 只对 cap 以内的双次数成立：NoObstructionUpToCap 并不证明非稀疏。"""

    lam: Lambda
    cap: WeightedDegree
    sample_count: int
    records: tuple[BidegreeRecord, ...]
    verdict: Literal["SparseCandidate", "NoObstructionUpToCap"]
    best: BidegreeRecord | None = None
    center: tuple[complex, ...] | None = None
    radius: float | None = None

    @property
    def witness(self) -> MixedPolynomial | None:
        return self.best.witness if self.best is not None else None

    def to_json(self) -> dict[str, Any]:
        return {
            "verdict": self.verdict,
            "cap": self.cap.to_json(),
            "sample_count": self.sample_count,
            "center": [[z.real, z.imag] for z in self.center] if self.center is not None else None,
            "radius": self.radius,
            "best": self.best.to_json() if self.best is not None else None,
            "records": [r.to_json() for r in self.records],
        }


def _scan_bidegrees(seq: RhoSequence, cap: WeightedDegree) -> list[tuple[WeightedDegree, WeightedDegree]]:
    values = seq.values()
    return [(d1, d2) for d1 in values for d2 in values if not d2.is_zero and d1 + d2 <= cap]


def sparseness_scan(
    F: SampledSet,
    lam: Lambda,
    cap: Any,
    *,
    center: Any = None,
    radius: float | None = None,
    null_threshold: float | None = None,
    witness_tol: float | None = None,
    max_workers: int | None = None,
) -> ScanReport:
    """遍历 d2 ≠ 0、d1 + d2 ≤ cap 的全部双次数，报告零空间维数与见证多项式。"""
    settings = get_settings()
    null_threshold = settings.null_threshold if null_threshold is None else null_threshold
    witness_tol = settings.witness_tol if witness_tol is None else witness_tol
    max_workers = settings.max_workers if max_workers is None else max_workers
    if F.n != lam.n:
        raise DimensionError(f"集合维数 {F.n} 与 λ 维数 {lam.n} 不一致")
    cap_wd = lam.degree(cap)
    samples = F
    center_t = None
    if center is not None:
        if radius is None or radius <= 0:
            raise PreconditionError("局部扫描需要正的 radius")
        c = as_point(center, lam.n)
        samples = F.restrict_ball(c, radius)
        center_t = tuple(complex(v) for v in c)
    if samples.is_empty:
        raise PreconditionError("扫描区域内没有样本点")

    seq = enumerate_rho(lam, cap_wd)
    pairs = _scan_bidegrees(seq, cap_wd)

    def solve(pair: tuple[WeightedDegree, WeightedDegree]) -> BidegreeRecord:
        d1, d2 = pair
        system = _system(samples.points, lam, d1, d2, bidegree_basis(seq, d1, d2), null_threshold)
        min_sv = float(system.singular_values.min()) if system.singular_values.size else None
        witness = system.witness()
        if witness is None:
            return BidegreeRecord(d1, d2, len(system.basis), 0, min_sv)
        residual = system.residual(witness)
        symbolic = None
        if F.descriptor is not None and center is None:
            symbolic = vanishes_identically(witness, F.descriptor, witness_tol)
        return BidegreeRecord(d1, d2, len(system.basis), system.null_dim, min_sv, witness, residual, symbolic)

    if max_workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            records = list(pool.map(solve, pairs))
    else:
        records = [solve(p) for p in pairs]

    best = next(
        (r for r in records if r.witness is not None and r.residual is not None and r.residual < witness_tol),
        None,
    )
    verdict: Literal["SparseCandidate", "NoObstructionUpToCap"] = (
        "SparseCandidate" if best is not None else "NoObstructionUpToCap"
    )
    logger.info(
        "稀疏性扫描: %d 个双次数, %d 个样本, 结论 %s", len(records), samples.size, verdict
    )
    return ScanReport(
        lam=lam,
        cap=cap_wd,
        sample_count=samples.size,
        records=tuple(records),
        verdict=verdict,
        best=best,
        center=center_t,
        radius=radius,
    )


def localized_scan(
    F: SampledSet, lam: Lambda, cap: Any, center: Any, radii: Sequence[float], **kwargs: Any
) -> list[ScanReport]:
    """在逐渐缩小的 F ∩ B(v, r) 上重复扫描；没有样本的半径跳过。"""
    reports = []
    for r in radii:
        try:
            reports.append(sparseness_scan(F, lam, cap, center=center, radius=r, **kwargs))
        except PreconditionError:
            logger.warning("半径 %.3g 内没有样本点，跳过", r)
    return reports


# ---------------------------------------------------------------- 见证与证书


def sparse_witness_from_relation(relation: DependenceVerdict) -> MixedPolynomial:
    """q = Im(z^α · z̄^β)，双次数 (γ, γ)，在全实点上恒为零。"""
    if not relation.dependent:
        raise PreconditionError("λ 在 ℤ 上线性无关，无法构造稀疏见证")
    return MixedPolynomial.monomial(relation.alpha, relation.beta).imag_part()


def combine_witnesses(witnesses: Sequence[MixedPolynomial]) -> MixedPolynomial:
    """局部见证的乘积：在各局部集合的并上同时为零。"""
    if not witnesses:
        raise PreconditionError("至少需要一个见证多项式")
    product = witnesses[0]
    for w in witnesses[1:]:
        product = product * w
    return product


@dataclass(frozen=True)
class NonsparseVerdict:
    certified: bool
    reason: str

    def to_json(self) -> dict[str, Any]:
        return {
            "verdict": "Certified-Nonsparse" if self.certified else "Not-Certified",
            "reason": self.reason,
        }


def nonsparse_certificate_independent(lam: Lambda, w: Any) -> NonsparseVerdict:
    """λ 在 ℤ 上无关时，每个双次数的单项式空间是一维的，w 坐标全非零即可判定。"""
    point = as_point(w, lam.n)
    if is_z_dependent(lam).dependent:
        raise PreconditionError("λ 在 ℤ 上线性相关，请改用 sparseness_scan")
    zeros = [i for i, v in enumerate(point) if abs(v) <= ZERO_TOL]
    if zeros:
        return NonsparseVerdict(False, f"坐标 {zeros} 为零")
    return NonsparseVerdict(True, "每个双次数只有一个单项式，且它在 w 处不为零")


@dataclass(frozen=True, eq=False)
class ObstructionBlock:
    mu: WeightedDegree
    nu: WeightedDegree
    coeff_norm: float
    max_residual: float
    status: Literal["vanishes_on_F_not_identically", "nonvanishing"]
    symbolic: bool | None = None

    def to_json(self) -> dict[str, Any]:
        return {
            "mu": self.mu.to_json(),
            "nu": self.nu.to_json(),
            "coeff_norm": self.coeff_norm,
            "max_residual": self.max_residual,
            "status": self.status,
            "symbolic": self.symbolic,
        }


@dataclass(frozen=True, eq=False)
class ObstructionReport:
    blocks: tuple[ObstructionBlock, ...]

    @property
    def formal_holomorphic_type(self) -> bool:
        return not self.blocks

    @property
    def flagged(self) -> tuple[ObstructionBlock, ...]:
        return tuple(b for b in self.blocks if b.status == "vanishes_on_F_not_identically")

    @property
    def verdict(self) -> str:
        if self.formal_holomorphic_type:
            return "FormalHolomorphicType"
        return "ObstructedOnF" if self.flagged else "NotHolomorphicType"

    def to_json(self) -> dict[str, Any]:
        return {"verdict": self.verdict, "blocks": [b.to_json() for b in self.blocks]}


def forelli_obstruction(
    jet: MixedPolynomial, F: SampledSet, lam: Lambda, *, witness_tol: float | None = None
) -> ObstructionReport:
    """对每个 ν ≠ 0 的 (μ, ν) 块 S^μ_ν，报告其在 F 样本上的最大模。"""
    if witness_tol is None:
        witness_tol = get_settings().witness_tol
    if jet.n != lam.n or F.n != lam.n:
        raise DimensionError("jet、F 与 λ 的维数必须一致")
    blocks = []
    for comp in bidegree_decompose(jet, lam):
        if comp.d2.is_zero:
            continue
        norm = comp.poly.coefficient_norm
        residual = float(np.abs(comp.poly.evaluate_many(F.points)).max()) if F.size else 0.0
        vanishes = residual < witness_tol * max(1.0, norm)
        symbolic = None
        if vanishes and F.descriptor is not None:
            symbolic = vanishes_identically(comp.poly, F.descriptor, witness_tol)
        blocks.append(
            ObstructionBlock(
                mu=comp.d1,
                nu=comp.d2,
                coeff_norm=norm,
                max_residual=residual,
                status="vanishes_on_F_not_identically" if vanishes else "nonvanishing",
                symbolic=symbolic,
            )
        )
    return ObstructionReport(tuple(blocks))


__all__ = [
    "BidegreeRecord",
    "DEFAULT_RE_GRID",
    "DirectionSet",
    "NonsparseVerdict",
    "ObstructionBlock",
    "ObstructionReport",
    "ScanReport",
    "Suspension",
    "VanishingSystem",
    "bidegree_basis",
    "combine_witnesses",
    "direction_set",
    "forelli_obstruction",
    "localized_scan",
    "nonsparse_certificate_independent",
    "sparse_witness_from_relation",
    "sparseness_scan",
    "vanishing_system",
]
