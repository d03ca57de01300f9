"""
几个经典悬挂例子的数值复现，以及组合方向集、L-正则诊断得到的正规性判定。

每个例子返回 GalleryReport：verdict 是可读结论，golden 是应当得到的结论。
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Literal, Sequence

import numpy as np

from core.errors import PreconditionError
from core.extremal import LRegularityReport, green_estimate, l_regularity_estimate
from core.qhpoly import MixedPolynomial, as_point
from core.sets import CircleFamily, RealSlice, SampledSet, rational_sphere_points
from core.suspension import (
    DirectionSet,
    direction_set,
    localized_scan,
    nonsparse_certificate_independent,
    sparseness_scan,
)
from core.weights import Lambda

logger = logging.getLogger(__name__)

IRRATIONAL_BASIS = {"sqrt2": math.sqrt(2.0), "sqrt3": math.sqrt(3.0)}

Signature = Literal["Normal", "Nonnormal", "Undetermined"]


@dataclass(frozen=True)
class NormalityVerdict:
    signature: Signature
    reason: str
    direction_points: int
    single_point: bool
    lreg: LRegularityReport | None = None

    def to_json(self) -> dict[str, Any]:
        return {
            "signature": self.signature,
            "reason": self.reason,
            "direction_points": self.direction_points,
            "single_point": self.single_point,
            "l_regularity": self.lreg.to_json() if self.lreg is not None else None,
        }


def _generator_image(ds: DirectionSet, F: SampledSet, generator: Any) -> np.ndarray:
    if generator is None:
        return ds.points()[0]
    v = as_point(generator, F.n)
    # 生成元本身不一定在样本里，取方向集中源点离它最近的像点
    sources = list(ds.provenance1) + list(ds.provenance2)
    dists = [float(np.linalg.norm(F.points[i] - v)) for i in sources]
    return ds.points()[int(np.argmin(dists))]


def normality_verdict(
    F: SampledSet,
    lam: Lambda,
    *,
    countable: bool = False,
    generator: Any = None,
    radii: Sequence[float] | None = None,
    degree_cap: int = 4,
    **solver: Any,
) -> NormalityVerdict:
    """正规性信号：可数 F 必不正规；方向集为单点（多极）给出不正规信号；
    方向集在生成元像点处 L-正则给出正规信号。只做诊断。"""
    ds = direction_set(F, lam)
    count = int(ds.points().shape[0])
    single = ds.is_single_point()
    if countable:
        return NormalityVerdict("Nonnormal", "countable F", count, single)
    if count == 0:
        return NormalityVerdict("Undetermined", "方向集为空", count, single)
    if single:
        return NormalityVerdict("Nonnormal", "single-point direction set (pluripolar)", count, single)
    a = _generator_image(ds, F, generator)
    if radii is None:
        radii = (ds.spread() / 4.0,)
    report = l_regularity_estimate(ds.as_sampled_set(), a, radii, degree_cap, **solver)
    if report.verdict == "consistent_with_L_regularity":
        return NormalityVerdict("Normal", "direction set L-regular at generator image", count, single, report)
    if report.verdict == "pluripolar_signature":
        return NormalityVerdict("Nonnormal", "direction set shows pluripolar signature", count, single, report)
    return NormalityVerdict("Undetermined", "L-regularity diagnostic undetermined", count, single, report)


@dataclass(frozen=True)
class GalleryReport:
    example: str
    verdict: str
    golden: str
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def matches(self) -> bool:
        return self.verdict == self.golden

    def to_json(self) -> dict[str, Any]:
        return {
            "example": self.example,
            "verdict": self.verdict,
            "golden": self.golden,
            "matches": self.matches,
            "details": self.details,
        }


def _cosine(p: MixedPolynomial, q: MixedPolynomial) -> float:
    keys = sorted(set(p.terms) | set(q.terms))
    a, b = p.as_vector(keys), q.as_vector(keys)
    denom = float(np.linalg.norm(a) * np.linalg.norm(b))
    return float(abs(np.vdot(a, b)) / denom) if denom else 0.0


# ---------------------------------------------------------------- 实切片


def example_real_slice(
    lambda2: str = "2",
    lambda3: str | None = None,
    *,
    samples: int = 200,
    cap: Any = None,
    seed: int | None = None,
) -> GalleryReport:
    """ℂ³ 中 Im z₁ = Im z₂ = 0 的实切片：λ₂ 为正整数时稀疏，见证 z₁^{λ₂}z̄₂ − z̄₁^{λ₂}z₂；λ₂ 无理时不稀疏。"""
    if lambda3 is None:
        lambda3 = "3" if lambda2.strip().isdigit() else "sqrt3"
    lam = Lambda.parse(["1", lambda2, lambda3], IRRATIONAL_BASIS)
    F = SampledSet.from_descriptor(RealSlice(n=3, real_coords=(0, 1), count=samples), seed)
    lam2 = lam.entries[1]
    if lam2.is_rational and lam2.as_fraction().denominator == 1:
        d = int(lam2.as_fraction())
        report = sparseness_scan(F, lam, cap if cap is not None else 2 * d)
        expected = (
            MixedPolynomial.monomial((d, 0, 0), (0, 1, 0)) - MixedPolynomial.monomial((0, 1, 0), (d, 0, 0))
        ).normalized()
        best = report.best
        cos = _cosine(best.witness, expected) if best is not None and best.witness is not None else 0.0
        at = f"({best.d1}, {best.d2})" if best is not None else None
        verdict = f"sparse: witness at bidegree {at}" if report.verdict == "SparseCandidate" else "no obstruction up to cap"
        return GalleryReport(
            "ex3.5",
            verdict,
            f"sparse: witness at bidegree ({d}, {d})",
            {
                "lambda": lam.to_json(),
                "scan": report.to_json(),
                "witness_cosine": cos,
                "witness_residual": best.residual if best is not None else None,
            },
        )
    report = sparseness_scan(F, lam, cap if cap is not None else 6)
    w = np.full(3, 1.0 / math.sqrt(3.0), dtype=complex)
    details: dict[str, Any] = {"lambda": lam.to_json(), "scan": report.to_json()}
    try:
        details["certificate"] = nonsparse_certificate_independent(lam, w).to_json()
    except PreconditionError as e:
        details["certificate"] = {"verdict": "Not-Applicable", "reason": str(e)}
    verdict = "nonsparse up to cap" if report.verdict == "NoObstructionUpToCap" else "sparse candidate"
    return GalleryReport("ex3.5", verdict, "nonsparse up to cap", details)


# ---------------------------------------------------------------- 环面曲线


def twisted_circle(n_freq: int, count: int = 64) -> SampledSet:
    """F_n = {(e^{iθ}/√2, e^{inθ}/√2)}。"""
    r = 1.0 / math.sqrt(2.0)
    return SampledSet.from_descriptor(CircleFamily(radii=(r, r), frequencies=(1, n_freq), count=count))


def example_twisted_circles(
    m: int = 2,
    n: int = 2,
    *,
    degree_cap: int = 8,
    trend_caps: Sequence[int] = (1, 2, 4),
    **solver: Any,
) -> GalleryReport:
    """λ_m = (1, m)，F_n 的方向集为半径 (√2)^{m−1} 的圆（m ≠ n）或单点（m = n）。"""
    if m < 1 or n < 1:
        raise PreconditionError("m、n 必须是正整数")
    lam = Lambda.rational(1, m)
    F = twisted_circle(n)
    ds = direction_set(F, lam)
    R = math.sqrt(2.0) ** (m - 1)
    E = ds.as_sampled_set()
    z0 = np.array([2.0 * R], dtype=complex)
    details: dict[str, Any] = {"m": m, "n": n, "radius": R, "direction_points": int(E.size)}
    if ds.is_single_point():
        trend = [green_estimate(E, z0, c, **solver) for c in trend_caps]
        details["green_trend"] = [
            {"degree_cap": c, "value": e.value if math.isfinite(e.value) else "inf", "status": e.status}
            for c, e in zip(trend_caps, trend)
        ]
        details["direction_point"] = [[v.real, v.imag] for v in ds.points()[0]]
        verdict = "direction set: single point; suspension: nonnormal signature"
    else:
        moduli = np.abs(E.points[:, 0])
        details["modulus_range"] = [float(moduli.min()), float(moduli.max())]
        est = green_estimate(E, z0, degree_cap, **solver)
        details["green_at_2R"] = est.value
        nv = normality_verdict(F, lam, degree_cap=4, **solver)
        details["normality"] = nv.to_json()
        signature = "normal" if nv.signature == "Normal" else "undetermined"
        verdict = f"direction set: circle; suspension: {signature} signature"
    golden = (
        "direction set: single point; suspension: nonnormal signature"
        if m == n
        else "direction set: circle; suspension: normal signature"
    )
    return GalleryReport("ex5.6", verdict, golden, details)


# ---------------------------------------------------------------- 第七节的三个例子


def example_rational_suspension(
    n: int = 2,
    count: int = 120,
    *,
    cap: Any = 4,
    max_denominator: int = 64,
    seed: int | None = None,
) -> GalleryReport:
    """开集 U 内坐标全为有理数的点：可数故不正规，但在 U 中稠密，扫描不到稀疏障碍。"""
    F, exact = rational_sphere_points(n, count, max_denominator=max_denominator, spread=0.5, seed=seed)
    lam = Lambda.rational(*([1] * n))
    on_sphere = all(sum((x * x for x in p), Fraction(0)) == 1 for p in exact)
    scan = sparseness_scan(F, lam, cap)
    nv = normality_verdict(F, lam, countable=True)
    verdict = "nonnormal (countable F)" if nv.signature == "Nonnormal" else nv.signature
    return GalleryReport(
        "ex7.1",
        verdict,
        "nonnormal (countable F)",
        {
            "points": F.size,
            "exact_on_sphere": on_sphere,
            "scan_verdict": scan.verdict,
            "formal_forelli_signature": scan.verdict == "NoObstructionUpToCap",
            "normality": nv.to_json(),
        },
    )


def shrinking_angles(count: int) -> np.ndarray:
    """r_k = π/(4k)，从 π/4 递减到 0。"""
    return np.pi / (4.0 * np.arange(1, count + 1))


def growing_angles(count: int) -> np.ndarray:
    """s_ℓ = π/2 − π/(4ℓ)，从 π/4 递增到 π/2。"""
    return np.pi / 2 - np.pi / (4.0 * np.arange(1, count + 1))


def countable_fan(k_count: int = 40, l_count: int = 12) -> SampledSet:
    """∪_ℓ {(cos r_k, e^{i s_ℓ} sin r_k)}。"""
    r = shrinking_angles(k_count)
    s = growing_angles(l_count)
    pts = [(math.cos(rk), np.exp(1j * sl) * math.sin(rk)) for sl in s for rk in r]
    return SampledSet.from_points(pts, 2, on_sphere=True)


def circle_fan(l_count: int = 4, count: int = 400) -> SampledSet:
    """∪_ℓ {(x, e^{i s_ℓ} y) : x² + y² = 1}。"""
    theta = 2 * np.pi * np.arange(count) / count
    pts = [
        (math.cos(t), np.exp(1j * sl) * math.sin(t)) for sl in growing_angles(l_count) for t in theta
    ]
    return SampledSet.from_points(pts, 2, on_sphere=True)


_GENERATOR = (1.0, 0.0)
_SCAN_RADII = (0.5, 0.25, 0.1)


def _nonsparse_at_generator(F: SampledSet, lam: Lambda, cap: Any) -> tuple[bool, list[dict[str, Any]]]:
    reports = localized_scan(F, lam, cap, _GENERATOR, _SCAN_RADII)
    rows = [
        {"radius": r.radius, "samples": r.sample_count, "verdict": r.verdict} for r in reports
    ]
    return bool(reports) and all(r.verdict == "NoObstructionUpToCap" for r in reports), rows


def example_formal_forelli(
    lambda2: str = "sqrt2",
    *,
    cap: Any = 4,
    k_count: int = 40,
    l_count: int = 12,
) -> GalleryReport:
    """可数扇形集：不正规，但 v = (1,0) 生成非稀疏叶，是无处稠密的形式 Forelli 悬挂。"""
    lam = Lambda.parse(["1", lambda2], IRRATIONAL_BASIS)
    F = countable_fan(k_count, l_count)
    nonsparse, rows = _nonsparse_at_generator(F, lam, cap)
    nv = normality_verdict(F, lam, countable=True)
    parts = ["nonnormal (countable F)" if nv.signature == "Nonnormal" else nv.signature.lower()]
    parts.append("formal Forelli (nonsparse leaf at v)" if nonsparse else "sparse candidate near v")
    return GalleryReport(
        "ex7.2",
        "; ".join(parts),
        "nonnormal (countable F); formal Forelli (nonsparse leaf at v)",
        {"lambda": lam.to_json(), "points": F.size, "localized_scans": rows, "normality": nv.to_json()},
    )


def example_forelli(
    lambda2: str = "sqrt2",
    *,
    cap: Any = 4,
    l_count: int = 4,
    count: int = 400,
    degree_cap: int = 4,
    **solver: Any,
) -> GalleryReport:
    """圆周扇形集：方向集是过原点的实直线并，v = (1,0) 生成正则且非稀疏的叶。"""
    lam = Lambda.parse(["1", lambda2], IRRATIONAL_BASIS)
    G = circle_fan(l_count, count)
    nonsparse, rows = _nonsparse_at_generator(G, lam, cap)
    nv = normality_verdict(G, lam, generator=_GENERATOR, radii=(0.5, 0.25), degree_cap=degree_cap, **solver)
    regular = nv.signature == "Normal"
    parts = [
        "regular leaf at v" if regular else "regularity undetermined at v",
        "nonsparse leaf at v" if nonsparse else "sparse candidate near v",
    ]
    verdict = "; ".join(parts) + ("; Forelli suspension" if regular and nonsparse else "")
    return GalleryReport(
        "ex7.3",
        verdict,
        "regular leaf at v; nonsparse leaf at v; Forelli suspension",
        {"lambda": lam.to_json(), "points": G.size, "localized_scans": rows, "normality": nv.to_json()},
    )


EXAMPLES: dict[str, Callable[..., GalleryReport]] = {
    "ex3.5": example_real_slice,
    "ex5.6": example_twisted_circles,
    "ex7.1": example_rational_suspension,
    "ex7.2": example_formal_forelli,
    "ex7.3": example_forelli,
}


def run_example(example_id: str, **params: Any) -> GalleryReport:
    try:
        fn = EXAMPLES[example_id]
    except KeyError as e:
        raise PreconditionError(f"未知的例子: {example_id!r}，可选 {sorted(EXAMPLES)}") from e
    report = fn(**params)
    log = logger.info if report.matches else logger.warning
    log("%s: %s（期望: %s）", example_id, report.verdict, report.golden)
    return report


__all__ = [
    "EXAMPLES",
    "GalleryReport",
    "NormalityVerdict",
    "circle_fan",
    "countable_fan",
    "example_forelli",
    "example_formal_forelli",
    "example_rational_suspension",
    "example_real_slice",
    "example_twisted_circles",
    "normality_verdict",
    "run_example",
    "twisted_circle",
]
