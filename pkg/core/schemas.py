"""
输入文件与输出产物的 pydantic 模型。

CLI 读入的 λ、多项式、集合描述符、级数文件先经这里校验；
schemas 命令把各产物模型的 JSON Schema 写到输出目录。
"""

from __future__ import annotations

from typing import Annotated, Any, Literal, Union

from pydantic import BaseModel, ConfigDict, Field

FractionPair = Annotated[list[int], Field(min_length=2, max_length=2)]
ComplexPair = Annotated[list[float], Field(min_length=2, max_length=2)]


class IrrationalBasisItem(BaseModel):
    name: str
    approx: float = Field(gt=0)


class LambdaModel(BaseModel):
    n: int = Field(ge=1)
    rational: list[FractionPair | int | str]
    irrational_basis: list[IrrationalBasisItem] = []
    coords: list[list[FractionPair | int | str]] | None = None


class TermModel(BaseModel):
    k: list[int]
    m: list[int] | None = None
    re: float = 0.0
    im: float = 0.0


class PolynomialModel(BaseModel):
    n: int = Field(ge=1)
    terms: list[TermModel] = []


# ---- 集合描述符 ----


class ExplicitModel(BaseModel):
    type: Literal["explicit"]
    points: list[list[ComplexPair | float]]


class CircleFamilyModel(BaseModel):
    type: Literal["circle_family"]
    radii: list[float]
    frequencies: list[int]
    phases: list[float] = []
    count: int = Field(default=64, ge=1)


class RealSliceModel(BaseModel):
    type: Literal["real_slice"]
    n: int = Field(ge=1)
    real_coords: list[int]
    count: int = Field(default=200, ge=1)
    on_sphere: bool = True


class UnionModel(BaseModel):
    type: Literal["union"]
    parts: list["DescriptorModel"]


class ProductModel(BaseModel):
    type: Literal["product"]
    factors: list["DescriptorModel"]


DescriptorModel = Annotated[
    Union[ExplicitModel, CircleFamilyModel, RealSliceModel, UnionModel, ProductModel],
    Field(discriminator="type"),
]
UnionModel.model_rebuild()
ProductModel.model_rebuild()


class SetModel(BaseModel):
    """SampledSet 文件：显式点列或描述符，二者至少给一个。"""

    n: int | None = None
    points: list[list[ComplexPair | float]] | None = None
    descriptor: DescriptorModel | None = None
    on_sphere: bool | None = None


# ---- 级数 ----


class SeriesBlockModel(BaseModel):
    rho_coords: list[FractionPair | int | str] | None = None
    rho_approx: float | None = None
    poly: PolynomialModel


class SeriesModel(BaseModel):
    lambda_: LambdaModel = Field(alias="lambda")
    blocks: list[SeriesBlockModel]
    truncation: int | None = None

    model_config = ConfigDict(populate_by_name=True)


# ---- 产物 ----


class WeightedDegreeModel(BaseModel):
    approx: float
    coords: list[FractionPair]


class RhoEntryModel(BaseModel):
    rho_approx: float
    rho_coords: list[FractionPair]
    multiindices: list[list[int]]


class EstimateModel(BaseModel):
    value: float | Literal["inf"]
    level: Any = None
    mode: Literal["SampleEstimate", "CertifiedLower"]
    status: str
    witness: PolynomialModel
    mesh: float | None = None
    gradient_bound: float | None = None
    diagnostics: dict[str, Any] = {}


class BidegreeRecordModel(BaseModel):
    d1: WeightedDegreeModel
    d2: WeightedDegreeModel
    basis_size: int
    null_dim: int
    min_singular: float | None = None
    witness: PolynomialModel | None = None
    residual: float | None = None
    symbolic: bool | None = None


class ScanReportModel(BaseModel):
    verdict: Literal["SparseCandidate", "NoObstructionUpToCap"]
    cap: WeightedDegreeModel
    sample_count: int
    records: list[BidegreeRecordModel]
    best: BidegreeRecordModel | None = None


class RegionPointModel(BaseModel):
    z: list[ComplexPair]
    value: float | Literal["inf"]
    inside: bool


class RegionModel(BaseModel):
    kind: Literal["convergence", "omega_prime", "omega_hat", "capacity_ball"]
    ball_radius: float | None = None
    truncation: int | None = None
    points: list[RegionPointModel]

    model_config = ConfigDict(extra="allow")


class JobSpec(BaseModel):
    """一次 CLI 调用的全部输入；--json 参数按此模型解析。"""

    command: str
    lambda_file: str | None = None
    set_file: str | None = None
    poly_file: str | None = None
    series_file: str | None = None
    cap: str | None = None
    grid: str | None = None
    out: str | None = None
    seed: int | None = Field(default=None, ge=0)
    mode: Literal["sample", "certified"] = "sample"

    model_config = ConfigDict(extra="allow")


ARTIFACT_MODELS: dict[str, type[BaseModel]] = {
    "lambda": LambdaModel,
    "polynomial": PolynomialModel,
    "set": SetModel,
    "series": SeriesModel,
    "rho_entry": RhoEntryModel,
    "estimate": EstimateModel,
    "scan_report": ScanReportModel,
    "region": RegionModel,
    "job": JobSpec,
}


__all__ = [
    "ARTIFACT_MODELS",
    "CircleFamilyModel",
    "DescriptorModel",
    "EstimateModel",
    "ExplicitModel",
    "JobSpec",
    "LambdaModel",
    "PolynomialModel",
    "ProductModel",
    "RealSliceModel",
    "RegionModel",
    "RhoEntryModel",
    "ScanReportModel",
    "SeriesModel",
    "SetModel",
    "TermModel",
    "UnionModel",
]
