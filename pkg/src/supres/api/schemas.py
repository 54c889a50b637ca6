"""Pydantic request/response models for the HTTP service.

These mirror the YAML run-configuration sections one-to-one, so the CLI can
post a parsed config file (plus overrides) without reshaping it.
"""

from __future__ import annotations

from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, Field


class LognormalSpec(BaseModel):
    kind: Literal["lognormal"] = "lognormal"
    mu_rate: float
    sigma_rate: float


class PiecewisePolySpec(BaseModel):
    """scipy PPoly layout: coefficients[j][i] multiplies (x - breakpoints[i])^(deg-j)."""

    breakpoints: list[float]
    coefficients: list[list[float]]


class GeneralSpec(BaseModel):
    kind: Literal["general"] = "general"
    mu: PiecewisePolySpec
    sigma: PiecewisePolySpec


DynamicsField = Annotated[Union[LognormalSpec, GeneralSpec], Field(discriminator="kind")]


class ModelSection(BaseModel):
    L: float
    H: float
    M: float
    r: float
    pos: DynamicsField
    neg: DynamicsField


class SolverSection(BaseModel):
    grid_n: int = Field(default=400, gt=1)
    tol_paste: float = Field(default=1e-9, gt=0)
    tol_ode: float = Field(default=1e-8, gt=0)


class McSection(BaseModel):
    n_paths: int = Field(default=100_000, ge=1)
    dt: float = Field(default=1e-3, gt=0)
    seed: int = 0
    horizon: float = Field(default=400.0, gt=0)
    scheme: Literal["auto", "exact", "euler"] = "auto"


class RuleSpec(BaseModel):
    kind: Literal["stop_loss", "immediate", "cap", "buy_below"]
    level: Optional[float] = None  # stop_loss: m ; buy_below: threshold


class SimulateSection(BaseModel):
    x0: float
    f0: Literal["+", "-"]
    rule: RuleSpec


class SweepSection(BaseModel):
    x0: float
    f0: Literal["+", "-"]
    m_min: float
    m_max: float
    n_points: int = Field(default=21, ge=2)


class OutputSection(BaseModel):
    formats: list[Literal["json", "csv"]] = ["json", "csv"]
    table_n: int = Field(default=201, ge=2)


class SolveSellRequest(BaseModel):
    schema_version: int = 1
    model: ModelSection
    solver: SolverSection = SolverSection()
    output: OutputSection = OutputSection()


class SolveBuyRequest(SolveSellRequest):
    pass


class SimulateRequest(BaseModel):
    schema_version: int = 1
    model: ModelSection
    solver: SolverSection = SolverSection()
    mc: McSection = McSection()
    simulate: SimulateSection


class SweepRequest(BaseModel):
    schema_version: int = 1
    model: ModelSection
    solver: SolverSection = SolverSection()
    mc: McSection = McSection()
    sweep: SweepSection


class CheckRequest(BaseModel):
    schema_version: int = 1
    model: ModelSection
    solver: SolverSection = SolverSection()
    mc: McSection = McSection()
    mc_checks: bool = True


class TableData(BaseModel):
    columns: list[str]
    rows: list[list[Optional[float]]]


class CoeffRecord(BaseModel):
    A_minus: float
    B_minus: float
    A_plus: float
    B_plus: float


class DiagnosticsRecord(BaseModel):
    pasting_residual: Optional[float]
    multiple_roots: bool
    n_brackets: int
    system_condition: Optional[float]


class SellRecord(BaseModel):
    schema_version: int = 1
    case: Literal["C1", "C2", "C3"]
    m_hat: float
    coeffs: CoeffRecord
    diagnostics: DiagnosticsRecord
    value_table: TableData


class BuyRecord(SellRecord):
    B: float
    kappa: float


class EstimateRecord(BaseModel):
    mean: float
    std_error: float
    n_paths: int
    seed: int
    truncated_fraction: float
    horizon_warning: bool


class SimulateRecord(BaseModel):
    schema_version: int = 1
    x0: float
    f0: str
    rule: RuleSpec
    estimate: EstimateRecord


class SweepEntry(BaseModel):
    m: float
    mean: float
    std_error: float
    truncated_fraction: float


class SweepRecord(BaseModel):
    schema_version: int = 1
    x0: float
    f0: str
    entries: list[SweepEntry]


class CheckEntry(BaseModel):
    name: str
    passed: bool
    detail: str


class CheckRecord(BaseModel):
    schema_version: int = 1
    passed: bool
    checks: list[CheckEntry]


class ErrorDetail(BaseModel):
    kind: Literal["validation", "numerical"]
    type: str
    message: str
