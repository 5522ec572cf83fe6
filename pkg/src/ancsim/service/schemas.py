"""Pydantic request/response models for the simulation service."""
from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

from ..scenario import ScenarioConfig


class SimulateRequest(ScenarioConfig):
    """A scenario to execute. ``output_dir`` is ignored server-side."""


class TraceSeries(BaseModel):
    e: list[float]
    y: list[float]
    y_prime: list[float]
    lambda_eff: list[float]
    mu_eff: list[float]


class MetricSeriesModel(BaseModel):
    name: str
    values: list[float]
    window: int
    stride: int
    undefined: list[int] = Field(default_factory=list)
    overall: float | None = None


class ControllerReport(BaseModel):
    label: str
    kind: str
    status: str
    diverged_at: int | None = None
    error: str | None = None
    final_taps: list[float]
    trace: TraceSeries
    noise_reduction: MetricSeriesModel | None = None
    convergence: MetricSeriesModel | None = None


class SimulateResponse(BaseModel):
    scenario_hash: str
    config: ScenarioConfig
    sample_rate_hz: float
    d: list[float]
    s_hat_taps: list[float]
    s_hat_error_power: float | None
    controllers: list[ControllerReport]


class IdentifyRequest(BaseModel):
    model_config = ConfigDict(extra="forbid", protected_namespaces=())

    secondary_path: str | None = None  # builtin:<name> or coefficient file path
    taps: list[float] | None = None  # explicit true-path taps, alternative to secondary_path
    model_order: int = Field(default=16, ge=1)
    excitation_length: int = Field(default=20000, ge=1)
    step_size: float = Field(default=0.01, gt=0)
    seed: int = 1234


class IdentifyResponse(BaseModel):
    taps: list[float]
    final_error_power: float


class CompareEntry(BaseModel):
    label: str
    r_overall: float
    r_window: list[float]
    window: int
    stride: int


class CompareRequest(BaseModel):
    entries: list[CompareEntry] = Field(min_length=1)
    target_db: float | None = None  # default: min final R across entries minus 3 dB


class CompareRow(BaseModel):
    label: str
    final_r_db: float
    iterations_to_target: int | None
    rank: int


class CompareResponse(BaseModel):
    target_db: float
    rows: list[CompareRow]


class HealthResponse(BaseModel):
    status: str
    version: str
