"""Pydantic request/response models for the HTTP service."""
from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

NetworkName = Literal["one_intersection", "two_intersection"]
ControllerName = Literal["idm_baseline", "model_based", "policy", "oracle"]


class ScenarioSpecModel(BaseModel):
    network: NetworkName = "one_intersection"
    x_a: float = 1.0
    d: float = Field(16.0, ge=0.0)
    inflow_vph: float = Field(1000.0, gt=0.0)
    seed: int = 0
    horizon_steps: int = Field(600, gt=0)


class ShockwaveParamsModel(BaseModel):
    w: float = Field(10.0, gt=0.0)
    U: float = Field(15.0, gt=0.0)
    V: float = Field(35.0, gt=0.0)
    d: float = Field(100.0, ge=0.0)
    x_a: float = 0.0
    z: Optional[float] = None


class HealthResponse(BaseModel):
    status: str
    version: str


class SplitResponse(BaseModel):
    x_l: float


class TimesResponse(BaseModel):
    t_1: float
    t_2: float
    t_s: float
    t_a: float
    t_ev: float
    t_pre: float
    x_l: float


class EarlyReleaseResponse(BaseModel):
    proceed: bool
    lhs: float
    rhs: float


class OracleRequest(BaseModel):
    params: ShockwaveParamsModel
    two_intersections: bool = False


class OracleResponse(BaseModel):
    t_ev: float
    t_cav: float


class RunRequest(BaseModel):
    scenario: ScenarioSpecModel
    controller: ControllerName = "idm_baseline"
    w: float = 10.0
    checkpoint: Optional[dict] = None
    include_record: bool = False
    include_time_space: bool = False
    throughput_lanes: Literal["both", "left", "right"] = "both"


class RunMetricsModel(BaseModel):
    t_ev: Optional[float] = None
    t_cav: Optional[float] = None
    q_inter: Optional[float] = None
    throughput_degenerate: Optional[bool] = None
    controller: str
    complete: bool


class LaneChangeModel(BaseModel):
    t: float
    vehicle_id: int
    lane_from: int
    lane_to: int
    position: float


class RunResponse(BaseModel):
    metrics: RunMetricsModel
    lane_changes: list[LaneChangeModel] = []
    record_csv: Optional[str] = None
    time_space_csv: Optional[str] = None


class SweepRequest(BaseModel):
    network: NetworkName = "one_intersection"
    x_a_values: list[float]
    d_values: list[float]
    controllers: list[ControllerName] = ["model_based", "idm_baseline"]
    seeds: list[int] = [0]
    inflow_vph: float = Field(1000.0, gt=0.0)
    horizon_steps: int = Field(600, gt=0)
    w: float = 10.0
    checkpoint: Optional[dict] = None
    diff_metrics: list[str] = ["t_ev", "t_cav", "q_inter"]
    workers: int = Field(1, ge=1)


class CellModel(BaseModel):
    x_a: float
    d: float
    seed: int
    t_ev: Optional[float] = None
    t_cav: Optional[float] = None
    q_inter: Optional[float] = None
    feasible: bool
    error: Optional[str] = None


class SweepResultModel(BaseModel):
    network: str
    controller: str
    x_a_values: list[float]
    d_values: list[float]
    cells: list[CellModel]


class DiffCellModel(BaseModel):
    x_a: float
    d: float
    value: Optional[float] = None


class SweepResponse(BaseModel):
    results: dict[str, SweepResultModel]
    diffs: dict[str, list[DiffCellModel]]


class TrainRequest(BaseModel):
    network: NetworkName = "one_intersection"
    episodes: int = Field(2000, ge=0)
    batch_episodes: int = Field(10, gt=0)
    horizon_steps: int = Field(600, gt=0)
    gamma: float = Field(0.999, gt=0.0, le=1.0)
    learning_rate: float = Field(0.001, gt=0.0)
    clip_ratio: float = Field(0.2, gt=0.0)
    ppo_epochs: int = Field(4, gt=0)
    algorithm: Literal["ppo", "vpg"] = "ppo"
    hidden: list[int] = [32, 32, 32]
    seed: int = 0
    workers: int = Field(1, ge=1)
    inflow_vph: float = Field(1000.0, gt=0.0)
    x_a_range: tuple[float, float] = (0.0, 60.0)
    d_range: tuple[float, float] = (5.0, 60.0)
    early_stop: bool = True
    eval_episodes: int = Field(3, gt=0)
    eval_every: int = Field(5, gt=0)


class CurveRowModel(BaseModel):
    iteration: int
    mean_return: float
    ems_travel_time: float
    cav_travel_time: float


class TrainResponse(BaseModel):
    checkpoint: dict
    final_checkpoint: dict
    best_return: float
    curve: list[CurveRowModel]


class EvalRequest(BaseModel):
    checkpoint: dict
    network: NetworkName = "one_intersection"
    x_a_values: list[float]
    d_values: list[float]
    seeds: list[int] = [0]
    inflow_vph: float = Field(1000.0, gt=0.0)
    horizon_steps: int = Field(600, gt=0)
    workers: int = Field(1, ge=1)


class ErrorBody(BaseModel):
    code: str
    message: str
