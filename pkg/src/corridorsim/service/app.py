"""FastAPI service exposing the simulator, controllers and training."""
from __future__ import annotations

import io
import logging

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..experiments import RunSettings, SweepSettings, run_episode, run_sweep
from ..metrics import write_time_space_csv
from ..rl.train import TrainConfig, TrainingDivergenceError, train
from ..scenario import InfeasibleScenarioError, NetworkKind, ScenarioSpec
from ..shockwave import (ShockwaveParams, analytic_times, early_release_sides,
                         optimal_split, oracle_times)
from ..sim.engine import SimulationFault
from . import schemas

logger = logging.getLogger("corridorsim.service")

app = FastAPI(title="corridorsim", version=__version__)


@app.exception_handler(InfeasibleScenarioError)
async def infeasible_handler(request: Request, exc: InfeasibleScenarioError):
    return JSONResponse(status_code=409, content={
        "code": "infeasible_scenario", "message": str(exc)})


@app.exception_handler(SimulationFault)
async def fault_handler(request: Request, exc: SimulationFault):
    logger.error("simulation fault: %s", exc)
    return JSONResponse(status_code=500, content={
        "code": "simulation_fault", "message": str(exc)})


@app.exception_handler(TrainingDivergenceError)
async def divergence_handler(request: Request, exc: TrainingDivergenceError):
    logger.error("training divergence: %s", exc)
    return JSONResponse(status_code=500, content={
        "code": "training_divergence", "message": str(exc)})


@app.exception_handler(ValueError)
async def value_error_handler(request: Request, exc: ValueError):
    return JSONResponse(status_code=422, content={
        "code": "invalid_request", "message": str(exc)})


def _params(model: schemas.ShockwaveParamsModel) -> ShockwaveParams:
    return ShockwaveParams(w=model.w, U=model.U, V=model.V, d=model.d,
                           x_a=model.x_a, z=model.z)


def _spec(model: schemas.ScenarioSpecModel) -> ScenarioSpec:
    return ScenarioSpec.from_json_dict(model.model_dump())


@app.get("/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


@app.post("/analytic/split", response_model=schemas.SplitResponse)
def analytic_split(params: schemas.ShockwaveParamsModel) -> schemas.SplitResponse:
    return schemas.SplitResponse(x_l=optimal_split(_params(params)))


@app.post("/analytic/times", response_model=schemas.TimesResponse)
def analytic_schedule(params: schemas.ShockwaveParamsModel) -> schemas.TimesResponse:
    times = analytic_times(_params(params))
    return schemas.TimesResponse(t_1=times.t_1, t_2=times.t_2, t_s=times.t_s,
                                 t_a=times.t_a, t_ev=times.t_ev,
                                 t_pre=times.t_pre, x_l=times.x_l)


@app.post("/analytic/early-release", response_model=schemas.EarlyReleaseResponse)
def analytic_early_release(
        params: schemas.ShockwaveParamsModel) -> schemas.EarlyReleaseResponse:
    lhs, rhs = early_release_sides(_params(params))
    return schemas.EarlyReleaseResponse(proceed=lhs <= rhs, lhs=lhs, rhs=rhs)


@app.post("/oracle", response_model=schemas.OracleResponse)
def oracle(request: schemas.OracleRequest) -> schemas.OracleResponse:
    times = oracle_times(_params(request.params),
                         two_intersections=request.two_intersections)
    return schemas.OracleResponse(t_ev=times.t_ev, t_cav=times.t_cav)


@app.post("/run", response_model=schemas.RunResponse)
def run(request: schemas.RunRequest) -> schemas.RunResponse:
    settings = RunSettings(
        spec=_spec(request.scenario), controller=request.controller,
        w=request.w, checkpoint=request.checkpoint,
        record_states=request.include_record or request.include_time_space,
        throughput_lanes=request.throughput_lanes)
    outcome = run_episode(settings)
    record_csv = None
    time_space_csv = None
    lane_changes: list[schemas.LaneChangeModel] = []
    if outcome.record is not None:
        lane_changes = [schemas.LaneChangeModel(
            t=ev.t, vehicle_id=ev.vehicle_id, lane_from=ev.lane_from,
            lane_to=ev.lane_to, position=ev.position)
            for ev in outcome.record.lane_changes]
        if request.include_record:
            buf = io.StringIO()
            outcome.record.write_csv(buf)
            record_csv = buf.getvalue()
        if request.include_time_space:
            buf = io.StringIO()
            write_time_space_csv(outcome.record, buf)
            time_space_csv = buf.getvalue()
    return schemas.RunResponse(
        metrics=schemas.RunMetricsModel(**outcome.metrics),
        lane_changes=lane_changes, record_csv=record_csv,
        time_space_csv=time_space_csv)


def _sweep_response(outcome) -> schemas.SweepResponse:
    results = {name: schemas.SweepResultModel(**result.to_json_dict())
               for name, result in outcome.results.items()}
    diffs = {name: [schemas.DiffCellModel(x_a=k[0], d=k[1], value=v)
                    for k, v in sorted(grid.items())]
             for name, grid in outcome.diffs.items()}
    return schemas.SweepResponse(results=results, diffs=diffs)


@app.post("/sweep", response_model=schemas.SweepResponse)
def sweep(request: schemas.SweepRequest) -> schemas.SweepResponse:
    settings = SweepSettings(
        network=NetworkKind.parse(request.network),
        x_a_values=tuple(request.x_a_values), d_values=tuple(request.d_values),
        controllers=tuple(request.controllers), seeds=tuple(request.seeds),
        inflow_vph=request.inflow_vph, horizon_steps=request.horizon_steps,
        w=request.w, checkpoint=request.checkpoint,
        diff_metrics=tuple(request.diff_metrics), workers=request.workers)
    if "policy" in settings.controllers and settings.checkpoint is None:
        raise ValueError("sweep includes the policy controller but no checkpoint")
    return _sweep_response(run_sweep(settings))


@app.post("/train", response_model=schemas.TrainResponse)
def train_policy(request: schemas.TrainRequest) -> schemas.TrainResponse:
    cfg = TrainConfig(
        network=NetworkKind.parse(request.network), episodes=request.episodes,
        batch_episodes=request.batch_episodes,
        horizon_steps=request.horizon_steps, gamma=request.gamma,
        learning_rate=request.learning_rate, clip_ratio=request.clip_ratio,
        ppo_epochs=request.ppo_epochs, algorithm=request.algorithm,
        hidden=tuple(request.hidden), seed=request.seed,
        workers=request.workers, inflow_vph=request.inflow_vph,
        x_a_range=tuple(request.x_a_range), d_range=tuple(request.d_range),
        early_stop=request.early_stop, eval_episodes=request.eval_episodes,
        eval_every=request.eval_every)
    result = train(cfg)
    curve = [schemas.CurveRowModel(**row) for row in result.curve]
    best = result.best_return if result.curve else 0.0
    return schemas.TrainResponse(checkpoint=result.net.to_checkpoint(),
                                 final_checkpoint=result.final_net.to_checkpoint(),
                                 best_return=best, curve=curve)


@app.post("/evaluate", response_model=schemas.SweepResponse)
def evaluate_policy(request: schemas.EvalRequest) -> schemas.SweepResponse:
    settings = SweepSettings(
        network=NetworkKind.parse(request.network),
        x_a_values=tuple(request.x_a_values), d_values=tuple(request.d_values),
        controllers=("policy",), seeds=tuple(request.seeds),
        inflow_vph=request.inflow_vph, horizon_steps=request.horizon_steps,
        checkpoint=request.checkpoint, diff_metrics=(),
        workers=request.workers)
    return _sweep_response(run_sweep(settings))
