"""Run, sweep and evaluation orchestration shared by the service and CLI."""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .controllers import make_controller, shockwave_params_for
from .metrics import (CellResult, SweepResult, throughput, travel_time_cav,
                      travel_time_ems)
from .rl.observation import observe
from .rl.policy import PolicyNet
from .scenario import (InfeasibleScenarioError, NetworkKind, ScenarioSpec,
                       build_initial_state, sweep_cells)
from .shockwave import oracle_times
from .sim.engine import SimulationFault
from .sim.record import EpisodeRecord


@dataclass(frozen=True)
class RunSettings:
    spec: ScenarioSpec
    controller: str = "idm_baseline"
    w: float = 10.0
    checkpoint: dict | None = None
    record_states: bool = True
    throughput_lanes: str = "both"

    @classmethod
    def from_json_dict(cls, data: dict) -> "RunSettings":
        return cls(spec=ScenarioSpec.from_json_dict(data["scenario"]),
                   controller=data.get("controller", "idm_baseline"),
                   w=float(data.get("w", 10.0)),
                   checkpoint=data.get("checkpoint"),
                   record_states=bool(data.get("record_states", True)),
                   throughput_lanes=data.get("throughput_lanes", "both"))


@dataclass
class RunOutcome:
    metrics: dict
    record: EpisodeRecord | None = None

    def metrics_json(self) -> str:
        return json.dumps(self.metrics, indent=2, sort_keys=True)


def run_episode(settings: RunSettings) -> RunOutcome:
    """Simulate one scenario under one controller and compute its metrics.

    The ``oracle`` controller is exempt from simulation: its travel times
    come straight from the closed-form analysis.
    """
    spec = settings.spec
    spec.validate()
    if settings.controller == "oracle":
        params = shockwave_params_for(spec, w=settings.w)
        times = oracle_times(params,
                             two_intersections=spec.network is NetworkKind.TWO)
        return RunOutcome(metrics={"t_ev": times.t_ev, "t_cav": times.t_cav,
                                   "q_inter": None, "controller": "oracle",
                                   "complete": True})

    net = None
    if settings.controller == "policy":
        if settings.checkpoint is None:
            raise ValueError("policy controller requires a checkpoint")
        net = PolicyNet.from_checkpoint(settings.checkpoint)
    controller = make_controller(settings.controller, spec, w=settings.w,
                                 net=net)
    sim = build_initial_state(spec, record_states=settings.record_states)
    controller.reset()
    cav_id = sim.cav.id
    for _ in range(spec.horizon_steps):
        cav = sim.cav
        if cav is None:
            sim.step()
            continue
        cmd = controller.command(observe(sim))
        sim.step({cav_id: cmd} if cmd is not None else {})
    sim.record.horizon_steps = spec.horizon_steps

    record = sim.record
    t_ev = travel_time_ems(record)
    t_cav = travel_time_cav(record)
    q = throughput(record, lanes=settings.throughput_lanes)
    metrics = {"t_ev": t_ev, "t_cav": t_cav,
               "q_inter": None if q is None else q.q,
               "throughput_degenerate": None if q is None else q.degenerate,
               "controller": settings.controller,
               "complete": t_ev is not None and t_cav is not None}
    return RunOutcome(metrics=metrics, record=record)


# -- sweeps ---------------------------------------------------------------------


@dataclass(frozen=True)
class SweepSettings:
    network: NetworkKind = NetworkKind.ONE
    x_a_values: tuple[float, ...] = (1.0, 15.0, 30.0, 45.0, 60.0)
    d_values: tuple[float, ...] = (8.5, 16.0, 30.0, 45.0, 60.0)
    controllers: tuple[str, ...] = ("model_based", "idm_baseline")
    seeds: tuple[int, ...] = (0,)
    inflow_vph: float = 1000.0
    horizon_steps: int = 600
    w: float = 10.0
    checkpoint: dict | None = None
    diff_metrics: tuple[str, ...] = ("t_ev", "t_cav", "q_inter")
    workers: int = 1

    @classmethod
    def from_json_dict(cls, data: dict) -> "SweepSettings":
        kwargs = dict(data)
        if "network" in kwargs:
            kwargs["network"] = NetworkKind.parse(kwargs["network"])
        for key in ("x_a_values", "d_values", "controllers", "seeds",
                    "diff_metrics"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)

    def cells(self) -> list[ScenarioSpec]:
        return sweep_cells(self.network, list(self.x_a_values),
                           list(self.d_values), inflow_vph=self.inflow_vph,
                           horizon_steps=self.horizon_steps)


def _run_cell(args) -> dict:
    settings, controller, spec, seed = args
    try:
        outcome = run_episode(RunSettings(
            spec=spec.with_seed(seed), controller=controller, w=settings.w,
            checkpoint=settings.checkpoint, record_states=False))
        m = outcome.metrics
        return {"x_a": spec.x_a, "d": spec.d, "seed": seed,
                "t_ev": m["t_ev"], "t_cav": m["t_cav"],
                "q_inter": m["q_inter"], "feasible": True, "error": None}
    except InfeasibleScenarioError as exc:
        return {"x_a": spec.x_a, "d": spec.d, "seed": seed, "t_ev": None,
                "t_cav": None, "q_inter": None, "feasible": False,
                "error": str(exc)}
    except SimulationFault as exc:
        return {"x_a": spec.x_a, "d": spec.d, "seed": seed, "t_ev": None,
                "t_cav": None, "q_inter": None, "feasible": True,
                "error": f"simulation fault: {exc}"}


@dataclass
class SweepOutcome:
    results: dict[str, SweepResult] = field(default_factory=dict)
    diffs: dict[str, dict] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {"results": {name: r.to_json_dict()
                            for name, r in self.results.items()},
                "diffs": {name: [{"x_a": k[0], "d": k[1], "value": v}
                                 for k, v in sorted(grid.items())]
                          for name, grid in self.diffs.items()}}


def run_sweep(settings: SweepSettings, cell_store: "CellStore | None" = None,
              progress=None) -> SweepOutcome:
    """Run every (cell, controller, seed) combination and aggregate.

    Cells run independently; results are merged by key, so completion order
    (and worker count) never changes the output. A cell store makes an
    interrupted sweep resumable: finished cells are loaded, not rerun.
    """
    specs = settings.cells()
    jobs = []
    for controller in settings.controllers:
        for spec in specs:
            for seed in settings.seeds:
                jobs.append((controller, spec, seed))

    pending = []
    done: dict[tuple, dict] = {}
    for controller, spec, seed in jobs:
        key = (controller, spec.x_a, spec.d, seed)
        cached = cell_store.load(key) if cell_store is not None else None
        if cached is not None:
            done[key] = cached
        else:
            pending.append((settings, controller, spec, seed))

    if settings.workers > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=settings.workers) as pool:
            outputs = list(pool.map(_run_cell, pending))
    else:
        outputs = [_run_cell(job) for job in pending]
    for job, output in zip(pending, outputs):
        _, controller, spec, seed = job
        key = (controller, spec.x_a, spec.d, seed)
        done[key] = output
        if cell_store is not None:
            cell_store.save(key, output)
        if progress is not None:
            progress(key, output)

    return aggregate_outcome(settings, done)


def aggregate_outcome(settings: SweepSettings,
                      done: dict[tuple, dict]) -> SweepOutcome:
    """Merge per-cell results (keyed by controller, x_a, d, seed) into sweep
    results and pairwise percentage-difference grids."""
    from .metrics import percentage_diff_grid

    outcome = SweepOutcome()
    specs = settings.cells()
    for controller in settings.controllers:
        result = SweepResult(network=settings.network.value,
                             controller=controller,
                             x_a_values=list(settings.x_a_values),
                             d_values=list(settings.d_values))
        for spec in specs:
            for seed in settings.seeds:
                data = done[(controller, spec.x_a, spec.d, seed)]
                result.cells.append(CellResult(**data))
        outcome.results[controller] = result

    names = list(settings.controllers)
    for i, challenger in enumerate(names):
        for baseline in names[i + 1:]:
            for metric in settings.diff_metrics:
                label = f"{challenger}_vs_{baseline}_{metric}"
                outcome.diffs[label] = percentage_diff_grid(
                    outcome.results[challenger], outcome.results[baseline],
                    metric)
    return outcome


class CellStore:
    """One JSON file per finished sweep cell, for resumable sweeps."""

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: tuple) -> Path:
        controller, x_a, d, seed = key
        return self.directory / f"{controller}_xa{x_a}_d{d}_s{seed}.json"

    def load(self, key: tuple) -> dict | None:
        path = self._path(key)
        if not path.exists():
            return None
        with open(path) as f:
            return json.load(f)

    def save(self, key: tuple, data: dict) -> None:
        with open(self._path(key), "w") as f:
            json.dump(data, f)
