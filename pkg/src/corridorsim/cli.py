"""Command-line client for the corridor service.

All experiment knobs live in a JSON config file; flags only point at paths
and override the seed/worker count. Commands execute against the service
API, in-process by default or against ``--server`` when given.

Exit codes: 0 success, 2 config/usage error, 3 infeasible scenario,
4 simulation fault, 5 training divergence.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .experiments import CellStore, SweepSettings, aggregate_outcome
from .metrics import percentage_diff_grid, write_heatmap_csv
from .scenario import NetworkKind
from .service.client import ServiceClient, ServiceError

logger = logging.getLogger("corridorsim.cli")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_FAULT = 4
EXIT_DIVERGENCE = 5

_ERROR_EXIT_CODES = {
    "invalid_request": EXIT_USAGE,
    "infeasible_scenario": EXIT_INFEASIBLE,
    "simulation_fault": EXIT_FAULT,
    "training_divergence": EXIT_DIVERGENCE,
}


class UsageError(RuntimeError):
    pass


def _setup_logging() -> None:
    level = os.environ.get("CORRIDOR_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load_config(path: str) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc


def _load_checkpoint(path: str) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read checkpoint {path}: {exc}") from exc


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _resolve_checkpoint(config: dict, args) -> dict | None:
    path = args.checkpoint or config.get("checkpoint")
    if path is None:
        return None
    return _load_checkpoint(path)


# -- commands -----------------------------------------------------------------


def cmd_run(args, client: ServiceClient) -> int:
    config = _load_config(args.config)
    if "scenario" not in config:
        raise UsageError("run config needs a 'scenario' object")
    controller = config.get("controller", "idm_baseline")
    checkpoint = _resolve_checkpoint(config, args)
    if controller == "policy" and checkpoint is None:
        raise UsageError("controller 'policy' requires a checkpoint path")
    seeds = config.get("seeds", [config["scenario"].get("seed", 0)])
    if args.seed is not None:
        seeds = [args.seed]
    out = _out_dir(args)

    summary = {}
    for seed in seeds:
        scenario = dict(config["scenario"])
        scenario["seed"] = seed
        payload = {"scenario": scenario, "controller": controller,
                   "w": config.get("w", 10.0), "checkpoint": checkpoint,
                   "include_record": True, "include_time_space": True,
                   "throughput_lanes": config.get("throughput_lanes", "both")}
        response = client.run(payload)
        metrics = response["metrics"]
        summary[str(seed)] = metrics
        (out / f"metrics_seed{seed}.json").write_text(
            json.dumps(metrics, indent=2, sort_keys=True))
        if response.get("record_csv"):
            (out / f"episode_seed{seed}.csv").write_text(response["record_csv"])
        if response.get("time_space_csv"):
            (out / f"time_space_seed{seed}.csv").write_text(
                response["time_space_csv"])
        logger.info("seed %s: %s", seed, metrics)
    (out / "metrics.json").write_text(json.dumps(summary, indent=2,
                                                 sort_keys=True))
    return EXIT_OK


def _sweep_settings(config: dict, args) -> SweepSettings:
    data = dict(config)
    data.pop("checkpoint", None)
    if args.workers is not None:
        data["workers"] = args.workers
    try:
        return SweepSettings.from_json_dict(data)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad sweep config: {exc}") from exc


def _write_sweep_outputs(out: Path, settings: SweepSettings,
                         results: dict, diffs: dict) -> None:
    for name, result in results.items():
        (out / f"sweep_{name}.json").write_text(
            json.dumps(result, indent=2, sort_keys=True))
        for metric in ("t_ev", "t_cav", "q_inter"):
            grid = {}
            for cell in result["cells"]:
                key = (cell["x_a"], cell["d"])
                grid.setdefault(key, [])
                if cell["feasible"] and cell[metric] is not None:
                    grid[key].append(cell[metric])
            averaged = {k: (sum(v) / len(v) if v else None)
                        for k, v in grid.items()}
            with open(out / f"heatmap_{name}_{metric}.csv", "w", newline="") as f:
                write_heatmap_csv(averaged, list(settings.x_a_values),
                                  list(settings.d_values), f)
    for label, cells in diffs.items():
        grid = {(c["x_a"], c["d"]): c["value"] for c in cells}
        with open(out / f"diff_{label}.csv", "w", newline="") as f:
            write_heatmap_csv(grid, list(settings.x_a_values),
                              list(settings.d_values), f)


def cmd_sweep(args, client: ServiceClient) -> int:
    config = _load_config(args.config)
    checkpoint = _resolve_checkpoint(config, args)
    settings = _sweep_settings(config, args)
    if "policy" in settings.controllers and checkpoint is None:
        raise UsageError("sweep includes 'policy' but no checkpoint given")
    out = _out_dir(args)
    store = CellStore(out / "cells")

    jobs = [(controller, spec, seed)
            for controller in settings.controllers
            for spec in settings.cells()
            for seed in settings.seeds]
    missing = [(c, s, k) for c, s, k in jobs
               if store.load((c, s.x_a, s.d, k)) is None]

    if len(missing) == len(jobs) and (args.workers or 1) > 1:
        # fresh sweep: single service call with server-side workers
        payload = {"network": settings.network.value,
                   "x_a_values": list(settings.x_a_values),
                   "d_values": list(settings.d_values),
                   "controllers": list(settings.controllers),
                   "seeds": list(settings.seeds),
                   "inflow_vph": settings.inflow_vph,
                   "horizon_steps": settings.horizon_steps, "w": settings.w,
                   "checkpoint": checkpoint,
                   "diff_metrics": list(settings.diff_metrics),
                   "workers": settings.workers}
        response = client.sweep(payload)
        for name, result in response["results"].items():
            for cell in result["cells"]:
                store.save((name, cell["x_a"], cell["d"], cell["seed"]), cell)
        _write_sweep_outputs(out, settings, response["results"],
                             response["diffs"])
        return EXIT_OK

    for controller, spec, seed in missing:
        scenario = spec.with_seed(seed).to_json_dict()
        payload = {"scenario": scenario, "controller": controller,
                   "w": settings.w, "checkpoint": checkpoint,
                   "include_record": False}
        cell = {"x_a": spec.x_a, "d": spec.d, "seed": seed, "t_ev": None,
                "t_cav": None, "q_inter": None, "feasible": True, "error": None}
        try:
            metrics = client.run(payload)["metrics"]
            cell.update({"t_ev": metrics["t_ev"], "t_cav": metrics["t_cav"],
                         "q_inter": metrics["q_inter"]})
        except ServiceError as exc:
            if exc.code == "infeasible_scenario":
                cell.update({"feasible": False, "error": exc.message})
            elif exc.code == "simulation_fault":
                cell.update({"error": exc.message})
            else:
                raise
        store.save((controller, spec.x_a, spec.d, seed), cell)
        logger.info("cell %s x_a=%s d=%s seed=%s done", controller, spec.x_a,
                    spec.d, seed)

    done = {}
    for controller, spec, seed in jobs:
        key = (controller, spec.x_a, spec.d, seed)
        done[key] = store.load(key)
    outcome = aggregate_outcome(settings, done)
    as_json = outcome.to_json_dict()
    _write_sweep_outputs(out, settings, as_json["results"], as_json["diffs"])
    return EXIT_OK


def cmd_train(args, client: ServiceClient) -> int:
    config = _load_config(args.config)
    payload = dict(config)
    payload.pop("checkpoint", None)
    if args.seed is not None:
        payload["seed"] = args.seed
    if args.workers is not None:
        payload["workers"] = args.workers
    out = _out_dir(args)
    response = client.train(payload)
    (out / "checkpoint.json").write_text(json.dumps(response["checkpoint"]))
    (out / "final_checkpoint.json").write_text(
        json.dumps(response["final_checkpoint"]))
    with open(out / "learning_curve.csv", "w", newline="") as f:
        f.write("iteration,mean_return,ems_travel_time,cav_travel_time\n")
        for row in response["curve"]:
            f.write(f"{row['iteration']},{row['mean_return']!r},"
                    f"{row['ems_travel_time']!r},{row['cav_travel_time']!r}\n")
    logger.info("best evaluation return: %s", response["best_return"])
    return EXIT_OK


def cmd_eval(args, client: ServiceClient) -> int:
    config = _load_config(args.config)
    checkpoint = _resolve_checkpoint(config, args)
    if checkpoint is None:
        raise UsageError("eval requires a checkpoint (flag or config)")
    payload = {"checkpoint": checkpoint,
               "network": config.get("network", "one_intersection"),
               "x_a_values": config["x_a_values"],
               "d_values": config["d_values"],
               "seeds": config.get("seeds", [0]),
               "inflow_vph": config.get("inflow_vph", 1000.0),
               "horizon_steps": config.get("horizon_steps", 600)}
    if args.workers is not None:
        payload["workers"] = args.workers
    out = _out_dir(args)
    response = client.evaluate(payload)
    result = response["results"]["policy"]
    (out / "eval_policy.json").write_text(json.dumps(result, indent=2,
                                                     sort_keys=True))
    settings = SweepSettings(
        network=NetworkKind.parse(payload["network"]),
        x_a_values=tuple(payload["x_a_values"]),
        d_values=tuple(payload["d_values"]))
    _write_sweep_outputs(out, settings, {"policy": result}, {})
    return EXIT_OK


def cmd_serve(args, client=None) -> int:
    import uvicorn

    from .service.app import app
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


# -- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corridorsim",
        description="corridor clearance experiments (service client)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--checkpoint", default=None,
                       help="policy checkpoint path")
        p.add_argument("--server", default=None,
                       help="service URL (default: in-process)")

    for name, handler in (("run", cmd_run), ("sweep", cmd_sweep),
                          ("train", cmd_train), ("eval", cmd_eval)):
        p = sub.add_parser(name)
        common(p)
        p.set_defaults(handler=handler)

    serve = sub.add_parser("serve")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(handler=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    if args.handler is cmd_serve:
        return cmd_serve(args)
    try:
        with ServiceClient(server_url=args.server) as client:
            return args.handler(args, client)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ServiceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _ERROR_EXIT_CODES.get(exc.code, EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
