"""Evaluation quantities computed from episode records.

Travel times are measured from the episode start (the first green instant)
to the crossing of the last stop line on the corridor. Throughput is the
crossing rate at that stop line during the green phase containing (or, if
the crossing fell outside green, following) the emergency vehicle's
passage.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import IO

from .scenario import CAV_ID, EMS_ID
from .sim.record import EpisodeRecord
from .sim.vehicle import VehicleClass

TIME_METRICS = ("t_ev", "t_cav")        # lower is better
RATE_METRICS = ("q_inter",)             # higher is better


def travel_time_ems(record: EpisodeRecord) -> float | None:
    """Seconds until the emergency vehicle clears its final stop line.

    ``None`` marks an incomplete episode (never crossed within the horizon);
    such episodes are excluded from aggregates.
    """
    final = len(record.network.stop_lines) - 1
    return record.crossing_time(EMS_ID, final)


def travel_time_cav(record: EpisodeRecord) -> float | None:
    final = len(record.network.stop_lines) - 1
    return record.crossing_time(CAV_ID, final)


@dataclass(frozen=True)
class ThroughputResult:
    q: float
    n: int
    window_start: float
    window_end: float
    degenerate: bool

    def __float__(self) -> float:
        return self.q


def throughput(record: EpisodeRecord, lanes: str = "both") -> ThroughputResult | None:
    """Vehicles per second across the final stop line after the disruption.

    Headways are consecutive crossing intervals, the first measured from the
    emergency vehicle's own crossing (or from green onset when that crossing
    fell outside green). Fewer than two follow-up crossings is degenerate and
    reported as zero. ``lanes`` may restrict counting to "left" or "right".
    """
    t_c = travel_time_ems(record)
    if t_c is None:
        return None
    final = len(record.network.stop_lines) - 1
    program = record.program
    cycle = program.cycle_s
    offset = program.offsets[final] if final < len(program.offsets) else 0.0
    phase = (t_c - offset) % cycle
    if phase < program.green_s:
        green_start = t_c - phase
    else:
        green_start = t_c - phase + cycle
    window_start = max(t_c, green_start)
    window_end = green_start + program.green_s

    lane_ok = {"both": (0, 1), "left": (0,), "right": (1,)}[lanes]
    times = sorted(ev.t for ev in record.crossings
                   if ev.stop_line == final and ev.vehicle_id != EMS_ID
                   and ev.lane in lane_ok
                   and window_start < ev.t <= window_end)
    if len(times) < 2:
        return ThroughputResult(q=0.0, n=len(times),
                                window_start=window_start,
                                window_end=window_end, degenerate=True)
    total_headway = times[-1] - window_start
    return ThroughputResult(q=len(times) / total_headway, n=len(times),
                            window_start=window_start, window_end=window_end,
                            degenerate=False)


# -- sweep aggregation -------------------------------------------------------


@dataclass
class CellResult:
    x_a: float
    d: float
    seed: int = 0
    t_ev: float | None = None
    t_cav: float | None = None
    q_inter: float | None = None
    feasible: bool = True
    error: str | None = None

    def metric(self, name: str) -> float | None:
        return getattr(self, name)

    def to_json_dict(self) -> dict:
        return {"x_a": self.x_a, "d": self.d, "seed": self.seed,
                "t_ev": self.t_ev, "t_cav": self.t_cav,
                "q_inter": self.q_inter, "feasible": self.feasible,
                "error": self.error}

    @classmethod
    def from_json_dict(cls, data: dict) -> "CellResult":
        return cls(**data)


@dataclass
class SweepResult:
    network: str
    controller: str
    x_a_values: list[float]
    d_values: list[float]
    cells: list[CellResult] = field(default_factory=list)

    def grid(self, metric: str) -> dict[tuple[float, float], float | None]:
        """Per-(x_a, d) metric values, averaged over seeds, None when missing."""
        buckets: dict[tuple[float, float], list[float]] = {}
        for x_a in self.x_a_values:
            for d in self.d_values:
                buckets[(x_a, d)] = []
        for cell in self.cells:
            value = cell.metric(metric)
            if cell.feasible and value is not None:
                buckets[(cell.x_a, cell.d)].append(value)
        return {key: (sum(vals) / len(vals) if vals else None)
                for key, vals in buckets.items()}

    def to_json_dict(self) -> dict:
        return {"network": self.network, "controller": self.controller,
                "x_a_values": self.x_a_values, "d_values": self.d_values,
                "cells": [c.to_json_dict() for c in self.cells]}

    @classmethod
    def from_json_dict(cls, data: dict) -> "SweepResult":
        return cls(network=data["network"], controller=data["controller"],
                   x_a_values=list(data["x_a_values"]),
                   d_values=list(data["d_values"]),
                   cells=[CellResult.from_json_dict(c) for c in data["cells"]])

    def write_json(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_json_dict(), f, indent=2)


def percentage_diff_grid(challenger: SweepResult | dict,
                         baseline: SweepResult | dict, metric: str,
                         denominator: str = "baseline") -> dict:
    """Per-cell percentage difference, positive when the challenger is better.

    Better means smaller for travel times and larger for throughput. The
    baseline value is the denominator; ``denominator="symmetric"`` divides
    by the two-sided mean instead (exactly antisymmetric under swapping).
    """
    grid_a = challenger.grid(metric) if isinstance(challenger, SweepResult) else challenger
    grid_b = baseline.grid(metric) if isinstance(baseline, SweepResult) else baseline
    if set(grid_a) != set(grid_b):
        raise ValueError("sweep grids do not match")
    lower_better = metric in TIME_METRICS
    out: dict = {}
    for key in grid_a:
        a, b = grid_a[key], grid_b[key]
        if a is None or b is None:
            out[key] = None
            continue
        denom = b if denominator == "baseline" else 0.5 * (a + b)
        if denom == 0:
            out[key] = None
            continue
        gain = (b - a) if lower_better else (a - b)
        out[key] = 100.0 * gain / denom
    return out


def write_heatmap_csv(grid: dict, x_a_values: list[float],
                      d_values: list[float], out: IO[str]) -> None:
    """Matrix CSV with one row per x_a and one column per d."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["x_a\\d"] + [repr(float(d)) for d in d_values])
    for x_a in x_a_values:
        row = [repr(float(x_a))]
        for d in d_values:
            value = grid.get((x_a, d))
            row.append("" if value is None else repr(float(value)))
        writer.writerow(row)


# -- trajectory export ---------------------------------------------------------

TIME_SPACE_COLUMNS = ("vehicle_id", "t", "position", "lane", "class")


def time_space_rows(record: EpisodeRecord) -> list[tuple]:
    """Left-lane trajectories plus the emergency vehicle on both lanes.

    The lane column tags each sample, so the emergency vehicle's right-lane
    stretch can be styled separately when plotting.
    """
    if not record.recorded:
        raise ValueError("episode was run without state recording")
    rows = []
    for r in record.rows:
        if r.vclass is VehicleClass.EMS or r.lane == 0:
            rows.append((r.vehicle_id, r.t, r.position, r.lane, r.vclass.value))
    rows.sort(key=lambda item: (item[0], item[1]))
    return rows


def write_time_space_csv(record: EpisodeRecord, out: IO[str]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TIME_SPACE_COLUMNS)
    for vid, t, pos, lane, vclass in time_space_rows(record):
        writer.writerow((vid, repr(t), repr(pos), lane, vclass))
