"""Per-episode trajectory log and its CSV export."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import IO, Iterable, NamedTuple

from .network import CorridorNetwork, SignalProgram
from .vehicle import VehicleClass

CSV_COLUMNS = ("step", "t", "vehicle_id", "class", "lane", "position",
               "speed", "accel", "signal_state_1", "signal_state_2")


class StateRow(NamedTuple):
    step: int
    t: float
    vehicle_id: int
    vclass: VehicleClass
    lane: int
    position: float
    speed: float
    accel: float


class CrossingEvent(NamedTuple):
    t: float
    vehicle_id: int
    stop_line: int           # index into network.stop_lines
    lane: int


class LaneChangeEvent(NamedTuple):
    t: float
    vehicle_id: int
    lane_from: int
    lane_to: int
    position: float


@dataclass
class EpisodeRecord:
    """Everything the metrics layer needs from one simulated episode.

    ``rows`` holds the full step-major state log only when the simulation
    ran with recording enabled; crossing and lane-change events are always
    captured.
    """

    network: CorridorNetwork
    program: SignalProgram
    dt: float
    vehicle_classes: dict[int, VehicleClass] = field(default_factory=dict)
    rows: list[StateRow] = field(default_factory=list)
    crossings: list[CrossingEvent] = field(default_factory=list)
    lane_changes: list[LaneChangeEvent] = field(default_factory=list)
    horizon_steps: int = 0
    recorded: bool = True

    def crossing_time(self, vehicle_id: int, stop_line: int) -> float | None:
        for ev in self.crossings:
            if ev.vehicle_id == vehicle_id and ev.stop_line == stop_line:
                return ev.t
        return None

    def vehicles_of_class(self, vclass: VehicleClass) -> list[int]:
        return [vid for vid, c in self.vehicle_classes.items() if c is vclass]

    def rows_for(self, vehicle_id: int) -> list[StateRow]:
        return [r for r in self.rows if r.vehicle_id == vehicle_id]

    def write_csv(self, out: IO[str]) -> None:
        """Step-major, then vehicle-id ordered state dump.

        Floats are written with ``repr`` so a fixed seed reproduces the file
        byte for byte.
        """
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        n_lines = len(self.network.stop_lines)
        for row in self.rows:
            s1 = self.program.state(row.t, 0).value
            s2 = self.program.state(row.t, 1).value if n_lines > 1 else ""
            writer.writerow((row.step, repr(row.t), row.vehicle_id,
                             row.vclass.value, row.lane, repr(row.position),
                             repr(row.speed), repr(row.accel), s1, s2))

    def write_csv_path(self, path) -> None:
        with open(path, "w", newline="") as f:
            self.write_csv(f)


def sorted_rows(rows: Iterable[StateRow]) -> list[StateRow]:
    return sorted(rows, key=lambda r: (r.step, r.vehicle_id))
